#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace am4sc {

enum class ErrorCode {
    DuplicateId,
    InvalidDescriptor,
    NoCandidates,
    EmptyBacklog,
    UnknownFeature,
    InvalidTransition,
    InvalidFeature,
    NoReferenceModel,
    GeneratorGap,
    OracleError,
    Unsatisfiable,
    SchemaError,
    ScenarioError,
    UnboundEndpoint,
    ExecutionFault,
    MissingInput,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Base of every error the engine raises. The code is stable and is what
/// reports and exit-status mapping key on; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Goal outputs that forward chaining could not reach.
class Unsatisfiable : public Error {
public:
    explicit Unsatisfiable(std::set<std::string> unreachable);

    const std::set<std::string>& unreachable() const noexcept { return unreachable_; }

private:
    std::set<std::string> unreachable_;
};

class ExecutionFault : public Error {
public:
    ExecutionFault(std::string node_id, std::string cause);

    const std::string& node_id() const noexcept { return node_id_; }
    const std::string& cause() const noexcept { return cause_; }

private:
    std::string node_id_;
    std::string cause_;
};

}  // namespace am4sc
