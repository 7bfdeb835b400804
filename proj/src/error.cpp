#include "am4sc/error.hpp"

namespace am4sc {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvalidDescriptor: return "InvalidDescriptor";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::EmptyBacklog: return "EmptyBacklog";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::InvalidFeature: return "InvalidFeature";
    case ErrorCode::NoReferenceModel: return "NoReferenceModel";
    case ErrorCode::GeneratorGap: return "GeneratorGap";
    case ErrorCode::OracleError: return "OracleError";
    case ErrorCode::Unsatisfiable: return "Unsatisfiable";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ScenarioError: return "ScenarioError";
    case ErrorCode::UnboundEndpoint: return "UnboundEndpoint";
    case ErrorCode::ExecutionFault: return "ExecutionFault";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

namespace {

std::string join_names(const std::set<std::string>& names)
{
    std::string out;
    for (const auto& n : names) {
        if (!out.empty())
            out += ", ";
        out += n;
    }
    return out;
}

}  // namespace

Unsatisfiable::Unsatisfiable(std::set<std::string> unreachable)
    : Error(ErrorCode::Unsatisfiable, "unreachable outputs {" + join_names(unreachable) + "}"),
      unreachable_(std::move(unreachable))
{
}

ExecutionFault::ExecutionFault(std::string node_id, std::string cause)
    : Error(ErrorCode::ExecutionFault, "node " + node_id + ": " + cause),
      node_id_(std::move(node_id)),
      cause_(std::move(cause))
{
}

}  // namespace am4sc
