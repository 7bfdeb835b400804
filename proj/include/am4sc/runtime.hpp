#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "am4sc/backlog.hpp"
#include "am4sc/expression.hpp"
#include "am4sc/planner.hpp"
#include "am4sc/registry.hpp"
#include "am4sc/testgen.hpp"

namespace am4sc {

struct FaultSpec {
    enum class Mode { WrongValue, Error };

    Mode mode = Mode::WrongValue;
    /// Outputs a wrong_value fault corrupts; empty means all of them.
    std::set<std::string> outputs;
};

/// Simulated service: a pure expression per output, plus an optional
/// always-on fault.
struct MockBehavior {
    std::string endpoint_key;
    std::string service_id;
    std::map<std::string, Expression> body;
    std::optional<FaultSpec> fault;

    /// Evaluates the body on `inputs`. Throws ExecutionFault for a fault of
    /// mode error or a body that fails to evaluate; `node_id` labels it.
    Binding invoke(const Binding& inputs, const std::string& node_id) const;
};

/// Wrong-value corruption: numbers shift by one, bools flip, text gets a suffix.
Value corrupt(const Value& v);

using BehaviorTable = std::map<std::string, MockBehavior>;  // keyed by endpoint_key

struct ExecutableComposite {
    CompositionModel model;
    std::vector<std::string> topo_order;
    std::map<std::string, MockBehavior> bound;  // node id -> behavior
};

struct FaultRecord {
    std::string node_id;
    std::string cause;

    bool operator==(const FaultRecord&) const = default;
};

struct TestVerdict {
    std::string test_id;
    bool passed = false;
    std::optional<Binding> actual;
    std::optional<FaultRecord> fault;
    std::set<std::string> mismatched_outputs;

    bool operator==(const TestVerdict&) const = default;
};

/// Everything a scenario file carries.
struct Scenario {
    std::vector<ServiceDescriptor> services;
    BehaviorTable behaviors;
    std::vector<ReferenceModel> reference_models;
    Backlog backlog;
    PolicyWeights policy;
};

/// Throws ScenarioError naming the first dangling or malformed reference.
Scenario load_scenario(const std::filesystem::path& path);
Scenario scenario_from_json(const json& j);
json scenario_to_json(const Scenario& s);

/// Registry populated from the scenario, with endpoints bound to behaviors.
Registry build_registry(const Scenario& s);

/// Binds every node to its behavior. Throws UnboundEndpoint naming the
/// first missing key; SchemaError from deserialize propagates.
ExecutableComposite instantiate(const WorkflowDocument& doc, const BehaviorTable& behaviors);
ExecutableComposite instantiate(const CompositionModel& model, const BehaviorTable& behaviors);

/// Evaluates the nodes in topological order and returns the goal outputs.
/// Throws MissingInput or ExecutionFault.
Binding execute(const ExecutableComposite& composite, const Binding& inputs);

/// Same, in a caller-chosen order. Throws InvalidArgument unless `order` is
/// a topological order of the composite's nodes.
Binding execute(const ExecutableComposite& composite, const Binding& inputs, const std::vector<std::string>& order);

/// Real-typed values compare within `tolerance`; everything else exactly.
bool values_match(const Value& expected, const Value& actual, const Datatype& type, double tolerance);

/// One verdict per test, in input order.
std::vector<TestVerdict> run_tests(const ExecutableComposite& composite, const std::vector<ContractTest>& tests);

/// Services of every node upstream of a mismatched or faulted goal output.
/// Empty for a model with no nodes.
std::set<std::string> blame(const std::vector<TestVerdict>& verdicts, const CompositionModel& model);

json behavior_to_json(const MockBehavior& b);
MockBehavior behavior_from_json(const json& j);
json verdict_to_json(const TestVerdict& v);

}  // namespace am4sc
