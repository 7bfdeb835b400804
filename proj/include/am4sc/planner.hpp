#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "am4sc/registry.hpp"
#include "am4sc/types.hpp"

namespace am4sc {

struct GoalSignature {
    ParamList inputs;
    ParamList outputs;

    bool operator==(const GoalSignature&) const = default;
};

/// One end of a dataflow edge: a model input, a node port or a model output.
/// Encoded as "$in.<name>", "<node>.<param>" or "$out.<name>".
struct PortRef {
    enum class Kind { ModelInput, NodePort, ModelOutput };

    Kind kind = Kind::ModelInput;
    std::string node;
    std::string param;

    static PortRef model_input(std::string name) { return {Kind::ModelInput, {}, std::move(name)}; }
    static PortRef port(std::string node, std::string param) { return {Kind::NodePort, std::move(node), std::move(param)}; }
    static PortRef model_output(std::string name) { return {Kind::ModelOutput, {}, std::move(name)}; }

    std::string encode() const;
    /// Throws Error(SchemaError).
    static PortRef decode(std::string_view text);

    auto operator<=>(const PortRef&) const = default;
};

struct Edge {
    PortRef from;
    PortRef to;

    auto operator<=>(const Edge&) const = default;
};

struct InvocationNode {
    std::string id;
    BindingInfo binding;

    bool operator==(const InvocationNode&) const = default;
};

/// Composite-service plan: a DAG of service invocations wired by dataflow edges.
struct CompositionModel {
    std::vector<InvocationNode> nodes;
    std::vector<Edge> edges;
    GoalSignature goal;

    const InvocationNode* node(std::string_view id) const;
    std::set<std::string> service_ids() const;
    double total_cost() const;

    bool operator==(const CompositionModel&) const = default;
};

/// Throws Error(SchemaError) naming the first broken invariant: dangling
/// references, type mismatches, missing or doubled fan-in, cycles.
void validate(const CompositionModel& m);

/// Nodes sorted by id, edges sorted lexicographically.
CompositionModel canonicalize(CompositionModel m);
bool structurally_equal(const CompositionModel& a, const CompositionModel& b);

/// Layer count: the longest chain of invocation nodes (0 for a passthrough model).
int depth(const CompositionModel& m);

/// Topological order of node ids. Kahn's method, smallest ready id first.
std::vector<std::string> topological_order(const CompositionModel& m);

struct PlanConstraints {
    int max_depth = 8;
    std::set<std::string> excluded_services;
};

/// Forward-chaining composition.
///
/// Layer k fires every usable candidate whose inputs are all known after
/// layer k-1; the minimal layer count L is the first layer at which all goal
/// outputs are known. Among DAGs of depth L the result minimises total cost,
/// then the sorted service-id sequence. Each service is used at most once.
/// Throws Unsatisfiable carrying the goal outputs not reachable within
/// max_depth.
CompositionModel plan(const GoalSignature& goal, const std::vector<BindingInfo>& candidates,
                      const PlanConstraints& constraints);

/// Merges nodes that invoke the same service on identical input sources and
/// rewires their consumers, repeating until nothing merges.
CompositionModel refactor_dedup(const CompositionModel& model);

/// plan() with `blamed` added to the exclusions.
CompositionModel replan(const GoalSignature& goal, const std::vector<BindingInfo>& candidates,
                        const CompositionModel& previous, const std::set<std::string>& blamed,
                        const PlanConstraints& constraints);

inline constexpr std::string_view kWorkflowSchema = "am4sc-wf/1";

/// Serialized composition model. `body` is canonical, so equal models dump to
/// identical bytes.
struct WorkflowDocument {
    json body;

    std::string dump() const { return body.dump(); }
    /// Throws Error(SchemaError) when the text is not JSON.
    static WorkflowDocument parse(std::string_view text);

    bool operator==(const WorkflowDocument&) const = default;
};

WorkflowDocument serialize(const CompositionModel& model);
/// Throws Error(SchemaError) on unknown schema_version or malformed content.
CompositionModel deserialize(const WorkflowDocument& doc);

json goal_to_json(const GoalSignature& g);
GoalSignature goal_from_json(const json& j);

}  // namespace am4sc
