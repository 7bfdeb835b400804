#include "am4sc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "am4sc/error.hpp"

namespace am4sc {

// ---------------------------------------------------------------------------
// Ports and model structure

std::string PortRef::encode() const
{
    switch (kind) {
    case Kind::ModelInput: return "$in." + param;
    case Kind::ModelOutput: return "$out." + param;
    case Kind::NodePort: return node + "." + param;
    }
    return {};
}

PortRef PortRef::decode(std::string_view text)
{
    auto dot = text.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size())
        throw Error(ErrorCode::SchemaError, "bad port reference '" + std::string(text) + "'");
    auto head = std::string(text.substr(0, dot));
    auto param = std::string(text.substr(dot + 1));
    if (!is_identifier(param))
        throw Error(ErrorCode::SchemaError, "bad parameter in port reference '" + std::string(text) + "'");
    if (head == "$in")
        return model_input(std::move(param));
    if (head == "$out")
        return model_output(std::move(param));
    if (!is_id(head))
        throw Error(ErrorCode::SchemaError, "bad node id in port reference '" + std::string(text) + "'");
    return port(std::move(head), std::move(param));
}

const InvocationNode* CompositionModel::node(std::string_view id) const
{
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const auto& n) { return n.id == id; });
    return it == nodes.end() ? nullptr : &*it;
}

std::set<std::string> CompositionModel::service_ids() const
{
    std::set<std::string> out;
    for (const auto& n : nodes)
        out.insert(n.binding.service_id);
    return out;
}

double CompositionModel::total_cost() const
{
    double c = 0.0;
    for (const auto& n : nodes)
        c += n.binding.descriptor.cost;
    return c;
}

namespace {

const TypedParam* find_param(const ParamList& ps, std::string_view name)
{
    auto it = std::find_if(ps.begin(), ps.end(), [&](const auto& p) { return p.name == name; });
    return it == ps.end() ? nullptr : &*it;
}

[[noreturn]] void schema_error(const std::string& what)
{
    throw Error(ErrorCode::SchemaError, what);
}

bool edge_less(const Edge& a, const Edge& b)
{
    auto fa = a.from.encode(), fb = b.from.encode();
    if (fa != fb)
        return fa < fb;
    return a.to.encode() < b.to.encode();
}

std::vector<std::string> kahn(const CompositionModel& m)
{
    std::map<std::string, int> indegree;
    std::map<std::string, std::set<std::string>> succ;
    for (const auto& n : m.nodes)
        indegree[n.id];
    for (const auto& e : m.edges) {
        if (e.from.kind == PortRef::Kind::NodePort && e.to.kind == PortRef::Kind::NodePort &&
            succ[e.from.node].insert(e.to.node).second)
            ++indegree[e.to.node];
    }
    std::set<std::string> ready;
    for (const auto& [id, d] : indegree) {
        if (d == 0)
            ready.insert(id);
    }
    std::vector<std::string> order;
    while (!ready.empty()) {
        auto id = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(id);
        for (const auto& s : succ[id]) {
            if (--indegree[s] == 0)
                ready.insert(s);
        }
    }
    return order;
}

}  // namespace

void validate(const CompositionModel& m)
{
    check_param_list(m.goal.inputs, ErrorCode::SchemaError, "goal inputs", false);
    check_param_list(m.goal.outputs, ErrorCode::SchemaError, "goal outputs", false);

    std::map<std::string, const InvocationNode*> nodes;
    for (const auto& n : m.nodes) {
        if (!is_id(n.id))
            schema_error("bad node id '" + n.id + "'");
        if (!nodes.emplace(n.id, &n).second)
            schema_error("duplicate node id '" + n.id + "'");
        if (n.binding.descriptor.id != n.binding.service_id)
            schema_error("node " + n.id + ": descriptor id does not match service_id");
        validate(n.binding.descriptor);
    }

    std::map<std::string, int> fan_in;
    for (const auto& e : m.edges) {
        const TypedParam* src = nullptr;
        switch (e.from.kind) {
        case PortRef::Kind::ModelInput:
            src = find_param(m.goal.inputs, e.from.param);
            break;
        case PortRef::Kind::NodePort: {
            auto it = nodes.find(e.from.node);
            if (it == nodes.end())
                schema_error("edge from unknown node '" + e.from.node + "'");
            src = find_param(it->second->binding.descriptor.outputs, e.from.param);
            break;
        }
        case PortRef::Kind::ModelOutput: schema_error("edge may not start at model output " + e.from.encode());
        }
        if (!src)
            schema_error("edge source " + e.from.encode() + " does not exist");

        const TypedParam* dst = nullptr;
        switch (e.to.kind) {
        case PortRef::Kind::ModelOutput: dst = find_param(m.goal.outputs, e.to.param); break;
        case PortRef::Kind::NodePort: {
            auto it = nodes.find(e.to.node);
            if (it == nodes.end())
                schema_error("edge to unknown node '" + e.to.node + "'");
            dst = find_param(it->second->binding.descriptor.inputs, e.to.param);
            break;
        }
        case PortRef::Kind::ModelInput: schema_error("edge may not end at model input " + e.to.encode());
        }
        if (!dst)
            schema_error("edge target " + e.to.encode() + " does not exist");

        if (src->datatype != dst->datatype)
            schema_error("edge " + e.from.encode() + " -> " + e.to.encode() + " joins " +
                         src->datatype.to_string() + " to " + dst->datatype.to_string());
        if (e.to.kind == PortRef::Kind::NodePort && src->name != dst->name)
            schema_error("edge " + e.from.encode() + " -> " + e.to.encode() + " joins different names");
        ++fan_in[e.to.encode()];
    }

    auto expect_one = [&](const PortRef& p) {
        auto it = fan_in.find(p.encode());
        int k = it == fan_in.end() ? 0 : it->second;
        if (k != 1)
            schema_error(p.encode() + " has " + std::to_string(k) + " incoming edges, expected 1");
    };
    for (const auto& n : m.nodes) {
        for (const auto& in : n.binding.descriptor.inputs)
            expect_one(PortRef::port(n.id, in.name));
    }
    for (const auto& out : m.goal.outputs)
        expect_one(PortRef::model_output(out.name));

    if (kahn(m).size() != m.nodes.size())
        schema_error("dataflow graph has a cycle");
}

CompositionModel canonicalize(CompositionModel m)
{
    std::sort(m.nodes.begin(), m.nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(m.edges.begin(), m.edges.end(), edge_less);
    return m;
}

bool structurally_equal(const CompositionModel& a, const CompositionModel& b)
{
    return canonicalize(a) == canonicalize(b);
}

std::vector<std::string> topological_order(const CompositionModel& m)
{
    auto order = kahn(m);
    if (order.size() != m.nodes.size())
        schema_error("dataflow graph has a cycle");
    return order;
}

int depth(const CompositionModel& m)
{
    std::map<std::string, int> level;
    std::map<std::string, std::vector<std::string>> preds;
    for (const auto& e : m.edges) {
        if (e.from.kind == PortRef::Kind::NodePort && e.to.kind == PortRef::Kind::NodePort)
            preds[e.to.node].push_back(e.from.node);
    }
    int deepest = 0;
    for (const auto& id : topological_order(m)) {
        int l = 1;
        for (const auto& p : preds[id])
            l = std::max(l, level[p] + 1);
        level[id] = l;
        deepest = std::max(deepest, l);
    }
    return deepest;
}

// ---------------------------------------------------------------------------
// Planning

namespace {

bool nearly_equal(double a, double b)
{
    return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

/// Exact search for the cheapest service set that reaches the goal within
/// the minimal layer count.
///
/// Works backwards from the goal outputs. Every requirement carries a
/// deadline: the layer by which the parameter must be available. Choosing a
/// producer for (p, t) gives it deadline t and asks for its inputs by t-1;
/// reusing an already chosen producer may tighten its deadline. A service's
/// forward-chaining level is a lower bound on any deadline it can meet, which
/// prunes infeasible branches; partial cost prunes against the best found.
class CheapestCover {
public:
    CheapestCover(const std::vector<const BindingInfo*>& services, const std::vector<int>& level,
                  const std::set<TypedParam>& goal_inputs)
        : services_(services), level_(level), goal_inputs_(goal_inputs)
    {
        for (std::size_t i = 0; i < services_.size(); ++i) {
            for (const auto& out : services_[i]->descriptor.outputs)
                producers_[out].push_back(static_cast<int>(i));
        }
    }

    std::vector<int> solve(const ParamList& goal_outputs, int layers)
    {
        State s;
        for (const auto& out : goal_outputs)
            s.agenda.emplace_back(out, layers);
        search(std::move(s));
        return best_;
    }

private:
    struct State {
        std::map<int, int> chosen;  // service index -> deadline
        std::map<TypedParam, int> ready_by;
        std::vector<std::pair<TypedParam, int>> agenda;
        double cost = 0.0;
    };

    bool worse_than_best(double cost) const
    {
        return found_ && cost > best_cost_ && !nearly_equal(cost, best_cost_);
    }

    void assign(State& s, int svc, int deadline) const
    {
        s.chosen[svc] = deadline;
        for (const auto& out : services_[svc]->descriptor.outputs) {
            auto it = s.ready_by.find(out);
            if (it == s.ready_by.end() || it->second > deadline)
                s.ready_by[out] = deadline;
        }
        for (const auto& in : services_[svc]->descriptor.inputs)
            s.agenda.emplace_back(in, deadline - 1);
    }

    void finish(const State& s)
    {
        std::vector<int> picked;
        for (const auto& [svc, _] : s.chosen)
            picked.push_back(svc);
        std::sort(picked.begin(), picked.end(),
                  [&](int a, int b) { return services_[a]->service_id < services_[b]->service_id; });
        double cost = 0.0;
        std::vector<std::string> ids;
        for (int i : picked) {
            cost += services_[i]->descriptor.cost;
            ids.push_back(services_[i]->service_id);
        }
        bool better = !found_ || (!nearly_equal(cost, best_cost_) && cost < best_cost_) ||
                      (nearly_equal(cost, best_cost_) && ids < best_ids_);
        if (better) {
            found_ = true;
            best_cost_ = cost;
            best_ids_ = std::move(ids);
            best_ = std::move(picked);
        }
    }

    void search(State s)
    {
        if (worse_than_best(s.cost))
            return;
        while (!s.agenda.empty()) {
            auto [param, deadline] = s.agenda.back();
            s.agenda.pop_back();
            if (goal_inputs_.count(param))
                continue;
            auto ready = s.ready_by.find(param);
            if (ready != s.ready_by.end() && ready->second <= deadline)
                continue;

            auto prod = producers_.find(param);
            if (prod == producers_.end())
                return;
            // Reuse before adding; cheaper additions first so the bound tightens early.
            std::vector<int> options = prod->second;
            std::stable_sort(options.begin(), options.end(), [&](int a, int b) {
                bool ca = s.chosen.count(a) > 0, cb = s.chosen.count(b) > 0;
                if (ca != cb)
                    return ca;
                return services_[a]->descriptor.cost < services_[b]->descriptor.cost;
            });
            for (int svc : options) {
                if (level_[svc] > deadline)
                    continue;
                State next = s;
                auto it = next.chosen.find(svc);
                if (it != next.chosen.end()) {
                    // Already chosen, so it is not ready by `deadline`: tighten it.
                    assign(next, svc, deadline);
                } else {
                    next.cost += services_[svc]->descriptor.cost;
                    assign(next, svc, deadline);
                }
                search(std::move(next));
            }
            return;
        }
        finish(s);
    }

    const std::vector<const BindingInfo*>& services_;
    const std::vector<int>& level_;
    const std::set<TypedParam>& goal_inputs_;
    std::map<TypedParam, std::vector<int>> producers_;

    bool found_ = false;
    double best_cost_ = 0.0;
    std::vector<std::string> best_ids_;
    std::vector<int> best_;
};

struct Chaining {
    std::map<TypedParam, int> known;  // param -> layer it first becomes available
    std::vector<int> level;           // per service, layer it fires (max+1 if never)
    int layers = -1;                  // layers needed to reach the goal, -1 if unreachable
};

Chaining forward_chain(const GoalSignature& goal, const std::vector<const BindingInfo*>& services, int max_depth)
{
    Chaining c;
    c.level.assign(services.size(), std::numeric_limits<int>::max());
    for (const auto& in : goal.inputs)
        c.known.emplace(in, 0);
    auto goal_met = [&] {
        return std::all_of(goal.outputs.begin(), goal.outputs.end(),
                           [&](const TypedParam& p) { return c.known.count(p) > 0; });
    };
    if (goal_met()) {
        c.layers = 0;
        return c;
    }
    for (int layer = 1; layer <= max_depth; ++layer) {
        std::vector<std::size_t> firing;
        for (std::size_t i = 0; i < services.size(); ++i) {
            if (c.level[i] != std::numeric_limits<int>::max())
                continue;
            const auto& ins = services[i]->descriptor.inputs;
            if (std::all_of(ins.begin(), ins.end(), [&](const TypedParam& p) { return c.known.count(p) > 0; }))
                firing.push_back(i);
        }
        if (firing.empty())
            break;
        for (auto i : firing) {
            c.level[i] = layer;
            for (const auto& out : services[i]->descriptor.outputs)
                c.known.emplace(out, layer);
        }
        if (goal_met()) {
            c.layers = layer;
            return c;
        }
    }
    return c;
}

/// Wires the chosen services into a model: every needed port is fed from a
/// goal input when possible, else from its earliest producer in the set.
/// Only nodes on a path to a goal output are kept.
CompositionModel assemble(const GoalSignature& goal, const std::vector<const BindingInfo*>& chosen)
{
    Chaining c = forward_chain(goal, chosen, static_cast<int>(chosen.size()) + 1);

    std::set<TypedParam> goal_inputs(goal.inputs.begin(), goal.inputs.end());
    std::map<TypedParam, int> source;  // param -> producing service index
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        for (const auto& out : chosen[i]->descriptor.outputs) {
            auto it = source.find(out);
            if (it == source.end()) {
                source[out] = static_cast<int>(i);
                continue;
            }
            const auto* cur = chosen[it->second];
            auto li = c.level[i], lc = c.level[it->second];
            if (li < lc || (li == lc && cheaper(chosen[i]->descriptor, cur->descriptor)))
                it->second = static_cast<int>(i);
        }
    }

    std::set<int> used;
    std::vector<TypedParam> todo(goal.outputs.begin(), goal.outputs.end());
    while (!todo.empty()) {
        auto p = todo.back();
        todo.pop_back();
        if (goal_inputs.count(p))
            continue;
        int s = source.at(p);
        if (used.insert(s).second) {
            for (const auto& in : chosen[s]->descriptor.inputs)
                todo.push_back(in);
        }
    }

    std::vector<int> ordered(used.begin(), used.end());
    std::sort(ordered.begin(), ordered.end(), [&](int a, int b) {
        if (c.level[a] != c.level[b])
            return c.level[a] < c.level[b];
        return chosen[a]->service_id < chosen[b]->service_id;
    });
    std::map<int, std::string> node_id;
    CompositionModel m;
    m.goal = goal;
    for (std::size_t k = 0; k < ordered.size(); ++k) {
        node_id[ordered[k]] = "n" + std::to_string(k + 1);
        m.nodes.push_back(InvocationNode{node_id[ordered[k]], *chosen[ordered[k]]});
    }
    auto from = [&](const TypedParam& p) {
        if (goal_inputs.count(p))
            return PortRef::model_input(p.name);
        return PortRef::port(node_id.at(source.at(p)), p.name);
    };
    for (int s : ordered) {
        for (const auto& in : chosen[s]->descriptor.inputs)
            m.edges.push_back(Edge{from(in), PortRef::port(node_id.at(s), in.name)});
    }
    for (const auto& out : goal.outputs)
        m.edges.push_back(Edge{from(out), PortRef::model_output(out.name)});
    return canonicalize(std::move(m));
}

}  // namespace

CompositionModel plan(const GoalSignature& goal, const std::vector<BindingInfo>& candidates,
                      const PlanConstraints& constraints)
{
    if (constraints.max_depth < 1)
        throw Error(ErrorCode::InvalidArgument, "max_depth must be >= 1");
    check_param_list(goal.inputs, ErrorCode::InvalidArgument, "goal inputs", false);
    check_param_list(goal.outputs, ErrorCode::InvalidArgument, "goal outputs", true);

    // One binding per service id, newest version wins; canonical order.
    std::map<std::string, const BindingInfo*> by_id;
    for (const auto& b : candidates) {
        if (constraints.excluded_services.count(b.service_id))
            continue;
        auto& slot = by_id[b.service_id];
        if (!slot || b.descriptor.version > slot->descriptor.version)
            slot = &b;
    }
    std::vector<const BindingInfo*> usable;
    for (const auto& [_, b] : by_id)
        usable.push_back(b);

    Chaining c = forward_chain(goal, usable, constraints.max_depth);
    if (c.layers < 0) {
        std::set<std::string> unreachable;
        for (const auto& out : goal.outputs) {
            if (!c.known.count(out))
                unreachable.insert(out.name);
        }
        throw Unsatisfiable(std::move(unreachable));
    }

    std::set<TypedParam> goal_inputs(goal.inputs.begin(), goal.inputs.end());
    std::vector<const BindingInfo*> chosen;
    if (c.layers > 0) {
        CheapestCover cover(usable, c.level, goal_inputs);
        for (int i : cover.solve(goal.outputs, c.layers))
            chosen.push_back(usable[i]);
    }
    return assemble(goal, chosen);
}

CompositionModel replan(const GoalSignature& goal, const std::vector<BindingInfo>& candidates,
                        const CompositionModel& /*previous*/, const std::set<std::string>& blamed,
                        const PlanConstraints& constraints)
{
    if (blamed.empty())
        throw Error(ErrorCode::InvalidArgument, "replan needs at least one blamed service");
    PlanConstraints widened = constraints;
    widened.excluded_services.insert(blamed.begin(), blamed.end());
    return plan(goal, candidates, widened);
}

// ---------------------------------------------------------------------------
// DRY refactoring

CompositionModel refactor_dedup(const CompositionModel& model)
{
    CompositionModel m = canonicalize(model);
    for (;;) {
        std::map<std::string, std::map<std::string, std::string>> feeds;  // node -> input -> source
        for (const auto& e : m.edges) {
            if (e.to.kind == PortRef::Kind::NodePort)
                feeds[e.to.node][e.to.param] = e.from.encode();
        }
        std::optional<std::pair<std::string, std::string>> merge;  // (keep, drop)
        for (std::size_t i = 0; i < m.nodes.size() && !merge; ++i) {
            for (std::size_t j = i + 1; j < m.nodes.size() && !merge; ++j) {
                const auto& a = m.nodes[i];
                const auto& b = m.nodes[j];
                if (a.binding == b.binding && feeds[a.id] == feeds[b.id])
                    merge.emplace(a.id, b.id);
            }
        }
        if (!merge)
            return m;

        const auto& [keep, drop] = *merge;
        std::vector<Edge> edges;
        for (auto e : m.edges) {
            if (e.to.kind == PortRef::Kind::NodePort && e.to.node == drop)
                continue;
            if (e.from.kind == PortRef::Kind::NodePort && e.from.node == drop)
                e.from.node = keep;
            edges.push_back(std::move(e));
        }
        m.edges = std::move(edges);
        m.nodes.erase(std::remove_if(m.nodes.begin(), m.nodes.end(), [&](const auto& n) { return n.id == drop; }),
                      m.nodes.end());
        m = canonicalize(std::move(m));
    }
}

// ---------------------------------------------------------------------------
// Workflow documents

json goal_to_json(const GoalSignature& g)
{
    return json{{"inputs", params_to_json(g.inputs)}, {"outputs", params_to_json(g.outputs)}};
}

GoalSignature goal_from_json(const json& j)
{
    check_object(j, {"inputs", "outputs"}, {}, "goal");
    return GoalSignature{params_from_json(j["inputs"]), params_from_json(j["outputs"])};
}

WorkflowDocument WorkflowDocument::parse(std::string_view text)
{
    try {
        return WorkflowDocument{json::parse(text)};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("workflow document: ") + e.what());
    }
}

WorkflowDocument serialize(const CompositionModel& model)
{
    auto m = canonicalize(model);
    json nodes = json::array();
    for (const auto& n : m.nodes) {
        nodes.push_back(json{{"node", n.id},
                             {"service_id", n.binding.service_id},
                             {"endpoint_key", n.binding.endpoint_key},
                             {"descriptor", descriptor_to_json(n.binding.descriptor)}});
    }
    json edges = json::array();
    for (const auto& e : m.edges)
        edges.push_back(json{{"from", e.from.encode()}, {"to", e.to.encode()}});
    return WorkflowDocument{json{{"schema_version", kWorkflowSchema},
                                 {"goal", goal_to_json(m.goal)},
                                 {"nodes", nodes},
                                 {"edges", edges}}};
}

CompositionModel deserialize(const WorkflowDocument& doc)
{
    const auto& j = doc.body;
    check_object(j, {"schema_version", "goal", "nodes", "edges"}, {}, "workflow document");
    if (!j["schema_version"].is_string() || j["schema_version"].get<std::string>() != kWorkflowSchema)
        throw Error(ErrorCode::SchemaError, "unknown workflow schema_version " + j["schema_version"].dump());
    if (!j["nodes"].is_array() || !j["edges"].is_array())
        throw Error(ErrorCode::SchemaError, "workflow nodes and edges must be arrays");
    CompositionModel m;
    try {
        m.goal = goal_from_json(j["goal"]);
        for (const auto& n : j["nodes"]) {
            check_object(n, {"node", "service_id", "endpoint_key", "descriptor"}, {}, "workflow node");
            BindingInfo b{n["service_id"].get<std::string>(), n["endpoint_key"].get<std::string>(),
                          descriptor_from_json(n["descriptor"])};
            m.nodes.push_back(InvocationNode{n["node"].get<std::string>(), std::move(b)});
        }
        for (const auto& e : j["edges"]) {
            check_object(e, {"from", "to"}, {}, "workflow edge");
            m.edges.push_back(
                Edge{PortRef::decode(e["from"].get<std::string>()), PortRef::decode(e["to"].get<std::string>())});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("workflow document: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaError)
            throw;
        throw Error(ErrorCode::SchemaError, e.what());
    }
    validate(m);
    return canonicalize(std::move(m));
}

}  // namespace am4sc
