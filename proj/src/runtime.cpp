#include "am4sc/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "am4sc/error.hpp"

namespace am4sc {

Value corrupt(const Value& v)
{
    struct {
        Value operator()(bool b) const { return !b; }
        Value operator()(std::int64_t i) const { return i + 1; }
        Value operator()(double d) const { return d + 1.0; }
        Value operator()(const std::string& s) const { return s + "~"; }
    } visitor;
    return std::visit(visitor, v);
}

Binding MockBehavior::invoke(const Binding& inputs, const std::string& node_id) const
{
    if (fault && fault->mode == FaultSpec::Mode::Error)
        throw ExecutionFault(node_id, "injected error fault in " + service_id);
    Binding out;
    for (const auto& [name, expr] : body) {
        try {
            out[name] = expr.evaluate(inputs);
        } catch (const Error& e) {
            throw ExecutionFault(node_id, "output '" + name + "': " + e.what());
        }
        if (fault && (fault->outputs.empty() || fault->outputs.count(name)))
            out[name] = corrupt(out[name]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

[[noreturn]] void scenario_error(const std::string& what)
{
    throw Error(ErrorCode::ScenarioError, what);
}

FaultSpec fault_from_json(const json& j)
{
    check_object(j, {"mode"}, {"applies", "outputs"}, "fault");
    FaultSpec f;
    auto mode = j["mode"].get<std::string>();
    if (mode == "wrong_value")
        f.mode = FaultSpec::Mode::WrongValue;
    else if (mode == "error")
        f.mode = FaultSpec::Mode::Error;
    else
        throw Error(ErrorCode::SchemaError, "unknown fault mode '" + mode + "'");
    if (j.contains("applies") && j["applies"] != "always")
        throw Error(ErrorCode::SchemaError, "fault 'applies' must be \"always\"");
    if (j.contains("outputs")) {
        for (const auto& o : j["outputs"])
            f.outputs.insert(o.get<std::string>());
    }
    return f;
}

json fault_to_json(const FaultSpec& f)
{
    return json{{"mode", f.mode == FaultSpec::Mode::Error ? "error" : "wrong_value"},
                {"applies", "always"},
                {"outputs", std::vector<std::string>(f.outputs.begin(), f.outputs.end())}};
}

void check_behavior_against(const MockBehavior& b, const ServiceDescriptor& d)
{
    std::set<std::string> outs, ins, body;
    for (const auto& p : d.outputs)
        outs.insert(p.name);
    for (const auto& p : d.inputs)
        ins.insert(p.name);
    for (const auto& [name, expr] : b.body) {
        body.insert(name);
        for (const auto& ref : expr.names()) {
            if (!ins.count(ref))
                scenario_error("behavior " + b.endpoint_key + " output '" + name + "' references '" + ref +
                               "', not an input of " + d.id);
        }
    }
    if (body != outs)
        scenario_error("behavior " + b.endpoint_key + " outputs do not match the outputs of " + d.id);
    if (b.fault) {
        for (const auto& o : b.fault->outputs) {
            if (!outs.count(o))
                scenario_error("behavior " + b.endpoint_key + " fault names unknown output '" + o + "'");
        }
    }
}

}  // namespace

json behavior_to_json(const MockBehavior& b)
{
    json body = json::object();
    for (const auto& [name, e] : b.body)
        body[name] = e.source();
    return json{{"endpoint_key", b.endpoint_key},
                {"service_id", b.service_id},
                {"body", body},
                {"fault", b.fault ? fault_to_json(*b.fault) : json(nullptr)}};
}

MockBehavior behavior_from_json(const json& j)
{
    check_object(j, {"endpoint_key", "service_id", "body"}, {"fault"}, "behavior");
    MockBehavior b;
    try {
        b.endpoint_key = j["endpoint_key"].get<std::string>();
        b.service_id = j["service_id"].get<std::string>();
        if (!j["body"].is_object())
            throw Error(ErrorCode::SchemaError, "behavior body must be an object");
        for (const auto& [name, e] : j["body"].items())
            b.body.emplace(name, Expression::parse(e.get<std::string>()));
        if (j.contains("fault") && !j["fault"].is_null())
            b.fault = fault_from_json(j["fault"]);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("behavior: ") + e.what());
    }
    if (b.endpoint_key.empty())
        throw Error(ErrorCode::SchemaError, "behavior endpoint_key must be nonempty");
    return b;
}

Scenario scenario_from_json(const json& j)
{
    Scenario s;
    try {
        check_object(j, {"services", "behaviors"}, {"reference_models", "backlog", "policy"}, "scenario");
        s.services = descriptors_from_json(j["services"]);
        if (!j["behaviors"].is_array())
            scenario_error("behaviors must be an array");
        for (const auto& b : j["behaviors"]) {
            auto behavior = behavior_from_json(b);
            auto key = behavior.endpoint_key;
            if (!s.behaviors.emplace(key, std::move(behavior)).second)
                scenario_error("duplicate behavior endpoint_key '" + key + "'");
        }
        if (j.contains("reference_models"))
            s.reference_models = models_from_json(j["reference_models"]);
        if (j.contains("backlog"))
            s.backlog = backlog_from_json(j["backlog"]);
        if (j.contains("policy"))
            s.policy = policy_from_json(j["policy"]);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ScenarioError)
            throw;
        scenario_error(e.what());
    } catch (const json::exception& e) {
        scenario_error(e.what());
    }

    std::map<std::string, const ServiceDescriptor*> by_id;
    for (const auto& d : s.services) {
        if (!by_id.emplace(d.id, &d).second)
            scenario_error("service '" + d.id + "' declared twice");
    }
    std::set<std::string> bound_services;
    for (const auto& [key, b] : s.behaviors) {
        auto it = by_id.find(b.service_id);
        if (it == by_id.end())
            scenario_error("behavior " + key + " references unregistered service '" + b.service_id + "'");
        if (!bound_services.insert(b.service_id).second)
            scenario_error("service '" + b.service_id + "' has more than one behavior");
        check_behavior_against(b, *it->second);
    }
    std::set<std::string> model_ids;
    for (const auto& m : s.reference_models) {
        if (!model_ids.insert(m.id).second)
            scenario_error("reference model '" + m.id + "' declared twice");
    }
    for (const auto& f : s.backlog) {
        if (f.tags.empty())
            scenario_error("feature '" + f.id + "' has no tags");
    }
    return s;
}

json scenario_to_json(const Scenario& s)
{
    json services = json::array();
    for (const auto& d : s.services)
        services.push_back(descriptor_to_json(d));
    json behaviors = json::array();
    for (const auto& [_, b] : s.behaviors)
        behaviors.push_back(behavior_to_json(b));
    json models = json::array();
    for (const auto& m : s.reference_models)
        models.push_back(model_to_json(m));
    return json{{"services", services},
                {"behaviors", behaviors},
                {"reference_models", models},
                {"backlog", backlog_to_json(s.backlog)},
                {"policy", policy_to_json(s.policy)}};
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        scenario_error("cannot open scenario file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        scenario_error(path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

Registry build_registry(const Scenario& s)
{
    Registry r;
    for (const auto& d : s.services)
        r.register_service(d);
    for (const auto& [key, b] : s.behaviors)
        r.set_endpoint(b.service_id, key);
    return r;
}

// ---------------------------------------------------------------------------
// Binding and execution

ExecutableComposite instantiate(const CompositionModel& model, const BehaviorTable& behaviors)
{
    validate(model);
    ExecutableComposite c;
    c.model = canonicalize(model);
    for (const auto& n : c.model.nodes) {
        auto it = behaviors.find(n.binding.endpoint_key);
        if (it == behaviors.end())
            throw Error(ErrorCode::UnboundEndpoint,
                        "no behavior for endpoint '" + n.binding.endpoint_key + "' (node " + n.id + ")");
        if (it->second.service_id != n.binding.service_id)
            throw Error(ErrorCode::UnboundEndpoint, "endpoint '" + n.binding.endpoint_key + "' implements " +
                                                        it->second.service_id + ", not " + n.binding.service_id);
        c.bound.emplace(n.id, it->second);
    }
    c.topo_order = topological_order(c.model);
    return c;
}

ExecutableComposite instantiate(const WorkflowDocument& doc, const BehaviorTable& behaviors)
{
    return instantiate(deserialize(doc), behaviors);
}

namespace {

bool is_topological(const CompositionModel& m, const std::vector<std::string>& order)
{
    if (order.size() != m.nodes.size())
        return false;
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!m.node(order[i]) || !pos.emplace(order[i], i).second)
            return false;
    }
    return std::all_of(m.edges.begin(), m.edges.end(), [&](const Edge& e) {
        return e.from.kind != PortRef::Kind::NodePort || e.to.kind != PortRef::Kind::NodePort ||
               pos[e.from.node] < pos[e.to.node];
    });
}

}  // namespace

Binding execute(const ExecutableComposite& composite, const Binding& inputs, const std::vector<std::string>& order)
{
    const auto& m = composite.model;
    if (!is_topological(m, order))
        throw Error(ErrorCode::InvalidArgument, "execution order is not a topological order of the model");

    std::map<std::string, Value> ports;  // encoded source port -> value
    for (const auto& in : m.goal.inputs) {
        auto it = inputs.find(in.name);
        if (it == inputs.end())
            throw Error(ErrorCode::MissingInput, "no value for goal input '" + in.name + "'");
        if (!value_conforms(it->second, in.datatype))
            throw Error(ErrorCode::MissingInput, "goal input '" + in.name + "' is not a " + in.datatype.to_string());
        ports[PortRef::model_input(in.name).encode()] = coerce_to(it->second, in.datatype);
    }
    std::map<std::string, std::string> feed;  // encoded target -> encoded source
    for (const auto& e : m.edges)
        feed[e.to.encode()] = e.from.encode();

    for (const auto& id : order) {
        const auto& node = *m.node(id);
        const auto& desc = node.binding.descriptor;
        Binding args;
        for (const auto& in : desc.inputs)
            args[in.name] = ports.at(feed.at(PortRef::port(id, in.name).encode()));
        Binding result = composite.bound.at(id).invoke(args, id);
        for (const auto& out : desc.outputs) {
            auto it = result.find(out.name);
            if (it == result.end())
                throw ExecutionFault(id, "behavior produced no value for '" + out.name + "'");
            ports[PortRef::port(id, out.name).encode()] = coerce_to(it->second, out.datatype);
        }
    }

    Binding outputs;
    for (const auto& out : m.goal.outputs)
        outputs[out.name] = coerce_to(ports.at(feed.at(PortRef::model_output(out.name).encode())), out.datatype);
    return outputs;
}

Binding execute(const ExecutableComposite& composite, const Binding& inputs)
{
    return execute(composite, inputs, composite.topo_order);
}

bool values_match(const Value& expected, const Value& actual, const Datatype& type, double tolerance)
{
    auto as_num = [](const Value& v) -> std::optional<double> {
        if (const auto* i = std::get_if<std::int64_t>(&v))
            return static_cast<double>(*i);
        if (const auto* d = std::get_if<double>(&v))
            return *d;
        return std::nullopt;
    };
    if (type.kind() == Datatype::Kind::Real) {
        auto a = as_num(expected), b = as_num(actual);
        return a && b && std::fabs(*a - *b) <= tolerance;
    }
    return expected == actual;
}

std::vector<TestVerdict> run_tests(const ExecutableComposite& composite, const std::vector<ContractTest>& tests)
{
    std::vector<TestVerdict> verdicts;
    verdicts.reserve(tests.size());
    for (const auto& t : tests) {
        TestVerdict v;
        v.test_id = t.id;
        try {
            auto actual = execute(composite, t.inputs);
            for (const auto& out : composite.model.goal.outputs) {
                auto exp = t.expected.find(out.name);
                if (exp == t.expected.end())
                    continue;
                auto got = actual.find(out.name);
                if (got == actual.end() || !values_match(exp->second, got->second, out.datatype, t.tolerance))
                    v.mismatched_outputs.insert(out.name);
            }
            // Expected names the composite does not produce count as mismatches.
            for (const auto& [name, _] : t.expected) {
                if (!actual.count(name))
                    v.mismatched_outputs.insert(name);
            }
            v.actual = std::move(actual);
        } catch (const ExecutionFault& f) {
            v.fault = FaultRecord{f.node_id(), f.cause()};
        } catch (const Error& e) {
            v.fault = FaultRecord{"", e.what()};
        }
        v.passed = !v.fault && v.mismatched_outputs.empty();
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

std::set<std::string> blame(const std::vector<TestVerdict>& verdicts, const CompositionModel& model)
{
    if (model.nodes.empty())
        return {};

    std::map<std::string, std::string> feed;                 // encoded target -> encoded source
    std::map<std::string, std::set<std::string>> consumers;  // node -> downstream node ids / "$out.x"
    for (const auto& e : model.edges) {
        feed[e.to.encode()] = e.from.encode();
        if (e.from.kind == PortRef::Kind::NodePort)
            consumers[e.from.node].insert(e.to.kind == PortRef::Kind::NodePort ? e.to.node : e.to.encode());
    }

    std::set<std::string> failed_outputs;
    std::set<std::string> faulted_nodes;
    for (const auto& v : verdicts) {
        if (v.passed)
            continue;
        failed_outputs.insert(v.mismatched_outputs.begin(), v.mismatched_outputs.end());
        if (!v.fault)
            continue;
        if (v.fault->node_id.empty() || !model.node(v.fault->node_id)) {
            for (const auto& out : model.goal.outputs)
                failed_outputs.insert(out.name);
            continue;
        }
        faulted_nodes.insert(v.fault->node_id);
        // Every goal output downstream of the faulting node.
        std::vector<std::string> todo{v.fault->node_id};
        std::set<std::string> seen;
        while (!todo.empty()) {
            auto cur = todo.back();
            todo.pop_back();
            if (!seen.insert(cur).second)
                continue;
            for (const auto& next : consumers[cur]) {
                if (next.rfind("$out.", 0) == 0)
                    failed_outputs.insert(next.substr(5));
                else
                    todo.push_back(next);
            }
        }
    }

    std::set<std::string> nodes;
    std::vector<std::string> todo;
    for (const auto& out : failed_outputs)
        todo.push_back(PortRef::model_output(out).encode());
    std::set<std::string> seen_ports;
    while (!todo.empty()) {
        auto target = todo.back();
        todo.pop_back();
        auto it = feed.find(target);
        if (it == feed.end())
            continue;
        auto src = PortRef::decode(it->second);
        if (src.kind != PortRef::Kind::NodePort || !nodes.insert(src.node).second)
            continue;
        for (const auto& in : model.node(src.node)->binding.descriptor.inputs)
            todo.push_back(PortRef::port(src.node, in.name).encode());
    }

    nodes.insert(faulted_nodes.begin(), faulted_nodes.end());
    std::set<std::string> services;
    for (const auto& id : nodes)
        services.insert(model.node(id)->binding.service_id);
    bool any_failed = std::any_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return !v.passed; });
    if (services.empty() && any_failed)
        services = model.service_ids();
    return services;
}

json verdict_to_json(const TestVerdict& v)
{
    json out{{"test_id", v.test_id},
             {"passed", v.passed},
             {"mismatched_outputs", std::vector<std::string>(v.mismatched_outputs.begin(), v.mismatched_outputs.end())}};
    out["actual"] = v.actual ? binding_to_json(*v.actual) : json(nullptr);
    out["fault"] = v.fault ? json{{"node", v.fault->node_id}, {"cause", v.fault->cause}} : json(nullptr);
    return out;
}

}  // namespace am4sc
