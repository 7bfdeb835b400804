#pragma once

// Builders, random generators and brute-force oracles shared by the unit
// and acceptance suites. The oracles here deliberately avoid the library's
// planning and selection code paths.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "am4sc/controller.hpp"
#include "am4sc/error.hpp"

namespace am4sc::testing {

inline TypedParam P(const std::string& name, const std::string& type)
{
    return TypedParam{name, Datatype::parse(type)};
}

inline ServiceDescriptor svc(const std::string& id, ParamList ins, ParamList outs, double cost = 1.0,
                             TagSet tags = {})
{
    ServiceDescriptor d;
    d.id = id;
    d.name = id;
    d.provider = "test";
    d.inputs = std::move(ins);
    d.outputs = std::move(outs);
    d.cost = cost;
    d.tags = std::move(tags);
    return d;
}

inline BindingInfo bind(const ServiceDescriptor& d)
{
    return BindingInfo{d.id, d.id, d};
}

inline std::vector<BindingInfo> bind_all(const std::vector<ServiceDescriptor>& ds)
{
    std::vector<BindingInfo> out;
    for (const auto& d : ds)
        out.push_back(bind(d));
    return out;
}

inline MockBehavior behavior(const std::string& service_id, std::map<std::string, std::string> body,
                             std::optional<FaultSpec> fault = std::nullopt)
{
    MockBehavior b;
    b.endpoint_key = service_id;
    b.service_id = service_id;
    for (const auto& [out, src] : body)
        b.body.emplace(out, Expression::parse(src));
    b.fault = std::move(fault);
    return b;
}

inline std::string fixture(const std::string& name)
{
    return std::string(AM4SC_FIXTURES) + "/" + name;
}

inline std::string geo_billing_path()
{
    return std::string(AM4SC_SCENARIOS) + "/geo-billing.json";
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Random registries for planner properties.

struct RandomProblem {
    std::vector<ServiceDescriptor> services;
    GoalSignature goal;
};

/// Services over a pool of at most `max_types` datatypes; every parameter name
/// carries one fixed datatype so nominal matching is meaningful.
inline RandomProblem random_problem(std::mt19937_64& rng, int max_services, int max_types, int pool_size = 6)
{
    static const std::vector<std::string> kTypes{"int", "real", "record(a)", "record(b)"};
    std::uniform_int_distribution<int> types_d(1, std::min<int>(max_types, 4));
    int ntypes = types_d(rng);
    std::vector<TypedParam> pool;
    for (int i = 0; i < pool_size; ++i) {
        std::uniform_int_distribution<int> t(0, ntypes - 1);
        pool.push_back(P("p" + std::to_string(i), kTypes[t(rng)]));
    }
    auto pick = [&](int lo, int hi, const std::set<std::string>& avoid) {
        std::uniform_int_distribution<int> k(lo, hi);
        int want = k(rng);
        std::vector<TypedParam> shuffled = pool;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        ParamList out;
        for (const auto& p : shuffled) {
            if (static_cast<int>(out.size()) >= want)
                break;
            if (!avoid.count(p.name))
                out.push_back(p);
        }
        return out;
    };

    RandomProblem pr;
    std::uniform_int_distribution<int> n_d(1, max_services);
    int n = n_d(rng);
    std::uniform_int_distribution<int> cost_d(1, 4);
    for (int i = 0; i < n; ++i) {
        auto ins = pick(0, 2, {});
        std::set<std::string> used;
        for (const auto& p : ins)
            used.insert(p.name);
        auto outs = pick(1, 2, used);
        if (outs.empty())
            continue;
        std::string id{static_cast<char>('a' + i / 26), static_cast<char>('a' + i % 26)};
        pr.services.push_back(svc("s" + id, ins, outs, cost_d(rng) * 0.5));
    }
    pr.goal.inputs = pick(1, 2, {});
    std::set<std::string> used;
    for (const auto& p : pr.goal.inputs)
        used.insert(p.name);
    pr.goal.outputs = pick(1, 2, used);
    if (pr.goal.outputs.empty())
        pr.goal.outputs.push_back(pr.goal.inputs.front());
    return pr;
}

/// Forward chaining restricted to one subset; returns layers to reach the goal,
/// or -1 when the goal is not reached within max_depth.
inline int subset_layers(const std::vector<ServiceDescriptor>& subset, const GoalSignature& goal, int max_depth)
{
    std::set<TypedParam> known(goal.inputs.begin(), goal.inputs.end());
    auto done = [&] {
        for (const auto& o : goal.outputs) {
            if (!known.count(o))
                return false;
        }
        return true;
    };
    if (done())
        return 0;
    std::vector<bool> fired(subset.size(), false);
    for (int layer = 1; layer <= max_depth; ++layer) {
        std::vector<std::size_t> now;
        for (std::size_t i = 0; i < subset.size(); ++i) {
            if (fired[i])
                continue;
            bool ok = true;
            for (const auto& in : subset[i].inputs)
                ok = ok && known.count(in);
            if (ok)
                now.push_back(i);
        }
        if (now.empty())
            return -1;
        for (auto i : now) {
            fired[i] = true;
            known.insert(subset[i].outputs.begin(), subset[i].outputs.end());
        }
        if (done())
            return layer;
    }
    return -1;
}

struct BruteForcePlan {
    int layers = -1;  // -1: unsatisfiable
    double cost = 0.0;
};

/// Enumerates every subset of services. Each service is used at most once, so
/// a DAG is determined up to wiring by its service set, and the earliest-source
/// wiring of a set achieves that set's minimum depth.
inline BruteForcePlan brute_force_plan(const std::vector<ServiceDescriptor>& services, const GoalSignature& goal,
                                       int max_depth)
{
    BruteForcePlan best;
    std::size_t n = services.size();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        std::vector<ServiceDescriptor> subset;
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::uint64_t{1} << i)) {
                subset.push_back(services[i]);
                cost += services[i].cost;
            }
        }
        int l = subset_layers(subset, goal, max_depth);
        if (l < 0)
            continue;
        if (best.layers < 0 || l < best.layers || (l == best.layers && cost < best.cost - 1e-9)) {
            best.layers = l;
            best.cost = cost;
        }
    }
    return best;
}

/// Behavior per service: every output is a literal plus the sum of numeric inputs.
inline BehaviorTable summing_behaviors(const std::vector<ServiceDescriptor>& services)
{
    BehaviorTable table;
    for (const auto& d : services) {
        std::map<std::string, std::string> body;
        for (const auto& out : d.outputs) {
            std::string e = out.datatype.kind() == Datatype::Kind::Int ? "1" : "0.5";
            for (const auto& in : d.inputs) {
                if (out.datatype.kind() == Datatype::Kind::Int && in.datatype.kind() != Datatype::Kind::Int)
                    continue;
                e += " + " + in.name;
            }
            body[out.name] = e;
        }
        table.emplace(d.id, behavior(d.id, body));
    }
    return table;
}

inline Value random_value(std::mt19937_64& rng, const Datatype& t)
{
    switch (t.kind()) {
    case Datatype::Kind::Real: return std::uniform_real_distribution<double>(-100.0, 100.0)(rng);
    case Datatype::Kind::Bool: return std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    case Datatype::Kind::Text: return std::string("t") + std::to_string(rng() % 100);
    default: return static_cast<std::int64_t>(std::uniform_int_distribution<int>(-1000, 1000)(rng));
    }
}

inline Binding random_inputs(std::mt19937_64& rng, const ParamList& params)
{
    Binding b;
    for (const auto& p : params)
        b[p.name] = random_value(rng, p.datatype);
    return b;
}

// ---------------------------------------------------------------------------
// Random composition models, built directly rather than planned.

struct RandomModel {
    CompositionModel model;
    std::vector<ServiceDescriptor> services;
};

/// A valid model of up to `max_nodes` nodes over int/real parameters. Node i
/// invokes service "svc<i>"; inputs come from goal inputs or earlier outputs.
inline RandomModel random_model(std::mt19937_64& rng, int max_nodes)
{
    static const std::vector<std::string> kTypes{"int", "real"};
    auto type = [&] { return Datatype::parse(kTypes[rng() % kTypes.size()]); };
    RandomModel rm;
    auto& m = rm.model;
    int fresh = 0;

    struct Avail {
        TypedParam param;
        PortRef source;
    };
    std::vector<Avail> avail;
    int n_in = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n_in; ++i) {
        TypedParam p{"g" + std::to_string(i), type()};
        m.goal.inputs.push_back(p);
        avail.push_back({p, PortRef::model_input(p.name)});
    }

    int n_nodes = static_cast<int>(rng() % (max_nodes + 1));
    for (int k = 0; k < n_nodes; ++k) {
        ServiceDescriptor d;
        d.id = "svc" + std::to_string(k);
        d.name = d.id;
        d.cost = 1.0 + static_cast<double>(rng() % 3);
        std::string node_id = "n" + std::to_string(k + 1);
        std::vector<Avail> shuffled = avail;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        int n_args = static_cast<int>(rng() % 3);
        std::set<std::string> names;
        for (const auto& a : shuffled) {
            if (static_cast<int>(d.inputs.size()) >= n_args)
                break;
            if (!names.insert(a.param.name).second)
                continue;
            d.inputs.push_back(a.param);
            m.edges.push_back(Edge{a.source, PortRef::port(node_id, a.param.name)});
        }
        int n_outs = 1 + static_cast<int>(rng() % 2);
        for (int o = 0; o < n_outs; ++o) {
            TypedParam p{"v" + std::to_string(fresh++), type()};
            d.outputs.push_back(p);
            avail.push_back({p, PortRef::port(node_id, p.name)});
        }
        m.nodes.push_back(InvocationNode{node_id, bind(d)});
        rm.services.push_back(d);
    }

    std::shuffle(avail.begin(), avail.end(), rng);
    int n_out = 1 + static_cast<int>(rng() % 3);
    std::set<std::string> out_names;
    for (const auto& a : avail) {
        if (static_cast<int>(m.goal.outputs.size()) >= n_out)
            break;
        if (!out_names.insert(a.param.name).second)
            continue;
        m.goal.outputs.push_back(a.param);
        m.edges.push_back(Edge{a.source, PortRef::model_output(a.param.name)});
    }
    return rm;
}

/// Deterministic numeric bodies for random-model services.
inline BehaviorTable linear_behaviors(const std::vector<ServiceDescriptor>& services)
{
    BehaviorTable table;
    for (const auto& d : services) {
        std::map<std::string, std::string> body;
        int k = 1;
        for (const auto& out : d.outputs) {
            bool is_int = out.datatype.kind() == Datatype::Kind::Int;
            std::string e = is_int ? std::to_string(k) : std::to_string(k) + ".25";
            for (const auto& in : d.inputs) {
                if (is_int && in.datatype.kind() != Datatype::Kind::Int)
                    continue;
                e += " + " + in.name + (is_int ? " * 2" : " * 0.5");
            }
            body[out.name] = e;
            ++k;
        }
        table.emplace(d.id, behavior(d.id, body));
    }
    return table;
}

/// Clones one node (same service, same input sources) and moves some of its
/// consumers onto the clone. Returns false when the model has no nodes.
inline bool force_duplicate(std::mt19937_64& rng, CompositionModel& m)
{
    if (m.nodes.empty())
        return false;
    const auto original = m.nodes[rng() % m.nodes.size()];
    std::string clone_id = "dup" + std::to_string(m.nodes.size());
    m.nodes.push_back(InvocationNode{clone_id, original.binding});
    std::vector<Edge> extra;
    for (auto& e : m.edges) {
        if (e.to.kind == PortRef::Kind::NodePort && e.to.node == original.id)
            extra.push_back(Edge{e.from, PortRef::port(clone_id, e.to.param)});
        if (e.from.kind == PortRef::Kind::NodePort && e.from.node == original.id && rng() % 2 == 0)
            e.from.node = clone_id;
    }
    m.edges.insert(m.edges.end(), extra.begin(), extra.end());
    return true;
}

// ---------------------------------------------------------------------------
// Brute-force selection oracle.

/// Best `k`-subset by total score; among equal totals, the subset whose
/// members sorted by (score desc, id asc) compare smallest.
inline std::vector<std::string> brute_force_select(const std::map<std::string, double>& scores, int k)
{
    std::vector<std::string> ids;
    for (const auto& [id, _] : scores)
        ids.push_back(id);
    std::size_t n = ids.size();
    std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), n);
    auto order = [&](std::vector<std::string> v) {
        std::sort(v.begin(), v.end(), [&](const auto& a, const auto& b) {
            double sa = scores.at(a), sb = scores.at(b);
            if (sa != sb)
                return sa > sb;
            return a < b;
        });
        return v;
    };
    // Tie-break on totals: prefer higher individual scores, then smaller ids,
    // i.e. compare the ordered score/id sequences lexicographically.
    auto better = [&](const std::vector<std::string>& a, const std::vector<std::string>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            double sa = scores.at(a[i]), sb = scores.at(b[i]);
            if (sa != sb)
                return sa > sb;
            if (a[i] != b[i])
                return a[i] < b[i];
        }
        return false;
    };
    std::vector<std::string> best;
    double best_total = -1.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcountll(mask)) != want)
            continue;
        std::vector<std::string> pick;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::uint64_t{1} << i)) {
                pick.push_back(ids[i]);
                total += scores.at(ids[i]);
            }
        }
        pick = order(pick);
        if (best.empty() && want > 0) {
            best = pick;
            best_total = total;
            continue;
        }
        if (total > best_total + 1e-12 || (std::abs(total - best_total) <= 1e-12 && better(pick, best))) {
            best = pick;
            best_total = total;
        }
    }
    return best;
}

}  // namespace am4sc::testing
