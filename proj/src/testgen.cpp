#include "am4sc/testgen.hpp"

#include <algorithm>
#include <cmath>

#include "am4sc/error.hpp"

namespace am4sc {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::size_t shared_tags(const TagSet& a, const TagSet& b)
{
    return static_cast<std::size_t>(
        std::count_if(a.begin(), a.end(), [&](const std::string& t) { return b.count(t) > 0; }));
}

}  // namespace

void validate(const ReferenceModel& m)
{
    if (!is_id(m.id))
        throw Error(ErrorCode::SchemaError, "bad reference model id '" + m.id + "'");
    if (m.domain_tags.empty())
        throw Error(ErrorCode::SchemaError, m.id + ": domain_tags must be nonempty");
    for (const auto& [name, gen] : m.input_generators) {
        if (!is_identifier(name))
            throw Error(ErrorCode::SchemaError, m.id + ": generator name '" + name + "' is not an identifier");
        if (gen.range && !gen.values.empty())
            throw Error(ErrorCode::SchemaError, m.id + "." + name + ": give either range or values, not both");
        if (!gen.range && gen.values.empty())
            throw Error(ErrorCode::SchemaError, m.id + "." + name + ": generator needs a range or values");
        if (gen.range) {
            const auto& r = *gen.range;
            auto kind = gen.datatype.kind();
            if (kind == Datatype::Kind::Text)
                throw Error(ErrorCode::SchemaError, m.id + "." + name + ": text generators need a value list");
            if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
                throw Error(ErrorCode::SchemaError, m.id + "." + name + ": range needs lo <= hi");
            if ((kind == Datatype::Kind::Int || kind == Datatype::Kind::Bool) &&
                (std::floor(r.lo) != r.lo || std::floor(r.hi) != r.hi))
                throw Error(ErrorCode::SchemaError, m.id + "." + name + ": integer range needs integer bounds");
            if (kind == Datatype::Kind::Bool && (r.lo < 0 || r.hi > 1))
                throw Error(ErrorCode::SchemaError, m.id + "." + name + ": bool range must lie in [0,1]");
        }
        for (const auto& v : gen.values) {
            if (!value_conforms(v, gen.datatype))
                throw Error(ErrorCode::SchemaError, m.id + "." + name + ": value " + value_to_string(v) +
                                                        " is not a " + gen.datatype.to_string());
        }
    }
    for (const auto& [out, expr] : m.oracle) {
        if (!is_identifier(out))
            throw Error(ErrorCode::SchemaError, m.id + ": oracle output '" + out + "' is not an identifier");
        for (const auto& name : expr.names()) {
            if (!m.input_generators.count(name))
                throw Error(ErrorCode::SchemaError,
                            m.id + ": oracle for '" + out + "' references undeclared '" + name + "'");
        }
    }
}

std::vector<ReferenceModel> match_models(const FeatureRequest& feature, const std::vector<ReferenceModel>& models)
{
    std::vector<std::pair<std::size_t, const ReferenceModel*>> hits;
    for (const auto& m : models) {
        auto k = shared_tags(m.domain_tags, feature.tags);
        if (k > 0)
            hits.emplace_back(k, &m);
    }
    if (hits.empty())
        throw Error(ErrorCode::NoReferenceModel, "no reference model covers the tags of " + feature.id);
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second->id < b.second->id;
    });
    std::vector<ReferenceModel> out;
    for (const auto& [_, m] : hits)
        out.push_back(*m);
    return out;
}

std::uint64_t draw_bits(std::int64_t seed, std::uint64_t test_index, std::uint64_t param_index)
{
    auto s = splitmix64(static_cast<std::uint64_t>(seed));
    s = splitmix64(s ^ test_index);
    return splitmix64(s ^ param_index);
}

Value draw_value(const GeneratorSpec& gen, std::uint64_t bits)
{
    if (!gen.values.empty())
        return gen.values[bits % gen.values.size()];
    if (!gen.range)
        throw Error(ErrorCode::SchemaError, "generator without range or values");
    const auto& r = *gen.range;
    switch (gen.datatype.kind()) {
    case Datatype::Kind::Int: {
        auto lo = static_cast<std::int64_t>(r.lo);
        auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(r.hi) - lo) + 1;
        return lo + static_cast<std::int64_t>(bits % span);
    }
    case Datatype::Kind::Bool: {
        auto lo = static_cast<std::int64_t>(r.lo);
        auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(r.hi) - lo) + 1;
        return lo + static_cast<std::int64_t>(bits % span) != 0;
    }
    default: {
        // 53 high bits give a uniform double in [0, 1).
        double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;
        return r.lo + unit * (r.hi - r.lo);
    }
    }
}

std::vector<ContractTest> generate_tests(const FeatureRequest& feature, const ReferenceModel& model, int n,
                                         std::int64_t seed, double tolerance)
{
    if (n < 0)
        throw Error(ErrorCode::InvalidArgument, "test count must be >= 0");
    if (!(tolerance >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "tolerance must be >= 0");

    std::vector<const GeneratorSpec*> gens;
    for (const auto& in : feature.goal_inputs) {
        auto it = model.input_generators.find(in.name);
        if (it == model.input_generators.end() || it->second.datatype != in.datatype)
            throw Error(ErrorCode::GeneratorGap, model.id + " has no " + in.datatype.to_string() +
                                                     " generator for input '" + in.name + "' of " + feature.id);
        gens.push_back(&it->second);
    }
    for (const auto& out : feature.goal_outputs) {
        if (!model.oracle.count(out.name))
            throw Error(ErrorCode::OracleError, model.id + " has no oracle for output '" + out.name + "'");
    }

    std::vector<ContractTest> tests;
    tests.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ContractTest t;
        t.id = feature.id + "-t" + std::to_string(i);
        t.feature_id = feature.id;
        t.tolerance = tolerance;
        t.origin = model.id;
        t.seed = seed;
        for (std::size_t j = 0; j < gens.size(); ++j)
            t.inputs[feature.goal_inputs[j].name] = draw_value(*gens[j], draw_bits(seed, i, j));
        for (const auto& out : feature.goal_outputs) {
            auto v = coerce_to(model.oracle.at(out.name).evaluate(t.inputs), out.datatype);
            if (!value_conforms(v, out.datatype))
                throw Error(ErrorCode::OracleError, model.id + ": oracle for '" + out.name + "' yields " +
                                                        value_to_string(v) + ", not a " + out.datatype.to_string());
            t.expected[out.name] = std::move(v);
        }
        tests.push_back(std::move(t));
    }
    return tests;
}

json generator_to_json(const GeneratorSpec& g)
{
    json out{{"datatype", g.datatype.to_string()}};
    if (g.range)
        out["range"] = {g.range->lo, g.range->hi};
    else {
        out["values"] = json::array();
        for (const auto& v : g.values)
            out["values"].push_back(value_to_json(v));
    }
    return out;
}

GeneratorSpec generator_from_json(const json& j)
{
    check_object(j, {"datatype"}, {"range", "values"}, "input generator");
    GeneratorSpec g;
    try {
        g.datatype = Datatype::parse(j["datatype"].get<std::string>());
        if (j.contains("range")) {
            const auto& r = j["range"];
            if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
                throw Error(ErrorCode::SchemaError, "range must be [lo, hi]");
            g.range = GeneratorSpec::Range{r[0].get<double>(), r[1].get<double>()};
        }
        if (j.contains("values")) {
            if (!j["values"].is_array())
                throw Error(ErrorCode::SchemaError, "values must be an array");
            for (const auto& v : j["values"])
                g.values.push_back(value_from_json(v));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("input generator: ") + e.what());
    }
    return g;
}

json model_to_json(const ReferenceModel& m)
{
    json gens = json::object();
    for (const auto& [name, g] : m.input_generators)
        gens[name] = generator_to_json(g);
    json oracle = json::object();
    for (const auto& [name, e] : m.oracle)
        oracle[name] = e.source();
    return json{{"id", m.id},
                {"domain_tags", std::vector<std::string>(m.domain_tags.begin(), m.domain_tags.end())},
                {"input_generators", gens},
                {"oracle", oracle}};
}

ReferenceModel model_from_json(const json& j)
{
    check_object(j, {"id", "domain_tags", "input_generators", "oracle"}, {}, "reference model");
    ReferenceModel m;
    try {
        m.id = j["id"].get<std::string>();
        for (const auto& t : j["domain_tags"])
            m.domain_tags.insert(t.get<std::string>());
        if (!j["input_generators"].is_object() || !j["oracle"].is_object())
            throw Error(ErrorCode::SchemaError, "input_generators and oracle must be objects");
        for (const auto& [name, g] : j["input_generators"].items())
            m.input_generators.emplace(name, generator_from_json(g));
        for (const auto& [name, e] : j["oracle"].items())
            m.oracle.emplace(name, Expression::parse(e.get<std::string>()));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("reference model: ") + e.what());
    }
    validate(m);
    return m;
}

std::vector<ReferenceModel> models_from_json(const json& j)
{
    if (!j.is_array())
        throw Error(ErrorCode::SchemaError, "reference models must be a JSON array");
    std::vector<ReferenceModel> out;
    for (const auto& e : j)
        out.push_back(model_from_json(e));
    return out;
}

json contract_test_to_json(const ContractTest& t)
{
    return json{{"id", t.id},
                {"feature_id", t.feature_id},
                {"inputs", binding_to_json(t.inputs)},
                {"expected", binding_to_json(t.expected)},
                {"tolerance", t.tolerance},
                {"origin", t.origin},
                {"seed", t.seed}};
}

ContractTest contract_test_from_json(const json& j)
{
    check_object(j, {"id", "feature_id", "inputs", "expected", "tolerance", "origin", "seed"}, {},
                 "contract test");
    try {
        return ContractTest{j["id"].get<std::string>(),
                            j["feature_id"].get<std::string>(),
                            binding_from_json(j["inputs"]),
                            binding_from_json(j["expected"]),
                            j["tolerance"].get<double>(),
                            j["origin"].get<std::string>(),
                            j["seed"].get<std::int64_t>()};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("contract test: ") + e.what());
    }
}

json tests_to_json(const std::vector<ContractTest>& tests)
{
    json out = json::array();
    for (const auto& t : tests)
        out.push_back(contract_test_to_json(t));
    return out;
}

std::vector<ContractTest> tests_from_json(const json& j)
{
    if (!j.is_array())
        throw Error(ErrorCode::SchemaError, "contract tests must be a JSON array");
    std::vector<ContractTest> out;
    for (const auto& e : j)
        out.push_back(contract_test_from_json(e));
    return out;
}

}  // namespace am4sc
