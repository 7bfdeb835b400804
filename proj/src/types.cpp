#include "am4sc/types.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "am4sc/error.hpp"

namespace am4sc {

Datatype::Datatype(Kind kind, std::string record_name) : kind_(kind), record_(std::move(record_name))
{
    if (kind_ == Kind::Record && !is_identifier(record_))
        throw Error(ErrorCode::SchemaError, "record datatype needs an identifier name");
    if (kind_ != Kind::Record)
        record_.clear();
}

Datatype Datatype::parse(std::string_view tag)
{
    if (tag == "int")
        return integer();
    if (tag == "real")
        return real();
    if (tag == "text")
        return text();
    if (tag == "bool")
        return boolean();
    constexpr std::string_view prefix = "record(";
    if (tag.size() > prefix.size() + 1 && tag.substr(0, prefix.size()) == prefix && tag.back() == ')') {
        auto name = tag.substr(prefix.size(), tag.size() - prefix.size() - 1);
        if (is_identifier(name))
            return record(std::string(name));
    }
    throw Error(ErrorCode::SchemaError, "unknown datatype '" + std::string(tag) + "'");
}

std::string Datatype::to_string() const
{
    switch (kind_) {
    case Kind::Int: return "int";
    case Kind::Real: return "real";
    case Kind::Text: return "text";
    case Kind::Bool: return "bool";
    case Kind::Record: return "record(" + record_ + ")";
    }
    return "?";
}

bool is_identifier(std::string_view s)
{
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
            return false;
    }
    return true;
}

bool is_id(std::string_view s)
{
    if (s.empty() || s[0] == '-')
        return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
            return false;
    }
    return true;
}

void check_param_list(const ParamList& params, ErrorCode code, std::string_view context,
                      bool require_nonempty)
{
    if (require_nonempty && params.empty())
        throw Error(code, std::string(context) + " must be nonempty");
    std::set<std::string> seen;
    for (const auto& p : params) {
        if (!is_identifier(p.name))
            throw Error(code,
                        std::string(context) + ": '" + p.name + "' is not an identifier");
        if (!seen.insert(p.name).second)
            throw Error(code,
                        std::string(context) + ": duplicate parameter '" + p.name + "'");
    }
}

bool value_conforms(const Value& v, const Datatype& t)
{
    switch (t.kind()) {
    case Datatype::Kind::Int: return std::holds_alternative<std::int64_t>(v);
    case Datatype::Kind::Real:
        return std::holds_alternative<double>(v) || std::holds_alternative<std::int64_t>(v);
    case Datatype::Kind::Text: return std::holds_alternative<std::string>(v);
    case Datatype::Kind::Bool: return std::holds_alternative<bool>(v);
    case Datatype::Kind::Record: return !std::holds_alternative<bool>(v);
    }
    return false;
}

Value coerce_to(const Value& v, const Datatype& t)
{
    if (t.kind() == Datatype::Kind::Real) {
        if (const auto* i = std::get_if<std::int64_t>(&v))
            return static_cast<double>(*i);
    }
    return v;
}

std::string value_to_string(const Value& v)
{
    return value_to_json(v).dump();
}

json value_to_json(const Value& v)
{
    return std::visit([](const auto& x) { return json(x); }, v);
}

Value value_from_json(const json& j)
{
    if (j.is_boolean())
        return j.get<bool>();
    if (j.is_number_integer())
        return j.get<std::int64_t>();
    if (j.is_number_float())
        return j.get<double>();
    if (j.is_string())
        return j.get<std::string>();
    throw Error(ErrorCode::SchemaError, "value must be a scalar, got " + j.dump());
}

json binding_to_json(const Binding& b)
{
    json out = json::object();
    for (const auto& [k, v] : b)
        out[k] = value_to_json(v);
    return out;
}

Binding binding_from_json(const json& j)
{
    if (!j.is_object())
        throw Error(ErrorCode::SchemaError, "binding must be an object");
    Binding b;
    for (const auto& [k, v] : j.items())
        b.emplace(k, value_from_json(v));
    return b;
}

json param_to_json(const TypedParam& p)
{
    return json{{"name", p.name}, {"datatype", p.datatype.to_string()}};
}

TypedParam param_from_json(const json& j)
{
    check_object(j, {"name", "datatype"}, {}, "parameter");
    if (!j["name"].is_string() || !j["datatype"].is_string())
        throw Error(ErrorCode::SchemaError, "parameter name and datatype must be strings");
    return TypedParam{j["name"].get<std::string>(), Datatype::parse(j["datatype"].get<std::string>())};
}

json params_to_json(const ParamList& ps)
{
    json out = json::array();
    for (const auto& p : ps)
        out.push_back(param_to_json(p));
    return out;
}

ParamList params_from_json(const json& j)
{
    if (!j.is_array())
        throw Error(ErrorCode::SchemaError, "parameter list must be an array");
    ParamList out;
    for (const auto& e : j)
        out.push_back(param_from_json(e));
    return out;
}

void check_object(const json& j, std::initializer_list<std::string_view> required,
                  std::initializer_list<std::string_view> optional, std::string_view context)
{
    if (!j.is_object())
        throw Error(ErrorCode::SchemaError, std::string(context) + " must be a JSON object");
    for (auto key : required) {
        if (!j.contains(std::string(key)))
            throw Error(ErrorCode::SchemaError,
                        std::string(context) + " is missing field '" + std::string(key) + "'");
    }
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (auto k : required)
            known = known || k == key;
        for (auto k : optional)
            known = known || k == key;
        if (!known)
            throw Error(ErrorCode::SchemaError, std::string(context) + " has unknown field '" + key + "'");
    }
}

}  // namespace am4sc
