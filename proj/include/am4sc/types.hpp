#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace am4sc {

using json = nlohmann::json;

/// Closed set of parameter datatypes: int, real, text, bool, record(<name>).
class Datatype {
public:
    enum class Kind { Int, Real, Text, Bool, Record };

    Datatype() = default;
    explicit Datatype(Kind kind, std::string record_name = {});

    static Datatype integer() { return Datatype(Kind::Int); }
    static Datatype real() { return Datatype(Kind::Real); }
    static Datatype text() { return Datatype(Kind::Text); }
    static Datatype boolean() { return Datatype(Kind::Bool); }
    static Datatype record(std::string name) { return Datatype(Kind::Record, std::move(name)); }

    /// Parses "int", "real", "text", "bool" or "record(name)". Throws SchemaError.
    static Datatype parse(std::string_view tag);

    Kind kind() const noexcept { return kind_; }
    const std::string& record_name() const noexcept { return record_; }
    bool is_numeric() const noexcept { return kind_ == Kind::Int || kind_ == Kind::Real; }

    std::string to_string() const;

    auto operator<=>(const Datatype&) const = default;

private:
    Kind kind_ = Kind::Int;
    std::string record_;
};

struct TypedParam {
    std::string name;
    Datatype datatype;

    auto operator<=>(const TypedParam&) const = default;
};

using ParamList = std::vector<TypedParam>;

/// Scalar runtime value. Record values are opaque scalars (number or string).
using Value = std::variant<bool, std::int64_t, double, std::string>;

using Binding = std::map<std::string, Value>;

bool is_identifier(std::string_view s);

/// Service, feature and model ids: nonempty, [A-Za-z0-9_-], not starting with '-'.
bool is_id(std::string_view s);

enum class ErrorCode;

/// Throws Error(code) when a name is not an identifier or is repeated.
void check_param_list(const ParamList& params, ErrorCode code, std::string_view context,
                      bool require_nonempty);

bool value_conforms(const Value& v, const Datatype& t);

/// Int results are widened to real when the declared type is real.
Value coerce_to(const Value& v, const Datatype& t);

std::string value_to_string(const Value& v);

json value_to_json(const Value& v);
Value value_from_json(const json& j);

json binding_to_json(const Binding& b);
Binding binding_from_json(const json& j);

json param_to_json(const TypedParam& p);
TypedParam param_from_json(const json& j);
json params_to_json(const ParamList& ps);
ParamList params_from_json(const json& j);

/// Rejects objects carrying keys outside `allowed` and missing any of `required`.
void check_object(const json& j, std::initializer_list<std::string_view> required,
                  std::initializer_list<std::string_view> optional, std::string_view context);

}  // namespace am4sc
