#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>

#include "am4sc/types.hpp"

namespace am4sc {

/// Pure arithmetic expression over named parameters.
///
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := NUMBER | IDENT | '(' expr ')'
///
/// Integer literals stay integers under + - *; '/' always yields a real.
/// A bare identifier evaluates to the bound value of any type, so text and
/// bool parameters can be passed through, but arithmetic needs numbers.
class Expression {
public:
    /// Throws Error(SchemaError) on a syntax error.
    static Expression parse(std::string_view source);

    /// Throws Error(OracleError) for unknown names, division by zero,
    /// non-numeric operands and integer overflow.
    Value evaluate(const Binding& env) const;

    const std::string& source() const noexcept { return source_; }
    const std::set<std::string>& names() const noexcept { return names_; }

    bool operator==(const Expression& other) const { return source_ == other.source_; }

    struct Node;

private:
    std::string source_;
    std::shared_ptr<const Node> root_;
    std::set<std::string> names_;
};

}  // namespace am4sc
