#include "am4sc/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "am4sc/error.hpp"

namespace am4sc {

struct Expression::Node {
    enum class Kind { Number, Name, Binary };
    Kind kind;
    Value literal;
    std::string name;
    char op = 0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

class Parser {
public:
    Parser(std::string_view src, std::set<std::string>& names) : src_(src), names_(names) {}

    NodePtr parse_all()
    {
        auto e = expr();
        skip_ws();
        if (pos_ != src_.size())
            fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error(ErrorCode::SchemaError, "expression \"" + std::string(src_) + "\" at offset " +
                                                std::to_string(pos_) + ": " + what);
    }

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static NodePtr binary(char op, NodePtr l, NodePtr r)
    {
        auto n = std::make_shared<Expression::Node>();
        n->kind = Expression::Node::Kind::Binary;
        n->op = op;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }

    NodePtr expr()
    {
        auto lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = binary('+', lhs, term());
            else if (accept('-'))
                lhs = binary('-', lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term()
    {
        auto lhs = factor();
        for (;;) {
            if (accept('*'))
                lhs = binary('*', lhs, factor());
            else if (accept('/'))
                lhs = binary('/', lhs, factor());
            else
                return lhs;
        }
    }

    NodePtr factor()
    {
        skip_ws();
        if (pos_ >= src_.size())
            fail("unexpected end of input");
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = expr();
            if (!accept(')'))
                fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            auto start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            auto n = std::make_shared<Expression::Node>();
            n->kind = Expression::Node::Kind::Name;
            n->name = std::string(src_.substr(start, pos_ - start));
            names_.insert(n->name);
            return n;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number()
    {
        auto start = pos_;
        bool is_real = false;
        auto digits = [&] {
            auto s = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
            return pos_ - s;
        };
        auto int_digits = digits();
        std::size_t frac_digits = 0;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            is_real = true;
            ++pos_;
            frac_digits = digits();
        }
        if (int_digits + frac_digits == 0)
            fail("malformed number");
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            is_real = true;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                ++pos_;
            if (digits() == 0)
                fail("malformed exponent");
        }
        auto text = src_.substr(start, pos_ - start);
        auto n = std::make_shared<Expression::Node>();
        n->kind = Expression::Node::Kind::Number;
        if (is_real) {
            // from_chars for double is unavailable on older libstdc++.
            n->literal = std::stod(std::string(text));
        } else {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || p != text.data() + text.size())
                fail("integer literal out of range");
            n->literal = v;
        }
        return n;
    }

    std::string_view src_;
    std::set<std::string>& names_;
    std::size_t pos_ = 0;
};

double as_double(const Value& v)
{
    if (const auto* i = std::get_if<std::int64_t>(&v))
        return static_cast<double>(*i);
    return std::get<double>(v);
}

bool is_number(const Value& v)
{
    return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

Value apply(char op, const Value& a, const Value& b)
{
    if (!is_number(a) || !is_number(b))
        throw Error(ErrorCode::OracleError, std::string("operator '") + op + "' needs numeric operands");
    if (op == '/') {
        double d = as_double(b);
        if (d == 0.0)
            throw Error(ErrorCode::OracleError, "division by zero");
        return as_double(a) / d;
    }
    if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
        std::int64_t x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b), r = 0;
        bool overflow = false;
        switch (op) {
        case '+': overflow = __builtin_add_overflow(x, y, &r); break;
        case '-': overflow = __builtin_sub_overflow(x, y, &r); break;
        case '*': overflow = __builtin_mul_overflow(x, y, &r); break;
        }
        if (overflow)
            throw Error(ErrorCode::OracleError, "integer overflow");
        return r;
    }
    double x = as_double(a), y = as_double(b);
    switch (op) {
    case '+': return x + y;
    case '-': return x - y;
    default: return x * y;
    }
}

Value eval(const Expression::Node& n, const Binding& env)
{
    switch (n.kind) {
    case Expression::Node::Kind::Number: return n.literal;
    case Expression::Node::Kind::Name: {
        auto it = env.find(n.name);
        if (it == env.end())
            throw Error(ErrorCode::OracleError, "unknown name '" + n.name + "'");
        return it->second;
    }
    case Expression::Node::Kind::Binary: return apply(n.op, eval(*n.lhs, env), eval(*n.rhs, env));
    }
    throw Error(ErrorCode::OracleError, "corrupt expression");
}

}  // namespace

Expression Expression::parse(std::string_view source)
{
    Expression e;
    e.source_ = std::string(source);
    e.root_ = Parser(e.source_, e.names_).parse_all();
    return e;
}

Value Expression::evaluate(const Binding& env) const
{
    if (!root_)
        throw Error(ErrorCode::OracleError, "empty expression");
    return eval(*root_, env);
}

}  // namespace am4sc
