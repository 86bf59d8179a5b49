#pragma once

// Small arithmetic expression language used for scenario data f(x,t) and u0(x).
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative, binds tighter
//                                            than unary minus: -2^2 == -(2^2)
//   primary := number | 'x' | 'y' | 't' | fn '(' sum (',' sum)* ')' | '(' sum ')'
//
// Functions: sin cos exp abs sqrt (1 argument), min max (2 arguments).
// Numbers accept scientific notation. Parse errors carry the byte offset.

#include <charconv>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ballvi/util.hpp"

namespace ballvi {

class ExprError : public std::runtime_error {
  public:
    ExprError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

  private:
    std::size_t offset_;
};

class EvalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace expr_detail {

enum class Fn { sin, cos, exp, abs, sqrt, min, max };

inline int fn_arity(Fn f) { return (f == Fn::min || f == Fn::max) ? 2 : 1; }

inline const char* fn_name(Fn f) {
    switch (f) {
        case Fn::sin: return "sin";
        case Fn::cos: return "cos";
        case Fn::exp: return "exp";
        case Fn::abs: return "abs";
        case Fn::sqrt: return "sqrt";
        case Fn::min: return "min";
        case Fn::max: return "max";
    }
    return "?";
}

struct Node {
    enum class Kind { number, variable, negate, binary, call } kind;
    double value = 0.0;      // number
    char var = 'x';          // variable
    char op = '+';           // binary
    Fn fn = Fn::sin;         // call
    std::vector<std::shared_ptr<const Node>> args;
};

using NodePtr = std::shared_ptr<const Node>;

inline NodePtr make_binary(char op, NodePtr left, NodePtr right) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::binary;
    n->op = op;
    n->args = {std::move(left), std::move(right)};
    return n;
}

inline double eval_node(const Node& n, double x, double y, double t) {
    switch (n.kind) {
        case Node::Kind::number:
            return n.value;
        case Node::Kind::variable:
            return n.var == 'x' ? x : n.var == 'y' ? y : t;
        case Node::Kind::negate:
            return -eval_node(*n.args[0], x, y, t);
        case Node::Kind::binary: {
            double a = eval_node(*n.args[0], x, y, t);
            double b = eval_node(*n.args[1], x, y, t);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/':
                    if (b == 0.0) throw EvalError("division by zero");
                    return a / b;
                case '^': {
                    double r = std::pow(a, b);
                    if (std::isnan(r)) throw EvalError("domain error in power");
                    return r;
                }
            }
            throw EvalError("bad operator");
        }
        case Node::Kind::call: {
            double a = eval_node(*n.args[0], x, y, t);
            switch (n.fn) {
                case Fn::sin: return std::sin(a);
                case Fn::cos: return std::cos(a);
                case Fn::exp: return std::exp(a);
                case Fn::abs: return std::fabs(a);
                case Fn::sqrt:
                    if (a < 0.0) throw EvalError("sqrt of negative value");
                    return std::sqrt(a);
                case Fn::min: return std::fmin(a, eval_node(*n.args[1], x, y, t));
                case Fn::max: return std::fmax(a, eval_node(*n.args[1], x, y, t));
            }
            throw EvalError("bad function");
        }
    }
    throw EvalError("bad node");
}

// Fully parenthesized form; numbers use 17 significant digits, so
// parse(to_string(e)) evaluates bit-identically to e.
inline void print_node(const Node& n, std::string& out) {
    switch (n.kind) {
        case Node::Kind::number:
            out += fmt17(n.value);
            return;
        case Node::Kind::variable:
            out += n.var;
            return;
        case Node::Kind::negate:
            out += "(-";
            print_node(*n.args[0], out);
            out += ')';
            return;
        case Node::Kind::binary:
            out += '(';
            print_node(*n.args[0], out);
            out += ' ';
            out += n.op;
            out += ' ';
            print_node(*n.args[1], out);
            out += ')';
            return;
        case Node::Kind::call:
            out += fn_name(n.fn);
            out += '(';
            print_node(*n.args[0], out);
            if (n.args.size() > 1) {
                out += ", ";
                print_node(*n.args[1], out);
            }
            out += ')';
            return;
    }
}

class Parser {
  public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected character");
        return e;
    }

  private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const { throw ExprError(what, pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                       text_[pos_] == '\n' || text_[pos_] == '\r'))
            ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    NodePtr parse_sum() {
        NodePtr left = parse_product();
        for (;;) {
            char c = peek();
            if (c != '+' && c != '-') return left;
            ++pos_;
            NodePtr right = parse_product();
            left = make_binary(c, left, right);
        }
    }

    NodePtr parse_product() {
        NodePtr left = parse_unary();
        for (;;) {
            char c = peek();
            if (c != '*' && c != '/') return left;
            ++pos_;
            NodePtr right = parse_unary();
            left = make_binary(c, left, right);
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::negate;
            n->args.push_back(parse_unary());
            return n;
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (peek() == '^') {
            ++pos_;
            // Right-associative; the exponent may itself carry a unary minus.
            NodePtr expo = parse_unary();
            return make_binary('^', base, expo);
        }
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        char c = text_[pos_];
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') return parse_ident();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
        }
        if (pos_ - start == 0 || (pos_ - start == 1 && text_[start] == '.'))
            fail("malformed number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
                while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
            } else {
                pos_ = mark; // "2e" is the number 2 followed by an identifier error later
            }
        }
        double value = 0.0;
        auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (res.ec != std::errc()) {
            pos_ = start;
            fail("malformed number");
        }
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::number;
        n->value = value;
        return n;
    }

    NodePtr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               ((text_[pos_] >= 'a' && text_[pos_] <= 'z') ||
                (text_[pos_] >= 'A' && text_[pos_] <= 'Z') ||
                (text_[pos_] >= '0' && text_[pos_] <= '9') || text_[pos_] == '_'))
            ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);
        if (name == "x" || name == "y" || name == "t") {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::variable;
            n->var = name[0];
            return n;
        }
        Fn fn;
        if (name == "sin") fn = Fn::sin;
        else if (name == "cos") fn = Fn::cos;
        else if (name == "exp") fn = Fn::exp;
        else if (name == "abs") fn = Fn::abs;
        else if (name == "sqrt") fn = Fn::sqrt;
        else if (name == "min") fn = Fn::min;
        else if (name == "max") fn = Fn::max;
        else {
            pos_ = start;
            fail("unknown identifier '" + std::string(name) + "'");
        }
        if (!eat('(')) fail("expected '(' after function name");
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::call;
        n->fn = fn;
        n->args.push_back(parse_sum());
        int arity = fn_arity(fn);
        int got = 1;
        while (eat(',')) {
            n->args.push_back(parse_sum());
            ++got;
        }
        if (!eat(')')) fail("expected ')'");
        if (got != arity)
            fail(std::string(fn_name(fn)) + " expects " + std::to_string(arity) +
                 " argument(s), got " + std::to_string(got));
        return n;
    }
};

} // namespace expr_detail

class Expr {
  public:
    Expr() = default;

    double eval(double x, double y, double t) const {
        if (!root_) throw EvalError("empty expression");
        return expr_detail::eval_node(*root_, x, y, t);
    }

    std::string to_string() const {
        std::string out;
        if (root_) expr_detail::print_node(*root_, out);
        return out;
    }

    bool valid() const noexcept { return root_ != nullptr; }

    std::string source() const { return source_; }

    friend Expr parse_expr(std::string_view text);

  private:
    expr_detail::NodePtr root_;
    std::string source_;
};

inline Expr parse_expr(std::string_view text) {
    expr_detail::Parser p(text);
    Expr e;
    e.root_ = p.parse();
    e.source_ = std::string(text);
    return e;
}

} // namespace ballvi
