#pragma once

#include <array>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "wplap/error.hpp"
#include "wplap/geometry.hpp"

namespace wplap {

/// Syntax error in an expression; column is 1-based within the expression text.
class ExpressionError : public Error {
public:
    ExpressionError(const std::string& what, int column)
        : Error("column " + std::to_string(column) + ": " + what), message_(what), column_(column) {}

    const std::string& message() const noexcept { return message_; }
    int column() const noexcept { return column_; }

private:
    std::string message_;
    int column_;
};

/// Closed-form expression in t, x1, x2 (see docs/expression_grammar.md).
///
/// Expressions are immutable and cheap to copy; the node pool is shared.
class Expression {
public:
    enum class Op {
        constant, var_t, var_x1, var_x2,
        add, sub, mul, div, pow, neg,
        sin, cos, exp, log,
        min, max, clamp,
        // Derivative helpers, not reachable from the parser.
        pick_min,    // (a, b, da, db): a <= b ? da : db
        pick_max,    // (a, b, da, db): a >= b ? da : db
        pick_clamp,  // (v, lo, hi, dv, dlo, dhi)
    };

    struct Node {
        Op op = Op::constant;
        double value = 0.0;
        std::array<int, 6> kids{-1, -1, -1, -1, -1, -1};
    };

    Expression() : Expression(constant_expr(0.0)) {}

    static Expression parse(std::string_view text);
    static Expression constant_expr(double v) {
        Expression e(std::make_shared<std::vector<Node>>(), "");
        e.root_ = e.cst(v);
        e.source_ = format_number(v);
        return e;
    }

    double operator()(double t, const Point& x) const { return eval(root_, t, x); }

    /// d/dt, built symbolically.
    Expression derivative_t() const;

    bool depends_on_t() const { return depends(root_, Op::var_t); }
    bool depends_on_x() const { return depends(root_, Op::var_x1) || depends(root_, Op::var_x2); }
    bool is_constant() const { return (*nodes_)[static_cast<std::size_t>(root_)].op == Op::constant; }
    const std::string& source() const { return source_; }

private:
    Expression(std::shared_ptr<std::vector<Node>> pool, std::string src)
        : nodes_(std::move(pool)), source_(std::move(src)) {}

    static std::string format_number(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    int push(Node n) {
        nodes_->push_back(n);
        return static_cast<int>(nodes_->size()) - 1;
    }

    const Node& node(int i) const { return (*nodes_)[static_cast<std::size_t>(i)]; }

    bool depends(int i, Op var) const {
        const Node& n = node(i);
        if (n.op == var) return true;
        for (int k : n.kids)
            if (k >= 0 && depends(k, var)) return true;
        return false;
    }

    double eval(int i, double t, const Point& x) const {
        const Node& n = node(i);
        auto a = [&](int k) { return eval(n.kids[static_cast<std::size_t>(k)], t, x); };
        switch (n.op) {
            case Op::constant: return n.value;
            case Op::var_t: return t;
            case Op::var_x1: return x[0];
            case Op::var_x2: return x[1];
            case Op::add: return a(0) + a(1);
            case Op::sub: return a(0) - a(1);
            case Op::mul: return a(0) * a(1);
            case Op::div: return a(0) / a(1);
            case Op::pow: return std::pow(a(0), a(1));
            case Op::neg: return -a(0);
            case Op::sin: return std::sin(a(0));
            case Op::cos: return std::cos(a(0));
            case Op::exp: return std::exp(a(0));
            case Op::log: return std::log(a(0));
            case Op::min: return std::min(a(0), a(1));
            case Op::max: return std::max(a(0), a(1));
            case Op::clamp: {
                const double v = a(0), lo = a(1), hi = a(2);
                return v < lo ? lo : (v > hi ? hi : v);
            }
            case Op::pick_min: return a(0) <= a(1) ? a(2) : a(3);
            case Op::pick_max: return a(0) >= a(1) ? a(2) : a(3);
            case Op::pick_clamp: {
                const double v = a(0), lo = a(1), hi = a(2);
                return v < lo ? a(4) : (v > hi ? a(5) : a(3));
            }
        }
        return 0.0;
    }

    // Builders with light constant folding, used by the parser and derivative.
    bool is_const(int i, double v) const { return node(i).op == Op::constant && node(i).value == v; }
    int cst(double v) { return push({Op::constant, v, {-1, -1, -1, -1, -1, -1}}); }
    int unary(Op op, int a) {
        if (node(a).op == Op::constant && (op == Op::neg || op == Op::sin || op == Op::cos || op == Op::exp)) {
            Point z{};
            Node tmp{op, 0.0, {a, -1, -1, -1, -1, -1}};
            const int id = push(tmp);
            return cst(eval(id, 0.0, z));
        }
        return push({op, 0.0, {a, -1, -1, -1, -1, -1}});
    }
    int binary(Op op, int a, int b) {
        switch (op) {
            case Op::add:
                if (is_const(a, 0.0)) return b;
                if (is_const(b, 0.0)) return a;
                break;
            case Op::sub:
                if (is_const(b, 0.0)) return a;
                if (is_const(a, 0.0)) return unary(Op::neg, b);
                break;
            case Op::mul:
                if (is_const(a, 0.0) || is_const(b, 0.0)) return cst(0.0);
                if (is_const(a, 1.0)) return b;
                if (is_const(b, 1.0)) return a;
                break;
            case Op::div:
                if (is_const(a, 0.0)) return cst(0.0);
                if (is_const(b, 1.0)) return a;
                break;
            default: break;
        }
        if (node(a).op == Op::constant && node(b).op == Op::constant) {
            Point z{};
            const int id = push({op, 0.0, {a, b, -1, -1, -1, -1}});
            return cst(eval(id, 0.0, z));
        }
        return push({op, 0.0, {a, b, -1, -1, -1, -1}});
    }
    int nary(Op op, std::initializer_list<int> kids) {
        Node n{op, 0.0, {-1, -1, -1, -1, -1, -1}};
        std::size_t k = 0;
        for (int c : kids) n.kids[k++] = c;
        return push(n);
    }

    int differentiate(int i);

    friend class ExpressionParser;

    std::shared_ptr<std::vector<Node>> nodes_;
    int root_ = 0;
    std::string source_;
};

/// Recursive-descent parser for the nonlinearity grammar.
class ExpressionParser {
public:
    explicit ExpressionParser(std::string_view text)
        : text_(text), out_(std::make_shared<std::vector<Expression::Node>>(), std::string(text)) {}

    Expression run() {
        skip();
        if (pos_ >= text_.size()) fail("empty expression");
        out_.root_ = expr();
        skip();
        if (pos_ < text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
        return out_;
    }

private:
    using Op = Expression::Op;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ExpressionError(msg, static_cast<int>(pos_) + 1);
    }
    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    int expr() {
        int lhs = term();
        for (;;) {
            if (accept('+')) lhs = out_.binary(Op::add, lhs, term());
            else if (accept('-')) lhs = out_.binary(Op::sub, lhs, term());
            else return lhs;
        }
    }
    int term() {
        int lhs = unary();
        for (;;) {
            if (accept('*')) lhs = out_.binary(Op::mul, lhs, unary());
            else if (accept('/')) lhs = out_.binary(Op::div, lhs, unary());
            else return lhs;
        }
    }
    int unary() {
        if (accept('-')) return out_.unary(Op::neg, unary());
        if (accept('+')) return unary();
        return power();
    }
    int power() {
        int base = primary();
        if (accept('^')) return out_.binary(Op::pow, base, unary());
        return base;
    }
    int primary() {
        skip();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (accept('(')) {
            int e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        fail(std::string("unexpected '") + c + "'");
    }
    int number() {
        const std::size_t start = pos_;
        std::string buf(text_.substr(pos_));
        char* end = nullptr;
        const double v = std::strtod(buf.c_str(), &end);
        if (end == buf.c_str()) fail("malformed number");
        pos_ = start + static_cast<std::size_t>(end - buf.c_str());
        return out_.cst(v);
    }
    int identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        if (name == "t") return out_.push({Op::var_t, 0.0, {-1, -1, -1, -1, -1, -1}});
        if (name == "x1") return out_.push({Op::var_x1, 0.0, {-1, -1, -1, -1, -1, -1}});
        if (name == "x2") return out_.push({Op::var_x2, 0.0, {-1, -1, -1, -1, -1, -1}});
        if (name == "pi") return out_.cst(std::numbers::pi);
        int arity = 0;
        Op op{};
        if (name == "sin") op = Op::sin, arity = 1;
        else if (name == "cos") op = Op::cos, arity = 1;
        else if (name == "exp") op = Op::exp, arity = 1;
        else if (name == "min") op = Op::min, arity = 2;
        else if (name == "max") op = Op::max, arity = 2;
        else if (name == "clamp") op = Op::clamp, arity = 3;
        else {
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        expect('(');
        std::array<int, 3> args{};
        for (int k = 0; k < arity; ++k) {
            if (k > 0) expect(',');
            args[static_cast<std::size_t>(k)] = expr();
        }
        expect(')');
        if (arity == 1) return out_.unary(op, args[0]);
        if (arity == 2) return out_.nary(op, {args[0], args[1]});
        return out_.nary(op, {args[0], args[1], args[2]});
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    Expression out_;
};

inline Expression Expression::parse(std::string_view text) { return ExpressionParser(text).run(); }

inline int Expression::differentiate(int i) {
    // Copy: push() may reallocate the pool.
    const Node n = node(i);
    auto k = [&](std::size_t j) { return n.kids[j]; };
    switch (n.op) {
        case Op::constant:
        case Op::var_x1:
        case Op::var_x2: return cst(0.0);
        case Op::var_t: return cst(1.0);
        case Op::add: return binary(Op::add, differentiate(k(0)), differentiate(k(1)));
        case Op::sub: return binary(Op::sub, differentiate(k(0)), differentiate(k(1)));
        case Op::mul: {
            const int da = differentiate(k(0)), db = differentiate(k(1));
            return binary(Op::add, binary(Op::mul, da, k(1)), binary(Op::mul, k(0), db));
        }
        case Op::div: {
            const int da = differentiate(k(0)), db = differentiate(k(1));
            const int num = binary(Op::sub, binary(Op::mul, da, k(1)), binary(Op::mul, k(0), db));
            return binary(Op::div, num, binary(Op::mul, k(1), k(1)));
        }
        case Op::pow: {
            const int db = differentiate(k(0));
            if (!depends(k(1), Op::var_t)) {
                // d(b^e) = e b^{e-1} b'
                const int em1 = binary(Op::sub, k(1), cst(1.0));
                return binary(Op::mul, binary(Op::mul, k(1), binary(Op::pow, k(0), em1)), db);
            }
            const int de = differentiate(k(1));
            const int inner = binary(Op::add, binary(Op::mul, de, unary(Op::log, k(0))),
                                     binary(Op::div, binary(Op::mul, k(1), db), k(0)));
            return binary(Op::mul, i, inner);
        }
        case Op::neg: return unary(Op::neg, differentiate(k(0)));
        case Op::sin: return binary(Op::mul, unary(Op::cos, k(0)), differentiate(k(0)));
        case Op::cos: return unary(Op::neg, binary(Op::mul, unary(Op::sin, k(0)), differentiate(k(0))));
        case Op::exp: return binary(Op::mul, i, differentiate(k(0)));
        case Op::log: return binary(Op::div, differentiate(k(0)), k(0));
        case Op::min: {
            const int da = differentiate(k(0)), db = differentiate(k(1));
            return nary(Op::pick_min, {k(0), k(1), da, db});
        }
        case Op::max: {
            const int da = differentiate(k(0)), db = differentiate(k(1));
            return nary(Op::pick_max, {k(0), k(1), da, db});
        }
        case Op::clamp: {
            const int dv = differentiate(k(0)), dlo = differentiate(k(1)), dhi = differentiate(k(2));
            return nary(Op::pick_clamp, {k(0), k(1), k(2), dv, dlo, dhi});
        }
        case Op::pick_min:
            return nary(Op::pick_min, {k(0), k(1), differentiate(k(2)), differentiate(k(3))});
        case Op::pick_max:
            return nary(Op::pick_max, {k(0), k(1), differentiate(k(2)), differentiate(k(3))});
        case Op::pick_clamp:
            return nary(Op::pick_clamp,
                        {k(0), k(1), k(2), differentiate(k(3)), differentiate(k(4)), differentiate(k(5))});
    }
    return cst(0.0);
}

inline Expression Expression::derivative_t() const {
    // Extend a private copy of the pool so the original stays untouched.
    Expression d(std::make_shared<std::vector<Node>>(*nodes_), "d/dt(" + source_ + ")");
    d.root_ = d.differentiate(root_);
    return d;
}

}  // namespace wplap
