#pragma once

/**
 * @file expr.hpp
 * @brief Expression language for functions of one variable: syntax tree,
 *        parser, printer and a plain evaluator.
 *
 * Grammar (whitespace is insignificant):
 *
 *     expr    := term (('+' | '-') term)*
 *     term    := unary (('*' | '/') unary)*
 *     unary   := ('-' | '+') unary | power
 *     power   := primary ('^' unary)?
 *     primary := number | 'x' | 'y' | 'pi' | 'e'
 *              | name '(' args ')' | '(' expr ')'
 *     cond    := expr ('<' | '<=' | '>' | '>=') expr
 *
 * `^` is right-associative and binds tighter than a leading minus, so
 * "-x^2" is -(x^2) and "2^-1" is 2^(-1). Functions: sin, cos, exp, log, abs
 * (one argument), step(c) (0 for x < c, 1 for x >= c; c constant), min and
 * max (two arguments), and piecewise(c1, v1, c2, v2, ..., otherwise) which
 * takes the value of the first branch whose condition holds.
 */

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace rsint::expr {

enum class Kind { number, constant, variable, negate, add, sub, mul, div, pow, call, compare };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Kind kind = Kind::number;
    /// literal value; value of `pi` / `e` for constants
    double value = 0.0;
    /// constant, variable or function name; operator text for comparisons
    std::string name;
    std::vector<NodePtr> args;
    std::size_t line = 1;
    std::size_t column = 1;
};

/// Structural equality; source positions are ignored.
inline bool equal(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.name != b.name || a.args.size() != b.args.size()) return false;
    if (a.kind == Kind::number && a.value != b.value) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!equal(*a.args[i], *b.args[i])) return false;
    return true;
}

inline bool operator==(const Node& a, const Node& b) { return equal(a, b); }

// -- construction helpers ------------------------------------------------------

inline NodePtr number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::number;
    n->value = v;
    return n;
}

inline NodePtr make(Kind k, std::vector<NodePtr> args, std::string name = {}) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = std::move(args);
    n->name = std::move(name);
    return n;
}

/// Arity of a built-in function, or -1 when the name is unknown.
/// piecewise is variadic and reported as 0.
inline int function_arity(std::string_view name) {
    if (name == "sin" || name == "cos" || name == "exp" || name == "log" || name == "abs" || name == "step") return 1;
    if (name == "min" || name == "max") return 2;
    if (name == "piecewise") return 0;
    return -1;
}

// -- parser ------------------------------------------------------------------

namespace detail {

enum class Tok { number, ident, op, lparen, rparen, comma, end };

struct Token {
    Tok type = Tok::end;
    std::string text;
    double value = 0.0;
    std::size_t line = 1;
    std::size_t column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                t.type = Tok::end;
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < src_.size() &&
                                                                std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                t.type = Tok::number;
                t.text = read_number();
                t.value = std::strtod(t.text.c_str(), nullptr);
                if (!std::isfinite(t.value)) throw ParseError("number out of range: " + t.text, t.line, t.column);
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                t.type = Tok::ident;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    t.text += advance();
            } else if (c == '(') {
                t.type = Tok::lparen;
                t.text = advance();
            } else if (c == ')') {
                t.type = Tok::rparen;
                t.text = advance();
            } else if (c == ',') {
                t.type = Tok::comma;
                t.text = advance();
            } else if (c == '<' || c == '>') {
                t.type = Tok::op;
                t.text = advance();
                if (pos_ < src_.size() && src_[pos_] == '=') t.text += advance();
            } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
                t.type = Tok::op;
                t.text = advance();
            } else {
                throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
            }
            out.push_back(std::move(t));
        }
    }

private:
    char advance() {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
    }

    bool digit_at(std::size_t p) const {
        return p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]));
    }

    std::string read_number() {
        std::string s;
        while (digit_at(pos_)) s += advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            s += advance();
            while (digit_at(pos_)) s += advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (digit_at(p)) {
                while (pos_ < p) s += advance();
                while (digit_at(pos_)) s += advance();
            }
        }
        return s;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    NodePtr parse_all() {
        NodePtr e = expr();
        if (peek().type != Tok::end) fail("unexpected '" + peek().text + "'");
        if (saw_x_ && saw_y_) throw ParseError("expression uses both x and y", 1, 1);
        return e;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    Token take() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        throw ParseError(t.type == Tok::end ? "unexpected end of input" : msg, t.line, t.column);
    }

    bool at_op(std::string_view s) const { return peek().type == Tok::op && peek().text == s; }

    void expect(Tok type, const char* what) {
        if (peek().type != type) fail(std::string("expected ") + what + " but found '" + peek().text + "'");
        ++pos_;
    }

    static NodePtr at(NodePtr n, const Token& t) {
        auto m = std::const_pointer_cast<Node>(n);
        m->line = t.line;
        m->column = t.column;
        return m;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        while (at_op("+") || at_op("-")) {
            const Token t = take();
            lhs = at(make(t.text == "+" ? Kind::add : Kind::sub, {lhs, term()}), t);
        }
        return lhs;
    }

    NodePtr term() {
        NodePtr lhs = unary();
        while (at_op("*") || at_op("/")) {
            const Token t = take();
            lhs = at(make(t.text == "*" ? Kind::mul : Kind::div, {lhs, unary()}), t);
        }
        return lhs;
    }

    NodePtr unary() {
        if (at_op("-")) {
            const Token t = take();
            return at(make(Kind::negate, {unary()}), t);
        }
        if (at_op("+")) {
            take();
            return unary();
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (at_op("^")) {
            const Token t = take();
            return at(make(Kind::pow, {base, unary()}), t);
        }
        return base;
    }

    NodePtr cond() {
        NodePtr lhs = expr();
        if (!(at_op("<") || at_op("<=") || at_op(">") || at_op(">="))) fail("expected a comparison");
        const Token t = take();
        return at(make(Kind::compare, {lhs, expr()}, t.text), t);
    }

    NodePtr primary() {
        const Token t = peek();
        switch (t.type) {
            case Tok::number: {
                take();
                return at(number(t.value), t);
            }
            case Tok::lparen: {
                take();
                NodePtr e = expr();
                expect(Tok::rparen, "')'");
                return e;
            }
            case Tok::ident: break;
            default: fail("unexpected '" + t.text + "'");
        }
        take();
        if (t.text == "x" || t.text == "y") {
            (t.text == "x" ? saw_x_ : saw_y_) = true;
            return at(make(Kind::variable, {}, t.text), t);
        }
        if (t.text == "pi" || t.text == "e") {
            auto n = std::const_pointer_cast<Node>(make(Kind::constant, {}, t.text));
            n->value = t.text == "pi" ? M_PI : M_E;
            return at(n, t);
        }
        const int arity = function_arity(t.text);
        if (arity < 0) throw ParseError("unknown identifier '" + t.text + "'", t.line, t.column);
        if (peek().type != Tok::lparen) fail("expected '(' after " + t.text);
        take();
        std::vector<NodePtr> args;
        if (t.text == "piecewise") {
            for (;;) {
                // a condition is followed by a value; the trailing lone expression is the fallback
                const std::size_t save = pos_;
                NodePtr first = expr();
                if (at_op("<") || at_op("<=") || at_op(">") || at_op(">=")) {
                    pos_ = save;
                    args.push_back(cond());
                    expect(Tok::comma, "',' after a piecewise condition");
                    args.push_back(expr());
                    if (peek().type == Tok::comma) {
                        take();
                        continue;
                    }
                    throw ParseError("piecewise needs a final fallback value", t.line, t.column);
                }
                args.push_back(first);
                break;
            }
            if (args.size() < 3)
                throw ParseError("piecewise needs at least one condition, one value and a fallback", t.line,
                                 t.column);
        } else if (peek().type != Tok::rparen) {
            args.push_back(expr());
            while (peek().type == Tok::comma) {
                take();
                args.push_back(expr());
            }
        }
        expect(Tok::rparen, "')'");
        if (t.text != "piecewise" && static_cast<int>(args.size()) != arity)
            throw ParseError(t.text + " takes " + std::to_string(arity) + " argument" + (arity == 1 ? "" : "s") +
                                 ", got " + std::to_string(args.size()),
                             t.line, t.column);
        return at(make(Kind::call, std::move(args), t.text), t);
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    bool saw_x_ = false;
    bool saw_y_ = false;
};

} // namespace detail

inline NodePtr parse(std::string_view source) {
    return detail::Parser(detail::Lexer(source).run()).parse_all();
}

// -- printer -----------------------------------------------------------------

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Fully parenthesised text that parses back to an equal tree.
inline std::string print(const Node& n) {
    auto bin = [&](const char* op) { return "(" + print(*n.args[0]) + " " + op + " " + print(*n.args[1]) + ")"; };
    switch (n.kind) {
        case Kind::number: return n.value < 0 ? "(-" + format_number(-n.value) + ")" : format_number(n.value);
        case Kind::constant:
        case Kind::variable: return n.name;
        case Kind::negate: return "(-" + print(*n.args[0]) + ")";
        case Kind::add: return bin("+");
        case Kind::sub: return bin("-");
        case Kind::mul: return bin("*");
        case Kind::div: return bin("/");
        case Kind::pow: return bin("^");
        case Kind::compare: return print(*n.args[0]) + " " + n.name + " " + print(*n.args[1]);
        case Kind::call: break;
    }
    std::string s = n.name + "(";
    for (std::size_t i = 0; i < n.args.size(); ++i) s += (i ? ", " : "") + print(*n.args[i]);
    return s + ")";
}

// -- evaluation ----------------------------------------------------------------

inline bool depends_on_variable(const Node& n) {
    if (n.kind == Kind::variable || (n.kind == Kind::call && n.name == "step")) return true;
    for (const auto& a : n.args)
        if (depends_on_variable(*a)) return true;
    return false;
}

inline bool holds(const Node& cmp, double lhs, double rhs) {
    if (cmp.name == "<") return lhs < rhs;
    if (cmp.name == "<=") return lhs <= rhs;
    if (cmp.name == ">") return lhs > rhs;
    return lhs >= rhs;
}

/// Plain floating-point evaluation. Partial operations follow <cmath>
/// (log of a negative number gives NaN); compile() rules those out.
inline double evaluate(const Node& n, double x) {
    auto arg = [&](std::size_t i) { return evaluate(*n.args[i], x); };
    switch (n.kind) {
        case Kind::number:
        case Kind::constant: return n.value;
        case Kind::variable: return x;
        case Kind::negate: return -arg(0);
        case Kind::add: return arg(0) + arg(1);
        case Kind::sub: return arg(0) - arg(1);
        case Kind::mul: return arg(0) * arg(1);
        case Kind::div: return arg(0) / arg(1);
        case Kind::pow: return std::pow(arg(0), arg(1));
        case Kind::compare: return holds(n, arg(0), arg(1)) ? 1.0 : 0.0;
        case Kind::call: break;
    }
    if (n.name == "piecewise") {
        for (std::size_t i = 0; i + 1 < n.args.size(); i += 2)
            if (evaluate(*n.args[i], x) != 0.0) return arg(i + 1);
        return arg(n.args.size() - 1);
    }
    if (n.name == "sin") return std::sin(arg(0));
    if (n.name == "cos") return std::cos(arg(0));
    if (n.name == "exp") return std::exp(arg(0));
    if (n.name == "log") return std::log(arg(0));
    if (n.name == "abs") return std::abs(arg(0));
    if (n.name == "step") return x >= arg(0) ? 1.0 : 0.0;
    if (n.name == "min") return std::min(arg(0), arg(1));
    if (n.name == "max") return std::max(arg(0), arg(1));
    throw std::logic_error("unknown function " + n.name);
}

} // namespace rsint::expr
