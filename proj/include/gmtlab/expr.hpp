#pragma once

// Tiny expression language for test mappings: variables x0..x{n-1},
// numeric constants, + - * and integer ^, with sin/cos/exp.  Division and
// piecewise forms are deliberately absent so every parsed map is globally
// smooth.  Comes with exact symbolic differentiation.

#include <cctype>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmtlab {

struct ParseError : std::runtime_error {
    int line;
    int column;
    ParseError(const std::string& msg, int ln, int col)
        : std::runtime_error(msg + " at line " + std::to_string(ln) + ", column " +
                             std::to_string(col)),
          line(ln), column(col) {}
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Const, Var, Add, Sub, Mul, Neg, Pow, Sin, Cos, Exp };
    Kind kind;
    double value = 0.0;   // Const
    int var = 0;          // Var
    int exponent = 0;     // Pow (integer >= 0)
    ExprPtr a, b;

    static ExprPtr constant(double v) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Const;
        e->value = v;
        return e;
    }
    static ExprPtr variable(int i) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Var;
        e->var = i;
        return e;
    }
    static ExprPtr unary(Kind k, ExprPtr x) {
        auto e = std::make_shared<Expr>();
        e->kind = k;
        e->a = std::move(x);
        return e;
    }
    static ExprPtr binary(Kind k, ExprPtr x, ExprPtr y) {
        auto e = std::make_shared<Expr>();
        e->kind = k;
        e->a = std::move(x);
        e->b = std::move(y);
        return e;
    }
    static ExprPtr pow(ExprPtr x, int p) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Pow;
        e->a = std::move(x);
        e->exponent = p;
        return e;
    }
};

namespace exprdetail {

inline bool is_const(const ExprPtr& e, double v) {
    return e->kind == Expr::Kind::Const && e->value == v;
}

} // namespace exprdetail

// Constructors with just enough algebraic simplification to keep repeated
// differentiation from blowing up.
inline ExprPtr make_add(ExprPtr a, ExprPtr b) {
    using exprdetail::is_const;
    if (is_const(a, 0)) return b;
    if (is_const(b, 0)) return a;
    if (a->kind == Expr::Kind::Const && b->kind == Expr::Kind::Const)
        return Expr::constant(a->value + b->value);
    return Expr::binary(Expr::Kind::Add, std::move(a), std::move(b));
}

inline ExprPtr make_sub(ExprPtr a, ExprPtr b) {
    using exprdetail::is_const;
    if (is_const(b, 0)) return a;
    if (a->kind == Expr::Kind::Const && b->kind == Expr::Kind::Const)
        return Expr::constant(a->value - b->value);
    if (is_const(a, 0)) return Expr::unary(Expr::Kind::Neg, std::move(b));
    return Expr::binary(Expr::Kind::Sub, std::move(a), std::move(b));
}

inline ExprPtr make_mul(ExprPtr a, ExprPtr b) {
    using exprdetail::is_const;
    if (is_const(a, 0) || is_const(b, 0)) return Expr::constant(0);
    if (is_const(a, 1)) return b;
    if (is_const(b, 1)) return a;
    if (a->kind == Expr::Kind::Const && b->kind == Expr::Kind::Const)
        return Expr::constant(a->value * b->value);
    return Expr::binary(Expr::Kind::Mul, std::move(a), std::move(b));
}

inline ExprPtr make_neg(ExprPtr a) {
    if (a->kind == Expr::Kind::Const) return Expr::constant(-a->value);
    return Expr::unary(Expr::Kind::Neg, std::move(a));
}

inline ExprPtr make_pow(ExprPtr a, int p) {
    if (p == 0) return Expr::constant(1);
    if (p == 1) return a;
    if (a->kind == Expr::Kind::Const) return Expr::constant(std::pow(a->value, p));
    return Expr::pow(std::move(a), p);
}

inline double eval(const Expr& e, std::span<const double> x) {
    switch (e.kind) {
        case Expr::Kind::Const: return e.value;
        case Expr::Kind::Var:
            if (e.var >= static_cast<int>(x.size()))
                throw std::invalid_argument("expr eval: variable index out of range");
            return x[static_cast<size_t>(e.var)];
        case Expr::Kind::Add: return eval(*e.a, x) + eval(*e.b, x);
        case Expr::Kind::Sub: return eval(*e.a, x) - eval(*e.b, x);
        case Expr::Kind::Mul: return eval(*e.a, x) * eval(*e.b, x);
        case Expr::Kind::Neg: return -eval(*e.a, x);
        case Expr::Kind::Pow: {
            double base = eval(*e.a, x);
            double r = 1.0;
            for (int i = 0; i < e.exponent; ++i) r *= base;
            return r;
        }
        case Expr::Kind::Sin: return std::sin(eval(*e.a, x));
        case Expr::Kind::Cos: return std::cos(eval(*e.a, x));
        case Expr::Kind::Exp: return std::exp(eval(*e.a, x));
    }
    throw std::logic_error("expr eval: unreachable");
}

// Exact partial derivative with respect to variable var.
inline ExprPtr differentiate(const ExprPtr& e, int var) {
    switch (e->kind) {
        case Expr::Kind::Const: return Expr::constant(0);
        case Expr::Kind::Var: return Expr::constant(e->var == var ? 1.0 : 0.0);
        case Expr::Kind::Add: return make_add(differentiate(e->a, var), differentiate(e->b, var));
        case Expr::Kind::Sub: return make_sub(differentiate(e->a, var), differentiate(e->b, var));
        case Expr::Kind::Mul:
            return make_add(make_mul(differentiate(e->a, var), e->b),
                            make_mul(e->a, differentiate(e->b, var)));
        case Expr::Kind::Neg: return make_neg(differentiate(e->a, var));
        case Expr::Kind::Pow:
            return make_mul(make_mul(Expr::constant(e->exponent), make_pow(e->a, e->exponent - 1)),
                            differentiate(e->a, var));
        case Expr::Kind::Sin:
            return make_mul(Expr::unary(Expr::Kind::Cos, e->a), differentiate(e->a, var));
        case Expr::Kind::Cos:
            return make_neg(make_mul(Expr::unary(Expr::Kind::Sin, e->a), differentiate(e->a, var)));
        case Expr::Kind::Exp:
            return make_mul(Expr::unary(Expr::Kind::Exp, e->a), differentiate(e->a, var));
    }
    throw std::logic_error("differentiate: unreachable");
}

inline int max_var_index(const Expr& e) {
    int m = -1;
    if (e.kind == Expr::Kind::Var) m = e.var;
    if (e.a) m = std::max(m, max_var_index(*e.a));
    if (e.b) m = std::max(m, max_var_index(*e.b));
    return m;
}

// --- parser -----------------------------------------------------------

namespace exprdetail {

struct Token {
    enum class Type { Number, Ident, Plus, Minus, Star, Caret, LParen, RParen, Comma, End };
    Type type;
    double number = 0;
    std::string ident;
    int line = 1, column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string text) : text_(std::move(text)) { advance(); }

    const Token& peek() const { return tok_; }
    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            if (text_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
        tok_.line = line_;
        tok_.column = col_;
        if (pos_ >= text_.size()) {
            tok_.type = Token::Type::End;
            return;
        }
        const char c = text_[pos_];
        auto one = [&](Token::Type t) {
            tok_.type = t;
            ++pos_;
            ++col_;
        };
        switch (c) {
            case '+': one(Token::Type::Plus); return;
            case '-': one(Token::Type::Minus); return;
            case '*': one(Token::Type::Star); return;
            case '^': one(Token::Type::Caret); return;
            case '(': one(Token::Type::LParen); return;
            case ')': one(Token::Type::RParen); return;
            case ',': one(Token::Type::Comma); return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                    text_[pos_] == 'e' || text_[pos_] == 'E' ||
                    ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
                     (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
                ++pos_;
            const std::string lit = text_.substr(start, pos_ - start);
            try {
                tok_.number = std::stod(lit);
            } catch (const std::exception&) {
                throw ParseError("bad numeric literal '" + lit + "'", line_, col_);
            }
            tok_.type = Token::Type::Number;
            col_ += static_cast<int>(pos_ - start);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            tok_.ident = text_.substr(start, pos_ - start);
            tok_.type = Token::Type::Ident;
            col_ += static_cast<int>(pos_ - start);
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
    }

    std::string text_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

class Parser {
public:
    explicit Parser(std::string text) : lex_(std::move(text)) {}

    // "(" expr ("," expr)* ")"
    std::vector<ExprPtr> parse_tuple() {
        expect(Token::Type::LParen, "expected '('");
        std::vector<ExprPtr> parts;
        parts.push_back(parse_expr());
        while (lex_.peek().type == Token::Type::Comma) {
            lex_.next();
            parts.push_back(parse_expr());
        }
        expect(Token::Type::RParen, "expected ')'");
        expect(Token::Type::End, "trailing input after map");
        return parts;
    }

    ExprPtr parse_single() {
        ExprPtr e = parse_expr();
        expect(Token::Type::End, "trailing input after expression");
        return e;
    }

private:
    ExprPtr parse_expr() { return parse_additive(); }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        for (;;) {
            if (lex_.peek().type == Token::Type::Plus) {
                lex_.next();
                lhs = make_add(lhs, parse_multiplicative());
            } else if (lex_.peek().type == Token::Type::Minus) {
                lex_.next();
                lhs = make_sub(lhs, parse_multiplicative());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_unary();
        while (lex_.peek().type == Token::Type::Star) {
            lex_.next();
            lhs = make_mul(lhs, parse_unary());
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (lex_.peek().type == Token::Type::Minus) {
            lex_.next();
            return make_neg(parse_unary());
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (lex_.peek().type == Token::Type::Caret) {
            Token caret = lex_.next();
            Token t = lex_.peek();
            if (t.type != Token::Type::Number)
                throw ParseError("exponent must be an integer literal", caret.line, caret.column);
            lex_.next();
            const double v = t.number;
            const int p = static_cast<int>(v);
            if (p < 0 || static_cast<double>(p) != v)
                throw ParseError("exponent must be a nonnegative integer", t.line, t.column);
            return make_pow(base, p);
        }
        return base;
    }

    ExprPtr parse_atom() {
        Token t = lex_.next();
        switch (t.type) {
            case Token::Type::Number: return Expr::constant(t.number);
            case Token::Type::LParen: {
                ExprPtr e = parse_expr();
                expect(Token::Type::RParen, "expected ')'");
                return e;
            }
            case Token::Type::Ident: {
                if (t.ident.size() >= 2 && t.ident[0] == 'x') {
                    bool digits = true;
                    for (size_t i = 1; i < t.ident.size(); ++i)
                        digits = digits && std::isdigit(static_cast<unsigned char>(t.ident[i]));
                    if (digits) return Expr::variable(std::stoi(t.ident.substr(1)));
                }
                Expr::Kind fk;
                if (t.ident == "sin") fk = Expr::Kind::Sin;
                else if (t.ident == "cos") fk = Expr::Kind::Cos;
                else if (t.ident == "exp") fk = Expr::Kind::Exp;
                else
                    throw ParseError("unknown identifier '" + t.ident + "'", t.line, t.column);
                expect(Token::Type::LParen, "expected '(' after function name");
                ExprPtr arg = parse_expr();
                expect(Token::Type::RParen, "expected ')'");
                return Expr::unary(fk, arg);
            }
            default:
                throw ParseError("unexpected token", t.line, t.column);
        }
    }

    void expect(Token::Type t, const char* msg) {
        Token tok = lex_.next();
        if (tok.type != t) throw ParseError(msg, tok.line, tok.column);
    }

    Lexer lex_;
};

} // namespace exprdetail

// A map is a d-tuple of expressions.
inline std::vector<ExprPtr> parse_map_exprs(const std::string& text) {
    return exprdetail::Parser(text).parse_tuple();
}

inline ExprPtr parse_expr(const std::string& text) {
    return exprdetail::Parser(text).parse_single();
}

} // namespace gmtlab
