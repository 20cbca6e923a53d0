#pragma once

// Recursive-descent parser for the specification grammar.
//
//   formula := or_expr ( "U" interval or_expr )*        (left-associative)
//   or_expr := and_expr ( "|" and_expr )*
//   and_expr := unary ( "&" unary )*
//   unary   := "!" unary | "F" interval unary | "G" interval unary | primary
//   primary := identifier | "(" formula ")"
//   interval := "[" integer "," integer "]"
//
// Identifiers are [A-Za-z_][A-Za-z0-9_]*; the single letters U, F and G are
// reserved for the operators.  Chains of the same connective parse to one
// n-ary node ("a & b & c" -> And[a,b,c]); parentheses preserve nesting.

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rstl/formula.hpp"

namespace rstl {

struct ParseError : std::runtime_error {
    int line;
    int column;
    ParseError(int l, int c, const std::string& msg)
        : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + msg),
          line(l),
          column(c) {}
};

namespace detail {

enum class Tok : unsigned char {
    Ident, Int, Bang, Amp, Pipe, UOp, FOp, GOp, LParen, RParen, LBracket, RBracket, Comma, End
};

struct Token {
    Tok kind;
    std::string text;
    int line;
    int column;
};

inline std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto push = [&](Tok k, std::string text, int l, int c) {
        out.push_back({k, std::move(text), l, c});
    };
    while (i < src.size()) {
        const char c = src[i];
        if (c == '\n') {
            ++line;
            col = 1;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++col;
            ++i;
            continue;
        }
        const int tl = line, tc = col;
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
                num += src[i++];
                ++col;
            }
            push(Tok::Int, std::move(num), tl, tc);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string id;
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
                id += src[i++];
                ++col;
            }
            if (id == "U") push(Tok::UOp, std::move(id), tl, tc);
            else if (id == "F") push(Tok::FOp, std::move(id), tl, tc);
            else if (id == "G") push(Tok::GOp, std::move(id), tl, tc);
            else push(Tok::Ident, std::move(id), tl, tc);
            continue;
        }
        Tok k;
        switch (c) {
            case '!': k = Tok::Bang; break;
            case '&': k = Tok::Amp; break;
            case '|': k = Tok::Pipe; break;
            case '(': k = Tok::LParen; break;
            case ')': k = Tok::RParen; break;
            case '[': k = Tok::LBracket; break;
            case ']': k = Tok::RBracket; break;
            case ',': k = Tok::Comma; break;
            default:
                throw ParseError(tl, tc, std::string("unexpected character '") + c + "'");
        }
        push(k, std::string(1, c), tl, tc);
        ++i;
        ++col;
    }
    out.push_back({Tok::End, "", line, col});
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(lex(src)) {}

    FormulaPtr parse() {
        FormulaPtr f = parse_until();
        if (peek().kind != Tok::End) {
            fail("expected end of input, found '" + peek().text + "'");
        }
        return f;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& advance() { return toks_[pos_++]; }
    bool accept(Tok k) {
        if (peek().kind == k) {
            ++pos_;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(peek().line, peek().column, msg);
    }

    Interval parse_interval(const char* op) {
        const Token& open = peek();
        if (!accept(Tok::LBracket)) fail(std::string("expected '[' after ") + op);
        Interval w;
        w.lo = parse_int();
        if (!accept(Tok::Comma)) fail("expected ',' in interval");
        w.hi = parse_int();
        if (!accept(Tok::RBracket)) fail("expected ']' closing interval");
        if (w.hi < w.lo) {
            throw ParseError(open.line, open.column,
                             "inverted interval [" + std::to_string(w.lo) + "," +
                                 std::to_string(w.hi) + "]");
        }
        return w;
    }

    int parse_int() {
        if (peek().kind != Tok::Int) fail("expected integer, found '" + peek().text + "'");
        return std::stoi(advance().text);
    }

    FormulaPtr parse_until() {
        FormulaPtr left = parse_or();
        while (peek().kind == Tok::UOp) {
            advance();
            Interval w = parse_interval("U");
            FormulaPtr right = parse_or();
            left = until(w, std::move(left), std::move(right));
        }
        return left;
    }

    FormulaPtr parse_or() {
        std::vector<FormulaPtr> parts{parse_and()};
        while (accept(Tok::Pipe)) parts.push_back(parse_and());
        return disjunction(std::move(parts));
    }

    FormulaPtr parse_and() {
        std::vector<FormulaPtr> parts{parse_unary()};
        while (accept(Tok::Amp)) parts.push_back(parse_unary());
        return conjunction(std::move(parts));
    }

    FormulaPtr parse_unary() {
        if (accept(Tok::Bang)) return negation(parse_unary());
        if (peek().kind == Tok::FOp) {
            advance();
            Interval w = parse_interval("F");
            return eventually(w, parse_unary());
        }
        if (peek().kind == Tok::GOp) {
            advance();
            Interval w = parse_interval("G");
            return globally(w, parse_unary());
        }
        return parse_primary();
    }

    FormulaPtr parse_primary() {
        if (peek().kind == Tok::Ident) return pred(advance().text);
        if (accept(Tok::LParen)) {
            FormulaPtr f = parse_until();
            if (!accept(Tok::RParen)) fail("expected ')'");
            return f;
        }
        fail("expected predicate or '(', found '" +
             (peek().kind == Tok::End ? std::string("end of input") : peek().text) + "'");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline FormulaPtr parse(std::string_view text) { return detail::Parser(text).parse(); }

}  // namespace rstl
