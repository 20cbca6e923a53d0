#pragma once

// Abstract syntax tree for temporal-logic specifications over named event
// predicates.  Nodes are immutable and shared; the smart constructors
// enforce the structural invariants (non-negative ordered intervals,
// connective lists of length >= 2, singleton collapse).

#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rstl {

enum class FormulaKind : unsigned char { Pred, Not, And, Or, Until, Eventually, Globally };

// Closed interval of step offsets attached to a temporal operator.
struct Interval {
    int lo = 0;
    int hi = 0;
    bool operator==(const Interval&) const = default;
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
    FormulaKind kind;
    std::string pred;                   // Pred only
    std::vector<FormulaPtr> children;   // Not / F / G: 1, Until: 2, And / Or: >= 2
    Interval window{};                  // temporal operators only
};

namespace detail {
inline void check_interval(Interval w, const char* op) {
    if (w.lo < 0 || w.hi < w.lo) {
        throw std::invalid_argument(std::string(op) + ": interval must satisfy 0 <= lo <= hi, got [" +
                                    std::to_string(w.lo) + "," + std::to_string(w.hi) + "]");
    }
}
}  // namespace detail

inline FormulaPtr pred(std::string name) {
    if (name.empty()) throw std::invalid_argument("pred: empty predicate name");
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Pred;
    f->pred = std::move(name);
    return f;
}

inline FormulaPtr negation(FormulaPtr child) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Not;
    f->children = {std::move(child)};
    return f;
}

inline FormulaPtr conjunction(std::vector<FormulaPtr> children) {
    if (children.empty()) throw std::invalid_argument("conjunction: empty operand list");
    if (children.size() == 1) return children.front();
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::And;
    f->children = std::move(children);
    return f;
}

inline FormulaPtr disjunction(std::vector<FormulaPtr> children) {
    if (children.empty()) throw std::invalid_argument("disjunction: empty operand list");
    if (children.size() == 1) return children.front();
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Or;
    f->children = std::move(children);
    return f;
}

inline FormulaPtr until(Interval w, FormulaPtr left, FormulaPtr right) {
    detail::check_interval(w, "until");
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Until;
    f->children = {std::move(left), std::move(right)};
    f->window = w;
    return f;
}

inline FormulaPtr eventually(Interval w, FormulaPtr child) {
    detail::check_interval(w, "eventually");
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Eventually;
    f->children = {std::move(child)};
    f->window = w;
    return f;
}

inline FormulaPtr globally(Interval w, FormulaPtr child) {
    detail::check_interval(w, "globally");
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Globally;
    f->children = {std::move(child)};
    f->window = w;
    return f;
}

inline bool structurally_equal(const Formula& a, const Formula& b) {
    if (a.kind != b.kind || a.pred != b.pred || !(a.window == b.window) ||
        a.children.size() != b.children.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.children.size(); ++i) {
        if (!structurally_equal(*a.children[i], *b.children[i])) return false;
    }
    return true;
}

// Fully parenthesised text form; parse(pretty(f)) is structurally equal to f.
inline std::string pretty(const Formula& f) {
    auto window = [](Interval w) {
        return "[" + std::to_string(w.lo) + "," + std::to_string(w.hi) + "]";
    };
    auto join = [](const std::vector<FormulaPtr>& cs, const char* sep) {
        std::string out;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            if (i > 0) out += sep;
            out += pretty(*cs[i]);
        }
        return out;
    };
    switch (f.kind) {
        case FormulaKind::Pred:
            return f.pred;
        case FormulaKind::Not:
            return "(!" + pretty(*f.children[0]) + ")";
        case FormulaKind::And:
            return "(" + join(f.children, " & ") + ")";
        case FormulaKind::Or:
            return "(" + join(f.children, " | ") + ")";
        case FormulaKind::Until:
            return "(" + pretty(*f.children[0]) + " U" + window(f.window) + " " +
                   pretty(*f.children[1]) + ")";
        case FormulaKind::Eventually:
            return "(F" + window(f.window) + " " + pretty(*f.children[0]) + ")";
        case FormulaKind::Globally:
            return "(G" + window(f.window) + " " + pretty(*f.children[0]) + ")";
    }
    throw std::logic_error("pretty: corrupt formula node");
}

// Predicate names referenced by the formula, deduplicated, in first-use order.
inline void collect_predicates(const Formula& f, std::vector<std::string>& out) {
    if (f.kind == FormulaKind::Pred) {
        for (const auto& n : out) {
            if (n == f.pred) return;
        }
        out.push_back(f.pred);
        return;
    }
    for (const auto& c : f.children) collect_predicates(*c, out);
}

}  // namespace rstl
