#pragma once

// Expansion of temporal operators over a discrete horizon.
//
// ground(f, t, T) turns a formula anchored at step t into a finite
// AND/OR/NOT tree whose leaves are (predicate, step) pairs with
// 1 <= step <= T.  The tree is stored flat with children preceding
// parents, so evaluation is a single forward scan.  Leaves are
// deduplicated: every distinct (predicate, step) pair owns one slot,
// and repeated occurrences reference the same slot.  Occurrence counts
// are preserved through the child lists.
//
// Eventually/Globally windows that overrun the horizon are clipped to T
// and flagged; an Until window past the horizon is an error, because
// truncating it would silently change its meaning.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rstl/formula.hpp"

namespace rstl {

struct GroundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Grounded {
    enum class Kind : unsigned char { Leaf, Not, And, Or };

    struct Node {
        Kind kind;
        std::uint32_t first_child = 0;  // index into child_ids (Not/And/Or)
        std::uint32_t child_count = 0;
        std::uint32_t slot = 0;         // index into leaves (Leaf)
        bool operator==(const Node&) const = default;
    };

    struct LeafKey {
        std::string predicate;
        int step;  // 1-based
        bool operator==(const LeafKey&) const = default;
    };

    std::vector<Node> nodes;          // children precede parents; root is nodes.back()
    std::vector<std::uint32_t> child_ids;
    std::vector<LeafKey> leaves;      // distinct (predicate, step) pairs
    bool clipped = false;             // some F/G window was clipped at the horizon
    int horizon = 0;

    std::uint32_t root() const { return static_cast<std::uint32_t>(nodes.size()) - 1; }

    bool operator==(const Grounded&) const = default;
};

namespace detail {

class GroundBuilder {
public:
    GroundBuilder(int horizon) : horizon_(horizon) {}

    std::uint32_t build(const Formula& f, int t) {
        if (t < 1 || t > horizon_) {
            throw GroundError("ground: anchor step " + std::to_string(t) +
                              " outside horizon [1," + std::to_string(horizon_) + "]");
        }
        // the same subformula grounded at the same anchor yields the same
        // node; sharing it keeps repeated-window expansions linear
        const auto memo_key = std::make_pair(&f, t);
        if (auto it = memo_.find(memo_key); it != memo_.end()) return it->second;
        const std::uint32_t id = build_uncached(f, t);
        memo_.emplace(memo_key, id);
        return id;
    }

    std::uint32_t build_uncached(const Formula& f, int t) {
        switch (f.kind) {
            case FormulaKind::Pred:
                return leaf(f.pred, t);
            case FormulaKind::Not: {
                const std::uint32_t c = build(*f.children[0], t);
                return node(Grounded::Kind::Not, {c});
            }
            case FormulaKind::And: {
                std::vector<std::uint32_t> cs;
                cs.reserve(f.children.size());
                for (const auto& c : f.children) cs.push_back(build(*c, t));
                return node(Grounded::Kind::And, std::move(cs));
            }
            case FormulaKind::Or: {
                std::vector<std::uint32_t> cs;
                cs.reserve(f.children.size());
                for (const auto& c : f.children) cs.push_back(build(*c, t));
                return node(Grounded::Kind::Or, std::move(cs));
            }
            case FormulaKind::Eventually:
                return window(f, t, Grounded::Kind::Or);
            case FormulaKind::Globally:
                return window(f, t, Grounded::Kind::And);
            case FormulaKind::Until:
                return until(f, t);
        }
        throw GroundError("ground: corrupt formula node");
    }

    Grounded finish(std::uint32_t root_id) {
        if (root_id + 1 != out_.nodes.size()) {
            // Root must be last for the forward-scan evaluators; re-emitting a
            // deduplicated leaf as root wraps it in a single-child And.
            out_.nodes.push_back({Grounded::Kind::And,
                                  static_cast<std::uint32_t>(out_.child_ids.size()), 1, 0});
            out_.child_ids.push_back(root_id);
        }
        out_.horizon = horizon_;
        return std::move(out_);
    }

private:
    std::uint32_t leaf(const std::string& name, int step) {
        const auto key = std::make_pair(name, step);
        if (auto it = leaf_nodes_.find(key); it != leaf_nodes_.end()) return it->second;
        const auto slot = static_cast<std::uint32_t>(out_.leaves.size());
        out_.leaves.push_back({name, step});
        out_.nodes.push_back({Grounded::Kind::Leaf, 0, 0, slot});
        const auto id = static_cast<std::uint32_t>(out_.nodes.size()) - 1;
        leaf_nodes_.emplace(key, id);
        return id;
    }

    std::uint32_t node(Grounded::Kind kind, std::vector<std::uint32_t> children) {
        if (children.size() == 1 && kind != Grounded::Kind::Not) return children[0];
        const auto first = static_cast<std::uint32_t>(out_.child_ids.size());
        out_.child_ids.insert(out_.child_ids.end(), children.begin(), children.end());
        out_.nodes.push_back({kind, first, static_cast<std::uint32_t>(children.size()), 0});
        return static_cast<std::uint32_t>(out_.nodes.size()) - 1;
    }

    std::uint32_t window(const Formula& f, int t, Grounded::Kind kind) {
        const char* name = kind == Grounded::Kind::Or ? "F" : "G";
        const int lo = t + f.window.lo;
        const int hi_raw = t + f.window.hi;
        if (lo > horizon_) {
            throw GroundError(std::string(name) + "[" + std::to_string(f.window.lo) + "," +
                              std::to_string(f.window.hi) + "] anchored at step " +
                              std::to_string(t) + " starts beyond horizon " +
                              std::to_string(horizon_));
        }
        const int hi = std::min(hi_raw, horizon_);
        if (hi_raw > horizon_) out_.clipped = true;
        std::vector<std::uint32_t> cs;
        cs.reserve(static_cast<std::size_t>(hi - lo + 1));
        for (int tau = lo; tau <= hi; ++tau) cs.push_back(build(*f.children[0], tau));
        return node(kind, std::move(cs));
    }

    // Standard discrete until: the right operand holds at some step in the
    // window, the left operand at every step strictly before it (counted
    // from the anchor).  The hold-prefix conjunctions grow one step at a
    // time, so consecutive disjuncts share the previous prefix node instead
    // of re-expanding it; occurrence counts and values are unchanged.
    std::uint32_t until(const Formula& f, int t) {
        const int lo = t + f.window.lo;
        const int hi = t + f.window.hi;
        if (hi > horizon_ || lo > horizon_) {
            throw GroundError("U[" + std::to_string(f.window.lo) + "," +
                              std::to_string(f.window.hi) + "] anchored at step " +
                              std::to_string(t) + " extends beyond horizon " +
                              std::to_string(horizon_));
        }
        std::vector<std::uint32_t> disjuncts;
        disjuncts.reserve(static_cast<std::size_t>(hi - lo + 1));
        std::uint32_t prefix = kNone;  // conjunction of the left operand over [t, prefix_end)
        int prefix_end = t;
        for (int tau1 = lo; tau1 <= hi; ++tau1) {
            for (; prefix_end < tau1; ++prefix_end) {
                const std::uint32_t phi = build(*f.children[0], prefix_end);
                prefix = prefix == kNone ? phi : node(Grounded::Kind::And, {prefix, phi});
            }
            std::vector<std::uint32_t> conj{build(*f.children[1], tau1)};
            if (prefix != kNone) conj.push_back(prefix);
            disjuncts.push_back(node(Grounded::Kind::And, std::move(conj)));
        }
        return node(Grounded::Kind::Or, std::move(disjuncts));
    }

    static constexpr std::uint32_t kNone = static_cast<std::uint32_t>(-1);

    int horizon_;
    Grounded out_;
    std::map<std::pair<std::string, int>, std::uint32_t> leaf_nodes_;
    std::map<std::pair<const Formula*, int>, std::uint32_t> memo_;
};

}  // namespace detail

inline Grounded ground(const Formula& f, int anchor, int horizon) {
    if (anchor < 1) throw GroundError("ground: anchor step must be >= 1");
    if (horizon < anchor) throw GroundError("ground: horizon must be >= anchor step");
    detail::GroundBuilder b(horizon);
    const std::uint32_t root = b.build(f, anchor);
    return b.finish(root);
}

}  // namespace rstl
