#pragma once

// Analytic evaluators for the probability of satisfaction of a grounded
// formula, assuming the operands of every connective are conditionally
// independent given the trajectory.
//
//   NaiveCI    probability space: And multiplies, Or is 1 - prod(1 - p_i).
//   LogOddsCI  log-odds space: the disjunction of independent Bernoullis
//              collapses to log(prod_i(1 + exp L_i) - 1), accumulated as a
//              softplus sum so the product cannot underflow; conjunction is
//              its De Morgan dual.
//   LogOddsME  log-odds space, disjuncts treated as mutually exclusive:
//              Or is log-sum-exp, which drops the joint-satisfaction terms
//              of the CI disjunction; conjunction keeps the CI product
//              rule.  The whole-formula value is therefore always a lower
//              bound on the CI value.
//
// Everything is generic over the scalar type, so the same recursion
// evaluates plain doubles and autodiff duals.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rstl/autodiff.hpp"
#include "rstl/dynamics.hpp"
#include "rstl/fields.hpp"
#include "rstl/grounding.hpp"
#include "rstl/numeric.hpp"

namespace rstl {

enum class Semantics { NaiveCI, LogOddsCI, LogOddsME };

inline const char* semantics_name(Semantics s) {
    switch (s) {
        case Semantics::NaiveCI: return "naive-ci";
        case Semantics::LogOddsCI: return "ci";
        case Semantics::LogOddsME: return "me";
    }
    return "?";
}

inline Semantics semantics_from_name(const std::string& name) {
    if (name == "naive-ci") return Semantics::NaiveCI;
    if (name == "ci") return Semantics::LogOddsCI;
    if (name == "me") return Semantics::LogOddsME;
    throw std::invalid_argument("unknown semantics '" + name + "' (want naive-ci, ci or me)");
}

// log(prod_i (1 + exp L_i) - 1), the log-odds of a disjunction of
// independent Bernoullis.  Computed as S + log(1 - exp(-S)) with
// S = sum_i softplus(L_i), which stays finite for any finite input.
template <class S>
S ci_or_logodds(std::span<const S> ls) {
    using ad::log1mexp;
    using ad::softplus;
    using rstl::log1mexp;
    using rstl::softplus;
    if (ls.empty()) throw std::invalid_argument("ci_or_logodds: empty operand list");
    if (ls.size() == 1) return ls[0];
    S acc = softplus(ls[0]);
    for (std::size_t i = 1; i < ls.size(); ++i) acc = acc + softplus(ls[i]);
    return acc + log1mexp(acc);
}

// De Morgan dual of ci_or_logodds; equals logodds(prod p_i) in exact
// arithmetic.
template <class S>
S ci_and_logodds(std::span<const S> ls) {
    using ad::log1mexp;
    using ad::softplus;
    using rstl::log1mexp;
    using rstl::softplus;
    if (ls.empty()) throw std::invalid_argument("ci_and_logodds: empty operand list");
    if (ls.size() == 1) return ls[0];
    S acc = softplus(-ls[0]);
    for (std::size_t i = 1; i < ls.size(); ++i) acc = acc + softplus(-ls[i]);
    return -(acc + log1mexp(acc));
}

template <class S>
S me_or_logodds(std::span<const S> ls) {
    using ad::lse;
    using rstl::lse;
    if (ls.empty()) throw std::invalid_argument("me_or_logodds: empty operand list");
    if (ls.size() == 1) return ls[0];
    return lse(ls);
}

template <class S>
S me_and_logodds(std::span<const S> ls) {
    using ad::lse;
    using rstl::lse;
    if (ls.empty()) throw std::invalid_argument("me_and_logodds: empty operand list");
    if (ls.size() == 1) return ls[0];
    static thread_local std::vector<S> neg;
    neg.clear();
    for (const S& l : ls) neg.push_back(-l);
    return -lse(std::span<const S>(neg));
}

// Power-set expansion log sum_{J in 2^I, J != {}} exp sum_{j in J} L_j.
// Exponential in the list length; this is the test oracle for
// ci_or_logodds, not a production path.
inline double brute_force_or_logodds(std::span<const double> ls) {
    if (ls.empty()) throw std::invalid_argument("brute_force_or_logodds: empty operand list");
    if (ls.size() > 20) {
        throw std::invalid_argument("brute_force_or_logodds: list longer than 20");
    }
    const std::size_t n_subsets = (std::size_t{1} << ls.size()) - 1;
    std::vector<double> sums;
    sums.reserve(n_subsets);
    for (std::size_t mask = 1; mask <= n_subsets; ++mask) {
        double s = 0.0;
        for (std::size_t j = 0; j < ls.size(); ++j) {
            if (mask & (std::size_t{1} << j)) s += ls[j];
        }
        sums.push_back(s);
    }
    return lse(sums);
}

// generic log-odds of a clamped probability
template <class S>
S logodds_scalar(S p) {
    using std::log;
    using std::log1p;
    using ad::log;
    using ad::log1p;
    const double v = ad::value_of(p);
    if (!(v >= kProbEps && v <= 1.0 - kProbEps)) {
        throw std::domain_error("logodds: probability outside [eps, 1-eps]");
    }
    return log(p) - log1p(-p);
}

// Recursive fold over a grounded formula.  Returns a probability for
// NaiveCI and a log-odds value for the log-odds semantics.
template <class S>
S evaluate(const Grounded& g, const Trajectory<S>& traj, const PredicateTable& table,
           Semantics sem) {
    // distinct (predicate, step) leaves are evaluated once and reused
    static thread_local std::vector<S> slot_vals;
    static thread_local std::vector<S> node_vals;
    static thread_local std::vector<S> operand_buf;
    slot_vals.clear();
    node_vals.clear();

    for (const auto& leaf : g.leaves) {
        if (leaf.step < 1 || static_cast<std::size_t>(leaf.step) > traj.states.size()) {
            throw std::out_of_range("evaluate: leaf step " + std::to_string(leaf.step) +
                                    " outside trajectory");
        }
        const auto& st = traj.states[static_cast<std::size_t>(leaf.step - 1)];
        S p = field_prob<S>(table.at(leaf.predicate), st.x, st.y, leaf.step);
        slot_vals.push_back(sem == Semantics::NaiveCI ? p : logodds_scalar<S>(p));
    }

    node_vals.resize(g.nodes.size(), S(0.0));
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const auto& node = g.nodes[i];
        switch (node.kind) {
            case Grounded::Kind::Leaf:
                node_vals[i] = slot_vals[node.slot];
                break;
            case Grounded::Kind::Not: {
                const S& c = node_vals[g.child_ids[node.first_child]];
                node_vals[i] = sem == Semantics::NaiveCI ? S(-c + 1.0) : S(-c);
                break;
            }
            case Grounded::Kind::And:
            case Grounded::Kind::Or: {
                const bool is_or = node.kind == Grounded::Kind::Or;
                if (sem == Semantics::NaiveCI) {
                    // And: prod p_i; Or via De Morgan: 1 - prod(1 - p_i)
                    S acc = S(1.0);
                    for (std::uint32_t c = 0; c < node.child_count; ++c) {
                        const S& v = node_vals[g.child_ids[node.first_child + c]];
                        acc = acc * (is_or ? S(-v + 1.0) : v);
                    }
                    node_vals[i] = is_or ? S(-acc + 1.0) : acc;
                } else {
                    operand_buf.clear();
                    for (std::uint32_t c = 0; c < node.child_count; ++c) {
                        operand_buf.push_back(node_vals[g.child_ids[node.first_child + c]]);
                    }
                    const std::span<const S> ops(operand_buf);
                    if (sem == Semantics::LogOddsCI) {
                        node_vals[i] = is_or ? ci_or_logodds<S>(ops) : ci_and_logodds<S>(ops);
                    } else {
                        // mutual exclusivity only alters disjunctions;
                        // conjunction keeps the product rule
                        node_vals[i] = is_or ? me_or_logodds<S>(ops) : ci_and_logodds<S>(ops);
                    }
                }
                break;
            }
        }
    }
    return node_vals[g.root()];
}

}  // namespace rstl
