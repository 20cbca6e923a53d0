#pragma once

// Monte-Carlo ground truth for the probability of satisfaction.
//
// Each draw samples every distinct (predicate, step) leaf once as a
// Bernoulli with the field's probability at the trajectory state, then
// evaluates the boolean tree.  Draws are processed 64 at a time as bit
// masks.  Sampling streams are keyed by (seed, predicate, step, draw), so
// the estimate is bit-for-bit reproducible and independent of evaluation
// order.

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rstl/dynamics.hpp"
#include "rstl/fields.hpp"
#include "rstl/grounding.hpp"
#include "rstl/rng.hpp"

namespace rstl {

struct McEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    long n_samples = 0;
};

inline McEstimate mc_satisfaction(const Grounded& g, const TrajectoryD& traj,
                                  const PredicateTable& table, long n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("mc_satisfaction: need at least one sample");

    // Resolve every distinct leaf to its Bernoulli probability and stream key.
    const std::size_t n_slots = g.leaves.size();
    std::vector<double> prob(n_slots);
    std::vector<std::uint64_t> key(n_slots);
    for (std::size_t s = 0; s < n_slots; ++s) {
        const auto& leaf = g.leaves[s];
        if (leaf.step < 1 || static_cast<std::size_t>(leaf.step) > traj.states.size()) {
            throw std::out_of_range("mc_satisfaction: leaf step " + std::to_string(leaf.step) +
                                    " outside trajectory");
        }
        const auto& st = traj.states[static_cast<std::size_t>(leaf.step - 1)];
        prob[s] = field_prob<double>(table.at(leaf.predicate), st.x, st.y, leaf.step);
        key[s] = rng::combine(rng::combine(seed, rng::hash_str(leaf.predicate)),
                              static_cast<std::uint64_t>(leaf.step));
    }

    std::vector<std::uint64_t> slot_bits(n_slots);
    std::vector<std::uint64_t> node_bits(g.nodes.size());
    long count = 0;
    const long n_blocks = (n + 63) / 64;
    for (long block = 0; block < n_blocks; ++block) {
        const int block_len = static_cast<int>(std::min<long>(64, n - block * 64));
        for (std::size_t s = 0; s < n_slots; ++s) {
            std::uint64_t bits = 0;
            for (int k = 0; k < block_len; ++k) {
                const auto draw = static_cast<std::uint64_t>(block * 64 + k);
                if (rng::uniform01(key[s], draw) < prob[s]) bits |= (1ull << k);
            }
            slot_bits[s] = bits;
        }
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            const auto& node = g.nodes[i];
            switch (node.kind) {
                case Grounded::Kind::Leaf:
                    node_bits[i] = slot_bits[node.slot];
                    break;
                case Grounded::Kind::Not:
                    node_bits[i] = ~node_bits[g.child_ids[node.first_child]];
                    break;
                case Grounded::Kind::And: {
                    std::uint64_t acc = ~0ull;
                    for (std::uint32_t c = 0; c < node.child_count; ++c) {
                        acc &= node_bits[g.child_ids[node.first_child + c]];
                    }
                    node_bits[i] = acc;
                    break;
                }
                case Grounded::Kind::Or: {
                    std::uint64_t acc = 0;
                    for (std::uint32_t c = 0; c < node.child_count; ++c) {
                        acc |= node_bits[g.child_ids[node.first_child + c]];
                    }
                    node_bits[i] = acc;
                    break;
                }
            }
        }
        const std::uint64_t mask = block_len == 64 ? ~0ull : ((1ull << block_len) - 1);
        count += std::popcount(node_bits[g.root()] & mask);
    }

    McEstimate est;
    est.n_samples = n;
    est.mean = static_cast<double>(count) / static_cast<double>(n);
    est.std_err = std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(n));
    return est;
}

}  // namespace rstl
