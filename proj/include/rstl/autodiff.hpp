#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A Tape records one scalar computation as a flat list of nodes in
// topological order.  Local partial derivatives are computed during the
// forward pass and stored on the node, so the reverse sweep is a single
// backwards scan with no operation dispatch.  Dual is a value plus a node
// handle; arithmetic on Duals records onto the tape of its operands.
// Plain doubles mix freely as constants and never touch the tape.
//
// A Tape is single-threaded.  Parallel evaluations use one tape per worker.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rstl/numeric.hpp"

namespace rstl::ad {

using NodeId = std::int32_t;
inline constexpr NodeId kConstant = -1;

class Tape;

struct Dual {
    double value = 0.0;
    NodeId node = kConstant;
    Tape* tape = nullptr;

    Dual() = default;
    Dual(double v) : value(v) {}  // implicit: plain numbers are constants
    Dual(double v, NodeId n, Tape* t) : value(v), node(n), tape(t) {}
};

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value; }

class Tape {
public:
    Dual input(double v) { return Dual(v, push_leaf(), this); }

    // Drops all recorded nodes but keeps capacity for reuse.
    void reset() {
        nodes_.clear();
        fan_parents_.clear();
        fan_partials_.clear();
        fan_ranges_.clear();
    }

    std::size_t size() const { return nodes_.size(); }

    NodeId push_leaf() {
        nodes_.push_back({kConstant, kConstant, 0.0, 0.0});
        return last();
    }

    NodeId push_unary(NodeId a, double da) {
        check(a);
        nodes_.push_back({a, kConstant, da, 0.0});
        return last();
    }

    NodeId push_binary(NodeId a, NodeId b, double da, double db) {
        check(a);
        check(b);
        nodes_.push_back({a, b, da, db});
        return last();
    }

    NodeId push_nary(std::span<const NodeId> parents, std::span<const double> partials) {
        const auto begin = static_cast<std::uint32_t>(fan_parents_.size());
        for (std::size_t i = 0; i < parents.size(); ++i) {
            check(parents[i]);
            fan_parents_.push_back(parents[i]);
            fan_partials_.push_back(partials[i]);
        }
        const auto range = static_cast<NodeId>(fan_ranges_.size());
        fan_ranges_.push_back({begin, static_cast<std::uint32_t>(parents.size())});
        nodes_.push_back({kNaryMark, range, 0.0, 0.0});
        return last();
    }

    // Reverse accumulation of d(output)/d(input_i).  Visits every node once.
    std::vector<double> gradient(NodeId output, std::span<const NodeId> inputs) const {
        adjoint_.assign(nodes_.size(), 0.0);
        if (output != kConstant) {
            check(output);
            adjoint_[static_cast<std::size_t>(output)] = 1.0;
            for (NodeId i = output; i >= 0; --i) {
                const double w = adjoint_[static_cast<std::size_t>(i)];
                if (w == 0.0) continue;
                const Node& n = nodes_[static_cast<std::size_t>(i)];
                if (n.a >= 0) {
                    adjoint_[static_cast<std::size_t>(n.a)] += n.da * w;
                    if (n.b >= 0) adjoint_[static_cast<std::size_t>(n.b)] += n.db * w;
                } else if (n.a == kNaryMark) {
                    const Fan f = fan_ranges_[static_cast<std::size_t>(n.b)];
                    for (std::uint32_t k = 0; k < f.count; ++k) {
                        adjoint_[fan_parents_[f.begin + k]] += fan_partials_[f.begin + k] * w;
                    }
                }
            }
        }
        std::vector<double> out(inputs.size(), 0.0);
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (inputs[i] != kConstant) {
                check(inputs[i]);
                out[i] = adjoint_[static_cast<std::size_t>(inputs[i])];
            }
        }
        return out;
    }

    std::vector<double> gradient(const Dual& output, std::span<const Dual> inputs) const {
        std::vector<NodeId> ids;
        ids.reserve(inputs.size());
        for (const Dual& d : inputs) {
            if (d.tape && d.tape != this) {
                throw std::logic_error("Tape::gradient: input from a different tape");
            }
            ids.push_back(d.node);
        }
        if (output.tape && output.tape != this) {
            throw std::logic_error("Tape::gradient: output from a different tape");
        }
        return gradient(output.node, ids);
    }

private:
    static constexpr NodeId kNaryMark = -2;

    struct Node {
        NodeId a;
        NodeId b;
        double da;
        double db;
    };
    struct Fan {
        std::uint32_t begin;
        std::uint32_t count;
    };

    NodeId last() const { return static_cast<NodeId>(nodes_.size()) - 1; }

    void check(NodeId id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
            throw std::logic_error("Tape: node handle does not belong to this tape");
        }
    }

    std::vector<Node> nodes_;
    std::vector<Fan> fan_ranges_;
    std::vector<NodeId> fan_parents_;
    std::vector<double> fan_partials_;
    mutable std::vector<double> adjoint_;  // scratch, reused across gradient calls
};

namespace detail {

inline Tape* join(const Dual& x, const Dual& y) {
    if (x.tape && y.tape && x.tape != y.tape) {
        throw std::logic_error("ad: operands recorded on different tapes");
    }
    return x.tape ? x.tape : y.tape;
}

inline Dual record1(double v, const Dual& x, double dx) {
    if (x.node == kConstant) return Dual(v);
    return Dual(v, x.tape->push_unary(x.node, dx), x.tape);
}

inline Dual record2(double v, const Dual& x, double dx, const Dual& y, double dy) {
    Tape* t = join(x, y);
    const bool ax = x.node != kConstant;
    const bool ay = y.node != kConstant;
    if (ax && ay) return Dual(v, t->push_binary(x.node, y.node, dx, dy), t);
    if (ax) return Dual(v, t->push_unary(x.node, dx), t);
    if (ay) return Dual(v, t->push_unary(y.node, dy), t);
    return Dual(v);
}

[[noreturn]] inline void domain_error(const char* op, double x) {
    throw std::domain_error(std::string("ad::") + op + ": argument " + std::to_string(x) +
                            " outside domain");
}

}  // namespace detail

inline Dual operator+(const Dual& x, const Dual& y) {
    return detail::record2(x.value + y.value, x, 1.0, y, 1.0);
}

inline Dual operator-(const Dual& x, const Dual& y) {
    return detail::record2(x.value - y.value, x, 1.0, y, -1.0);
}

inline Dual operator*(const Dual& x, const Dual& y) {
    return detail::record2(x.value * y.value, x, y.value, y, x.value);
}

inline Dual operator/(const Dual& x, const Dual& y) {
    if (y.value == 0.0) detail::domain_error("div", y.value);
    const double inv = 1.0 / y.value;
    return detail::record2(x.value * inv, x, inv, y, -x.value * inv * inv);
}

inline Dual operator-(const Dual& x) { return detail::record1(-x.value, x, -1.0); }

inline Dual exp(const Dual& x) {
    const double v = std::exp(x.value);
    return detail::record1(v, x, v);
}

inline Dual log(const Dual& x) {
    if (!(x.value > 0.0)) detail::domain_error("log", x.value);
    return detail::record1(std::log(x.value), x, 1.0 / x.value);
}

inline Dual log1p(const Dual& x) {
    if (!(x.value > -1.0)) detail::domain_error("log1p", x.value);
    return detail::record1(std::log1p(x.value), x, 1.0 / (1.0 + x.value));
}

inline Dual expm1(const Dual& x) {
    const double v = std::expm1(x.value);
    return detail::record1(v, x, v + 1.0);
}

inline Dual sqrt(const Dual& x) {
    if (!(x.value >= 0.0)) detail::domain_error("sqrt", x.value);
    const double v = std::sqrt(x.value);
    return detail::record1(v, x, 0.5 / v);
}

inline Dual sin(const Dual& x) {
    return detail::record1(std::sin(x.value), x, std::cos(x.value));
}

inline Dual cos(const Dual& x) {
    return detail::record1(std::cos(x.value), x, -std::sin(x.value));
}

inline Dual softplus(const Dual& x) {
    return detail::record1(rstl::softplus(x.value), x, rstl::sigmoid(x.value));
}

inline Dual sigmoid(const Dual& x) {
    const double s = rstl::sigmoid(x.value);
    return detail::record1(s, x, s * (1.0 - s));
}

// x^2 as a single node.
inline Dual sq(const Dual& x) {
    return detail::record1(x.value * x.value, x, 2.0 * x.value);
}

// log(1 - exp(-a)) for a > 0; d/da = 1/expm1(a).
inline Dual log1mexp(const Dual& x) {
    if (!(x.value > 0.0)) detail::domain_error("log1mexp", x.value);
    return detail::record1(rstl::log1mexp(x.value), x, 1.0 / std::expm1(x.value));
}

// log sum_i exp(x_i) as one primitive: the max-shift happens inside so the
// recorded partials are the (stable) softmax weights.
inline Dual lse(std::span<const Dual> xs) {
    if (xs.empty()) throw std::invalid_argument("ad::lse: empty argument list");
    double m = xs[0].value;
    Tape* tape = nullptr;
    for (const Dual& x : xs) {
        m = std::max(m, x.value);
        if (x.tape) {
            if (tape && tape != x.tape) {
                throw std::logic_error("ad::lse: operands recorded on different tapes");
            }
            tape = x.tape;
        }
    }
    double sum = 0.0;
    for (const Dual& x : xs) sum += std::exp(x.value - m);
    const double v = m + std::log(sum);
    if (!tape) return Dual(v);

    static thread_local std::vector<NodeId> parents;
    static thread_local std::vector<double> partials;
    parents.clear();
    partials.clear();
    for (const Dual& x : xs) {
        if (x.node == kConstant) continue;
        parents.push_back(x.node);
        partials.push_back(std::exp(x.value - m) / sum);
    }
    if (parents.empty()) return Dual(v);
    if (parents.size() == 1) return Dual(v, tape->push_unary(parents[0], partials[0]), tape);
    if (parents.size() == 2) {
        return Dual(v, tape->push_binary(parents[0], parents[1], partials[0], partials[1]), tape);
    }
    return Dual(v, tape->push_nary(parents, partials), tape);
}

inline Dual lse(std::initializer_list<Dual> xs) {
    return lse(std::span<const Dual>(xs.begin(), xs.size()));
}

}  // namespace rstl::ad
