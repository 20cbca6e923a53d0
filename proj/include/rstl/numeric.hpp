#pragma once

// Scalar numeric helpers shared by the probability-of-satisfaction
// evaluators: log-odds transform, stable softplus / log-sum-exp, and the
// probability clamp that keeps log-odds finite everywhere.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

namespace rstl {

// Event fields clamp probabilities into [kProbEps, 1 - kProbEps] so the
// log-odds transform and its gradient stay finite.
inline constexpr double kProbEps = 1e-6;

inline double clamp_prob(double p) {
    return std::clamp(p, kProbEps, 1.0 - kProbEps);
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow for large |x|.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// log(1 - exp(-a)) for a > 0.  Split at log(2) to keep full precision at
// both ends (cancellation for small a, underflow of exp(-a) for large a).
inline double log1mexp(double a) {
    return a > 0.6931471805599453 ? std::log1p(-std::exp(-a))
                                  : std::log(-std::expm1(-a));
}

// log(p / (1-p)).  Domain is the clamped probability range.
inline double logodds_of(double p) {
    if (!(p >= kProbEps && p <= 1.0 - kProbEps)) {
        throw std::domain_error("logodds_of: probability outside [eps, 1-eps]");
    }
    return std::log(p) - std::log1p(-p);
}

inline double prob_of(double logodds) { return sigmoid(logodds); }

// log sum_i exp(x_i), max-shifted so arguments up to +-1e308 cannot overflow.
inline double lse(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("lse: empty argument list");
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - m);
    return m + std::log(sum);
}

}  // namespace rstl
