#include <doctest.h>

#include <cmath>

#include "rstl/mc.hpp"
#include "rstl/parser.hpp"

using namespace rstl;

namespace {

TrajectoryD still_trajectory(int T) {
    TrajectoryD traj;
    traj.dt = 1.0;
    traj.states.assign(static_cast<std::size_t>(T), {0.0, 0.0, 0.0});
    return traj;
}

}  // namespace

TEST_CASE("near-certain leaf") {
    PredicateTable table;
    table.add("a", ConstantField{1.0 - kProbEps});
    const Grounded g = ground(*parse("a"), 1, 1);
    const McEstimate est = mc_satisfaction(g, still_trajectory(1), table, 1000, 3);
    CHECK(est.mean >= 0.99);
}

TEST_CASE("bernoulli sampling matches the leaf probability") {
    PredicateTable table;
    table.add("a", ConstantField{0.3});
    const Grounded g = ground(*parse("a"), 1, 1);
    const McEstimate est = mc_satisfaction(g, still_trajectory(1), table, 10000, 11);
    CHECK(std::abs(est.mean - 0.3) <= 3.0 * est.std_err);
    CHECK(est.std_err == doctest::Approx(std::sqrt(est.mean * (1 - est.mean) / 10000)));
    CHECK(est.n_samples == 10000);
}

TEST_CASE("shared-leaf coherence: tautology and contradiction are exact") {
    PredicateTable table;
    table.add("a", ConstantField{0.42});
    const Grounded taut = ground(*parse("a | !a"), 1, 1);
    const Grounded contra = ground(*parse("a & !a"), 1, 1);
    for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
        CHECK(mc_satisfaction(taut, still_trajectory(1), table, 4096, seed).mean == 1.0);
        CHECK(mc_satisfaction(contra, still_trajectory(1), table, 4096, seed).mean == 0.0);
    }
}

TEST_CASE("seed determinism is bit-for-bit") {
    PredicateTable table;
    table.add("a", ConstantField{0.5});
    table.add("b", ConstantField{0.25});
    const Grounded g = ground(*parse("F[0,4] (a & !b)"), 1, 5);
    const McEstimate e1 = mc_satisfaction(g, still_trajectory(5), table, 777, 123456);
    const McEstimate e2 = mc_satisfaction(g, still_trajectory(5), table, 777, 123456);
    CHECK(e1.mean == e2.mean);
    const McEstimate e3 = mc_satisfaction(g, still_trajectory(5), table, 777, 123457);
    CHECK(e1.mean != e3.mean);  // different stream, overwhelmingly likely to differ
}

TEST_CASE("monotonicity under pointwise-larger fields") {
    // same seed couples the uniforms, so a larger p can only add successes
    const Grounded g = ground(*parse("F[0,9] a & G[0,3] a"), 1, 10);
    double prev = -1.0;
    for (double p : {0.05, 0.2, 0.5, 0.8, 0.95}) {
        PredicateTable table;
        table.add("a", ConstantField{p});
        const McEstimate est = mc_satisfaction(g, still_trajectory(10), table, 2048, 5);
        CHECK(est.mean >= prev);
        prev = est.mean;
    }
}

TEST_CASE("unknown predicate is reported by name") {
    PredicateTable table;
    table.add("a", ConstantField{0.5});
    const Grounded g = ground(*parse("a & ghost"), 1, 1);
    CHECK_THROWS_WITH_AS(mc_satisfaction(g, still_trajectory(1), table, 10, 0),
                         doctest::Contains("ghost"), FieldError);
}

TEST_CASE("sample counts that are not multiples of 64") {
    PredicateTable table;
    table.add("a", ConstantField{0.999999});
    const Grounded g = ground(*parse("a"), 1, 1);
    for (long n : {1L, 63L, 64L, 65L, 100L, 1000L}) {
        const McEstimate est = mc_satisfaction(g, still_trajectory(1), table, n, 2);
        CHECK(est.n_samples == n);
        CHECK(est.mean >= 0.0);
        CHECK(est.mean <= 1.0);
    }
    CHECK_THROWS_AS(mc_satisfaction(g, still_trajectory(1), table, 0, 2), std::invalid_argument);
}
