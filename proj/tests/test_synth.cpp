#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rstl/parser.hpp"
#include "rstl/synthesis.hpp"

using namespace rstl;

namespace {

struct Fixture {
    PredicateTable table;
    Grounded grounded;
    SynthProblem problem;

    Fixture(const char* formula, int horizon, Field field, const char* name = "a") {
        table.add(name, std::move(field));
        grounded = ground(*parse(formula), 1, horizon);
        problem.start = {0.0, 0.0, 0.0};
        problem.dt = 1.0;
        problem.grounded = grounded;
        problem.table = &table;
    }
};

SynthConfig small_config(int horizon) {
    SynthConfig cfg;
    cfg.horizon = horizon;
    cfg.n_samples = 1;
    cfg.n_restarts = 1;
    cfg.iters = 50;
    cfg.step_size = 0.05;
    cfg.sigma_u = 0.0;
    cfg.seed = 99;
    cfg.validate_every = 0;
    cfg.validate_samples = 200;
    return cfg;
}

}  // namespace

TEST_CASE("objective with zero noise is deterministic bit-for-bit") {
    Fixture fx("F[0,5] a", 6, StaticTargetField{2.0, 0.0, 1.5, 0.9});
    SynthConfig cfg = small_config(6);
    Objective obj(fx.problem, cfg);
    ThreadPool pool(2);
    const ControlSequence u = obj.draw_from_prior(0);
    const auto e1 = obj.eval_with_grad(u, obj.noise_seed(0, 3), pool);
    const auto e2 = obj.eval_with_grad(u, obj.noise_seed(0, 3), pool);
    CHECK(e1.value == e2.value);
    CHECK(e1.gv == e2.gv);
    CHECK(e1.gw == e2.gw);
}

TEST_CASE("constant field: gradient equals the prior gradient alone") {
    Fixture fx("a", 6, ConstantField{0.5});
    SynthConfig cfg = small_config(6);
    Objective obj(fx.problem, cfg);
    ThreadPool pool(1);
    ControlSequence u = obj.draw_from_prior(0);
    const auto ev = obj.eval_with_grad(u, obj.noise_seed(0, 0), pool);
    // z constant field contributes log-odds 0 and no spatial gradient
    CHECK(ev.sat_mean == doctest::Approx(0.0).epsilon(1e-12));
    for (std::size_t t = 0; t < u.v.size(); ++t) {
        CHECK(ev.gv[t] == doctest::Approx(-(u.v[t] - cfg.prior.v_mean) /
                                          (cfg.prior.v_std * cfg.prior.v_std)));
        CHECK(ev.gw[t] == doctest::Approx(-(u.omega[t] - cfg.prior.omega_mean) /
                                          (cfg.prior.omega_std * cfg.prior.omega_std)));
    }
}

TEST_CASE("prior term decreases when a control moves off its mean") {
    Fixture fx("G[0,3] a", 4, ConstantField{0.5});
    SynthConfig cfg = small_config(4);
    Objective obj(fx.problem, cfg);
    ControlSequence u;
    u.v.assign(4, cfg.prior.v_mean);
    u.omega.assign(4, cfg.prior.omega_mean);
    const double base = obj.log_prior(u);
    u.omega[2] += 0.7;
    CHECK(obj.log_prior(u) < base);
    u.omega[2] += 0.7;
    const double further = obj.log_prior(u);
    u.omega[2] = cfg.prior.omega_mean;
    CHECK(further < base);
}

TEST_CASE("prior pull: constant field converges to the prior mean") {
    Fixture fx("F[0,7] a", 8, ConstantField{0.5});
    SynthConfig cfg = small_config(8);
    cfg.iters = 300;
    ThreadPool pool(1);
    const SynthReport report = ascend(fx.problem, cfg, pool);
    const auto& u = report.best().controls;
    for (std::size_t t = 0; t < u.v.size(); ++t) {
        CHECK(std::abs(u.v[t] - cfg.prior.v_mean) <= 1e-3);
        CHECK(std::abs(u.omega[t] - cfg.prior.omega_mean) <= 1e-3);
    }
}

TEST_CASE("deterministic ascent trace is non-decreasing with the safeguard") {
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> pos(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        Fixture fx("F[0,9] a", 10, StaticTargetField{pos(gen), pos(gen), 1.5, 0.9});
        SynthConfig cfg = small_config(10);
        cfg.iters = 120;
        cfg.step_size = 0.4;  // deliberately too large; safeguard must clean up
        cfg.seed = static_cast<std::uint64_t>(trial);
        ThreadPool pool(1);
        const SynthReport report = ascend(fx.problem, cfg, pool);
        const auto& trace = report.restarts[0].trace;
        REQUIRE(!trace.empty());
        for (std::size_t i = 1; i < trace.size(); ++i) {
            CHECK(trace[i] >= trace[i - 1] - 1e-9);
        }
    }
}

TEST_CASE("target at the start is satisfied almost immediately") {
    Fixture fx("F[0,9] a", 10, StaticTargetField{0.0, 0.0, 1.5, 0.9});
    SynthConfig cfg = small_config(10);
    cfg.iters = 100;
    cfg.n_restarts = 2;
    cfg.sigma_u = 0.02;
    cfg.n_samples = 4;
    ThreadPool pool(2);
    const SynthReport report = ascend(fx.problem, cfg, pool);
    CHECK(report.best().final_mc.mean >= 0.9 * 0.9);
}

TEST_CASE("restart traces depend only on (seed, restart)") {
    auto run = [&](int n_restarts, int workers) {
        Fixture fx("F[0,5] a", 6, StaticTargetField{1.5, -0.5, 1.0, 0.8});
        SynthConfig cfg = small_config(6);
        cfg.n_restarts = n_restarts;
        cfg.n_samples = 3;
        cfg.sigma_u = 0.05;
        cfg.iters = 30;
        ThreadPool pool(workers);
        return ascend(fx.problem, cfg, pool);
    };
    const SynthReport one = run(1, 1);
    const SynthReport three = run(3, 2);
    REQUIRE(three.restarts.size() == 3);
    CHECK(one.restarts[0].trace == three.restarts[0].trace);
    CHECK(one.restarts[0].controls.v == three.restarts[0].controls.v);
    CHECK(one.restarts[0].final_mc.mean == three.restarts[0].final_mc.mean);
}

TEST_CASE("zero iterations returns the prior draws unmodified") {
    Fixture fx("F[0,4] a", 5, StaticTargetField{2.0, 2.0, 1.0, 0.9});
    SynthConfig cfg = small_config(5);
    cfg.iters = 0;
    cfg.n_restarts = 3;
    ThreadPool pool(1);
    const SynthReport report = ascend(fx.problem, cfg, pool);
    Objective obj(fx.problem, cfg);
    for (int r = 0; r < 3; ++r) {
        const ControlSequence u0 = obj.draw_from_prior(r);
        CHECK(report.restarts[static_cast<std::size_t>(r)].controls.v == u0.v);
        CHECK(report.restarts[static_cast<std::size_t>(r)].controls.omega == u0.omega);
        CHECK(report.restarts[static_cast<std::size_t>(r)].trace.empty());
    }
}

TEST_CASE("best restart maximises the MC-validated probability") {
    Fixture fx("F[0,7] a", 8, StaticTargetField{2.5, 0.0, 1.2, 0.9});
    SynthConfig cfg = small_config(8);
    cfg.n_restarts = 4;
    cfg.iters = 40;
    cfg.sigma_u = 0.05;
    cfg.n_samples = 2;
    ThreadPool pool(2);
    const SynthReport report = ascend(fx.problem, cfg, pool);
    for (const auto& r : report.restarts) {
        CHECK(report.best().final_mc.mean >= r.final_mc.mean);
    }
}

TEST_CASE("full-pipeline gradient matches finite differences") {
    PredicateTable table;
    table.add("tom", StaticTargetField{2.0, 1.0, 1.5, 0.9});
    const Grounded g = ground(*parse("F[0,5] tom"), 1, 6);
    SynthProblem problem;
    problem.start = {0.0, 0.0, 0.3};
    problem.dt = 1.0;
    problem.grounded = g;
    problem.table = &table;
    SynthConfig cfg = small_config(6);
    cfg.sigma_u = 0.03;
    Objective obj(problem, cfg);

    ControlSequence u = obj.draw_from_prior(0);
    std::vector<double> gv(6), gw(6);
    const std::uint64_t noise_seed = obj.noise_seed(0, 0);
    obj.sample_grad(u, noise_seed, 0, gv, gw);

    const double h = 1e-5;
    for (std::size_t t = 0; t < 6; ++t) {
        auto up = u, dn = u;
        up.v[t] += h;
        dn.v[t] -= h;
        const double fd =
            (obj.sample_value(up, noise_seed, 0) - obj.sample_value(dn, noise_seed, 0)) / (2 * h);
        if (std::abs(gv[t]) < 1e-3) {
            CHECK(std::abs(gv[t] - fd) <= 1e-7);
        } else {
            CHECK(gv[t] == doctest::Approx(fd).epsilon(1e-4));
        }
        up = u;
        dn = u;
        up.omega[t] += h;
        dn.omega[t] -= h;
        const double fdw =
            (obj.sample_value(up, noise_seed, 0) - obj.sample_value(dn, noise_seed, 0)) / (2 * h);
        if (std::abs(gw[t]) < 1e-3) {
            CHECK(std::abs(gw[t] - fdw) <= 1e-7);
        } else {
            CHECK(gw[t] == doctest::Approx(fdw).epsilon(1e-4));
        }
    }
}

TEST_CASE("bench: the (1,1) cell does the least work") {
    Fixture fx("F[0,7] a", 8, StaticTargetField{2.0, 0.5, 1.2, 0.9});
    SynthConfig cfg = small_config(8);
    cfg.sigma_u = 0.05;
    const BenchRow small = bench_cell(fx.problem, cfg, 1, 1, 1, 30);
    const BenchRow tall = bench_cell(fx.problem, cfg, 1, 24, 1, 30);
    const BenchRow wide = bench_cell(fx.problem, cfg, 24, 1, 1, 30);
    CHECK(small.mean_sec_per_step <= tall.mean_sec_per_step);
    CHECK(small.mean_sec_per_step <= wide.mean_sec_per_step);
    CHECK(small.var_sec_per_step >= 0.0);
}

TEST_CASE("config validation") {
    SynthConfig cfg;
    cfg.horizon = 0;
    CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
    cfg.horizon = 5;
    cfg.step_size = -1.0;
    CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
}
