#pragma once

// MAP control synthesis by stochastic gradient ascent on the Jensen lower
// bound of the log-posterior: the sample mean of the satisfaction score
// over reparameterised trajectory rollouts, plus the Gaussian control
// log-prior.  The satisfaction score is the log-odds value under the
// log-odds semantics (a strictly increasing function of the probability,
// so the satisfaction maximisers coincide).  Under NaiveCI the score is
// the [0,1]-bounded probability itself; its scale mismatch against the
// unbounded log-prior is what makes the naive method stall, which is the
// documented behaviour this mode exists to exhibit.
//
// Every random stream is keyed by (seed, restart, iteration, sample), so
// runs are reproducible for any worker count, and a restart's trace does
// not depend on how many other restarts exist.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rstl/approx.hpp"
#include "rstl/autodiff.hpp"
#include "rstl/dynamics.hpp"
#include "rstl/fields.hpp"
#include "rstl/grounding.hpp"
#include "rstl/mc.hpp"
#include "rstl/parallel.hpp"
#include "rstl/rng.hpp"

namespace rstl {

struct PriorConfig {
    double v_mean = 0.5;
    double v_std = 0.5;
    double omega_mean = 0.0;
    double omega_std = 0.5;
    double weight = 1.0;  // multiplier on the log-prior term
};

struct SynthConfig {
    int horizon = 50;
    int n_samples = 50;    // trajectory samples per gradient step (N_s)
    int n_restarts = 20;   // independent ascent runs from prior draws (N_u)
    int iters = 2000;
    double step_size = 0.05;
    PriorConfig prior{};
    Semantics semantics = Semantics::LogOddsCI;
    std::uint64_t seed = 0;
    double sigma_u = 0.05;     // heading-noise std dev [rad/s]
    bool fixed_noise = false;  // reuse iteration-0 draws every step (CRN)
    int validate_every = 100;  // MC checkpoint period, 0 disables
    long validate_samples = 1000;
    // per-component gradient magnitude cap; infinity = plain ascent.
    // Occupancy walls produce gradient components two orders of magnitude
    // above the detection terms, which otherwise stall the step-halving
    // safeguard.
    double grad_clip = std::numeric_limits<double>::infinity();

    void check() const {
        if (horizon < 1) throw std::invalid_argument("synth: horizon must be >= 1");
        if (n_samples < 1) throw std::invalid_argument("synth: n_samples must be >= 1");
        if (n_restarts < 1) throw std::invalid_argument("synth: n_restarts must be >= 1");
        if (iters < 0) throw std::invalid_argument("synth: iters must be >= 0");
        if (!(step_size > 0.0)) throw std::invalid_argument("synth: step_size must be > 0");
        if (!(prior.v_std > 0.0) || !(prior.omega_std > 0.0)) {
            throw std::invalid_argument("synth: prior stds must be > 0");
        }
        if (!(sigma_u >= 0.0)) throw std::invalid_argument("synth: sigma_u must be >= 0");
        if (!(grad_clip > 0.0)) throw std::invalid_argument("synth: grad_clip must be > 0");
    }
};

struct SynthProblem {
    RobotStateD start{};
    double dt = 1.0;
    Grounded grounded;
    const PredicateTable* table = nullptr;
};

struct RestartResult {
    int index = 0;
    ControlSequence controls;                         // final (or last finite)
    std::vector<double> trace;                        // objective per iteration
    std::vector<std::pair<int, McEstimate>> checkpoints;  // (iteration, MC estimate)
    McEstimate final_mc;
    bool aborted = false;
    std::string diagnostic;
    double seconds_per_step = 0.0;
};

struct SynthReport {
    SynthConfig config;
    std::vector<RestartResult> restarts;
    int best_index = 0;
    double seconds_per_step = 0.0;  // mean over all restarts

    const RestartResult& best() const { return restarts[static_cast<std::size_t>(best_index)]; }
};

namespace detail {
inline constexpr std::uint64_t kTagInit = rng::hash_str("restart-init");
inline constexpr std::uint64_t kTagNoise = rng::hash_str("rollout-noise");
inline constexpr std::uint64_t kTagValidate = rng::hash_str("mc-validate");
}  // namespace detail

// Satisfaction score plus Gaussian log-prior; shared by ascend() and bench().
class Objective {
public:
    Objective(const SynthProblem& problem, const SynthConfig& cfg)
        : problem_(problem), cfg_(cfg) {
        if (!problem.table) throw std::invalid_argument("synth: missing predicate table");
    }

    int horizon() const { return cfg_.horizon; }

    std::uint64_t noise_seed(int restart, int iter) const {
        const int effective_iter = cfg_.fixed_noise ? 0 : iter;
        return rng::combine(rng::combine(rng::combine(cfg_.seed, detail::kTagNoise),
                                         static_cast<std::uint64_t>(restart)),
                            static_cast<std::uint64_t>(effective_iter));
    }

    // Satisfaction score of one trajectory sample and its gradient, written
    // into gv/gw (both length T).  Returns the score.
    double sample_grad(const ControlSequence& u, std::uint64_t noise_seed, int sample,
                       std::span<double> gv, std::span<double> gw) const {
        static thread_local ad::Tape tape;
        tape.reset();
        const auto T = u.v.size();
        Controls<ad::Dual> ud;
        ud.v.reserve(T);
        ud.omega.reserve(T);
        for (double v : u.v) ud.v.push_back(tape.input(v));
        for (double w : u.omega) ud.omega.push_back(tape.input(w));

        const NoiseDraw noise = sample_noise(cfg_.sigma_u, static_cast<int>(T), noise_seed,
                                             static_cast<std::uint64_t>(sample));
        const auto traj = rollout<ad::Dual>(problem_.start, ud, noise, problem_.dt);
        const ad::Dual score = evaluate<ad::Dual>(problem_.grounded, traj, *problem_.table,
                                                  cfg_.semantics);

        static thread_local std::vector<ad::NodeId> ids;
        ids.clear();
        for (const auto& d : ud.v) ids.push_back(d.node);
        for (const auto& d : ud.omega) ids.push_back(d.node);
        const std::vector<double> grad = tape.gradient(score.node, ids);
        for (std::size_t t = 0; t < T; ++t) {
            gv[t] = grad[t];
            gw[t] = grad[T + t];
        }
        return score.value;
    }

    // Value-only path on plain doubles (no tape); used by the step-halving
    // safeguard and by tests.
    double sample_value(const ControlSequence& u, std::uint64_t noise_seed, int sample) const {
        const NoiseDraw noise = sample_noise(cfg_.sigma_u, static_cast<int>(u.v.size()),
                                             noise_seed, static_cast<std::uint64_t>(sample));
        const auto traj = rollout<double>(problem_.start, u, noise, problem_.dt);
        return evaluate<double>(problem_.grounded, traj, *problem_.table, cfg_.semantics);
    }

    double log_prior(const ControlSequence& u) const {
        const auto& p = cfg_.prior;
        double acc = 0.0;
        for (std::size_t t = 0; t < u.v.size(); ++t) {
            const double dv = u.v[t] - p.v_mean;
            const double dw = u.omega[t] - p.omega_mean;
            acc -= dv * dv / (2.0 * p.v_std * p.v_std);
            acc -= dw * dw / (2.0 * p.omega_std * p.omega_std);
        }
        return p.weight * acc;
    }

    void add_prior_grad(const ControlSequence& u, std::span<double> gv,
                        std::span<double> gw) const {
        const auto& p = cfg_.prior;
        for (std::size_t t = 0; t < u.v.size(); ++t) {
            gv[t] -= p.weight * (u.v[t] - p.v_mean) / (p.v_std * p.v_std);
            gw[t] -= p.weight * (u.omega[t] - p.omega_mean) / (p.omega_std * p.omega_std);
        }
    }

    // Full objective at u for one iteration's noise draws: sample mean of
    // the satisfaction score plus the log-prior.  Gradient is reduced over
    // samples in index order, so the result is worker-count invariant.
    struct Eval {
        double value = 0.0;
        double sat_mean = 0.0;
        std::vector<double> gv, gw;
    };

    Eval eval_with_grad(const ControlSequence& u, std::uint64_t noise_seed,
                        ThreadPool& pool) const {
        const std::size_t T = u.v.size();
        const int ns = cfg_.n_samples;
        std::vector<double> values(static_cast<std::size_t>(ns));
        std::vector<double> gvs(static_cast<std::size_t>(ns) * T);
        std::vector<double> gws(static_cast<std::size_t>(ns) * T);
        pool.run(ns, [&](int j) {
            const auto js = static_cast<std::size_t>(j);
            values[js] = sample_grad(u, noise_seed, j,
                                     std::span<double>(gvs.data() + js * T, T),
                                     std::span<double>(gws.data() + js * T, T));
        });
        Eval out;
        out.gv.assign(T, 0.0);
        out.gw.assign(T, 0.0);
        double sum = 0.0;
        for (int j = 0; j < ns; ++j) {
            const auto js = static_cast<std::size_t>(j);
            sum += values[js];
            for (std::size_t t = 0; t < T; ++t) {
                out.gv[t] += gvs[js * T + t];
                out.gw[t] += gws[js * T + t];
            }
        }
        const double inv = 1.0 / static_cast<double>(ns);
        for (std::size_t t = 0; t < T; ++t) {
            out.gv[t] *= inv;
            out.gw[t] *= inv;
        }
        out.sat_mean = sum * inv;
        add_prior_grad(u, out.gv, out.gw);
        if (std::isfinite(cfg_.grad_clip)) {
            for (std::size_t t = 0; t < T; ++t) {
                out.gv[t] = std::clamp(out.gv[t], -cfg_.grad_clip, cfg_.grad_clip);
                out.gw[t] = std::clamp(out.gw[t], -cfg_.grad_clip, cfg_.grad_clip);
            }
        }
        out.value = out.sat_mean + log_prior(u);
        return out;
    }

    double value_only(const ControlSequence& u, std::uint64_t noise_seed) const {
        double sum = 0.0;
        for (int j = 0; j < cfg_.n_samples; ++j) sum += sample_value(u, noise_seed, j);
        return sum / static_cast<double>(cfg_.n_samples) + log_prior(u);
    }

    double value_only(const ControlSequence& u, std::uint64_t noise_seed, ThreadPool& pool) const {
        std::vector<double> values(static_cast<std::size_t>(cfg_.n_samples));
        pool.run(cfg_.n_samples, [&](int j) {
            values[static_cast<std::size_t>(j)] = sample_value(u, noise_seed, j);
        });
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum / static_cast<double>(cfg_.n_samples) + log_prior(u);
    }

    ControlSequence draw_from_prior(int restart) const {
        const std::uint64_t key = rng::combine(rng::combine(cfg_.seed, detail::kTagInit),
                                               static_cast<std::uint64_t>(restart));
        ControlSequence u;
        const auto T = static_cast<std::size_t>(cfg_.horizon);
        u.v.resize(T);
        u.omega.resize(T);
        for (std::size_t t = 0; t < T; ++t) {
            u.v[t] = cfg_.prior.v_mean + cfg_.prior.v_std * rng::normal(key, 2 * t);
            u.omega[t] = cfg_.prior.omega_mean + cfg_.prior.omega_std * rng::normal(key, 2 * t + 1);
        }
        return u;
    }

    TrajectoryD nominal_trajectory(const ControlSequence& u) const {
        NoiseDraw zero;
        zero.eps.assign(u.v.size(), 0.0);
        return rollout<double>(problem_.start, u, zero, problem_.dt);
    }

    McEstimate validate(const ControlSequence& u, int restart, int iter) const {
        const std::uint64_t key = rng::combine(rng::combine(rng::combine(cfg_.seed, detail::kTagValidate),
                                                            static_cast<std::uint64_t>(restart)),
                                               static_cast<std::uint64_t>(iter));
        return mc_satisfaction(problem_.grounded, nominal_trajectory(u), *problem_.table,
                               cfg_.validate_samples, key);
    }

    const SynthProblem& problem() const { return problem_; }
    const SynthConfig& config() const { return cfg_; }

private:
    const SynthProblem& problem_;
    SynthConfig cfg_;
};

namespace detail {

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace detail

// Gradient ascent with multi-restart.  In deterministic mode (sigma_u == 0
// or fixed noise) a step that would decrease the objective halves the step
// size until it does not, so the trace is non-decreasing.  A non-finite
// objective or gradient aborts the restart and keeps its last finite state.
inline SynthReport ascend(const SynthProblem& problem, const SynthConfig& cfg, ThreadPool& pool) {
    cfg.check();
    Objective obj(problem, cfg);
    const bool deterministic = cfg.sigma_u == 0.0 || cfg.fixed_noise;

    SynthReport report;
    report.config = cfg;
    double total_seconds = 0.0;
    long total_steps = 0;

    for (int r = 0; r < cfg.n_restarts; ++r) {
        RestartResult res;
        res.index = r;
        res.controls = obj.draw_from_prior(r);

        const auto t0 = std::chrono::steady_clock::now();
        int done_iters = 0;
        for (int i = 0; i < cfg.iters; ++i) {
            Objective::Eval ev;
            try {
                ev = obj.eval_with_grad(res.controls, obj.noise_seed(r, i), pool);
            } catch (const std::exception& e) {
                res.aborted = true;
                res.diagnostic = e.what();
                break;
            }
            if (!std::isfinite(ev.value) || !detail::all_finite(ev.gv) ||
                !detail::all_finite(ev.gw)) {
                res.aborted = true;
                res.diagnostic = "non-finite objective or gradient at iteration " +
                                 std::to_string(i);
                break;
            }
            res.trace.push_back(ev.value);

            const std::size_t T = res.controls.v.size();
            ControlSequence candidate = res.controls;
            auto apply = [&](double s) {
                for (std::size_t t = 0; t < T; ++t) {
                    candidate.v[t] = res.controls.v[t] + s * ev.gv[t];
                    candidate.omega[t] = res.controls.omega[t] + s * ev.gw[t];
                }
            };
            double step = cfg.step_size;
            apply(step);
            if (deterministic) {
                // halve until the move does not decrease the (reproducible)
                // objective; a fresh step size next iteration
                int halvings = 0;
                while (!(obj.value_only(candidate, obj.noise_seed(r, i), pool) >= ev.value) &&
                       halvings < 40) {
                    step *= 0.5;
                    apply(step);
                    ++halvings;
                }
                if (halvings == 40) candidate = res.controls;  // no usable move this iteration
            }
            res.controls = candidate;
            ++done_iters;

            if (cfg.validate_every > 0 && (i + 1) % cfg.validate_every == 0) {
                res.checkpoints.emplace_back(i + 1, obj.validate(res.controls, r, i + 1));
            }
        }
        const auto t1 = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(t1 - t0).count();
        res.seconds_per_step = done_iters > 0 ? elapsed / done_iters : 0.0;
        total_seconds += elapsed;
        total_steps += done_iters;

        res.final_mc = obj.validate(res.controls, r, cfg.iters);
        report.restarts.push_back(std::move(res));
    }

    report.best_index = 0;
    for (int r = 1; r < cfg.n_restarts; ++r) {
        if (report.restarts[static_cast<std::size_t>(r)].final_mc.mean >
            report.restarts[static_cast<std::size_t>(report.best_index)].final_mc.mean) {
            report.best_index = r;
        }
    }
    report.seconds_per_step = total_steps > 0 ? total_seconds / static_cast<double>(total_steps)
                                              : 0.0;
    return report;
}

// --- benchmarking ------------------------------------------------------------

struct BenchRow {
    int n_samples = 0;
    int n_restarts = 0;
    int workers = 0;
    long steps = 0;
    double mean_sec_per_step = 0.0;
    double var_sec_per_step = 0.0;
};

// Mean wall-clock time of one gradient step advancing n_restarts ascents
// with n_samples rollouts each.  All (restart, sample) pairs of a step run
// as one parallel batch.
inline BenchRow bench_cell(const SynthProblem& problem, const SynthConfig& base, int n_samples,
                           int n_restarts, int workers, int steps) {
    SynthConfig cfg = base;
    cfg.n_samples = n_samples;
    cfg.n_restarts = n_restarts;
    cfg.check();
    Objective obj(problem, cfg);
    ThreadPool pool(workers);

    const auto T = static_cast<std::size_t>(cfg.horizon);
    std::vector<ControlSequence> us;
    us.reserve(static_cast<std::size_t>(n_restarts));
    for (int r = 0; r < n_restarts; ++r) us.push_back(obj.draw_from_prior(r));

    const int tasks = n_samples * n_restarts;
    std::vector<double> gvs(static_cast<std::size_t>(tasks) * T);
    std::vector<double> gws(static_cast<std::size_t>(tasks) * T);
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(steps));

    for (int s = 0; s < steps; ++s) {
        const auto t0 = std::chrono::steady_clock::now();
        pool.run(tasks, [&](int k) {
            const int r = k / n_samples;
            const int j = k % n_samples;
            const auto ks = static_cast<std::size_t>(k);
            obj.sample_grad(us[static_cast<std::size_t>(r)], obj.noise_seed(r, s), j,
                            std::span<double>(gvs.data() + ks * T, T),
                            std::span<double>(gws.data() + ks * T, T));
        });
        for (int r = 0; r < n_restarts; ++r) {
            auto& u = us[static_cast<std::size_t>(r)];
            const double inv = 1.0 / static_cast<double>(n_samples);
            std::vector<double> gv(T, 0.0), gw(T, 0.0);
            for (int j = 0; j < n_samples; ++j) {
                const auto ks = static_cast<std::size_t>(r * n_samples + j);
                for (std::size_t t = 0; t < T; ++t) {
                    gv[t] += gvs[ks * T + t] * inv;
                    gw[t] += gws[ks * T + t] * inv;
                }
            }
            obj.add_prior_grad(u, gv, gw);
            for (std::size_t t = 0; t < T; ++t) {
                u.v[t] += cfg.step_size * gv[t];
                u.omega[t] += cfg.step_size * gw[t];
            }
        }
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }

    BenchRow row;
    row.n_samples = n_samples;
    row.n_restarts = n_restarts;
    row.workers = pool.workers();
    row.steps = steps;
    double mean = 0.0;
    for (double t : times) mean += t;
    mean /= static_cast<double>(times.size());
    double var = 0.0;
    for (double t : times) var += (t - mean) * (t - mean);
    var /= static_cast<double>(times.size());
    row.mean_sec_per_step = mean;
    row.var_sec_per_step = var;
    return row;
}

inline std::vector<BenchRow> bench(const SynthProblem& problem, const SynthConfig& base,
                                   std::span<const int> ns_list, std::span<const int> nu_list,
                                   std::span<const int> workers_list, int steps) {
    std::vector<BenchRow> rows;
    for (int w : workers_list) {
        for (int nu : nu_list) {
            for (int ns : ns_list) {
                rows.push_back(bench_cell(problem, base, ns, nu, w, steps));
            }
        }
    }
    return rows;
}

}  // namespace rstl
