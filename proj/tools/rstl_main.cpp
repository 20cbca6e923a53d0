// Command-line front end.
//
//   rstl parse    <formula> [--ground T]
//   rstl eval     --scenario S.json --trajectory T.csv [--semantics ...] [--mc-samples N]
//   rstl synth    --scenario S.json [--ns N] [--nu N] [--iters N] [--step-size S]
//                 [--semantics ...] [--workers N] [--sigma-u S] [--fixed-noise]
//                 [--seed N] [--out DIR]
//   rstl compare  --scenario S.json --trajectories T1.csv [T2.csv ...]
//                 [--formulas F1 ...] [--mc-samples N] [--out FILE]
//   rstl bench    --scenario S.json [--ns-list ...] [--nu-list ...]
//                 [--workers-list ...] [--steps N] [--out FILE]
//
// Every command is deterministic for a fixed --seed (RSTL_SEED supplies the
// default).  Errors print one line on stderr and exit nonzero.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rstl/approx.hpp"
#include "rstl/mc.hpp"
#include "rstl/parser.hpp"
#include "rstl/report.hpp"
#include "rstl/scenario.hpp"
#include "rstl/synthesis.hpp"

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("RSTL_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 0;
}

double estimate_probability(const rstl::Grounded& g, const rstl::TrajectoryD& traj,
                            const rstl::PredicateTable& table, rstl::Semantics sem) {
    const double v = rstl::evaluate<double>(g, traj, table, sem);
    return sem == rstl::Semantics::NaiveCI ? v : rstl::prob_of(v);
}

int cmd_parse(const std::string& text, std::optional<int> horizon) {
    const rstl::FormulaPtr f = rstl::parse(text);
    std::cout << rstl::pretty(*f) << "\n";
    if (horizon) {
        const rstl::Grounded g = rstl::ground(*f, 1, *horizon);
        std::cout << "grounded: " << g.nodes.size() << " nodes, " << g.leaves.size()
                  << " distinct leaves over horizon " << *horizon << "\n";
        if (g.clipped) {
            std::cout << "warning: an F/G window was clipped at the horizon\n";
        }
    }
    return 0;
}

int cmd_eval(const std::string& scenario_path, const std::string& traj_path,
             const std::string& semantics, long mc_samples, std::uint64_t seed) {
    const rstl::Scenario scn = rstl::load_scenario(scenario_path);
    const rstl::TrajectoryD traj = rstl::load_trajectory_csv(traj_path, scn.dt);
    if (traj.states.size() != static_cast<std::size_t>(scn.horizon)) {
        throw std::runtime_error("trajectory length " + std::to_string(traj.states.size()) +
                                 " does not match scenario horizon " +
                                 std::to_string(scn.horizon));
    }
    const rstl::Grounded g = scn.ground_formula();
    const rstl::Semantics sem = rstl::semantics_from_name(semantics);
    const double value = rstl::evaluate<double>(g, traj, scn.predicates, sem);
    if (sem == rstl::Semantics::NaiveCI) {
        std::cout << "P = " << value << "\n";
    } else {
        std::cout << "L = " << value << "\nP = " << rstl::prob_of(value) << "\n";
    }
    if (mc_samples > 0) {
        const rstl::McEstimate mc = rstl::mc_satisfaction(g, traj, scn.predicates, mc_samples, seed);
        std::cout << "MC = " << mc.mean << " +- " << mc.std_err << " (n=" << mc.n_samples
                  << ")\n";
    }
    return 0;
}

int cmd_synth(const std::string& scenario_path, std::optional<int> ns, std::optional<int> nu,
              std::optional<int> iters, std::optional<double> step_size,
              std::optional<std::string> semantics, std::optional<double> sigma_u,
              std::optional<bool> fixed_noise, std::optional<double> grad_clip, int workers,
              std::optional<std::uint64_t> seed, const std::string& out_dir) {
    const rstl::Scenario scn = rstl::load_scenario(scenario_path);
    rstl::SynthConfig cfg = scn.synth_config();
    if (ns) cfg.n_samples = *ns;
    if (nu) cfg.n_restarts = *nu;
    if (iters) cfg.iters = *iters;
    if (step_size) cfg.step_size = *step_size;
    if (semantics) cfg.semantics = rstl::semantics_from_name(*semantics);
    if (sigma_u) cfg.sigma_u = *sigma_u;
    if (seed) cfg.seed = *seed;
    if (fixed_noise) cfg.fixed_noise = *fixed_noise;
    if (grad_clip) cfg.grad_clip = *grad_clip;

    const rstl::SynthProblem problem = scn.synth_problem();
    rstl::ThreadPool pool(workers);
    const rstl::SynthReport report = rstl::ascend(problem, cfg, pool);
    rstl::save_report_files(report, problem, scn.name, out_dir);

    const auto& best = report.best();
    std::cout << "best restart " << best.index << ": MC P = " << best.final_mc.mean << " +- "
              << best.final_mc.std_err << "\n";
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

int cmd_compare(const std::string& scenario_path, const std::vector<std::string>& traj_paths,
                const std::vector<std::string>& formulas, long mc_samples, std::uint64_t seed,
                const std::string& out_path) {
    const rstl::Scenario scn = rstl::load_scenario(scenario_path);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot open output file: " + out_path);
        out = &file;
    }
    *out << "trajectory,formula,semantics,estimate,mc_mean,mc_stderr\n";
    const std::vector<std::string>& texts = formulas;  // empty list -> header only
    for (const auto& traj_path : traj_paths) {
        const rstl::TrajectoryD traj = rstl::load_trajectory_csv(traj_path, scn.dt);
        if (traj.states.size() != static_cast<std::size_t>(scn.horizon)) {
            throw std::runtime_error("trajectory length in " + traj_path +
                                     " does not match scenario horizon");
        }
        for (const auto& text : texts) {
            const rstl::FormulaPtr f = rstl::parse(text);
            const rstl::Grounded g = rstl::ground(*f, 1, scn.horizon);
            const rstl::McEstimate mc =
                rstl::mc_satisfaction(g, traj, scn.predicates, mc_samples, seed);
            for (const rstl::Semantics sem :
                 {rstl::Semantics::NaiveCI, rstl::Semantics::LogOddsCI, rstl::Semantics::LogOddsME}) {
                const double est = estimate_probability(g, traj, scn.predicates, sem);
                *out << traj_path << ",\"" << text << "\"," << rstl::semantics_name(sem) << ","
                     << est << "," << mc.mean << "," << mc.std_err << "\n";
            }
        }
    }
    return 0;
}

int cmd_bench(const std::string& scenario_path, std::vector<int> ns_list, std::vector<int> nu_list,
              std::vector<int> workers_list, int steps, std::optional<std::uint64_t> seed,
              const std::string& out_path) {
    const rstl::Scenario scn = rstl::load_scenario(scenario_path);
    rstl::SynthConfig cfg = scn.synth_config();
    if (seed) cfg.seed = *seed;
    const rstl::SynthProblem problem = scn.synth_problem();
    if (ns_list.empty()) ns_list = {1, 10, 50, 100};
    if (nu_list.empty()) nu_list = {1, 10, 50, 100};
    if (workers_list.empty()) workers_list = {static_cast<int>(std::thread::hardware_concurrency())};

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot open output file: " + out_path);
        out = &file;
    }
    *out << "n_samples,n_restarts,workers,steps,mean_sec_per_step,var_sec_per_step\n";
    const auto rows = rstl::bench(problem, cfg, ns_list, nu_list, workers_list, steps);
    for (const auto& r : rows) {
        *out << r.n_samples << "," << r.n_restarts << "," << r.workers << "," << r.steps << ","
             << r.mean_sec_per_step << "," << r.var_sec_per_step << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"random-STL probability-of-satisfaction evaluation and control synthesis"};
    app.require_subcommand(1);

    // parse
    std::string parse_text;
    std::optional<int> parse_horizon;
    auto* parse_cmd = app.add_subcommand("parse", "parse a formula and print its canonical form");
    parse_cmd->add_option("formula", parse_text, "formula text")->required();
    parse_cmd->add_option("--ground", parse_horizon, "also ground over this horizon");

    // eval
    std::string eval_scenario, eval_traj, eval_sem = "ci";
    long eval_mc = 0;
    std::uint64_t eval_seed = default_seed();
    auto* eval_cmd = app.add_subcommand("eval", "evaluate P(formula | trajectory)");
    eval_cmd->add_option("--scenario", eval_scenario)->required();
    eval_cmd->add_option("--trajectory", eval_traj)->required();
    eval_cmd->add_option("--semantics", eval_sem, "naive-ci | ci | me");
    eval_cmd->add_option("--mc-samples", eval_mc, "also print an MC estimate");
    eval_cmd->add_option("--seed", eval_seed);

    // synth
    std::string synth_scenario, synth_out = "synth_out";
    std::optional<int> synth_ns, synth_nu, synth_iters;
    std::optional<double> synth_step, synth_sigma_u, synth_grad_clip;
    std::optional<std::string> synth_sem;
    std::optional<std::uint64_t> synth_seed;
    bool synth_fixed_noise = false;
    int synth_workers = static_cast<int>(std::thread::hardware_concurrency());
    auto* synth_cmd = app.add_subcommand("synth", "synthesise a control sequence");
    synth_cmd->add_option("--scenario", synth_scenario)->required();
    synth_cmd->add_option("--ns", synth_ns, "trajectory samples per step");
    synth_cmd->add_option("--nu", synth_nu, "restarts");
    synth_cmd->add_option("--iters", synth_iters);
    synth_cmd->add_option("--step-size", synth_step);
    synth_cmd->add_option("--semantics", synth_sem, "naive-ci | ci | me");
    synth_cmd->add_option("--sigma-u", synth_sigma_u, "override actuation noise");
    synth_cmd->add_flag("--fixed-noise", synth_fixed_noise, "reuse the same draws every step");
    synth_cmd->add_option("--grad-clip", synth_grad_clip, "per-component gradient cap");
    synth_cmd->add_option("--workers", synth_workers);
    synth_cmd->add_option("--seed", synth_seed);
    synth_cmd->add_option("--out", synth_out, "output directory");

    // compare
    std::string cmp_scenario, cmp_out;
    std::vector<std::string> cmp_trajs, cmp_formulas;
    long cmp_mc = 1000;
    std::uint64_t cmp_seed = default_seed();
    auto* cmp_cmd = app.add_subcommand("compare", "tabulate estimates vs MC over trajectories");
    cmp_cmd->add_option("--scenario", cmp_scenario)->required();
    cmp_cmd->add_option("--trajectories", cmp_trajs)->expected(-1);
    cmp_cmd->add_option("--formulas", cmp_formulas)->expected(-1);
    cmp_cmd->add_option("--mc-samples", cmp_mc);
    cmp_cmd->add_option("--seed", cmp_seed);
    cmp_cmd->add_option("--out", cmp_out, "output CSV (default stdout)");

    // bench
    std::string bench_scenario, bench_out;
    std::vector<int> bench_ns, bench_nu, bench_workers;
    int bench_steps = 100;
    std::optional<std::uint64_t> bench_seed;
    auto* bench_cmd = app.add_subcommand("bench", "time gradient steps over a config grid");
    bench_cmd->add_option("--scenario", bench_scenario)->required();
    bench_cmd->add_option("--ns-list", bench_ns)->expected(-1);
    bench_cmd->add_option("--nu-list", bench_nu)->expected(-1);
    bench_cmd->add_option("--workers-list", bench_workers)->expected(-1);
    bench_cmd->add_option("--steps", bench_steps, "steps per grid cell (>= 1)");
    bench_cmd->add_option("--seed", bench_seed);
    bench_cmd->add_option("--out", bench_out, "output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (parse_cmd->parsed()) return cmd_parse(parse_text, parse_horizon);
        if (eval_cmd->parsed()) return cmd_eval(eval_scenario, eval_traj, eval_sem, eval_mc, eval_seed);
        if (synth_cmd->parsed()) {
            std::optional<bool> fixed;
            if (synth_cmd->count("--fixed-noise")) fixed = synth_fixed_noise;
            return cmd_synth(synth_scenario, synth_ns, synth_nu, synth_iters, synth_step,
                             synth_sem, synth_sigma_u, fixed, synth_grad_clip, synth_workers,
                             synth_seed, synth_out);
        }
        if (cmp_cmd->parsed()) {
            return cmd_compare(cmp_scenario, cmp_trajs, cmp_formulas, cmp_mc, cmp_seed, cmp_out);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(bench_scenario, bench_ns, bench_nu, bench_workers, bench_steps,
                             bench_seed, bench_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
