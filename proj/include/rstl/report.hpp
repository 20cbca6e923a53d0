#pragma once

// Serialization of synthesis results: report JSON, convergence-trace CSV,
// and per-restart nominal-trajectory CSVs.

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rstl/approx.hpp"
#include "rstl/dynamics.hpp"
#include "rstl/synthesis.hpp"

namespace rstl {

inline nlohmann::json report_to_json(const SynthReport& report, const std::string& scenario_name) {
    nlohmann::json j;
    j["scenario"] = scenario_name;
    j["semantics"] = semantics_name(report.config.semantics);
    j["seed"] = report.config.seed;
    j["config"] = {
        {"horizon", report.config.horizon},
        {"n_samples", report.config.n_samples},
        {"n_restarts", report.config.n_restarts},
        {"iters", report.config.iters},
        {"step_size", report.config.step_size},
        {"sigma_u", report.config.sigma_u},
        {"fixed_noise", report.config.fixed_noise},
        {"prior",
         {{"v_mean", report.config.prior.v_mean},
          {"v_std", report.config.prior.v_std},
          {"omega_mean", report.config.prior.omega_mean},
          {"omega_std", report.config.prior.omega_std},
          {"weight", report.config.prior.weight}}},
    };
    j["best_restart"] = report.best_index;
    j["seconds_per_step"] = report.seconds_per_step;
    j["restarts"] = nlohmann::json::array();
    for (const auto& r : report.restarts) {
        nlohmann::json rj;
        rj["index"] = r.index;
        rj["aborted"] = r.aborted;
        if (r.aborted) rj["diagnostic"] = r.diagnostic;
        rj["final_objective"] = r.trace.empty() ? nlohmann::json() : nlohmann::json(r.trace.back());
        rj["mc"] = {{"mean", r.final_mc.mean},
                    {"std_err", r.final_mc.std_err},
                    {"n", r.final_mc.n_samples}};
        rj["seconds_per_step"] = r.seconds_per_step;
        rj["controls"] = {{"v", r.controls.v}, {"omega", r.controls.omega}};
        j["restarts"].push_back(std::move(rj));
    }
    return j;
}

// One row per recorded iteration: iteration, restart, objective, and the MC
// checkpoint probability when one was taken at that iteration (else blank).
inline void save_trace_csv(const SynthReport& report, std::ostream& out) {
    out << "iteration,restart,objective,mc_p\n";
    for (const auto& r : report.restarts) {
        std::size_t ck = 0;
        for (std::size_t i = 0; i < r.trace.size(); ++i) {
            out << (i + 1) << "," << r.index << "," << r.trace[i] << ",";
            if (ck < r.checkpoints.size() &&
                static_cast<std::size_t>(r.checkpoints[ck].first) == i + 1) {
                out << r.checkpoints[ck].second.mean;
                ++ck;
            }
            out << "\n";
        }
    }
}

// Writes report.json, trace.csv and restart_<k>.csv under out_dir.
inline void save_report_files(const SynthReport& report, const SynthProblem& problem,
                              const std::string& scenario_name, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "report.json");
        if (!out) throw std::runtime_error("cannot write report.json under " + out_dir);
        out << report_to_json(report, scenario_name).dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(out_dir) / "trace.csv");
        if (!out) throw std::runtime_error("cannot write trace.csv under " + out_dir);
        save_trace_csv(report, out);
    }
    Objective obj(problem, report.config);
    for (const auto& r : report.restarts) {
        const auto path = fs::path(out_dir) / ("restart_" + std::to_string(r.index) + ".csv");
        save_trajectory_csv(obj.nominal_trajectory(r.controls), path.string());
    }
}

}  // namespace rstl
