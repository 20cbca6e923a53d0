#pragma once

// Scenario files: JSON with a versioned schema describing the world a
// formula is evaluated in — horizon, time step, start state, actuation
// noise, the predicate table, and the control prior.  Validation errors
// carry JSON-pointer-style paths.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rstl/dynamics.hpp"
#include "rstl/fields.hpp"
#include "rstl/formula.hpp"
#include "rstl/grounding.hpp"
#include "rstl/parser.hpp"
#include "rstl/synthesis.hpp"

namespace rstl {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Scenario {
    std::string name;
    double dt = 1.0;
    int horizon = 1;
    RobotStateD start{};
    std::string formula_text;
    FormulaPtr formula;
    double sigma_u = 0.0;
    std::uint64_t seed = 0;
    PriorConfig prior{};
    PredicateTable predicates;

    // optional per-scenario synthesis defaults
    std::optional<int> synth_iters;
    std::optional<int> synth_n_samples;
    std::optional<int> synth_n_restarts;
    std::optional<double> synth_step_size;
    std::optional<bool> synth_fixed_noise;
    std::optional<double> synth_grad_clip;

    Grounded ground_formula() const { return ground(*formula, 1, horizon); }

    SynthProblem synth_problem() const {
        SynthProblem p;
        p.start = start;
        p.dt = dt;
        p.grounded = ground_formula();
        p.table = &predicates;
        return p;
    }

    SynthConfig synth_config() const {
        SynthConfig cfg;
        cfg.horizon = horizon;
        cfg.prior = prior;
        cfg.semantics = Semantics::LogOddsCI;
        cfg.seed = seed;
        cfg.sigma_u = sigma_u;
        if (synth_iters) cfg.iters = *synth_iters;
        if (synth_n_samples) cfg.n_samples = *synth_n_samples;
        if (synth_n_restarts) cfg.n_restarts = *synth_n_restarts;
        if (synth_step_size) cfg.step_size = *synth_step_size;
        if (synth_fixed_noise) cfg.fixed_noise = *synth_fixed_noise;
        if (synth_grad_clip) cfg.grad_clip = *synth_grad_clip;
        return cfg;
    }
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) throw ScenarioError(path + "/" + key + ": missing required field");
    return obj.at(key);
}

inline double require_number(const json& obj, const std::string& path, const char* key) {
    const json& v = require(obj, path, key);
    if (!v.is_number()) throw ScenarioError(path + "/" + key + ": expected a number");
    return v.get<double>();
}

inline double number_or(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<double>();
}

inline std::array<double, 2> require_vec2(const json& obj, const std::string& path,
                                          const char* key) {
    const json& v = require(obj, path, key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ScenarioError(path + "/" + key + ": expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

inline Field parse_predicate(const json& p, const std::string& path, int horizon, double dt,
                             const std::filesystem::path& base_dir) {
    const json& kind_j = require(p, path, "kind");
    if (!kind_j.is_string()) throw ScenarioError(path + "/kind: expected a string");
    const std::string kind = kind_j.get<std::string>();
    if (kind == "constant") {
        const double prob = require_number(p, path, "p");
        if (!(prob > 0.0 && prob < 1.0)) throw ScenarioError(path + "/p: must be in (0,1)");
        return ConstantField{prob};
    }
    if (kind == "static_target") {
        const auto z = require_vec2(p, path, "z");
        const double r_d = require_number(p, path, "r_d");
        const double p_d = require_number(p, path, "p_d");
        if (!(r_d > 0.0)) throw ScenarioError(path + "/r_d: must be > 0");
        if (!(p_d > 0.0 && p_d < 1.0)) throw ScenarioError(path + "/p_d: must be in (0,1)");
        return StaticTargetField{z[0], z[1], r_d, p_d};
    }
    if (kind == "target") {
        const auto z0 = require_vec2(p, path, "z0");
        const auto v0 = require_vec2(p, path, "v0");
        const double r_d = require_number(p, path, "r_d");
        const double p_d = require_number(p, path, "p_d");
        const double q = number_or(p, "q", 0.0);
        const double s_pos = number_or(p, "sigma0_pos", 0.1);
        const double s_vel = number_or(p, "sigma0_vel", 0.01);
        if (!(r_d > 0.0)) throw ScenarioError(path + "/r_d: must be > 0");
        if (!(p_d > 0.0 && p_d < 1.0)) throw ScenarioError(path + "/p_d: must be in (0,1)");
        if (!(s_pos > 0.0) || !(s_vel >= 0.0)) {
            throw ScenarioError(path + ": sigma0_pos must be > 0 and sigma0_vel >= 0");
        }
        // diagonal initial covariance; a tiny velocity floor keeps it SPD
        const double sv = s_vel > 0.0 ? s_vel : 1e-9;
        std::array<double, 16> sigma0{};
        sigma0[0] = s_pos * s_pos;
        sigma0[5] = s_pos * s_pos;
        sigma0[10] = sv * sv;
        sigma0[15] = sv * sv;
        try {
            return TargetField(predict_belief(z0, v0, sigma0, q, dt, horizon), r_d, p_d);
        } catch (const FieldError& e) {
            throw ScenarioError(path + ": " + e.what());
        }
    }
    if (kind == "occupancy") {
        const json& grid_j = require(p, path, "grid");
        if (!grid_j.is_string()) throw ScenarioError(path + "/grid: expected a file path string");
        const std::filesystem::path grid_path = base_dir / grid_j.get<std::string>();
        try {
            OccupancyField f{load_occupancy_csv(grid_path.string())};
            return f;
        } catch (const FieldError& e) {
            throw ScenarioError(path + "/grid: " + e.what());
        }
    }
    throw ScenarioError(path + "/kind: unknown predicate kind '" + kind +
                        "' (want constant, static_target, target or occupancy)");
}

}  // namespace detail

inline Scenario load_scenario_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir) {
    using detail::require;
    using detail::require_number;

    if (!j.is_object()) throw ScenarioError(": scenario must be a JSON object");
    const auto& schema = require(j, "", "schema");
    if (!schema.is_number_integer() || schema.get<int>() != 1) {
        throw ScenarioError("/schema: unsupported schema version (want 1)");
    }

    Scenario s;
    s.name = j.contains("name") ? j.at("name").get<std::string>() : "unnamed";
    s.dt = require_number(j, "", "dt");
    if (!(s.dt > 0.0)) throw ScenarioError("/dt: must be > 0");
    const auto& horizon_j = require(j, "", "horizon");
    if (!horizon_j.is_number_integer() || horizon_j.get<int>() < 1) {
        throw ScenarioError("/horizon: must be an integer >= 1");
    }
    s.horizon = horizon_j.get<int>();

    const auto& start = require(j, "", "start");
    s.start.x = require_number(start, "/start", "x");
    s.start.y = require_number(start, "/start", "y");
    s.start.heading = detail::number_or(start, "theta", 0.0);

    s.sigma_u = detail::number_or(j, "sigma_u", 0.0);
    if (!(s.sigma_u >= 0.0)) throw ScenarioError("/sigma_u: must be >= 0");
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("prior")) {
        const auto& p = j.at("prior");
        s.prior.v_mean = detail::number_or(p, "v_mean", s.prior.v_mean);
        s.prior.v_std = detail::number_or(p, "v_std", s.prior.v_std);
        s.prior.omega_mean = detail::number_or(p, "omega_mean", s.prior.omega_mean);
        s.prior.omega_std = detail::number_or(p, "omega_std", s.prior.omega_std);
        s.prior.weight = detail::number_or(p, "weight", s.prior.weight);
        if (!(s.prior.v_std > 0.0) || !(s.prior.omega_std > 0.0)) {
            throw ScenarioError("/prior: stds must be > 0");
        }
    }

    if (j.contains("synth")) {
        const auto& sy = j.at("synth");
        if (sy.contains("iters")) s.synth_iters = sy.at("iters").get<int>();
        if (sy.contains("n_samples")) s.synth_n_samples = sy.at("n_samples").get<int>();
        if (sy.contains("n_restarts")) s.synth_n_restarts = sy.at("n_restarts").get<int>();
        if (sy.contains("step_size")) s.synth_step_size = sy.at("step_size").get<double>();
        if (sy.contains("fixed_noise")) s.synth_fixed_noise = sy.at("fixed_noise").get<bool>();
        if (sy.contains("grad_clip")) s.synth_grad_clip = sy.at("grad_clip").get<double>();
    }

    const auto& formula_j = require(j, "", "formula");
    if (!formula_j.is_string()) throw ScenarioError("/formula: expected a string");
    s.formula_text = formula_j.get<std::string>();
    try {
        s.formula = parse(s.formula_text);
    } catch (const ParseError& e) {
        throw ScenarioError("/formula: " + std::string(e.what()));
    }

    const auto& preds = require(j, "", "predicates");
    if (!preds.is_object()) throw ScenarioError("/predicates: expected an object");
    for (const auto& [name, body] : preds.items()) {
        s.predicates.add(name, detail::parse_predicate(body, "/predicates/" + name, s.horizon,
                                                       s.dt, base_dir));
    }

    std::vector<std::string> used;
    collect_predicates(*s.formula, used);
    for (const auto& name : used) {
        if (!s.predicates.contains(name)) {
            throw ScenarioError("/formula: predicate '" + name +
                                "' has no entry under /predicates");
        }
    }

    // grounding validates interval/horizon compatibility up front
    try {
        ground(*s.formula, 1, s.horizon);
    } catch (const GroundError& e) {
        throw ScenarioError("/formula: " + std::string(e.what()));
    }

    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(path + ": invalid JSON: " + e.what());
    }
    try {
        return load_scenario_json(j, std::filesystem::path(path).parent_path());
    } catch (const ScenarioError& e) {
        throw ScenarioError(path + e.what());
    }
}

}  // namespace rstl
