#pragma once

// Discrete-time stochastic bicycle model.
//
//   theta_{t+1} = theta_t + (omega_t + eps_t) dt
//   x_{t+1}     = x_t + V_t cos(theta_t) dt
//   y_{t+1}     = y_t + V_t sin(theta_t) dt
//
// The heading noise eps_t is drawn once per trajectory sample and held
// fixed, so a rollout is a deterministic, differentiable function of the
// controls (reparameterised sampling).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rstl/autodiff.hpp"
#include "rstl/rng.hpp"

namespace rstl {

struct DynamicsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class S>
struct RobotState {
    S x{};
    S y{};
    S heading{};
};

using RobotStateD = RobotState<double>;

// Per-step controls (V_t, omega_t), t = 1..T.  The last step's control only
// enters the prior: states x_1..x_T need T-1 propagations.
template <class S>
struct Controls {
    std::vector<S> v;
    std::vector<S> omega;

    std::size_t horizon() const { return v.size(); }
};

using ControlSequence = Controls<double>;

// One draw of the heading noise, eps_t ~ N(0, sigma_u), t = 1..T.
struct NoiseDraw {
    std::vector<double> eps;
};

template <class S>
struct Trajectory {
    std::vector<RobotState<S>> states;  // x_1..x_T, x_1 = start
    double dt = 1.0;
};

using TrajectoryD = Trajectory<double>;

inline NoiseDraw sample_noise(double sigma_u, int T, std::uint64_t seed,
                              std::uint64_t sample_index) {
    if (!(sigma_u >= 0.0)) throw DynamicsError("sample_noise: sigma_u must be >= 0");
    NoiseDraw d;
    d.eps.resize(static_cast<std::size_t>(T), 0.0);
    if (sigma_u == 0.0) return d;
    const std::uint64_t key = rng::combine(seed, rng::combine(0x6e6f697365ull, sample_index));
    for (int t = 0; t < T; ++t) {
        d.eps[static_cast<std::size_t>(t)] = sigma_u * rng::normal(key, static_cast<std::uint64_t>(t));
    }
    return d;
}

template <class S>
Trajectory<S> rollout(const RobotStateD& start, const Controls<S>& u, const NoiseDraw& noise,
                      double dt) {
    using std::cos;
    using std::sin;
    using ad::cos;
    using ad::sin;
    if (!(dt > 0.0)) throw DynamicsError("rollout: dt must be > 0");
    const std::size_t T = u.horizon();
    if (u.omega.size() != T) throw DynamicsError("rollout: V/omega length mismatch");
    if (noise.eps.size() != T) throw DynamicsError("rollout: noise length mismatch");
    if (T == 0) throw DynamicsError("rollout: empty control sequence");

    Trajectory<S> traj;
    traj.dt = dt;
    traj.states.reserve(T);
    RobotState<S> s{S(start.x), S(start.y), S(start.heading)};
    traj.states.push_back(s);
    for (std::size_t t = 0; t + 1 < T; ++t) {
        const S step_x = u.v[t] * cos(s.heading) * dt;
        const S step_y = u.v[t] * sin(s.heading) * dt;
        s.heading = s.heading + (u.omega[t] + noise.eps[t]) * dt;
        s.x = s.x + step_x;
        s.y = s.y + step_y;
        traj.states.push_back(s);
    }
    return traj;
}

// --- trajectory CSV (header: t,x,y,theta; one row per step) -----------------

inline void save_trajectory_csv(const TrajectoryD& traj, std::ostream& out) {
    out << "t,x,y,theta\n";
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& s = traj.states[i];
        out << (i + 1) << "," << s.x << "," << s.y << "," << s.heading << "\n";
    }
}

inline void save_trajectory_csv(const TrajectoryD& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DynamicsError("cannot open trajectory file for writing: " + path);
    save_trajectory_csv(traj, out);
}

inline TrajectoryD load_trajectory_csv(std::istream& in, const std::string& origin_name,
                                       double dt) {
    TrajectoryD traj;
    traj.dt = dt;
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,x,y,theta", 0) != 0) {
        throw DynamicsError(origin_name + ":1: expected header 't,x,y,theta'");
    }
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream ls(line);
        double t, x, y, th;
        char c1, c2, c3;
        if (!(ls >> t >> c1 >> x >> c2 >> y >> c3 >> th) || c1 != ',' || c2 != ',' || c3 != ',') {
            throw DynamicsError(origin_name + ":" + std::to_string(row) + ": malformed row");
        }
        traj.states.push_back({x, y, th});
    }
    if (traj.states.empty()) throw DynamicsError(origin_name + ": no states");
    return traj;
}

inline TrajectoryD load_trajectory_csv(const std::string& path, double dt) {
    std::ifstream in(path);
    if (!in) throw DynamicsError("cannot open trajectory file: " + path);
    return load_trajectory_csv(in, path, dt);
}

}  // namespace rstl
