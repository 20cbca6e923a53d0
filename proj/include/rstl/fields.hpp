#pragma once

// Event-predicate random fields: probability-of-occurrence maps over
// (position, step).  Every field returns values clamped into
// [kProbEps, 1 - kProbEps] and is differentiable in the position through
// the autodiff scalar type (the clamp pins the value, and the gradient,
// at the boundary).
//
//   ConstantField      fixed probability, mostly for tests
//   StaticTargetField  Gaussian detection likelihood of a known location
//   TargetField        marginal detection of an uncertain target under a
//                      propagated linear-Gaussian belief
//   OccupancyField     bilinear interpolation of an occupancy grid

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "rstl/autodiff.hpp"
#include "rstl/numeric.hpp"

namespace rstl {

struct FieldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class S>
S clamp_prob_scalar(S p) {
    const double v = ad::value_of(p);
    if (!(v >= kProbEps)) return S(kProbEps);
    if (!(v <= 1.0 - kProbEps)) return S(1.0 - kProbEps);
    return p;
}

// p = coef * exp(-(a dx^2 + 2 b dx dy + c dy^2) / 2) with [a b; b c] the
// inverse covariance.  Shared by both detection fields.
template <class S>
S gaussian_bump(S dx, S dy, double a, double b, double c, double coef) {
    using std::exp;
    using ad::exp;
    const S quad = dx * dx * a + dx * dy * (2.0 * b) + dy * dy * c;
    return clamp_prob_scalar<S>(exp(quad * -0.5) * coef);
}

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw FieldError(std::string(what) + ": non-finite value");
}

}  // namespace detail

// --- detection likelihood -------------------------------------------------

// P_D * exp(-||x - z||^2 / (2 r_D^2)), clamped.
template <class S>
S detection_prob(S x, S y, double zx, double zy, double r_d, double p_d) {
    if (!(r_d > 0.0)) throw FieldError("detection_prob: r_d must be > 0");
    if (!(p_d > 0.0 && p_d < 1.0)) throw FieldError("detection_prob: p_d must be in (0,1)");
    detail::require_finite(ad::value_of(x), "detection_prob x");
    detail::require_finite(ad::value_of(y), "detection_prob y");
    detail::require_finite(zx, "detection_prob z");
    detail::require_finite(zy, "detection_prob z");
    const double inv = 1.0 / (r_d * r_d);
    return detail::gaussian_bump<S>(x - zx, y - zy, inv, 0.0, inv, p_d);
}

// --- target belief ----------------------------------------------------------

// Per-step position marginals of a linear-Gaussian target prediction.
struct TargetBelief {
    std::vector<std::array<double, 2>> mean;  // z_t, t = 1..T
    std::vector<std::array<double, 3>> cov;   // position covariance (xx, xy, yy)
};

// Kalman prediction of a (position, velocity) state under the
// white-acceleration noise model: x_{t+1} = F x_t with
// F = [[I, dt I], [0, I]] and Q = q [[dt^3/3 I, dt^2/2 I], [dt^2/2 I, dt I]].
// Row-major state order (px, py, vx, vy); returns position marginals.
inline TargetBelief predict_belief(std::array<double, 2> z0, std::array<double, 2> v0,
                                   std::array<double, 16> sigma0, double q, double dt, int T) {
    if (!(dt > 0.0)) throw FieldError("predict_belief: dt must be > 0");
    if (!(q >= 0.0)) throw FieldError("predict_belief: q must be >= 0");
    if (T < 1) throw FieldError("predict_belief: horizon must be >= 1");
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            if (std::abs(sigma0[4 * i + j] - sigma0[4 * j + i]) > 1e-9) {
                throw FieldError("predict_belief: sigma0 must be symmetric");
            }
        }
    }
    // SPD check via leading principal minors (symmetrized input).
    {
        std::array<double, 16> s = sigma0;
        double det1 = s[0];
        double det2 = s[0] * s[5] - s[1] * s[4];
        if (!(det1 > 0.0) || !(det2 > 0.0)) {
            throw FieldError("predict_belief: sigma0 must be positive definite");
        }
    }

    auto mat_mul = [](const std::array<double, 16>& a, const std::array<double, 16>& b) {
        std::array<double, 16> r{};
        for (int i = 0; i < 4; ++i) {
            for (int k = 0; k < 4; ++k) {
                const double aik = a[4 * i + k];
                for (int j = 0; j < 4; ++j) r[4 * i + j] += aik * b[4 * k + j];
            }
        }
        return r;
    };
    auto mat_tr = [](const std::array<double, 16>& a) {
        std::array<double, 16> r{};
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) r[4 * i + j] = a[4 * j + i];
        }
        return r;
    };

    std::array<double, 16> F{1, 0, dt, 0,  //
                             0, 1, 0, dt,  //
                             0, 0, 1, 0,   //
                             0, 0, 0, 1};
    const double d3 = q * dt * dt * dt / 3.0;
    const double d2 = q * dt * dt / 2.0;
    const double d1 = q * dt;
    std::array<double, 16> Q{d3, 0, d2, 0,  //
                             0, d3, 0, d2,  //
                             d2, 0, d1, 0,  //
                             0, d2, 0, d1};

    std::array<double, 4> m{z0[0], z0[1], v0[0], v0[1]};
    std::array<double, 16> P = sigma0;

    TargetBelief belief;
    belief.mean.reserve(static_cast<std::size_t>(T));
    belief.cov.reserve(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
        belief.mean.push_back({m[0], m[1]});
        belief.cov.push_back({P[0], P[1], P[5]});
        // predict to the next step
        std::array<double, 4> m2{};
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) m2[i] += F[4 * i + j] * m[j];
        }
        m = m2;
        P = mat_mul(mat_mul(F, P), mat_tr(F));
        for (int i = 0; i < 16; ++i) P[i] += Q[i];
    }
    return belief;
}

// P_D sqrt(2 pi)^N r_D^N N(x; z_t, Sigma_t + r_D^2 I) for N = 2, i.e. the
// detection likelihood marginalised over the target-position belief.
// Reduces to detection_prob in the zero-covariance limit.
template <class S>
S marginal_detection_prob(S x, S y, std::array<double, 2> z, std::array<double, 3> cov,
                          double r_d, double p_d) {
    if (!(r_d > 0.0)) throw FieldError("marginal_detection_prob: r_d must be > 0");
    if (!(p_d > 0.0 && p_d < 1.0)) throw FieldError("marginal_detection_prob: p_d must be in (0,1)");
    detail::require_finite(ad::value_of(x), "marginal_detection_prob x");
    detail::require_finite(ad::value_of(y), "marginal_detection_prob y");
    const double r2 = r_d * r_d;
    const double sa = cov[0] + r2, sb = cov[1], sc = cov[2] + r2;
    const double det = sa * sc - sb * sb;
    if (!(det > 0.0) || !(sa > 0.0)) {
        throw FieldError("marginal_detection_prob: covariance + r_d^2 I is not positive definite");
    }
    const double coef = p_d * r2 / std::sqrt(det);
    const double ia = sc / det, ib = -sb / det, ic = sa / det;
    return detail::gaussian_bump<S>(x - z[0], y - z[1], ia, ib, ic, coef);
}

// --- occupancy grid ---------------------------------------------------------

struct OccupancyGrid {
    double origin_x = 0.0;  // world position of the minimum grid corner
    double origin_y = 0.0;
    double cell_size = 1.0;
    int width = 0;   // cells along x
    int height = 0;  // cells along y
    std::vector<double> values;  // row-major, row 0 = minimum y

    double at(int ix, int iy) const {
        return values[static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(ix)];
    }

    void validate() const {
        if (width <= 0 || height <= 0) throw FieldError("occupancy grid: empty dimensions");
        if (!(cell_size > 0.0)) throw FieldError("occupancy grid: cell_size must be > 0");
        if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw FieldError("occupancy grid: value count does not match width*height");
        }
        for (double v : values) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw FieldError("occupancy grid: cell value outside [0,1]");
            }
        }
    }
};

// First line: width,height,cell_size,origin_x,origin_y
// Then `height` rows of `width` comma-separated probabilities, row 0 = min y.
inline OccupancyGrid load_occupancy_csv(std::istream& in, const std::string& origin_name) {
    OccupancyGrid g;
    std::string line;
    if (!std::getline(in, line)) throw FieldError(origin_name + ": empty grid file");
    {
        std::istringstream hdr(line);
        char c1, c2, c3, c4;
        if (!(hdr >> g.width >> c1 >> g.height >> c2 >> g.cell_size >> c3 >> g.origin_x >> c4 >>
              g.origin_y) ||
            c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
            throw FieldError(origin_name + ":1: malformed header (want width,height,cell_size,origin_x,origin_y)");
        }
    }
    if (g.width <= 0 || g.height <= 0) throw FieldError(origin_name + ":1: non-positive grid dimensions");
    g.values.reserve(static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height));
    for (int row = 0; row < g.height; ++row) {
        if (!std::getline(in, line)) {
            throw FieldError(origin_name + ": unexpected end of file at row " + std::to_string(row));
        }
        std::istringstream ls(line);
        std::string cell;
        int col = 0;
        while (std::getline(ls, cell, ',')) {
            if (col >= g.width) break;
            try {
                g.values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw FieldError(origin_name + ":" + std::to_string(row + 2) + ": bad cell value '" +
                                 cell + "'");
            }
            ++col;
        }
        if (col != g.width) {
            throw FieldError(origin_name + ":" + std::to_string(row + 2) + ": expected " +
                             std::to_string(g.width) + " values, got " + std::to_string(col));
        }
    }
    g.validate();
    return g;
}

inline OccupancyGrid load_occupancy_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FieldError("cannot open occupancy grid file: " + path);
    return load_occupancy_csv(in, path);
}

inline void save_occupancy_csv(const OccupancyGrid& g, std::ostream& out) {
    out << g.width << "," << g.height << "," << g.cell_size << "," << g.origin_x << ","
        << g.origin_y << "\n";
    for (int row = 0; row < g.height; ++row) {
        for (int col = 0; col < g.width; ++col) {
            if (col) out << ",";
            out << g.at(col, row);
        }
        out << "\n";
    }
}

// Bilinear interpolation with cell centers as sample points.  Outside the
// grid rectangle the environment is unknown and treated as occupied
// (1 - eps); virtual neighbours beyond the outermost centers are occupied
// too, so the value ramps up toward the border.
template <class S>
S occupancy_prob(const OccupancyGrid& g, S x, S y) {
    const double px = ad::value_of(x), py = ad::value_of(y);
    detail::require_finite(px, "occupancy_prob x");
    detail::require_finite(py, "occupancy_prob y");
    const double wx = g.cell_size * g.width;
    const double wy = g.cell_size * g.height;
    if (px < g.origin_x || px > g.origin_x + wx || py < g.origin_y || py > g.origin_y + wy) {
        return S(1.0 - kProbEps);
    }
    const S gx = (x - g.origin_x) * (1.0 / g.cell_size) - 0.5;
    const S gy = (y - g.origin_y) * (1.0 / g.cell_size) - 0.5;
    const int ix = static_cast<int>(std::floor(ad::value_of(gx)));
    const int iy = static_cast<int>(std::floor(ad::value_of(gy)));
    const S fx = gx - static_cast<double>(ix);
    const S fy = gy - static_cast<double>(iy);
    auto cell = [&](int cx, int cy) -> double {
        if (cx < 0 || cx >= g.width || cy < 0 || cy >= g.height) return 1.0;
        return g.at(cx, cy);
    };
    const double c00 = cell(ix, iy), c10 = cell(ix + 1, iy);
    const double c01 = cell(ix, iy + 1), c11 = cell(ix + 1, iy + 1);
    const S one_m_fx = -fx + 1.0;
    const S one_m_fy = -fy + 1.0;
    const S v = one_m_fx * one_m_fy * c00 + fx * one_m_fy * c10 + one_m_fx * fy * c01 +
                fx * fy * c11;
    return detail::clamp_prob_scalar<S>(v);
}

// --- field variant and predicate table --------------------------------------

struct ConstantField {
    double p;
};

struct StaticTargetField {
    double zx, zy;
    double r_d, p_d;
};

// Caches the per-step inverse covariance and peak coefficient of the
// marginal detection likelihood.
struct TargetField {
    struct Step {
        double zx, zy;
        double ia, ib, ic;  // inverse of (Sigma_t + r_d^2 I)
        double coef;
    };
    std::vector<Step> steps;

    TargetField() = default;
    TargetField(const TargetBelief& belief, double r_d, double p_d) {
        if (!(r_d > 0.0)) throw FieldError("TargetField: r_d must be > 0");
        if (!(p_d > 0.0 && p_d < 1.0)) throw FieldError("TargetField: p_d must be in (0,1)");
        const double r2 = r_d * r_d;
        steps.reserve(belief.mean.size());
        for (std::size_t i = 0; i < belief.mean.size(); ++i) {
            const double sa = belief.cov[i][0] + r2;
            const double sb = belief.cov[i][1];
            const double sc = belief.cov[i][2] + r2;
            const double det = sa * sc - sb * sb;
            if (!(det > 0.0) || !(sa > 0.0)) {
                throw FieldError("TargetField: belief covariance + r_d^2 I not positive definite");
            }
            steps.push_back({belief.mean[i][0], belief.mean[i][1], sc / det, -sb / det, sa / det,
                             p_d * r2 / std::sqrt(det)});
        }
    }
};

struct OccupancyField {
    OccupancyGrid grid;
};

using Field = std::variant<ConstantField, StaticTargetField, TargetField, OccupancyField>;

template <class S>
S field_prob(const Field& field, S x, S y, int step) {
    return std::visit(
        [&](const auto& f) -> S {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ConstantField>) {
                return S(clamp_prob(f.p));
            } else if constexpr (std::is_same_v<T, StaticTargetField>) {
                return detection_prob<S>(x, y, f.zx, f.zy, f.r_d, f.p_d);
            } else if constexpr (std::is_same_v<T, TargetField>) {
                if (step < 1 || static_cast<std::size_t>(step) > f.steps.size()) {
                    throw FieldError("TargetField: step " + std::to_string(step) +
                                     " outside precomputed belief horizon");
                }
                const auto& s = f.steps[static_cast<std::size_t>(step - 1)];
                return detail::gaussian_bump<S>(x - s.zx, y - s.zy, s.ia, s.ib, s.ic, s.coef);
            } else {
                return occupancy_prob<S>(f.grid, x, y);
            }
        },
        field);
}

class PredicateTable {
public:
    void add(std::string name, Field field) {
        if (index_.count(name)) throw FieldError("duplicate predicate: " + name);
        index_.emplace(name, fields_.size());
        names_.push_back(name);
        fields_.push_back(std::move(field));
    }

    bool contains(const std::string& name) const { return index_.count(name) > 0; }

    const Field& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw FieldError("unknown predicate: " + name);
        return fields_[it->second];
    }

    std::size_t size() const { return fields_.size(); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> names_;
    std::vector<Field> fields_;
};

}  // namespace rstl
