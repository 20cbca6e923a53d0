#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rstl/autodiff.hpp"
#include "rstl/fields.hpp"

using namespace rstl;

namespace {

// independent oracle: trapezoid quadrature of the detection likelihood
// against N(z_bar, Sigma) on a wide whitened grid
double marginal_by_quadrature(double x, double y, std::array<double, 2> z,
                              std::array<double, 3> cov, double r_d, double p_d) {
    const double det = cov[0] * cov[2] - cov[1] * cov[1];
    REQUIRE(det > 0.0);
    // cholesky of cov
    const double l00 = std::sqrt(cov[0]);
    const double l10 = cov[1] / l00;
    const double l11 = std::sqrt(cov[2] - l10 * l10);
    const int n = 801;
    const double lim = 8.0;
    const double h = 2.0 * lim / (n - 1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = -lim + i * h;
        const double wu = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        for (int j = 0; j < n; ++j) {
            const double v = -lim + j * h;
            const double wv = (j == 0 || j == n - 1) ? 0.5 : 1.0;
            const double zx = z[0] + l00 * u;
            const double zy = z[1] + l10 * u + l11 * v;
            const double d2 = (x - zx) * (x - zx) + (y - zy) * (y - zy);
            const double like = p_d * std::exp(-d2 / (2.0 * r_d * r_d));
            const double gauss = std::exp(-0.5 * (u * u + v * v)) / (2.0 * std::numbers::pi);
            acc += wu * wv * like * gauss;
        }
    }
    return acc * h * h;
}

}  // namespace

TEST_CASE("detection probability closed form") {
    CHECK(detection_prob<double>(1.0, 2.0, 1.0, 2.0, 1.5, 0.9) == doctest::Approx(0.9));
    // at distance r_d the likelihood is p_d * exp(-1/2)
    CHECK(detection_prob<double>(1.5, 0.0, 0.0, 0.0, 1.5, 0.9) ==
          doctest::Approx(0.9 * std::exp(-0.5)).epsilon(1e-12));
    // far away clamps at the floor
    CHECK(detection_prob<double>(1e6, 0.0, 0.0, 0.0, 1.5, 0.9) == doctest::Approx(kProbEps));
    CHECK_THROWS_AS(detection_prob<double>(0.0, 0.0, 0.0, 0.0, -1.0, 0.9), FieldError);
    CHECK_THROWS_AS(
        detection_prob<double>(std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0, 1.0, 0.9),
        FieldError);
}

TEST_CASE("marginal detection at the mean with isotropic covariance") {
    const double r = 1.5, sigma = 0.8, p_d = 0.9;
    const double expected = p_d * r * r / (r * r + sigma * sigma);
    const double got = marginal_detection_prob<double>(0.0, 0.0, {0.0, 0.0},
                                                       {sigma * sigma, 0.0, sigma * sigma}, r, p_d);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    const double quad = marginal_by_quadrature(0.0, 0.0, {0.0, 0.0},
                                               {sigma * sigma, 0.0, sigma * sigma}, r, p_d);
    CHECK(got == doctest::Approx(quad).epsilon(1e-6));
}

TEST_CASE("marginal detection degenerate-covariance limit reduces to detection") {
    const double got = marginal_detection_prob<double>(0.3, -0.1, {0.3, -0.1},
                                                       {1e-12, 0.0, 1e-12}, 2.0, 0.9);
    CHECK(got == doctest::Approx(0.9).epsilon(1e-9));
    // vanishing density at huge spread
    const double far = marginal_detection_prob<double>(0.0, 0.0, {0.0, 0.0},
                                                       {1e12, 0.0, 1e12}, 2.0, 0.9);
    CHECK(far == doctest::Approx(kProbEps));
}

TEST_CASE("marginal detection agrees with quadrature on random inputs") {
    std::mt19937_64 gen(123);
    std::uniform_real_distribution<double> pos(-3.0, 3.0);
    std::uniform_real_distribution<double> sig(0.1, 5.0);
    std::uniform_real_distribution<double> corr(-0.6, 0.6);
    std::uniform_real_distribution<double> rd(0.5, 3.0);
    for (int k = 0; k < 12; ++k) {
        const double sx = sig(gen), sy = sig(gen), rho = corr(gen);
        const std::array<double, 3> cov{sx * sx, rho * sx * sy, sy * sy};
        const std::array<double, 2> z{pos(gen), pos(gen)};
        const double x = pos(gen), y = pos(gen), r = rd(gen);
        const double got = marginal_detection_prob<double>(x, y, z, cov, r, 0.9);
        const double quad = marginal_by_quadrature(x, y, z, cov, r, 0.9);
        CHECK(std::abs(got - clamp_prob(quad)) <= 1e-5);
    }
}

TEST_CASE("marginal detection never exceeds the peak") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> pos(-10.0, 10.0);
    std::uniform_real_distribution<double> sig(0.05, 10.0);
    std::uniform_real_distribution<double> rd(0.05, 10.0);
    for (int k = 0; k < 200; ++k) {
        const double sx = sig(gen), sy = sig(gen);
        const double got = marginal_detection_prob<double>(
            pos(gen), pos(gen), {pos(gen), pos(gen)}, {sx * sx, 0.0, sy * sy}, rd(gen), 0.9);
        CHECK(got <= 0.9 + 1e-12);
    }
}

TEST_CASE("belief prediction: stationary target stays put") {
    std::array<double, 16> sigma0{};
    sigma0[0] = sigma0[5] = 0.01;
    sigma0[10] = sigma0[15] = 1e-8;
    const TargetBelief b = predict_belief({2.0, -1.0}, {0.0, 0.0}, sigma0, 0.0, 1.0, 10);
    REQUIRE(b.mean.size() == 10);
    for (int t = 0; t < 10; ++t) {
        CHECK(b.mean[t][0] == doctest::Approx(2.0));
        CHECK(b.mean[t][1] == doctest::Approx(-1.0));
        CHECK(b.cov[t][0] == doctest::Approx(0.01).epsilon(1e-4));
    }
}

TEST_CASE("belief prediction: straight-line kinematics") {
    std::array<double, 16> sigma0{};
    sigma0[0] = sigma0[5] = 0.01;
    sigma0[10] = sigma0[15] = 1e-8;
    const TargetBelief b = predict_belief({0.0, 0.0}, {1.0, 0.0}, sigma0, 0.0, 1.0, 5);
    for (int t = 1; t <= 5; ++t) {
        CHECK(b.mean[t - 1][0] == doctest::Approx(static_cast<double>(t - 1)));
        CHECK(b.mean[t - 1][1] == doctest::Approx(0.0));
    }
}

TEST_CASE("belief prediction: process noise grows the position determinant") {
    std::array<double, 16> sigma0{};
    sigma0[0] = sigma0[5] = 0.04;
    sigma0[10] = sigma0[15] = 0.01;
    const TargetBelief b = predict_belief({0.0, 0.0}, {0.3, 0.1}, sigma0, 0.05, 1.0, 20);
    double prev = -1.0;
    for (int t = 0; t < 20; ++t) {
        const double det = b.cov[t][0] * b.cov[t][2] - b.cov[t][1] * b.cov[t][1];
        CHECK(det > prev);
        prev = det;
    }
    CHECK_THROWS_AS(predict_belief({0, 0}, {0, 0}, std::array<double, 16>{}, 0.0, 1.0, 5),
                    FieldError);
}

TEST_CASE("occupancy interpolation") {
    OccupancyGrid g;
    g.width = 4;
    g.height = 3;
    g.cell_size = 1.0;
    g.origin_x = 0.0;
    g.origin_y = 0.0;
    g.values = {0.0, 1.0, 0.2, 0.4,  //
                0.6, 0.0, 0.8, 1.0,  //
                0.3, 0.5, 0.7, 0.9};
    g.validate();

    // cell centers reproduce node values
    CHECK(occupancy_prob<double>(g, 0.5, 0.5) == doctest::Approx(clamp_prob(0.0)));
    CHECK(occupancy_prob<double>(g, 1.5, 0.5) == doctest::Approx(1.0 - kProbEps));
    CHECK(occupancy_prob<double>(g, 2.5, 1.5) == doctest::Approx(0.8));
    // midway between 0-valued and 1-valued neighbours in a row
    CHECK(occupancy_prob<double>(g, 1.0, 0.5) == doctest::Approx(0.5));
    // out of bounds treated as occupied
    CHECK(occupancy_prob<double>(g, -3.0, 0.5) == doctest::Approx(1.0 - kProbEps));
    CHECK(occupancy_prob<double>(g, 2.0, 55.0) == doctest::Approx(1.0 - kProbEps));
}

TEST_CASE("occupancy interpolation is continuous across cell boundaries") {
    OccupancyGrid g;
    g.width = 3;
    g.height = 3;
    g.cell_size = 0.5;
    g.origin_x = -1.0;
    g.origin_y = 2.0;
    g.values = {0.1, 0.9, 0.3, 0.7, 0.2, 0.6, 0.4, 0.8, 0.5};
    for (double x : {-0.75, -0.5, -0.25, 0.0}) {
        for (double y : {2.25, 2.5, 2.75}) {
            const double lo = occupancy_prob<double>(g, x - 1e-9, y);
            const double hi = occupancy_prob<double>(g, x + 1e-9, y);
            CHECK(std::abs(hi - lo) <= 1e-6);
            const double lo2 = occupancy_prob<double>(g, x, y - 1e-9);
            const double hi2 = occupancy_prob<double>(g, x, y + 1e-9);
            CHECK(std::abs(hi2 - lo2) <= 1e-6);
        }
    }
}

TEST_CASE("all-ones grid returns the ceiling everywhere inside") {
    OccupancyGrid g;
    g.width = 5;
    g.height = 5;
    g.cell_size = 1.0;
    g.values.assign(25, 1.0);
    for (double x : {0.3, 2.5, 4.9}) {
        CHECK(occupancy_prob<double>(g, x, 2.2) == doctest::Approx(1.0 - kProbEps));
    }
}

TEST_CASE("occupancy grid CSV round-trip and format errors") {
    OccupancyGrid g;
    g.width = 3;
    g.height = 2;
    g.cell_size = 0.25;
    g.origin_x = -1.5;
    g.origin_y = 0.5;
    g.values = {0.0, 0.25, 0.5, 0.75, 1.0, 0.1};
    std::ostringstream out;
    save_occupancy_csv(g, out);
    std::istringstream in(out.str());
    const OccupancyGrid back = load_occupancy_csv(in, "mem");
    CHECK(back.width == 3);
    CHECK(back.height == 2);
    CHECK(back.cell_size == doctest::Approx(0.25));
    CHECK(back.values == g.values);

    std::istringstream bad_header("3;2;1;0;0\n");
    CHECK_THROWS_AS(load_occupancy_csv(bad_header, "mem"), FieldError);
    std::istringstream short_row("2,1,1,0,0\n0.5\n");
    CHECK_THROWS_AS(load_occupancy_csv(short_row, "mem"), FieldError);
    std::istringstream bad_value("1,1,1,0,0\n1.5\n");
    CHECK_THROWS_AS(load_occupancy_csv(bad_value, "mem"), FieldError);
}

TEST_CASE("fields are differentiable through the dual scalar") {
    ad::Tape tape;
    const ad::Dual x = tape.input(1.0);
    const ad::Dual y = tape.input(0.5);
    const ad::Dual p = detection_prob<ad::Dual>(x, y, 0.0, 0.0, 1.5, 0.9);
    const auto g = tape.gradient(p, std::vector<ad::Dual>{x, y});
    // analytic: dp/dx = -p * dx / r^2
    CHECK(g[0] == doctest::Approx(-p.value * 1.0 / 2.25).epsilon(1e-9));
    CHECK(g[1] == doctest::Approx(-p.value * 0.5 / 2.25).epsilon(1e-9));
}

TEST_CASE("clamped field regions have zero gradient") {
    ad::Tape tape;
    const ad::Dual x = tape.input(1e5);
    const ad::Dual p = detection_prob<ad::Dual>(x, ad::Dual(0.0), 0.0, 0.0, 1.0, 0.9);
    CHECK(p.value == doctest::Approx(kProbEps));
    CHECK(tape.gradient(p, std::vector<ad::Dual>{x})[0] == 0.0);
}

TEST_CASE("predicate table lookups") {
    PredicateTable table;
    table.add("c", ConstantField{0.3});
    CHECK(table.contains("c"));
    CHECK_FALSE(table.contains("missing"));
    CHECK_THROWS_WITH_AS(table.at("missing"), doctest::Contains("missing"), FieldError);
    CHECK(field_prob<double>(table.at("c"), 12.0, -4.0, 3) == doctest::Approx(0.3));
    CHECK_THROWS_AS(table.add("c", ConstantField{0.5}), FieldError);
}
