#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rmt/error.hpp"
#include "rmt/levy.hpp"
#include "rmt/numerics.hpp"
#include "rmt/resolvent_stats.hpp"

using namespace rmt::levy;
constexpr double pi = std::numbers::pi;

namespace {

// one-sided law with α = 1/2: density √(c/2π) s^{−3/2} e^{−c/2s}, c = C²
double levy_closed(double C, double s) {
    const double c = C * C;
    return s <= 0.0 ? 0.0 : std::sqrt(c / (2.0 * pi)) * std::pow(s, -1.5) * std::exp(-c / (2.0 * s));
}

}  // namespace

TEST_CASE("one-sided half-stable law matches its closed form") {
    const StableLaw law{0.5, 1.3, 1.0};
    for (double s : {1e-3, 0.05, 0.4, 1.0, 7.0, 300.0, 1e6}) {
        CHECK(stable_density(law, s) == doctest::Approx(levy_closed(1.3, s)).epsilon(1e-10));
        CHECK(stable_cdf(law, s) == doctest::Approx(std::erfc(1.3 / std::sqrt(2.0 * s))).epsilon(1e-9));
    }
    CHECK(stable_density(law, -0.5) == 0.0);
}

TEST_CASE("integral representation agrees with Fourier inversion") {
    for (const StableLaw law : {StableLaw{0.4, 1.3, 0.3}, StableLaw{0.5, 0.8, -0.7}, StableLaw{0.75, 1.0, 0.0}}) {
        for (double s : {-2.0, 0.0, 1.1}) {
            CHECK(stable_density(law, s) == doctest::Approx(stable_density_fourier(law, s)).epsilon(1e-8));
        }
    }
}

TEST_CASE("density reflection, normalization and tails") {
    const StableLaw a{0.5, 0.9, 0.35}, b{0.5, 0.9, -0.35};
    CHECK(stable_density(a, 1.7) == doctest::Approx(stable_density(b, -1.7)));
    std::vector<double> x, y;
    for (int i = -6000; i <= 6000; ++i) {
        x.push_back(std::sinh(i / 500.0));
        y.push_back(stable_density(a, x.back()));
    }
    const double inner = rmt::numerics::trapezoid(x, y);
    CHECK(inner + (1.0 - stable_cdf(a, x.back())) + stable_cdf(a, x.front()) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(stable_cdf(a, 0.0) + (1.0 - stable_cdf(a, 0.0)) == doctest::Approx(1.0));
    const double s = 1e7;
    CHECK(stable_density(a, s) * std::pow(s, 1.5) == doctest::Approx(0.5 * stable_tail_constant(a, true)).epsilon(1e-3));
    CHECK(stable_density(a, -s) * std::pow(s, 1.5) == doctest::Approx(0.5 * stable_tail_constant(a, false)).epsilon(1e-3));
    CHECK_THROWS_AS(stable_density(StableLaw{1.2, 1.0, 0.0}, 1.0), rmt::ParameterError);
}

TEST_CASE("CMS sampler") {
    const StableLaw law{0.5, 1.0, 0.4};
    const auto s = stable_sample(law, 40000, 3);
    CHECK(rmt::numerics::ks_statistic(s, [&](double v) { return stable_cdf(law, v); }) < 0.01);
    CHECK(rmt::numerics::hill_tail_index(s, 400) == doctest::Approx(0.5).epsilon(0.15));
    CHECK(stable_sample(law, 10, 9) == stable_sample(law, 10, 9));
}

TEST_CASE("scale factor") {
    CHECK(levy_scale_factor(1.0) == doctest::Approx(std::sqrt(2.0 * pi)));
    CHECK(levy_scale_factor(1.5) == doctest::Approx(std::tgamma(0.25) * std::cos(3.0 * pi / 8.0) / 0.75));
}

TEST_CASE("self-consistency map against direct quadrature") {
    for (auto [x, C, b] : {std::tuple{1.0, 0.7, 0.2}, std::tuple{0.3, 1.1, -0.4}, std::tuple{2.5, 0.5, 0.6}}) {
        const auto f = self_consistency_map(x, 1.0, C, b);
        const auto d = self_consistency_map_direct(x, 1.0, C, b);
        CHECK(f.first == doctest::Approx(d.first).epsilon(1e-8));
        CHECK(f.second == doctest::Approx(d.second).epsilon(1e-8));
    }
}

TEST_CASE("fixed point at the origin has the closed form") {
    const auto fp = levy_fixed_point(0.0, 1.0);
    CHECK(fp.C == doctest::Approx(std::sqrt(2.0 / pi)).epsilon(1e-9));
    CHECK(std::abs(fp.beta) < 1e-9);
    CHECK(stable_density(cavity_law(fp), 0.0) == doctest::Approx(1.0 / (2.0 * pi)).epsilon(1e-8));
    for (double mu : {0.8, 1.5}) {
        const auto f = levy_fixed_point(0.0, mu);
        CHECK(f.C * f.C == doctest::Approx(2.0 / pi * std::tan(pi * mu / 4.0)).epsilon(1e-8));
    }
}

TEST_CASE("fixed point converges, is tolerance-stable and symmetric") {
    for (double mu : {0.8, 1.0, 1.5}) {
        const auto fp = levy_fixed_point(1.0, mu);
        CHECK(fp.residual < 1e-8);
        CHECK(fp.residual_trace.size() == static_cast<std::size_t>(fp.iterations) + 1);
    }
    const auto fine = levy_fixed_point(1.0, 1.0, 1.0, 0.0, 1e-10);
    const auto loose = levy_fixed_point(1.0, 1.0, 1.0, 0.0, 1e-6);
    CHECK(std::abs(fine.C - loose.C) < 1e-5);
    const auto other = levy_fixed_point(1.0, 1.0, 0.3, 0.5);
    CHECK(other.C == doctest::Approx(fine.C).epsilon(1e-8));
    const auto mirror = levy_fixed_point(-1.0, 1.0);
    CHECK(mirror.beta == doctest::Approx(-fine.beta).epsilon(1e-8));
    CHECK(stable_density(cavity_law(mirror), -1.0) == doctest::Approx(stable_density(cavity_law(fine), 1.0)));
    CHECK_THROWS_AS(levy_fixed_point(1.0, 1.0, 1.0, 0.0, 1e-10, 2), rmt::SolverError);
}

TEST_CASE("density over a grid integrates to one") {
    const auto grid = levy_x_grid(10.0, 1.0, 0.01, 0.25);
    CHECK(grid.front() == doctest::Approx(0.01));
    CHECK(grid.back() == doctest::Approx(10.0));
    const auto pts = levy_density(grid, 1.0);
    std::vector<double> rho;
    for (const auto& p : pts) {
        CHECK(p.ok);
        rho.push_back(p.rho);
    }
    CHECK(levy_density_mass(grid, rho, 1.0) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(pts.front().rho == doctest::Approx(1.0 / (2.0 * pi)).epsilon(2e-3));
}

TEST_CASE("single-entry law: density, distribution and the Cauchy test") {
    const auto fp = levy_fixed_point(1.0, 1.0);
    std::vector<double> g, p;
    for (int i = 0; i <= 4000; ++i) {
        g.push_back(0.5 + 19.5 * i / 4000.0);
        p.push_back(g00_density(fp, g.back()));
    }
    CHECK(rmt::numerics::trapezoid(g, p) == doctest::Approx(g00_cdf(fp, 20.0) - g00_cdf(fp, 0.5)).epsilon(1e-5));
    for (auto& v : g) v = -v;
    std::reverse(g.begin(), g.end());
    p = g00_distribution(fp, g);
    CHECK(rmt::numerics::trapezoid(g, p) == doctest::Approx(g00_cdf(fp, -0.5) - g00_cdf(fp, -20.0)).epsilon(1e-5));
    CHECK(g00_cdf(fp, -1e12) < 1e-5);
    CHECK(g00_cdf(fp, 1e12) > 1.0 - 1e-5);
    const double rho = stable_density(cavity_law(fp), 1.0);
    CHECK(g00_density(fp, 1e6) * 1e12 == doctest::Approx(rho).epsilon(1e-4));
    for (double q : {0.1, 0.5, 0.93}) CHECK(g00_cdf(fp, g00_quantile(fp, q)) == doctest::Approx(q).epsilon(1e-8));
    std::vector<double> exact;
    for (int i = 0; i < 2000; ++i) exact.push_back(g00_quantile(fp, (i + 0.5) / 2000.0));
    CHECK(rmt::resolvent::fit_cauchy(exact).ks > 0.05);
}

TEST_CASE("population dynamics reproduces the semi-analytic law") {
    const auto fp = levy_fixed_point(1.0, 1.0);
    PopulationStats st;
    const auto pool = levy_population_dynamics(1.0, 1.0, 20000, 200, 60000, 4, 0.5, &st);
    CHECK(rmt::numerics::ks_statistic(pool, [&](double g) { return g00_cdf(fp, g); }) < 0.03);
    const auto core = levy_population_dynamics(1.0, 1.0, 20000, 200, 60000, 4, 0.2);
    CHECK(rmt::numerics::ks_statistic(core, [&](double g) { return g00_cdf(fp, g); }) < 0.03);
    CHECK(rmt::numerics::ks_two_sample(pool, core) < 0.04);
}
