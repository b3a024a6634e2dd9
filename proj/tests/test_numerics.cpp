#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "rmt/error.hpp"
#include "rmt/numerics.hpp"
#include "rmt/random.hpp"

using namespace rmt::numerics;
constexpr double pi = std::numbers::pi;

TEST_CASE("ks of exact uniform quantiles is 1/(2n)") {
    std::vector<double> s;
    for (int i = 0; i < 200; ++i) s.push_back((i + 0.5) / 200.0);
    CHECK(ks_statistic(s, [](double u) { return u; }) == doctest::Approx(1.0 / 400).epsilon(1e-9));
    std::vector<double> shifted;
    for (double v : s) shifted.push_back(v + 0.1);
    CHECK(ks_two_sample(s, shifted) == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("quantiles and sorting") {
    const std::vector<double> s{3.0, 1.0, 2.0, 5.0, 4.0};
    CHECK(quantile(s, 0.5) == doctest::Approx(3.0));
    CHECK(sorted(s).front() == 1.0);
    CHECK(quantile_sorted(sorted(s), 0.0) == 1.0);
}

TEST_CASE("trapezoid and line fit") {
    std::vector<double> x, y, z;
    for (int i = 0; i <= 1000; ++i) {
        x.push_back(i / 1000.0);
        y.push_back(x.back() * x.back());
        z.push_back(2.0 - 3.0 * x.back());
    }
    CHECK(trapezoid(x, y) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    const auto f = fit_line(x, z);
    CHECK(f.slope == doctest::Approx(-3.0));
    CHECK(f.intercept == doctest::Approx(2.0));
    CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("finite-difference weights reproduce the classic stencils") {
    const std::vector<double> nodes{-1.0, 0.0, 1.0};
    const auto w2 = fd_weights(0.0, nodes, 2);
    CHECK(w2[0] == doctest::Approx(1.0));
    CHECK(w2[1] == doctest::Approx(-2.0));
    CHECK(w2[2] == doctest::Approx(1.0));
    const auto w1 = fd_weights(0.0, nodes, 1);
    CHECK(w1[0] == doctest::Approx(-0.5));
    CHECK(w1[2] == doctest::Approx(0.5));
}

TEST_CASE("cauchy cdf and quantile are inverse") {
    for (double p : {0.01, 0.3, 0.5, 0.9}) CHECK(cauchy_cdf(cauchy_quantile(p, 0.4, 1.7), 0.4, 1.7) == doctest::Approx(p));
    CHECK(cauchy_cdf(0.4 + 1.7, 0.4, 1.7) == doctest::Approx(0.75));
}

TEST_CASE("semicircle") {
    std::vector<double> x, y;
    for (int i = 0; i <= 20000; ++i) {
        x.push_back(-2.0 + 4.0 * i / 20000.0);
        y.push_back(semicircle_density(x.back()));
    }
    CHECK(trapezoid(x, y) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(semicircle_density(0.0) == doctest::Approx(1.0 / pi));
    CHECK(semicircle_density(1.0) == doctest::Approx(std::sqrt(3.0) / (2.0 * pi)));
    CHECK(semicircle_cdf(0.0) == doctest::Approx(0.5));
    CHECK(semicircle_pv(0.7) == doctest::Approx(0.35));
    CHECK(semicircle_stieltjes(3.0).real() == doctest::Approx((3.0 - std::sqrt(5.0)) / 2.0));
    const auto g = semicircle_stieltjes({1.0, -1e-12});
    CHECK(g.real() == doctest::Approx(0.5));
    CHECK(g.imag() == doctest::Approx(pi * semicircle_density(1.0)));
    CHECK(semicircle_density(1.0, 4.0) == doctest::Approx(semicircle_density(0.5) / 2.0));
}

TEST_CASE("principal value transform of the Lorentzian") {
    GridFunction f;
    for (int i = -4000; i <= 4000; ++i) f.grid.push_back(200.0 * std::sinh(i * 6.0 / 4000.0) / std::sinh(6.0));
    for (double u : f.grid) f.values.push_back(1.0 / (1.0 + u * u));
    f.tail = TailModel{-2.0, 1.0, 1.0};
    for (double y : {-3.0, -0.4, 0.25, 1.0, 7.5}) {
        CHECK(principal_value_transform(f, y) == doctest::Approx(-pi * y / (1.0 + y * y)).epsilon(1e-4));
    }
}

TEST_CASE("principal value Stieltjes of the semicircle") {
    GridFunction rho;
    for (int i = 0; i <= 4000; ++i) {
        rho.grid.push_back(-2.0 * std::cos(pi * i / 4000.0));
        rho.values.push_back(semicircle_density(rho.grid.back()));
    }
    for (double x : {-1.5, 0.0, 0.3, 1.0}) CHECK(principal_value_stieltjes(rho, x) == doctest::Approx(x / 2.0).epsilon(1e-4));
    CHECK_THROWS_AS(principal_value_stieltjes(rho, 2.5), rmt::DomainError);
}

TEST_CASE("tail fit and Hill estimator") {
    GridFunction f;
    for (int i = 1; i <= 50; ++i) {
        f.grid.push_back(i);
        f.values.push_back(3.0 * std::pow(i, -2.0));
    }
    std::vector<double> neg;
    for (int i = 50; i >= 1; --i) neg.push_back(-i);
    f.grid.insert(f.grid.begin(), neg.begin(), neg.end());
    std::vector<double> vals;
    for (int i = 50; i >= 1; --i) vals.push_back(-3.0 * std::pow(i, -2.0));
    f.values.insert(f.values.begin(), vals.begin(), vals.end());
    const auto t = fit_tail(f);
    CHECK(t.exponent == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(t.coef_right == doctest::Approx(3.0).epsilon(1e-6));

    auto rng = rmt::make_rng(7);
    std::vector<double> s;
    for (int i = 0; i < 200000; ++i) s.push_back(std::pow(rmt::uniform_open(rng), -1.0 / 1.5));
    CHECK(hill_tail_index(s, 2000) == doctest::Approx(1.5).epsilon(0.06));
}
