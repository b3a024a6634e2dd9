#include "doctest.h"

#include <cmath>
#include <numbers>

#include "rmt/ensembles.hpp"
#include "rmt/error.hpp"
#include "rmt/numerics.hpp"
#include "rmt/random.hpp"
#include "rmt/resolvent_stats.hpp"

using namespace rmt::resolvent;
using rmt::numerics::cauchy_quantile;
constexpr double pi = std::numbers::pi;

namespace {

std::vector<double> cauchy_iid(std::size_t n, double c, double w, std::uint64_t seed) {
    auto rng = rmt::make_rng(seed);
    std::vector<double> s(n);
    for (auto& v : s) v = cauchy_quantile(rmt::uniform_open(rng), c, w);
    return s;
}

}  // namespace

TEST_CASE("window laws") {
    for (auto law : {WindowLaw::uniform, WindowLaw::cauchy, WindowLaw::squared_cauchy}) {
        CHECK(parse_window_law(to_string(law)) == law);
        for (double p : {0.05, 0.3, 0.5, 0.8}) CHECK(window_cdf(law, window_quantile(law, p)) == doctest::Approx(p));
        double mass = 0.0;
        const double h = 1e-3;
        for (double u = -2000.0; u < 2000.0; u += h * (1.0 + std::abs(u))) mass += window_density(law, u) * h * (1.0 + std::abs(u));
        CHECK(mass == doctest::Approx(1.0).epsilon(0.01));
    }
    CHECK_THROWS_AS(parse_window_law("gaussian"), rmt::ParameterError);
}

TEST_CASE("stieltjes_real is the plain sum") {
    const std::vector<double> v{-1.0, 0.2, 0.9};
    CHECK(stieltjes_real(v, 0.5) == doctest::Approx((1.0 / 1.5 + 1.0 / 0.3 - 1.0 / 0.4) / 3.0));
}

TEST_CASE("Cauchy fits recover the parameters") {
    const auto s = cauchy_iid(100000, -0.3, 1.4, 5);
    for (auto m : {FitMethod::quantile, FitMethod::max_likelihood}) {
        const auto f = fit_cauchy(s, m);
        CHECK(f.center == doctest::Approx(-0.3).epsilon(0.03));
        CHECK(f.half_width == doctest::Approx(1.4).epsilon(0.02));
        CHECK(f.ks < 0.01);
    }
    int covered_c = 0, covered_w = 0;
    for (int b = 0; b < 40; ++b) {
        const std::vector<double> part(s.begin() + 2000 * b, s.begin() + 2000 * (b + 1));
        const auto ci = bootstrap_fit(part, 200, 100 + b);
        covered_c += ci.center_lo < -0.3 && -0.3 < ci.center_hi;
        covered_w += ci.width_lo < 1.4 && 1.4 < ci.width_hi;
    }
    CHECK(covered_c >= 33);
    CHECK(covered_w >= 33);
    CHECK_THROWS(fit_cauchy(std::vector<double>{1.0}));
}

TEST_CASE("tail density of a Cauchy law is its width over pi") {
    const auto s = cauchy_iid(200000, 0.5, pi * 0.2, 6);
    const std::vector<double> g{10.0, 20.0, 40.0};
    const auto t = tail_density_estimate(s, 0.5, g);
    CHECK(t.rho == doctest::Approx(0.2).epsilon(0.05));
    const std::vector<double> huge{1e9};
    CHECK_THROWS_AS(tail_density_estimate(s, 0.5, huge), rmt::PrecisionError);
}

TEST_CASE("characteristic function of Cauchy samples") {
    const auto s = cauchy_iid(50000, 0.5, std::sqrt(3.0) / 2.0, 7);
    const std::vector<double> k{-2.0, -1.0, -0.5, 0.5, 1.0, 2.0};
    const auto w = rmt::numerics::semicircle_stieltjes({1.0, -1e-12});
    const auto est = char_fn_compare(s, k, w);
    CHECK(est.max_deviation < 0.02);
    const std::vector<double> lopsided{0.5, 1.0};
    CHECK_THROWS_AS(char_fn_compare(s, lopsided, w), rmt::ParameterError);
}

TEST_CASE("GOE window samples are Cauchy with semicircle parameters") {
    rmt::ensembles::EnsembleSpec spec;
    spec.n = 800;
    spec.seed = 3;
    const auto src = SpectrumSource::ensemble(spec, 0);
    const auto set = sample_g_window(src, 1.0, 1.0 / std::sqrt(800.0), WindowLaw::uniform, 3000, 4);
    const auto f = fit_cauchy(set);
    CHECK(f.center == doctest::Approx(0.5).epsilon(0.1));
    CHECK(f.half_width == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(0.08));
    CHECK(f.ks < 0.05);
    const auto again = sample_g_window(src, 1.0, 1.0 / std::sqrt(800.0), WindowLaw::uniform, 3000, 4, 3);
    CHECK(again.samples == set.samples);
    CHECK(samples_csv(set).rfind("sample_index,g\n", 0) == 0);
    const auto rec = fit_record(set, f);
    CHECK(rec.at("n") == 3000);
}

TEST_CASE("cavity population at a bulk point") {
    CavityPool pool;
    pool.x = 1.0;
    pool.n_terms = 400;
    pool.members = cauchy_iid(20000, 0.0, 1.0, 8);
    const auto out = cavity_population_run(pool, 200000, 9);
    const auto f = fit_cauchy(out.members);
    CHECK(f.center == doctest::Approx(0.5).epsilon(0.08));
    CHECK(f.half_width == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(0.07));
}

TEST_CASE("picket fence sum and maps") {
    for (double u : {0.1, 0.3, 0.45}) {
        CHECK(std::abs(picket_partial_sum(u, 100000) - pi / std::tan(pi * u)) < 1e-4);
        CHECK(picket_closed_form(u) == doctest::Approx(pi / std::tan(pi * u)));
    }
    for (double u : {-0.4, -0.1, 0.02, 0.2, 0.49}) {
        CHECK(picket_inverse_map(picket_forward_map(u, 0.3, 0.25), 0.3, 0.25) == doctest::Approx(u));
    }
}
