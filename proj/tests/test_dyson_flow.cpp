#include "doctest.h"

#include <cmath>
#include <numbers>

#include "rmt/dyson_flow.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/error.hpp"
#include "rmt/numerics.hpp"

using namespace rmt::dyson;
constexpr double pi = std::numbers::pi;

TEST_CASE("zero initial condition gives the semicircle") {
    const auto g0 = stieltjes_zero();
    CHECK(std::abs(solve_characteristics(g0, 3.0, 1.0, 1.0).g - (3.0 - std::sqrt(5.0)) / 2.0) < 1e-9);
    for (cplx z : {cplx(0.3, -0.2), cplx(-1.1, -0.05), cplx(2.5, 0.4)}) {
        const auto s = solve_characteristics(g0, z, 0.8, 0.5);
        CHECK(std::abs(s.g - rmt::numerics::semicircle_stieltjes(z, 0.4)) < 1e-9);
        CHECK(s.branch_ok);
    }
}

TEST_CASE("equispaced initial spectrum: composition and Burgers") {
    const auto c = equispaced(400, -1.0, 1.0);
    CHECK(c.size() == 400);
    CHECK(*std::max_element(c.begin(), c.end()) <= 1.0);
    const auto gc = stieltjes_of_spectrum(c);
    for (double x : {-0.7, 0.0, 0.5}) {
        const cplx z(x, -0.05);
        const auto direct = solve_characteristics(gc, z, 1.0, 0.5).g;
        const auto two = evolved_stieltjes(gc, z, 1.0, 0.2, 0.5).g;
        CHECK(std::abs(direct - two) < 1e-9);
    }
    CHECK(burgers_residual(gc, cplx(0.3, -0.1), 1.0, 0.5) < 1e-6);
}

TEST_CASE("eigenvalue SDE tracks the characteristic solution") {
    const auto c = equispaced(200, -1.0, 1.0);
    const auto out = evolve_eigen_sde(c, 1.0, 0.3, 1e-4, 4);
    const auto g = solve_characteristics(stieltjes_of_spectrum(c), cplx(0.2, -0.2), 1.0, 0.3).g;
    cplx mc = 0.0;
    for (double l : out) mc += 1.0 / (cplx(0.2, -0.2) - l);
    CHECK(std::abs(mc / 200.0 - g) < 0.03);

    const auto half = evolve_eigen_sde(c, 0.5, 0.3, 1e-4, 5);
    const auto gh = solve_characteristics(stieltjes_of_spectrum(c), cplx(0.2, -0.2), 0.5, 0.3).g;
    mc = 0.0;
    for (double l : half) mc += 1.0 / (cplx(0.2, -0.2) - l);
    CHECK(std::abs(mc / 200.0 - gh) < 0.03);
}

TEST_CASE("matrix Brownian motion increments") {
    const rmt::ensembles::SymmetricMatrix c = rmt::ensembles::SymmetricMatrix::Zero(200, 200);
    const auto path = evolve_matrix_bm(c, 1.0, 0.5, 10, 2);
    const auto& m = path.matrices.back();
    double off = 0.0;
    for (int i = 0; i < 200; ++i)
        for (int j = i + 1; j < 200; ++j) off += m(i, j) * m(i, j);
    CHECK(off / (200.0 * 199.0 / 2.0) == doctest::Approx(0.5 / 200.0).epsilon(0.03));
    CHECK(path.times.back() == doctest::Approx(0.5));
}

TEST_CASE("Ito drift of the resolvent, scaled down") {
    const int n = 50;
    const rmt::ensembles::SymmetricMatrix zero = rmt::ensembles::SymmetricMatrix::Zero(n, n);
    const auto rec = ito_drift_check(zero, 1.0, 3.0, 1e-5, 4000, 1);
    CHECK(rec.theory_trace.real() == doctest::Approx((1.0 + 1.0 / n) / 27.0));
    CHECK(std::abs(rec.measured_trace.real() - rec.theory_trace.real()) < 5 * rec.stderr_trace + 1e-4);
    rmt::ensembles::EnsembleSpec spec;
    spec.n = 120;
    spec.seed = 3;
    const auto ids = resolvent_identities(rmt::ensembles::sample_goe(spec), cplx(3.0, 0.0));
    CHECK(ids.first < 1e-8);
    CHECK(ids.second < 1e-8);
}

TEST_CASE("overlap Lorentzian is normalized against the initial spectrum") {
    const auto c = equispaced(4000, -1.0, 1.0);
    const auto gc = stieltjes_of_spectrum(c);
    for (double lambda : {-0.4, 0.0, 0.3}) {
        const cplx g = solve_characteristics(gc, cplx(lambda, -1e-9), 1.0, 0.25).g;
        double mean = 0.0;
        for (double mu : c) mean += overlap_theory(lambda, mu, 0.25, g.real(), g.imag() / pi).value;
        CHECK(mean / c.size() == doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("overlap Monte Carlo rows are normalized") {
    const auto c = equispaced(200, -1.0, 1.0);
    const std::vector<double> ls{0.0}, ms{-0.2, 0.0, 0.2};
    const auto t = overlap_monte_carlo(c, 1.0, 0.25, 3, 0.2, ls, ms, 5);
    CHECK(t.max_row_sum_error < 1e-12);
    CHECK(t.records.size() == 3);
}

TEST_CASE("spike trajectory") {
    const auto s = spike_trajectory(2.0, 1.0, {1.0, 2.0, 8.0});
    CHECK(s.t_star == doctest::Approx(4.0));
    CHECK(s.lambda1[0] == doctest::Approx(2.5));
    CHECK(s.phi1[0] == doctest::Approx(0.75));
    CHECK(s.lambda1[1] == doctest::Approx(3.0));
    CHECK(s.phi1[1] == doctest::Approx(0.5));
    CHECK(s.lambda1[2] == doctest::Approx(2.0 * std::sqrt(8.0)));
    CHECK(s.phi1[2] == 0.0);
    const auto m = bbp_measure(2.0, 1.0, 1.0, 600, 3, 7);
    CHECK(m.lambda1 == doctest::Approx(2.5).epsilon(0.04));
}

TEST_CASE("bad arguments") {
    CHECK_THROWS(solve_characteristics(stieltjes_zero(), 3.0, 1.0, -1.0));
    CHECK_THROWS(equispaced(0, -1.0, 1.0));
}
