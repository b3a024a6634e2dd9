#include "doctest.h"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>

#include "rmt/coulomb_scaling.hpp"
#include "rmt/error.hpp"

using namespace rmt::coulomb;
using boost::math::cyl_bessel_i;

TEST_CASE("Bessel I against boost") {
    for (double nu : {-0.75, 0.25, 1.5}) {
        for (double v : {0.01, 0.7, 5.0, 29.0, 45.0, 120.0}) {
            CHECK(bessel_i(nu, v).real() == doctest::Approx(cyl_bessel_i(nu, v)).epsilon(1e-11));
            CHECK(bessel_i_scaled(nu, v) == doctest::Approx(std::exp(-v) * cyl_bessel_i(nu, v)).epsilon(1e-11));
        }
    }
    CHECK(bessel_i_scaled(0.25, 2000.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * 2000.0)).epsilon(1e-3));
    CHECK_THROWS_AS(bessel_i(0.25, 1000.0), rmt::RangeError);
}

TEST_CASE("Psi and its derivative") {
    for (double v : {0.1, 1.0, 3.0, 12.0}) {
        CHECK(psi(v) == doctest::Approx(std::pow(v, 0.75) * cyl_bessel_i(-0.75, v)).epsilon(1e-11));
        CHECK(psi_prime(v) == doctest::Approx(std::pow(v, 0.75) * cyl_bessel_i(0.25, v)).epsilon(1e-11));
        const double h = 1e-5;
        CHECK(psi_prime(v) == doctest::Approx((psi(v + h) - psi(v - h)) / (2 * h)).epsilon(1e-7));
        CHECK(psi_ratio(v) == doctest::Approx(psi_prime(v) / psi(v)).epsilon(1e-12));
    }
    CHECK(psi_ratio(500.0) == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("closed-form scaling function values") {
    CHECK(gamma_closed_form(1.0, 0.2) == doctest::Approx(0.98).epsilon(1e-3));
    CHECK(100.0 * gamma_closed_form(1.0, 10.0) == doctest::Approx(-1.0).epsilon(0.03));
    CHECK(gamma_closed_form(1.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("Riccati residual on a fine uniform grid") {
    const auto p = gamma_profile(1.0, uniform_y_grid(8.1, 0.005));
    const auto r = ode_residual(p, 0.05, 8.0);
    CHECK(r.max_residual < 1e-6);
    CHECK_FALSE(r.coarse);
}

TEST_CASE("density perturbation is odd and inverts back") {
    const auto p = density_perturbation(gamma_profile(1.0, default_y_grid()));
    const std::size_t m = p.f.size();
    for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(p.f[i] + p.f[m - 1 - i]) < 1e-8);
    std::vector<double> ys, gs;
    for (std::size_t i = 0; i < p.y_grid.size(); ++i) {
        if (std::abs(p.y_grid[i]) <= 10.0) {
            ys.push_back(p.y_grid[i]);
            gs.push_back(p.gamma[i]);
        }
    }
    const auto back = forward_transform(p, ys);
    double sup = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) sup = std::max(sup, std::abs(back[i] - gs[i]));
    CHECK(sup < 0.01);
    CHECK(asymptotic_matching(p) == doctest::Approx(-1.0).epsilon(0.03));
}

TEST_CASE("branch flip and CSV schemas") {
    const auto p = gamma_profile(1.0, uniform_y_grid(2.0, 0.1));
    const auto q = flip_branch(p);
    CHECK(q.zeta == -p.zeta);
    CHECK(gamma_csv(p).rfind("y,gamma\n", 0) == 0);
    CHECK_THROWS(gamma_profile(-1.0, uniform_y_grid(2.0, 0.1)));
}
