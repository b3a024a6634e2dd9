#pragma once

#include <complex>
#include <string>
#include <vector>

namespace rmt::coulomb {

/// Modified Bessel function of the first kind. Power series for |v| ≤ 30,
/// large-argument expansion beyond (Re v > 0). Throws RangeError when the
/// result would overflow; use the scaled form there.
std::complex<double> bessel_i(double nu, std::complex<double> v);
/// e^{−v} I_ν(v) for real v > 0.
double bessel_i_scaled(double nu, double v);

/// Ψ(v) = v^{3/4} I_{−3/4}(v) = 2^{3/4} Σ (v/2)^{2m}/(m! Γ(m + 1/4)).
double psi(double v);
/// Ψ′(v) = v^{3/4} I_{1/4}(v).
double psi_prime(double v);
/// Ψ′/Ψ = I_{1/4}(v)/I_{−3/4}(v), finite for all v ≥ 0.
double psi_ratio(double v);

/// Γ(y) = Γ0 (1 − Ψ′(v)/Ψ(v)), v = Γ0 y²/4.
double gamma_closed_form(double gamma0, double y);

struct ScalingProfile {
    double gamma0 = 1.0;
    std::vector<double> y_grid;
    std::vector<double> gamma;
    std::vector<double> f_grid;
    std::vector<double> f;
    int zeta = 1;
    std::vector<std::string> warnings;
};

/// Symmetric grid on [−extent, extent]: spacing `fine` on [−2, 2], then
/// steps growing geometrically by `ratio`.
std::vector<double> default_y_grid(double extent = 40.0, double fine = 0.005, double ratio = 1.01);
/// Symmetric uniform grid on [−extent, extent].
std::vector<double> uniform_y_grid(double extent, double spacing);

/// Throws ParameterError unless gamma0 > 0 and the grid increases strictly.
ScalingProfile gamma_profile(double gamma0, std::vector<double> y_grid);

struct OdeResidual {
    double max_residual = 0.0;
    double at_y = 0.0;
    bool coarse = false;  // some spacing in the range exceeded 0.01
};

/// max |−Γ²/2 + Γ0 Γ − d/dy[(Γ0 − Γ)/y]| over nodes in [y_lo, y_hi], with
/// the derivative from 5-point finite-difference stencils on the grid.
OdeResidual ode_residual(const ScalingProfile& profile, double y_lo = 0.05, double y_hi = 8.0);

/// Recovers F from Γ(y) = PV ∫ F(u)/(u − y) du, using Γ ≈ −y^{-2} beyond
/// the grid. Adds a warning if the grid stops short of |y| = 40.
ScalingProfile density_perturbation(ScalingProfile profile);

/// PV ∫ F(u)/(u − y) du of the profile's F at the given points.
std::vector<double> forward_transform(const ScalingProfile& profile, const std::vector<double>& y);

/// c·πρ0/Γ0 where c is the mean of y²Γ(y) over [10, 40]; πρ0 defaults to Γ0.
/// Throws RangeError if c y^{-2} explains less than 99% of the variance.
double asymptotic_matching(const ScalingProfile& profile, double pi_rho0 = 0.0);

/// The ζ = −1 branch: F → −F.
ScalingProfile flip_branch(ScalingProfile profile);

std::string gamma_csv(const ScalingProfile& profile);
std::string f_csv(const ScalingProfile& profile);

}  // namespace rmt::coulomb
