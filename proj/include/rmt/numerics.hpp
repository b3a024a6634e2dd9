#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace rmt::numerics {

/// Power-law description of a function outside its grid:
/// f(y) ≈ coef_right · y^exponent for y > grid.back() and
/// f(y) ≈ coef_left · |y|^exponent for y < grid.front().
struct TailModel {
    double exponent = -2.0;
    double coef_right = 0.0;
    double coef_left = 0.0;
};

/// Real function sampled on a strictly increasing grid, optionally with
/// power-law tails beyond the grid ends.
struct GridFunction {
    std::vector<double> grid;
    std::vector<double> values;
    std::optional<TailModel> tail;

    /// Throws InputError unless the grid is strictly increasing, lengths match
    /// and a tail model (if any) decays.
    void validate() const;
    /// Piecewise-linear interpolation; the tail model (or zero) outside the grid.
    double operator()(double y) const;
};

/// PV ∫ f(u) / (u − y) du over the grid plus the tail model. The piecewise
/// linear interpolant is integrated against the kernel in closed form, so the
/// pole at y is handled analytically for y anywhere strictly inside the grid.
double principal_value_transform(const GridFunction& f, double y);

/// Same transform evaluated at each node of `f` itself. End nodes are
/// extrapolated linearly from their neighbours (the log singularity at the
/// grid edge does not cancel there).
std::vector<double> principal_value_transform_on_grid(const GridFunction& f);

/// ⨍ ρ(λ)/(x − λ) dλ for a density supported on [grid.front(), grid.back()].
/// Throws DomainError if x is not strictly inside the support.
double principal_value_stieltjes(const GridFunction& density, double x);

/// Inverse of the transform Γ(y) = PV ∫ F(u)/(u − y) du, i.e.
/// F(u) = (1/π²) PV ∫ Γ(y)/(u − y) dy, evaluated on Γ's grid. The returned
/// function carries a power-law tail fitted on the outer grid points.
/// Throws InputError if `gamma` has no tail model.
GridFunction hilbert_inverse(const GridFunction& gamma);

/// Least-squares fit of a power law c·|y|^p over the outer `points` nodes
/// on each side of the grid.
TailModel fit_tail(const GridFunction& f, std::size_t points = 8);

/// Two-sided Kolmogorov–Smirnov distance between the empirical law of
/// `samples` and `cdf`. Throws InputError on empty input.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov–Smirnov distance.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Inclusive linear-interpolated quantile (the "type 7" definition).
/// Throws ParameterError for p outside [0, 1], InputError on empty input.
double quantile(std::span<const double> samples, double p);
/// Same, for input already sorted ascending.
double quantile_sorted(std::span<const double> sorted, double p);

std::vector<double> sorted(std::span<const double> samples);

double trapezoid(std::span<const double> x, std::span<const double> y);

/// Finite-difference weights for derivative `order` at `x0` over arbitrary
/// nodes (Fornberg's algorithm).
std::vector<double> fd_weights(double x0, std::span<const double> nodes, int order);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

double cauchy_cdf(double g, double center, double half_width);
double cauchy_quantile(double p, double center, double half_width);

/// Semicircle law of variance σ² (support [−2σ, 2σ]).
double semicircle_density(double x, double sigma2 = 1.0);
double semicircle_cdf(double x, double sigma2 = 1.0);

/// Principal-value Stieltjes transform of the semicircle, V′(x)/2 = x/(2σ²)
/// inside the band and the decaying real root outside it.
double semicircle_pv(double x, double sigma2 = 1.0);

/// Stieltjes transform (1/N)Tr(z − W)^{-1} of the semicircle at complex z,
/// on the branch g ~ 1/z (so Im g has the sign opposite to Im z).
std::complex<double> semicircle_stieltjes(std::complex<double> z, double sigma2 = 1.0);

/// Hill estimator of the tail index from the `k` largest |samples|.
double hill_tail_index(std::span<const double> samples, std::size_t k);

}  // namespace rmt::numerics
