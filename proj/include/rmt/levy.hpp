#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmt/random.hpp"

namespace rmt::levy {

/// Strictly stable law with characteristic function
/// exp(−C|k|^α (1 − iβ sign(k) tan(πα/2))), 0 < α < 1.
struct StableLaw {
    double alpha = 0.5;
    double scale = 1.0;  // C
    double asym = 0.0;   // β

    /// Throws ParameterError outside α ∈ (0, 1), C > 0, β ∈ [−1, 1].
    void validate() const;
};

/// Density via Nolan's integral representation (exact inversion of the
/// characteristic function as a finite-range integral), split at the peak of
/// the integrand.
double stable_density(const StableLaw& law, double s);
std::vector<double> stable_density(const StableLaw& law, std::span<const double> s_grid);
double stable_cdf(const StableLaw& law, double s);

/// Direct Fourier inversion (1/π)∫₀^∞ Re[φ(k)e^{−iks}] dk; slow, for cross-checks.
double stable_density_fourier(const StableLaw& law, double s);

/// Chambers–Mallows–Stuck sampler.
double stable_draw(const StableLaw& law, Rng& rng);
std::vector<double> stable_sample(const StableLaw& law, std::size_t n, std::uint64_t seed);

/// Density ~ α A₊ s^{−1−α} as s → +∞ and α A₋ |s|^{−1−α} as s → −∞, with
/// A± = C(1 ± β)/(2Γ(1 − α)cos(πα/2)).
double stable_tail_constant(const StableLaw& law, bool right);

/// Ratio between the characteristic-function scale of Σ W_0i² G_ii and the
/// moment C = E|G|^{μ/2}, for entries with density N^{-1}|W|^{-1-μ}:
/// κ = Γ(1 − α)cos(πα/2)/α with α = μ/2.
double levy_scale_factor(double mu);

struct LevyFixedPoint {
    double x = 0.0;
    double mu = 1.0;
    double C = 1.0;     // E|G00|^{μ/2}
    double beta = 0.0;  // E[sign(G00)|G00|^{μ/2}]/C
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> residual_trace;
};

/// Law of S = Σ W_0i² G_ii = x − 1/G00 for a fixed point.
StableLaw cavity_law(const LevyFixedPoint& fp);

/// The two self-consistency integrals (C, Cβ) ↦ (E|x − S|^{−α}, E[sign(x − S)|x − S|^{−α}])
/// with S ~ cavity_law(C, β).
std::pair<double, double> self_consistency_map(double x, double mu, double C, double beta);
/// Same map by quadrature against stable_density (slow).
std::pair<double, double> self_consistency_map_direct(double x, double mu, double C, double beta);

/// Damped iteration (mixing 0.5, Aitken extrapolation from iteration 20) of
/// the self-consistency map. Throws SolverError with the residual trace if
/// the residual is still above tol after `max_iterations`.
LevyFixedPoint levy_fixed_point(double x, double mu, double init_C = 1.0, double init_beta = 0.0,
                                double tol = 1e-10, int max_iterations = 1000);

struct LevyDensityPoint {
    double x = 0.0;
    double rho = 0.0;
    LevyFixedPoint fixed_point;
    bool ok = false;
    std::string error;
};

/// ρ_L(x) = density of S at s = x, solved independently at every grid point.
std::vector<LevyDensityPoint> levy_density(std::span<const double> x_grid, double mu, int threads = 1,
                                           double tol = 1e-10);

/// Geometric spacing near 0, linear beyond `linear_from`, up to x_max.
std::vector<double> levy_x_grid(double x_max = 10.0, double linear_from = 1.0, double first = 0.01,
                                double linear_step = 0.1);

/// ∫ρ_L over the grid (symmetric ensemble: twice the positive half) plus the
/// tail beyond the last point, modelled as (c + d/x)|x|^{−1−μ} through the
/// last two points.
double levy_density_mass(std::span<const double> x_grid_positive, std::span<const double> rho,
                         double mu);

/// P(G00 = g) = g^{−2} L(x − 1/g).
double g00_density(const LevyFixedPoint& fp, double g);
std::vector<double> g00_distribution(const LevyFixedPoint& fp, std::span<const double> g_grid);
double g00_cdf(const LevyFixedPoint& fp, double g);
double g00_quantile(const LevyFixedPoint& fp, double p);

struct PopulationStats {
    std::size_t resampled = 0;
    double overflow_rate = 0.0;
};

/// Cavity iteration G ← 1/(x − Σ W_i² G_i) with W_i from the heavy-tailed
/// entry law at size n_terms, `updates` single-member replacements starting
/// from G = 1/(x − S) with S symmetric stable. Non-finite updates are redrawn.
std::vector<double> levy_population_dynamics(double x, double mu, std::size_t pool_size, int n_terms,
                                             std::size_t updates, std::uint64_t seed,
                                             double core_fraction = 0.5,
                                             PopulationStats* stats = nullptr);

}  // namespace rmt::levy
