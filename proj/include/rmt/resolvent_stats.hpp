#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rmt/ensembles.hpp"

namespace rmt::resolvent {

enum class WindowLaw { uniform, cauchy, squared_cauchy };

std::string to_string(WindowLaw law);
WindowLaw parse_window_law(const std::string& name);

/// Window densities R(u): uniform on [−1, 1], standard Cauchy, and the
/// normalized squared Cauchy (2/π)(1 + u²)^{-2}.
double window_density(WindowLaw law, double u);
double window_cdf(WindowLaw law, double u);
double window_quantile(WindowLaw law, double p);

/// Where the spectra for window sampling come from. With
/// `draws_per_spectrum == 0` one spectrum is drawn once and reused for every
/// sample (fixed matrix); otherwise a fresh spectrum is drawn for each block
/// of that many samples.
struct SpectrumSource {
    std::function<std::vector<double>(std::uint64_t seed)> draw;
    double support_lo = -2.0;
    double support_hi = 2.0;
    int n = 0;
    int draws_per_spectrum = 0;
    std::string description;

    static SpectrumSource fixed(std::vector<double> values, double lo, double hi,
                                std::string description = "fixed spectrum");
    /// Any sample_spectrum kind; the bulk support is [−2σ, 2σ] except for
    /// Lévy matrices (whole line).
    static SpectrumSource ensemble(const ensembles::EnsembleSpec& spec, int draws_per_spectrum,
                                   std::int64_t metropolis_steps = 0);
    /// Poisson or picket-fence spectra on a density profile, phase random per draw.
    static SpectrumSource synthetic(ensembles::EnsembleKind kind, int n,
                                    const ensembles::DensityProfile& profile, double x0,
                                    int draws_per_spectrum);
};

struct ResolventSampleSet {
    double x = 0.0;
    double eta = 0.0;
    WindowLaw window_law = WindowLaw::uniform;
    std::vector<double> samples;
    std::vector<double> u;
    std::string source;
    std::vector<std::string> warnings;
};

/// g(x) = (1/N) Σ 1/(x − λ_i). Throws EvaluationError if x hits an eigenvalue.
double stieltjes_real(std::span<const double> values, double x);
double stieltjes_real(const ensembles::Spectrum& spectrum, double x);

/// Samples g(x + ηu) with u ~ R. The u draws are stratified (one per
/// probability stratum, strata shuffled) so that the window is covered
/// evenly. Throws DomainError if x is not inside the source's support.
ResolventSampleSet sample_g_window(const SpectrumSource& source, double x, double eta,
                                   WindowLaw law, std::size_t n_samples, std::uint64_t seed,
                                   int threads = 1);

enum class FitMethod { quantile, max_likelihood };

struct CauchyFit {
    double center = 0.0;
    double half_width = 0.0;
    FitMethod method = FitMethod::quantile;
    double ks = 0.0;
    std::size_t n = 0;
};

/// Quantile fit (median, IQR/2) or maximum likelihood started from it.
/// Throws FitError with fewer than 100 samples or a zero IQR.
CauchyFit fit_cauchy(std::span<const double> samples, FitMethod method = FitMethod::quantile);
CauchyFit fit_cauchy(const ResolventSampleSet& set, FitMethod method = FitMethod::quantile);

struct FitInterval {
    double center_lo = 0.0, center_hi = 0.0;
    double width_lo = 0.0, width_hi = 0.0;
};

/// Percentile bootstrap interval for the fitted center and half width.
FitInterval bootstrap_fit(std::span<const double> samples, std::size_t resamples,
                          std::uint64_t seed, double level = 0.95,
                          FitMethod method = FitMethod::quantile);

struct TailDensity {
    double rho = 0.0;
    double stderr_ = 0.0;
    std::vector<double> per_threshold;
};

/// ρ̂ = G·P[|g − center| > G]/2 averaged over the thresholds. Throws
/// PrecisionError if any threshold has fewer than 20 exceedances.
TailDensity tail_density_estimate(std::span<const double> samples, double center,
                                  std::span<const double> thresholds);

struct CavityPool {
    double x = 0.0;
    double sigma2 = 1.0;
    std::vector<double> members;
    int n_terms = 1000;
};

struct CavityRunStats {
    std::size_t resampled = 0;
};

/// Sequential population dynamics g ← 1/(x − Σ w_i² g_i), w_i ~ N(0, σ²/n_terms).
CavityPool cavity_population_run(CavityPool pool, std::size_t iterations, std::uint64_t seed,
                                 CavityRunStats* stats = nullptr);

struct CharFnEstimate {
    std::vector<double> k_grid;
    std::vector<std::complex<double>> values;
    std::vector<std::complex<double>> predicted;
    std::vector<double> stderr_;
    double max_deviation = 0.0;
};

/// Empirical E[e^{ikg}] against exp(ik Re w − |k| Im w), w the Stieltjes
/// transform just below the axis (Im w > 0). Throws ParameterError unless
/// k_grid is symmetric about 0.
CharFnEstimate char_fn_compare(std::span<const double> samples, std::span<const double> k_grid,
                               std::complex<double> w);

/// 1/u + 2u Σ_{k=1}^{L} 1/(u² − k²). Throws DomainError at u = 0.
double picket_partial_sum(double u, long long terms);
/// π cot(πu). Throws DomainError at u = 0.
double picket_closed_form(double u);
/// g = g_R + πρ cot(πu).
double picket_forward_map(double u, double g_r, double rho);
/// Inverse of the forward map with u in (−1/2, 1/2]; g = g_R gives u = 1/2.
double picket_inverse_map(double g, double g_r, double rho);

/// CSV with header "sample_index,u,g".
std::string samples_csv(const ResolventSampleSet& set);
nlohmann::json fit_record(const ResolventSampleSet& set, const CauchyFit& fit);

}  // namespace rmt::resolvent
