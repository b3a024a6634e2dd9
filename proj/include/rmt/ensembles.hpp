#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rmt::ensembles {

using SymmetricMatrix = Eigen::MatrixXd;

enum class EnsembleKind {
    goe,
    beta_tridiagonal,
    coulomb_metropolis,
    poisson,
    picket_fence,
    levy,
    spiked_goe,
};

std::string to_string(EnsembleKind kind);

/// Confining potential V(λ) stored as ascending polynomial coefficients,
/// together with V′ and the companion polynomial
/// P(z) = ∫ρ(λ)(V′(z) − V′(λ))/(z − λ) dλ of its equilibrium density.
struct PotentialSpec {
    std::vector<double> coefficients;  // V
    std::vector<double> derivative;    // V′
    std::vector<double> companion;     // P, empty when not determined

    /// V(λ) = λ²/(2σ²): V′ = λ/σ², P = 1/σ².
    static PotentialSpec quadratic(double sigma2 = 1.0);
    /// Builds V′ and, for even potentials of degree 2 or 4, fixes P by
    /// normalizing the one-cut density. Throws ParameterError if V does not
    /// confine (odd degree or negative leading coefficient).
    static PotentialSpec from_coefficients(std::vector<double> v);

    double value(double x) const;
    double slope(double x) const;
    double companion_at(double x) const;
    /// ρ0(λ) = √(4P(λ) − V′(λ)²)/(2π), zero where the radicand is negative.
    double equilibrium_density(double x) const;
    /// Right edge of the equilibrium support (symmetric potentials).
    double support_edge() const;
    bool is_quadratic() const;
};

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::goe;
    int n = 2;
    double sigma2 = 1.0;
    double beta = 1.0;
    double mu_tail = 1.0;
    double spike = 0.0;
    double time = 0.0;
    PotentialSpec potential = PotentialSpec::quadratic();
    std::uint64_t seed = 0;
    /// Probability mass of the uniform core of the Lévy entry law.
    double levy_core_fraction = 0.5;

    /// Throws ParameterError when the invariants for `kind` are violated.
    void validate() const;
};

/// Eigenvalues sorted descending together with the spec that produced them.
struct Spectrum {
    std::vector<double> values;
    EnsembleSpec spec;

    std::size_t size() const { return values.size(); }
};

struct EigenSystem {
    Spectrum spectrum;
    Eigen::MatrixXd basis;  // column k is the eigenvector of spectrum.values[k]
};

/// Density on a compact interval with its CDF and quantile function.
struct DensityProfile {
    std::function<double(double)> density;
    std::function<double(double)> cdf;
    std::function<double(double)> quantile;
    double lo = 0.0;
    double hi = 1.0;

    static DensityProfile uniform(double lo, double hi);
    static DensityProfile semicircle(double sigma2 = 1.0);
    /// Tabulates CDF and quantile numerically. Throws ParameterError if the
    /// density does not integrate to one within 1e-6.
    static DensityProfile tabulated(std::function<double(double)> density, double lo, double hi,
                                    std::size_t nodes = 20001);
};

/// Real symmetric GOE matrix: off-diagonal variance σ²/N, diagonal 2σ²/N.
SymmetricMatrix sample_goe(const EnsembleSpec& spec);

/// β-Hermite tridiagonal model scaled to the semicircle on [−2σ, 2σ]; its
/// eigenvalues have joint density ∝ Π|λi − λj|^β exp(−Nβ/(4σ²) Σλ²).
Spectrum sample_beta_tridiagonal(const EnsembleSpec& spec);

struct MetropolisStats {
    double acceptance = 0.0;  // over the production half
    double step = 0.0;        // tuned proposal width
};

/// Single-particle Metropolis sampler of the Coulomb gas
/// Π|λi − λj|^β exp(−Nβ/2 ΣV(λi)). The first half of `steps` is burn-in
/// during which the proposal width is tuned towards 30% acceptance.
Spectrum sample_coulomb_metropolis(const EnsembleSpec& spec, std::int64_t steps,
                                   MetropolisStats* stats = nullptr);

/// Starting configuration used by the Metropolis sampler.
std::vector<double> metropolis_initial_configuration(const EnsembleSpec& spec);

/// Poisson: n i.i.d. draws from `profile`. Picket fence: the lattice
/// Q(F(x0) + (k − u)/n) with u the phase offset, so the points are locally
/// equispaced with spacing 1/(nρ(x0)) and sit exactly at x0 when u = 0. If
/// `phase` is NaN it is drawn uniformly on [−1/2, 1/2] from `seed`.
Spectrum synthetic_spectrum(EnsembleKind kind, int n, const DensityProfile& profile, double x0,
                            std::uint64_t seed,
                            double phase = std::numeric_limits<double>::quiet_NaN());

/// Symmetric heavy-tailed entry law: uniform core on [−w0, w0] carrying
/// `core_fraction` of the mass, and density exactly N^{-1}|w|^{-1-μ} beyond.
class LevyEntryLaw {
public:
    LevyEntryLaw(double mu, int n, double core_fraction = 0.5);
    template <class Gen>
    double operator()(Gen& rng) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double pick = unit(rng);
        if (pick < core_fraction_) return w0_ * (2.0 * unit(rng) - 1.0);
        double v = unit(rng);
        while (v <= 0.0) v = unit(rng);
        const double magnitude = w0_ * std::pow(v, -1.0 / mu_);
        return unit(rng) < 0.5 ? -magnitude : magnitude;
    }

    double core_edge() const { return w0_; }
    double mu() const { return mu_; }
    /// P(|W| > w) for w ≥ w0.
    double tail_probability(double w) const;

private:
    double mu_;
    double n_;
    double core_fraction_;
    double w0_;
};

SymmetricMatrix sample_levy_matrix(const EnsembleSpec& spec);

/// C + W(t) with C = μ1 e1 e1ᵀ and W(t) a GOE of variance scale σ²t.
SymmetricMatrix sample_spiked(const EnsembleSpec& spec);

/// Full eigensystem, values descending. Throws InputError if the input is
/// not symmetric to 1e-10.
EigenSystem eigen_decompose(const SymmetricMatrix& matrix);

/// Eigenvalues only, sorted descending.
std::vector<double> eigenvalues(const SymmetricMatrix& matrix);

/// Largest eigenvalue and its unit eigenvector.
std::pair<double, Eigen::VectorXd> top_eigenpair(const SymmetricMatrix& matrix);

/// Eigenvalues of the symmetric tridiagonal matrix (diag, offdiag), descending.
std::vector<double> tridiagonal_eigenvalues(std::vector<double> diag, std::vector<double> offdiag);

/// Draws the spectrum for any kind that has a matrix or tridiagonal model
/// (goe, beta_tridiagonal, levy, spiked_goe, coulomb_metropolis with `steps`).
Spectrum sample_spectrum(const EnsembleSpec& spec, std::int64_t metropolis_steps = 0);

}  // namespace rmt::ensembles
