#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmt/ensembles.hpp"

namespace rmt::dyson {

using cplx = std::complex<double>;
using ensembles::SymmetricMatrix;

struct MatrixPath {
    std::vector<double> times;
    std::vector<SymmetricMatrix> matrices;
};

/// M(t_k) = C + W(t_k) at t_k = k t / n_steps, k = 0..n_steps, built from
/// independent GOE increments of variance scale σ²Δt.
MatrixPath evolve_matrix_bm(const SymmetricMatrix& c, double sigma2, double t, int n_steps,
                            std::uint64_t seed);

struct EigenSdeStats {
    std::size_t steps = 0;
    std::size_t halvings = 0;
};

/// Euler–Maruyama for dλ_i = √(2σ²/N) db_i + (σ²/N) Σ_{j≠i} dt/(λ_i − λ_j).
/// A step is redrawn with half the size (up to 60 times) when the update
/// would reorder the eigenvalues.
std::vector<double> evolve_eigen_sde(std::vector<double> values, double sigma2, double t, double dt,
                                     std::uint64_t seed, EigenSdeStats* stats = nullptr);

/// g(Z) and g′(Z) of a fixed initial matrix.
struct StieltjesTransform {
    std::function<cplx(cplx)> value;
    std::function<cplx(cplx)> derivative;
};

/// (1/N) Σ 1/(Z − μ_j).
StieltjesTransform stieltjes_of_spectrum(std::vector<double> values);
/// 1/Z, the transform of C = 0.
StieltjesTransform stieltjes_zero();

/// μ_j equispaced on [lo, hi], descending.
std::vector<double> equispaced(int n, double lo, double hi);

struct CharacteristicSolution {
    cplx z;
    double t = 0.0;
    double t0 = 0.0;
    cplx g;
    cplx Z;
    bool branch_ok = false;
    int iterations = 0;
    double residual = 0.0;  // |g − g_C(Z)|
};

/// Solves g = g_C(z − σ²(t − t0) g): damped fixed point started from
/// g_C(z), Newton as fallback. Throws SolverError if neither converges within
/// 10⁴ iterations on the branch sign(Im g) = −sign(Im z).
CharacteristicSolution solve_characteristics(const StieltjesTransform& g_c, cplx z, double sigma2,
                                             double t, double t0 = 0.0);

/// g(z, t1) obtained by flowing the field g(·, t0) forward by t1 − t0.
CharacteristicSolution evolved_stieltjes(const StieltjesTransform& g_c, cplx z, double sigma2,
                                         double t0, double t1);

/// |∂_t g + σ² g ∂_z g| by central differences of step h at (z, t).
double burgers_residual(const StieltjesTransform& g_c, cplx z, double sigma2, double t,
                        double h = 1e-4);

struct ResolventFlow {
    Eigen::MatrixXcd G;
    CharacteristicSolution solution;
};

/// E[G(z, t)] = G_C(Z(z, t)), assembled in C's eigenbasis.
ResolventFlow resolvent_flow(const ensembles::EigenSystem& c, cplx z, double sigma2, double t);

struct ItoDriftRecord {
    cplx measured_trace;  // (1/N) Tr of the measured drift
    cplx theory_trace;
    double stderr_trace = 0.0;
    double max_rel_deviation = 0.0;  // entrywise, relative to max |theory|
    double antisymmetric_max = 0.0;
};

/// Antithetic Monte Carlo of E[G(M + dW) − G(M)]/dt against
/// σ² g G² + (σ²/N) G³. Throws StepError if dt > 1e-4 or σ²dt exceeds a
/// tenth of the squared distance from z to the spectrum.
ItoDriftRecord ito_drift_check(const SymmetricMatrix& m, double sigma2, cplx z, double dt,
                               int n_reps, std::uint64_t seed);

struct IdentityCheck {
    double first = 0.0;   // max |G² + ∂_z G|
    double second = 0.0;  // max |G³ − ½∂²_z G|
};

/// Both resolvent identities by 9-point finite differences in z.
IdentityCheck resolvent_identities(const SymmetricMatrix& m, cplx z);

struct OverlapRecord {
    double lambda = 0.0;
    double mu = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
    bool monte_carlo = false;
};

/// σ²t / ((λ − μ − σ²t Re g)² + (σ²t)² π² ρ²). Throws DomainError if ρ ≤ 0.
OverlapRecord overlap_theory(double lambda, double mu, double sigma2t, double g_re, double rho);

struct OverlapTable {
    std::vector<OverlapRecord> records;
    double max_row_sum_error = 0.0;  // max_i |Σ_j ⟨u_i, v_j⟩² − 1|
    std::vector<std::string> warnings;
};

/// N⟨u_i, v_j⟩² for C = diag(μ), box-averaged over |λ_i − λ*| < ε/2 and
/// |μ_j − μ*| < ε/2 at every (λ*, μ*) of the two grids.
OverlapTable overlap_monte_carlo(const std::vector<double>& c_values, double sigma2, double t,
                                 int n_reps, double eps, const std::vector<double>& lambda_grid,
                                 const std::vector<double>& mu_grid, std::uint64_t seed,
                                 int threads = 1);

struct SpikeTrajectory {
    double mu1 = 0.0;
    double sigma2 = 1.0;
    double t_star = 0.0;
    std::vector<double> times;
    std::vector<double> lambda1;
    std::vector<double> phi1;
};

/// λ1 = μ1 + σ²t/μ1 and Φ1 = 1 − t/t* up to t* = μ1²/σ², then the edge 2σ√t and 0.
SpikeTrajectory spike_trajectory(double mu1, double sigma2, std::vector<double> times);

struct BbpMeasurement {
    double lambda1 = 0.0;
    double phi1 = 0.0;
    double lambda1_stderr = 0.0;
    double phi1_stderr = 0.0;
};

/// Mean top eigenvalue and mean ⟨u_1, e_1⟩² of μ1 e1e1ᵀ + W(t).
BbpMeasurement bbp_measure(double mu1, double sigma2, double t, int n, int n_reps, std::uint64_t seed,
                           int threads = 1);

}  // namespace rmt::dyson
