#include "rmt/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <lapacke.h>

#include "rmt/error.hpp"
#include "rmt/numerics.hpp"
#include "rmt/random.hpp"

namespace rmt::ensembles {

namespace {

constexpr double kPi = std::numbers::pi;

double horner(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

std::vector<double> differentiate(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
    if (d.empty()) d.push_back(0.0);
    return d;
}

double integrate_on(const std::function<double(double)>& f, double lo, double hi) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(f, lo, hi, 1e-10);
}

void check_symmetric(const SymmetricMatrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) throw InputError("matrix must be square and non-empty");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) throw InputError("matrix is not symmetric (max asymmetry " +
                                       std::to_string(asym) + ")");
}

void check_lapack(int info, const char* routine) {
    if (info != 0) {
        throw EvaluationError(std::string(routine) + " failed with info " + std::to_string(info));
    }
}

std::vector<double> descending(std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
}

// Edge of the one-cut support: first sign change of 4P − V′² on x > 0.
double radicand_edge(const PotentialSpec& p) {
    auto radicand = [&](double x) {
        const double s = p.slope(x);
        return 4.0 * p.companion_at(x) - s * s;
    };
    if (radicand(0.0) <= 0.0) throw ParameterError("equilibrium density vanishes at the origin");
    double hi = 0.5;
    while (radicand(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e6) throw ParameterError("equilibrium density has unbounded support");
    }
    double lo = hi / 2.0;
    if (hi == 0.5) lo = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (radicand(mid) > 0.0 ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace

std::string to_string(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::goe: return "goe";
        case EnsembleKind::beta_tridiagonal: return "beta_tridiagonal";
        case EnsembleKind::coulomb_metropolis: return "coulomb_metropolis";
        case EnsembleKind::poisson: return "poisson";
        case EnsembleKind::picket_fence: return "picket_fence";
        case EnsembleKind::levy: return "levy";
        case EnsembleKind::spiked_goe: return "spiked_goe";
    }
    return "unknown";
}

// ---- PotentialSpec ---------------------------------------------------------

PotentialSpec PotentialSpec::quadratic(double sigma2) {
    PotentialSpec p;
    p.coefficients = {0.0, 0.0, 0.5 / sigma2};
    p.derivative = {0.0, 1.0 / sigma2};
    p.companion = {1.0 / sigma2};
    return p;
}

PotentialSpec PotentialSpec::from_coefficients(std::vector<double> v) {
    while (v.size() > 1 && v.back() == 0.0) v.pop_back();
    const std::size_t degree = v.size() - 1;
    if (degree < 2 || degree % 2 != 0 || !(v.back() > 0.0)) {
        throw ParameterError("potential is not confining: need even degree >= 2 with positive "
                             "leading coefficient");
    }
    PotentialSpec p;
    p.coefficients = v;
    p.derivative = differentiate(v);

    bool even = true;
    for (std::size_t k = 1; k < v.size(); k += 2) even = even && v[k] == 0.0;
    if (degree == 2) {
        p.companion = {p.derivative[1]};
    } else if (degree == 4 && even) {
        // V′ = d1 x + d3 x³  ⇒  P(z) = d1 + d3 (z² + m2); m2 fixed by ∫ρ0 = 1.
        const double d1 = p.derivative[1];
        const double d3 = p.derivative[3];
        auto mass = [&](double m2) {
            PotentialSpec trial = p;
            trial.companion = {d1 + d3 * m2, 0.0, d3};
            const double edge = radicand_edge(trial);
            return integrate_on([&](double x) { return trial.equilibrium_density(x); }, -edge,
                                edge);
        };
        double lo = 0.0;
        if (4.0 * d1 <= 0.0) lo = 1e-12 - d1 / d3;
        if (mass(lo) >= 1.0) {
            throw ParameterError("potential has no one-cut equilibrium density with this support");
        }
        double hi = std::max(1.0, 2.0 * std::abs(lo));
        while (mass(hi) < 1.0) hi *= 2.0;
        for (int i = 0; i < 100 && hi - lo > 1e-14 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (mass(mid) < 1.0 ? lo : hi) = mid;
        }
        const double m2 = 0.5 * (lo + hi);
        p.companion = {d1 + d3 * m2, 0.0, d3};
    }
    return p;
}

double PotentialSpec::value(double x) const { return horner(coefficients, x); }
double PotentialSpec::slope(double x) const { return horner(derivative, x); }

double PotentialSpec::companion_at(double x) const {
    if (companion.empty()) throw ParameterError("companion polynomial not determined for this potential");
    return horner(companion, x);
}

double PotentialSpec::equilibrium_density(double x) const {
    const double s = slope(x);
    const double r = 4.0 * companion_at(x) - s * s;
    return r > 0.0 ? std::sqrt(r) / (2.0 * kPi) : 0.0;
}

double PotentialSpec::support_edge() const { return radicand_edge(*this); }

bool PotentialSpec::is_quadratic() const {
    auto c = coefficients;
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    return c.size() == 3;
}

// ---- EnsembleSpec ----------------------------------------------------------

void EnsembleSpec::validate() const {
    if (n < 2) throw ParameterError("ensemble size n must be at least 2");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ParameterError("sigma2 must be positive");
    if (std::isnan(beta) || beta < 0.0) throw ParameterError("beta must be nonnegative");
    switch (kind) {
        case EnsembleKind::beta_tridiagonal:
            if (!(beta > 0.0) || !std::isfinite(beta))
                throw ParameterError("beta_tridiagonal needs finite beta > 0");
            break;
        case EnsembleKind::coulomb_metropolis:
            if (!(beta > 0.0) || !std::isfinite(beta))
                throw ParameterError("coulomb_metropolis needs finite beta > 0");
            (void)PotentialSpec::from_coefficients(potential.coefficients);
            break;
        case EnsembleKind::levy:
            if (!(mu_tail > 0.0 && mu_tail < 2.0)) throw ParameterError("levy tail index must lie in (0, 2)");
            if (!(levy_core_fraction >= 0.0 && levy_core_fraction < 1.0))
                throw ParameterError("levy core fraction must lie in [0, 1)");
            break;
        case EnsembleKind::spiked_goe:
            if (!(time >= 0.0)) throw ParameterError("spiked ensemble time must be nonnegative");
            break;
        default: break;
    }
}

// ---- DensityProfile ----------------------------------------------------------

DensityProfile DensityProfile::uniform(double lo, double hi) {
    if (!(hi > lo)) throw ParameterError("uniform profile needs hi > lo");
    const double w = hi - lo;
    DensityProfile p;
    p.lo = lo;
    p.hi = hi;
    p.density = [=](double x) { return (x >= lo && x <= hi) ? 1.0 / w : 0.0; };
    p.cdf = [=](double x) { return std::clamp((x - lo) / w, 0.0, 1.0); };
    p.quantile = [=](double t) { return lo + t * w; };
    return p;
}

DensityProfile DensityProfile::semicircle(double sigma2) {
    const double edge = 2.0 * std::sqrt(sigma2);
    DensityProfile p;
    p.lo = -edge;
    p.hi = edge;
    p.density = [=](double x) { return numerics::semicircle_density(x, sigma2); };
    p.cdf = [=](double x) { return numerics::semicircle_cdf(x, sigma2); };
    p.quantile = [=](double t) {
        double a = -edge, b = edge;
        for (int i = 0; i < 100; ++i) {
            const double m = 0.5 * (a + b);
            (numerics::semicircle_cdf(m, sigma2) < t ? a : b) = m;
        }
        return 0.5 * (a + b);
    };
    return p;
}

DensityProfile DensityProfile::tabulated(std::function<double(double)> density, double lo, double hi,
                                         std::size_t nodes) {
    if (!(hi > lo) || nodes < 3) throw ParameterError("tabulated profile needs hi > lo and >= 3 nodes");
    const double mass = integrate_on(density, lo, hi);
    if (std::abs(mass - 1.0) > 1e-6) {
        throw ParameterError("density profile is not normalized (mass " + std::to_string(mass) + ")");
    }
    auto xs = std::make_shared<std::vector<double>>(nodes);
    auto cs = std::make_shared<std::vector<double>>(nodes, 0.0);
    for (std::size_t i = 0; i < nodes; ++i) (*xs)[i] = lo + (hi - lo) * i / (nodes - 1.0);
    double prev = density(lo);
    for (std::size_t i = 1; i < nodes; ++i) {
        const double cur = density((*xs)[i]);
        (*cs)[i] = (*cs)[i - 1] + 0.5 * ((*xs)[i] - (*xs)[i - 1]) * (prev + cur);
        prev = cur;
    }
    const double total = cs->back();
    for (auto& c : *cs) c /= total;

    DensityProfile p;
    p.lo = lo;
    p.hi = hi;
    p.density = std::move(density);
    p.cdf = [xs, cs](double x) {
        numerics::GridFunction g{*xs, *cs, std::nullopt};
        if (x <= xs->front()) return 0.0;
        if (x >= xs->back()) return 1.0;
        return g(x);
    };
    p.quantile = [xs, cs](double t) {
        t = std::clamp(t, 0.0, 1.0);
        const auto it = std::lower_bound(cs->begin(), cs->end(), t);
        if (it == cs->begin()) return xs->front();
        if (it == cs->end()) return xs->back();
        const std::size_t i = static_cast<std::size_t>(it - cs->begin());
        const double span = (*cs)[i] - (*cs)[i - 1];
        const double w = span > 0 ? (t - (*cs)[i - 1]) / span : 0.0;
        return (*xs)[i - 1] + w * ((*xs)[i] - (*xs)[i - 1]);
    };
    return p;
}

// ---- samplers ---------------------------------------------------------------

SymmetricMatrix sample_goe(const EnsembleSpec& spec) {
    spec.validate();
    const int n = spec.n;
    Rng rng = make_rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double off = std::sqrt(spec.sigma2 / n);
    const double diag = std::sqrt(2.0 * spec.sigma2 / n);
    SymmetricMatrix m(n, n);
    for (int j = 0; j < n; ++j) {
        m(j, j) = diag * normal(rng);
        for (int i = j + 1; i < n; ++i) {
            const double w = off * normal(rng);
            m(i, j) = w;
            m(j, i) = w;
        }
    }
    return m;
}

Spectrum sample_beta_tridiagonal(const EnsembleSpec& spec) {
    spec.validate();
    if (spec.kind != EnsembleKind::beta_tridiagonal) {
        throw ParameterError("sample_beta_tridiagonal requires kind beta_tridiagonal");
    }
    const int n = spec.n;
    const double beta = spec.beta;
    Rng rng = make_rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double diag_scale = std::sqrt(2.0 * spec.sigma2 / (n * beta));
    const double off_scale = std::sqrt(spec.sigma2 / (n * beta));
    std::vector<double> d(n), e(n - 1);
    for (int i = 0; i < n; ++i) d[i] = diag_scale * normal(rng);
    for (int i = 0; i < n - 1; ++i) {
        const double dof = beta * (n - 1 - i);
        std::gamma_distribution<double> chi2(0.5 * dof, 2.0);
        e[i] = off_scale * std::sqrt(chi2(rng));
    }
    return Spectrum{tridiagonal_eigenvalues(std::move(d), std::move(e)), spec};
}

std::vector<double> metropolis_initial_configuration(const EnsembleSpec& spec) {
    double edge = 2.0 * std::sqrt(spec.sigma2);
    if (!spec.potential.companion.empty()) edge = spec.potential.support_edge();
    std::vector<double> x(spec.n);
    for (int i = 0; i < spec.n; ++i) x[i] = 0.9 * edge * (1.0 - 2.0 * (i + 0.5) / spec.n);
    return x;
}

Spectrum sample_coulomb_metropolis(const EnsembleSpec& spec, std::int64_t steps,
                                   MetropolisStats* stats) {
    spec.validate();
    if (steps < 0) throw ParameterError("Metropolis step count must be nonnegative");
    const auto& V = spec.potential;
    const int n = spec.n;
    const double beta = spec.beta;
    std::vector<double> x = metropolis_initial_configuration(spec);

    Rng rng = make_rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double step = 1.0 / n;
    const std::int64_t burn_in = steps / 2;
    std::int64_t window_accepted = 0, window_total = 0;
    std::int64_t accepted = 0;
    const double confinement = 0.5 * n * beta;

    for (std::int64_t s = 0; s < steps; ++s) {
        const int i = pick(rng);
        const double old = x[i];
        const double trial = old + step * normal(rng);
        double d_log = 0.0;
        bool collision = false;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double a = std::abs(trial - x[j]);
            if (a == 0.0) {
                collision = true;
                break;
            }
            d_log += std::log(a / std::abs(old - x[j]));
        }
        bool accept = false;
        if (!collision) {
            const double delta_energy = -beta * d_log + confinement * (V.value(trial) - V.value(old));
            accept = delta_energy <= 0.0 || unit(rng) < std::exp(-delta_energy);
        }
        if (accept) x[i] = trial;

        if (s < burn_in) {
            window_accepted += accept;
            if (++window_total == 1000) {
                const double rate = static_cast<double>(window_accepted) / window_total;
                step *= rate > 0.3 ? 1.1 : 0.9;
                window_accepted = window_total = 0;
            }
        } else {
            accepted += accept;
        }
    }
    if (stats) {
        const std::int64_t production = steps - burn_in;
        stats->acceptance = production > 0 ? static_cast<double>(accepted) / production : 0.0;
        stats->step = step;
    }
    return Spectrum{descending(std::move(x)), spec};
}

Spectrum synthetic_spectrum(EnsembleKind kind, int n, const DensityProfile& profile, double x0,
                            std::uint64_t seed, double phase) {
    if (n < 2) throw ParameterError("synthetic spectrum needs n >= 2");
    if (!(profile.hi > profile.lo)) throw ParameterError("density profile needs a nonempty interval");
    const double mass = integrate_on(profile.density, profile.lo, profile.hi);
    if (std::abs(mass - 1.0) > 1e-6) {
        throw ParameterError("density profile is not normalized (mass " + std::to_string(mass) + ")");
    }
    EnsembleSpec spec;
    spec.kind = kind;
    spec.n = n;
    spec.seed = seed;
    spec.beta = kind == EnsembleKind::poisson ? 0.0 : std::numeric_limits<double>::infinity();

    Rng rng = make_rng(seed);
    std::vector<double> values(n);
    if (kind == EnsembleKind::poisson) {
        for (auto& v : values) v = profile.quantile(uniform_open(rng));
    } else if (kind == EnsembleKind::picket_fence) {
        if (!(x0 > profile.lo && x0 < profile.hi)) throw ParameterError("x0 must lie inside the profile");
        double u = phase;
        if (std::isnan(u)) u = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
        if (!(u >= -0.5 && u <= 0.5)) throw ParameterError("picket phase must lie in [-1/2, 1/2]");
        const double c0 = profile.cdf(x0);
        // λ_k = Q(F(x0) + (k − u)/n), so that g(x0) − g_R ≈ πρ cot(πu).
        const double k0 = std::ceil(-n * c0 + u);
        for (int k = 0; k < n; ++k) {
            const double offset = k0 + k - u;
            const double t = offset == 0.0 ? c0 : c0 + offset / n;
            values[k] = profile.quantile(std::clamp(t, 0.0, 1.0));
        }
    } else {
        throw ParameterError("synthetic_spectrum supports poisson and picket_fence only");
    }
    // Ties (possible only through clamping) keep their index order.
    std::stable_sort(values.begin(), values.end(), std::greater<>());
    return Spectrum{std::move(values), spec};
}

// ---- Lévy --------------------------------------------------------------------

LevyEntryLaw::LevyEntryLaw(double mu, int n, double core_fraction)
    : mu_(mu), n_(n), core_fraction_(core_fraction) {
    if (!(mu > 0.0 && mu < 2.0)) throw ParameterError("levy tail index must lie in (0, 2)");
    if (n < 1) throw ParameterError("levy entry law needs n >= 1");
    if (!(core_fraction >= 0.0 && core_fraction < 1.0))
        throw ParameterError("levy core fraction must lie in [0, 1)");
    // tail mass (2/(Nμ)) w0^{−μ} = 1 − core_fraction
    w0_ = std::pow(2.0 / (n_ * mu_ * (1.0 - core_fraction_)), 1.0 / mu_);
}

double LevyEntryLaw::tail_probability(double w) const {
    return 2.0 / (n_ * mu_) * std::pow(w, -mu_);
}

SymmetricMatrix sample_levy_matrix(const EnsembleSpec& spec) {
    spec.validate();
    if (spec.kind != EnsembleKind::levy) throw ParameterError("sample_levy_matrix requires kind levy");
    const int n = spec.n;
    const LevyEntryLaw law(spec.mu_tail, n, spec.levy_core_fraction);
    Rng rng = make_rng(spec.seed);
    SymmetricMatrix m(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) {
            const double w = law(rng);
            m(i, j) = w;
            m(j, i) = w;
        }
    }
    return m;
}

SymmetricMatrix sample_spiked(const EnsembleSpec& spec) {
    spec.validate();
    SymmetricMatrix m;
    if (spec.time > 0.0) {
        EnsembleSpec noise = spec;
        noise.kind = EnsembleKind::goe;
        noise.sigma2 = spec.sigma2 * spec.time;
        m = sample_goe(noise);
    } else {
        m = SymmetricMatrix::Zero(spec.n, spec.n);
    }
    m(0, 0) += spec.spike;
    return m;
}

// ---- eigensolvers ----------------------------------------------------------------

EigenSystem eigen_decompose(const SymmetricMatrix& matrix) {
    check_symmetric(matrix);
    const int n = static_cast<int>(matrix.rows());
    Eigen::MatrixXd a = matrix;
    std::vector<double> w(n);
    check_lapack(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, a.data(), n, w.data()), "dsyevd");
    EigenSystem sys;
    sys.spectrum.spec.n = n;
    sys.spectrum.values.resize(n);
    sys.basis.resize(n, n);
    for (int k = 0; k < n; ++k) {
        sys.spectrum.values[k] = w[n - 1 - k];
        sys.basis.col(k) = a.col(n - 1 - k);
    }
    return sys;
}

std::vector<double> eigenvalues(const SymmetricMatrix& matrix) {
    check_symmetric(matrix);
    const int n = static_cast<int>(matrix.rows());
    Eigen::MatrixXd a = matrix;
    std::vector<double> w(n);
    check_lapack(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'U', n, a.data(), n, w.data()), "dsyevd");
    std::reverse(w.begin(), w.end());
    return w;
}

std::pair<double, Eigen::VectorXd> top_eigenpair(const SymmetricMatrix& matrix) {
    check_symmetric(matrix);
    const int n = static_cast<int>(matrix.rows());
    Eigen::MatrixXd a = matrix;
    Eigen::VectorXd z(n);
    std::vector<double> w(n);
    std::vector<lapack_int> support(2);
    lapack_int found = 0;
    check_lapack(LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, a.data(), n, 0.0, 0.0, n, n, 0.0,
                                &found, w.data(), z.data(), n, support.data()),
                 "dsyevr");
    return {w[0], z};
}

std::vector<double> tridiagonal_eigenvalues(std::vector<double> diag, std::vector<double> offdiag) {
    const int n = static_cast<int>(diag.size());
    if (offdiag.size() + 1 != diag.size()) throw InputError("tridiagonal sizes do not match");
    if (n > 1) check_lapack(LAPACKE_dsterf(n, diag.data(), offdiag.data()), "dsterf");
    std::reverse(diag.begin(), diag.end());
    return diag;
}

Spectrum sample_spectrum(const EnsembleSpec& spec, std::int64_t metropolis_steps) {
    switch (spec.kind) {
        case EnsembleKind::goe: return Spectrum{eigenvalues(sample_goe(spec)), spec};
        case EnsembleKind::beta_tridiagonal: return sample_beta_tridiagonal(spec);
        case EnsembleKind::levy: return Spectrum{eigenvalues(sample_levy_matrix(spec)), spec};
        case EnsembleKind::spiked_goe: return Spectrum{eigenvalues(sample_spiked(spec)), spec};
        case EnsembleKind::coulomb_metropolis: return sample_coulomb_metropolis(spec, metropolis_steps);
        case EnsembleKind::poisson:
        case EnsembleKind::picket_fence:
            throw ParameterError("poisson and picket_fence spectra need a density profile");
    }
    throw ParameterError("unknown ensemble kind");
}

}  // namespace rmt::ensembles
