#include "rmt/dyson_flow.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include <lapacke.h>

#include "rmt/error.hpp"
#include "rmt/io.hpp"
#include "rmt/numerics.hpp"
#include "rmt/parallel.hpp"
#include "rmt/random.hpp"

namespace rmt::dyson {

namespace {

constexpr double kPi = std::numbers::pi;

SymmetricMatrix goe_increment(int n, double variance_scale, std::uint64_t seed) {
    ensembles::EnsembleSpec spec;
    spec.kind = ensembles::EnsembleKind::goe;
    spec.n = n;
    spec.sigma2 = variance_scale;
    spec.seed = seed;
    return ensembles::sample_goe(spec);
}

bool on_branch(cplx z, cplx g) {
    const double scale = std::max(1.0, std::abs(g));
    if (z.imag() == 0.0) return std::abs(g.imag()) <= 1e-12 * scale;
    return z.imag() < 0.0 ? g.imag() > 0.0 : g.imag() < 0.0;
}

}  // namespace

MatrixPath evolve_matrix_bm(const SymmetricMatrix& c, double sigma2, double t, int n_steps,
                            std::uint64_t seed) {
    if (n_steps < 1) throw ParameterError("n_steps must be at least 1");
    if (!(t >= 0.0) || !(sigma2 >= 0.0)) throw ParameterError("t and sigma2 must be nonnegative");
    if (c.rows() != c.cols() || c.rows() < 2) throw InputError("C must be square with n >= 2");
    const int n = static_cast<int>(c.rows());
    const double dt = t / n_steps;
    MatrixPath path;
    path.times.push_back(0.0);
    path.matrices.push_back(c);
    SymmetricMatrix m = c;
    for (int k = 1; k <= n_steps; ++k) {
        if (dt > 0.0 && sigma2 > 0.0) m += goe_increment(n, sigma2 * dt, derive_seed(seed, k));
        path.times.push_back(k == n_steps ? t : k * dt);
        path.matrices.push_back(m);
    }
    return path;
}

std::vector<double> evolve_eigen_sde(std::vector<double> values, double sigma2, double t, double dt,
                                     std::uint64_t seed, EigenSdeStats* stats) {
    if (!(t >= 0.0) || !(dt > 0.0) || !(sigma2 >= 0.0)) {
        throw ParameterError("need t >= 0, dt > 0 and sigma2 >= 0");
    }
    std::sort(values.begin(), values.end(), std::greater<>());
    const std::size_t n = values.size();
    if (n < 2) throw InputError("need at least two eigenvalues");
    const double nd = static_cast<double>(n);
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> drift(n), noise(n), next(n);
    EigenSdeStats local;
    double time = 0.0;
    while (time < t) {
        double h = std::min(dt, t - time);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) s += 1.0 / (values[i] - values[j]);
            }
            drift[i] = sigma2 * s / nd;
        }
        bool accepted = false;
        for (int halving = 0; halving <= 60; ++halving) {
            const double amp = std::sqrt(2.0 * sigma2 * h / nd);
            for (auto& z : noise) z = normal(rng);
            for (std::size_t i = 0; i < n; ++i) next[i] = values[i] + amp * noise[i] + drift[i] * h;
            bool ordered = true;
            for (std::size_t i = 0; i + 1 < n && ordered; ++i) ordered = next[i] > next[i + 1];
            if (!ordered) {
                h *= 0.5;
                ++local.halvings;
                continue;
            }
            accepted = true;
            break;
        }
        if (!accepted) {
            throw IntegrationError("eigenvalue SDE: eigenvalues still cross after 60 step halvings at t = " +
                                   fmt17(time));
        }
        values.swap(next);
        time += h;
        ++local.steps;
    }
    if (stats) *stats = local;
    return values;
}

StieltjesTransform stieltjes_of_spectrum(std::vector<double> values) {
    if (values.empty()) throw InputError("empty spectrum");
    auto shared = std::make_shared<const std::vector<double>>(std::move(values));
    StieltjesTransform s;
    s.value = [shared](cplx z) {
        cplx acc = 0.0;
        for (double mu : *shared) acc += 1.0 / (z - mu);
        return acc / static_cast<double>(shared->size());
    };
    s.derivative = [shared](cplx z) {
        cplx acc = 0.0;
        for (double mu : *shared) {
            const cplx d = 1.0 / (z - mu);
            acc -= d * d;
        }
        return acc / static_cast<double>(shared->size());
    };
    return s;
}

StieltjesTransform stieltjes_zero() {
    return {[](cplx z) { return 1.0 / z; }, [](cplx z) { return -1.0 / (z * z); }};
}

std::vector<double> equispaced(int n, double lo, double hi) {
    if (n < 2 || !(hi > lo)) throw ParameterError("equispaced needs n >= 2 and hi > lo");
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = hi - (hi - lo) * j / (n - 1.0);
    return v;
}

CharacteristicSolution solve_characteristics(const StieltjesTransform& g_c, cplx z, double sigma2,
                                             double t, double t0) {
    if (!(t0 >= 0.0) || !(t >= t0)) throw ParameterError("need t >= t0 >= 0");
    if (!(sigma2 >= 0.0)) throw ParameterError("sigma2 must be nonnegative");
    const double s = sigma2 * (t - t0);
    CharacteristicSolution sol;
    sol.z = z;
    sol.t = t;
    sol.t0 = t0;
    cplx g = g_c.value(z);
    if (s == 0.0) {
        sol.g = g;
        sol.Z = z;
        sol.branch_ok = on_branch(z, g);
        return sol;
    }

    constexpr int kMaxIterations = 10000;
    constexpr int kFixedPointBudget = 300;
    const double tol = 1e-14;
    double alpha = 0.5;
    double prev = std::numeric_limits<double>::infinity();
    int it = 0;
    bool converged = false;
    for (; it < kFixedPointBudget; ++it) {
        const cplx next = g_c.value(z - s * g);
        const double step = std::abs(next - g);
        if (!std::isfinite(step)) break;
        if (step < tol * std::max(1.0, std::abs(g))) {
            g = next;
            converged = true;
            break;
        }
        if (step > prev) alpha = std::max(0.05, 0.5 * alpha);
        prev = step;
        g = (1.0 - alpha) * g + alpha * next;
    }
    if (!converged) {
        // Newton on F(g) = g − g_C(z − s g), from the damped iterate if it is usable.
        if (!std::isfinite(std::abs(g)) || !on_branch(z, g)) g = g_c.value(z);
        for (; it < kMaxIterations; ++it) {
            const cplx Z = z - s * g;
            const cplx f = g - g_c.value(Z);
            const cplx df = 1.0 + s * g_c.derivative(Z);
            cplx step = f / df;
            // keep the iterate on the requested half plane
            double damp = 1.0;
            cplx trial = g - step;
            while (z.imag() != 0.0 && !on_branch(z, trial) && damp > 1e-6) {
                damp *= 0.5;
                trial = g - damp * step;
            }
            g = trial;
            if (std::abs(damp * step) < tol * std::max(1.0, std::abs(g))) {
                converged = true;
                break;
            }
        }
    }
    sol.g = g;
    sol.Z = z - s * g;
    sol.iterations = it;
    sol.residual = std::abs(g - g_c.value(sol.Z));
    sol.branch_ok = on_branch(z, g);
    if (!converged || !sol.branch_ok || !(sol.residual < 1e-10 * std::max(1.0, std::abs(g)))) {
        std::ostringstream os;
        os << "characteristics solver failed at z = (" << fmt17(z.real()) << ", " << fmt17(z.imag())
           << "), t = " << fmt17(t) << ": iterations " << it << ", residual " << fmt17(sol.residual)
           << ", g = (" << fmt17(g.real()) << ", " << fmt17(g.imag()) << "), branch "
           << (sol.branch_ok ? "ok" : "wrong");
        throw SolverError(os.str());
    }
    return sol;
}

CharacteristicSolution evolved_stieltjes(const StieltjesTransform& g_c, cplx z, double sigma2,
                                         double t0, double t1) {
    if (!(t1 >= t0)) throw ParameterError("need t1 >= t0");
    const double s0 = sigma2 * t0;
    StieltjesTransform at_t0;
    at_t0.value = [&](cplx w) { return solve_characteristics(g_c, w, sigma2, t0).g; };
    at_t0.derivative = [&](cplx w) {
        const cplx g = solve_characteristics(g_c, w, sigma2, t0).g;
        const cplx d = g_c.derivative(w - s0 * g);
        return d / (1.0 + s0 * d);
    };
    auto sol = solve_characteristics(at_t0, z, sigma2, t1, t0);
    sol.t0 = t0;
    sol.Z = z - sigma2 * t1 * sol.g;
    sol.residual = std::abs(sol.g - g_c.value(sol.Z));
    return sol;
}

double burgers_residual(const StieltjesTransform& g_c, cplx z, double sigma2, double t, double h) {
    if (!(t > h)) throw ParameterError("burgers_residual needs t > h");
    auto g = [&](cplx w, double s) { return solve_characteristics(g_c, w, sigma2, s).g; };
    const cplx dt = (g(z, t + h) - g(z, t - h)) / (2.0 * h);
    const cplx dz = (g(z + h, t) - g(z - h, t)) / (2.0 * h);
    return std::abs(dt + sigma2 * g(z, t) * dz);
}

ResolventFlow resolvent_flow(const ensembles::EigenSystem& c, cplx z, double sigma2, double t) {
    const auto& mu = c.spectrum.values;
    const auto sol = solve_characteristics(stieltjes_of_spectrum(mu), z, sigma2, t);
    const Eigen::Index n = static_cast<Eigen::Index>(mu.size());
    Eigen::VectorXcd d(n);
    for (Eigen::Index j = 0; j < n; ++j) d(j) = 1.0 / (sol.Z - mu[j]);
    const Eigen::MatrixXcd u = c.basis.cast<cplx>();
    return {u * d.asDiagonal() * u.transpose(), sol};
}

namespace {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

void invert_in_place(Mat<double>& a) {
    const lapack_int n = static_cast<lapack_int>(a.rows());
    std::vector<lapack_int> piv(n);
    if (LAPACKE_dgetrf(LAPACK_COL_MAJOR, n, n, a.data(), n, piv.data()) != 0 ||
        LAPACKE_dgetri(LAPACK_COL_MAJOR, n, a.data(), n, piv.data()) != 0) {
        throw EvaluationError("resolvent: z − M is singular");
    }
}

void invert_in_place(Mat<cplx>& a) {
    const lapack_int n = static_cast<lapack_int>(a.rows());
    std::vector<lapack_int> piv(n);
    auto* data = reinterpret_cast<lapack_complex_double*>(a.data());
    if (LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, data, n, piv.data()) != 0 ||
        LAPACKE_zgetri(LAPACK_COL_MAJOR, n, data, n, piv.data()) != 0) {
        throw EvaluationError("resolvent: z − M is singular");
    }
}

template <class Scalar>
Mat<Scalar> resolvent(const SymmetricMatrix& m, Scalar z) {
    Mat<Scalar> a = -m.template cast<Scalar>();
    a.diagonal().array() += z;
    invert_in_place(a);
    return a;
}

template <class Scalar>
ItoDriftRecord drift_check(const SymmetricMatrix& m, double sigma2, Scalar z, double dt, int n_reps,
                           std::uint64_t seed) {
    const int n = static_cast<int>(m.rows());
    const double nd = n;
    const Mat<Scalar> g_mat = resolvent<Scalar>(m, z);
    const Scalar g = g_mat.trace() / nd;
    const Mat<Scalar> g2 = g_mat * g_mat;
    const Mat<Scalar> theory = sigma2 * g * g2 + (sigma2 / nd) * (g2 * g_mat);

    Mat<Scalar> sum = Mat<Scalar>::Zero(n, n);
    double tr_re = 0.0, tr_im = 0.0, tr_re2 = 0.0, tr_im2 = 0.0;
    for (int r = 0; r < n_reps; ++r) {
        const SymmetricMatrix dw = goe_increment(n, sigma2 * dt, derive_seed(seed, r));
        const Mat<Scalar> est =
            (resolvent<Scalar>(m + dw, z) + resolvent<Scalar>(m - dw, z) - 2.0 * g_mat) / (2.0 * dt);
        sum += est;
        const cplx tr = cplx(est.trace()) / nd;
        tr_re += tr.real();
        tr_im += tr.imag();
        tr_re2 += tr.real() * tr.real();
        tr_im2 += tr.imag() * tr.imag();
    }
    const double reps = n_reps;
    const Mat<Scalar> measured = sum / reps;
    ItoDriftRecord rec;
    rec.measured_trace = cplx(tr_re, tr_im) / reps;
    rec.theory_trace = cplx(theory.trace()) / nd;
    const double var = (tr_re2 / reps - std::pow(tr_re / reps, 2)) + (tr_im2 / reps - std::pow(tr_im / reps, 2));
    rec.stderr_trace = std::sqrt(std::max(0.0, var) / reps);
    rec.max_rel_deviation = (measured - theory).cwiseAbs().maxCoeff() / theory.cwiseAbs().maxCoeff();
    rec.antisymmetric_max = (measured - measured.transpose()).cwiseAbs().maxCoeff();
    return rec;
}

}  // namespace

ItoDriftRecord ito_drift_check(const SymmetricMatrix& m, double sigma2, cplx z, double dt, int n_reps,
                               std::uint64_t seed) {
    if (n_reps < 1) throw ParameterError("n_reps must be positive");
    if (!(sigma2 > 0.0)) throw ParameterError("sigma2 must be positive");
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    if (dt > 1e-4) throw StepError("dt = " + fmt17(dt) + " exceeds 1e-4");
    const auto lambda = ensembles::eigenvalues(m);
    double dist = std::numeric_limits<double>::infinity();
    for (double l : lambda) dist = std::min(dist, std::abs(z - l));
    if (sigma2 * dt > 0.1 * dist * dist) {
        throw StepError("dt too large: the quartic term exceeds 10% of the drift");
    }
    if (z.imag() == 0.0) return drift_check<double>(m, sigma2, z.real(), dt, n_reps, seed);
    return drift_check<cplx>(m, sigma2, z, dt, n_reps, seed);
}

IdentityCheck resolvent_identities(const SymmetricMatrix& m, cplx z) {
    const auto sys = ensembles::eigen_decompose(m);
    const auto& lambda = sys.spectrum.values;
    double dist = std::numeric_limits<double>::infinity();
    for (double l : lambda) dist = std::min(dist, std::abs(z - l));
    if (!(dist > 0.0)) throw DomainError("z lies on the spectrum");
    const double h = dist / 20.0;
    const Eigen::MatrixXcd u = sys.basis.cast<cplx>();
    const Eigen::Index n = m.rows();
    auto g_at = [&](cplx w) {
        Eigen::VectorXcd d(n);
        for (Eigen::Index j = 0; j < n; ++j) d(j) = 1.0 / (w - lambda[j]);
        return Eigen::MatrixXcd(u * d.asDiagonal() * u.transpose());
    };
    std::vector<double> nodes;
    for (int k = -4; k <= 4; ++k) nodes.push_back(k * h);
    const auto w1 = numerics::fd_weights(0.0, nodes, 1);
    const auto w2 = numerics::fd_weights(0.0, nodes, 2);
    Eigen::MatrixXcd d1 = Eigen::MatrixXcd::Zero(n, n), d2 = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k < 9; ++k) {
        const Eigen::MatrixXcd gk = g_at(z + nodes[k]);
        d1 += w1[k] * gk;
        d2 += w2[k] * gk;
    }
    const Eigen::MatrixXcd g = g_at(z);
    const Eigen::MatrixXcd g2 = g * g;
    IdentityCheck out;
    out.first = (g2 + d1).cwiseAbs().maxCoeff();
    out.second = (g2 * g - 0.5 * d2).cwiseAbs().maxCoeff();
    return out;
}

OverlapRecord overlap_theory(double lambda, double mu, double sigma2t, double g_re, double rho) {
    if (!(rho > 0.0)) throw DomainError("overlap theory needs rho > 0 (bulk)");
    if (!(sigma2t > 0.0)) throw ParameterError("sigma2 t must be positive");
    const double shift = lambda - mu - sigma2t * g_re;
    OverlapRecord rec;
    rec.lambda = lambda;
    rec.mu = mu;
    rec.value = sigma2t / (shift * shift + sigma2t * sigma2t * kPi * kPi * rho * rho);
    return rec;
}

OverlapTable overlap_monte_carlo(const std::vector<double>& c_values, double sigma2, double t, int n_reps,
                                 double eps, const std::vector<double>& lambda_grid,
                                 const std::vector<double>& mu_grid, std::uint64_t seed, int threads) {
    const int n = static_cast<int>(c_values.size());
    if (n < 2) throw InputError("C needs at least two eigenvalues");
    if (n_reps < 1) throw ParameterError("n_reps must be positive");
    if (!(eps > 0.0)) throw ParameterError("smoothing width must be positive");
    if (!(sigma2 * t > 0.0)) throw ParameterError("sigma2 t must be positive");
    OverlapTable table;
    if (eps < 10.0 / n) table.warnings.push_back("smoothing width below 10/N");
    const std::size_t nl = lambda_grid.size(), nm = mu_grid.size();

    std::vector<std::vector<int>> mu_bins(nm);
    for (std::size_t b = 0; b < nm; ++b) {
        for (int j = 0; j < n; ++j) {
            if (std::abs(c_values[j] - mu_grid[b]) < 0.5 * eps) mu_bins[b].push_back(j);
        }
    }

    struct RepResult {
        std::vector<double> sum, count;
        double row_error = 0.0;
    };
    std::vector<RepResult> reps(n_reps);
    parallel_for(static_cast<std::size_t>(n_reps), threads, [&](std::size_t r) {
        SymmetricMatrix m = goe_increment(n, sigma2 * t, derive_seed(seed, r));
        for (int j = 0; j < n; ++j) m(j, j) += c_values[j];
        const auto sys = ensembles::eigen_decompose(m);
        RepResult& out = reps[r];
        out.sum.assign(nl * nm, 0.0);
        out.count.assign(nl * nm, 0.0);
        const Eigen::MatrixXd sq = sys.basis.array().square() * static_cast<double>(n);
        for (int i = 0; i < n; ++i) {
            out.row_error = std::max(out.row_error, std::abs(sq.col(i).sum() / n - 1.0));
        }
        for (std::size_t a = 0; a < nl; ++a) {
            for (int i = 0; i < n; ++i) {
                if (std::abs(sys.spectrum.values[i] - lambda_grid[a]) >= 0.5 * eps) continue;
                for (std::size_t b = 0; b < nm; ++b) {
                    for (int j : mu_bins[b]) out.sum[a * nm + b] += sq(j, i);
                    out.count[a * nm + b] += mu_bins[b].size();
                }
            }
        }
    });

    bool imprecise = false;
    for (std::size_t a = 0; a < nl; ++a) {
        for (std::size_t b = 0; b < nm; ++b) {
            const std::size_t k = a * nm + b;
            double total = 0.0, count = 0.0, m1 = 0.0, m2 = 0.0;
            int used = 0;
            for (const auto& r : reps) {
                total += r.sum[k];
                count += r.count[k];
                if (r.count[k] > 0) {
                    const double v = r.sum[k] / r.count[k];
                    m1 += v;
                    m2 += v * v;
                    ++used;
                }
            }
            OverlapRecord rec;
            rec.lambda = lambda_grid[a];
            rec.mu = mu_grid[b];
            rec.monte_carlo = true;
            rec.count = static_cast<std::size_t>(count);
            rec.value = count > 0 ? total / count : std::numeric_limits<double>::quiet_NaN();
            if (used > 1) {
                const double mean = m1 / used;
                rec.stderr_ = std::sqrt(std::max(0.0, m2 / used - mean * mean) / (used - 1));
            }
            if (!(rec.stderr_ <= 0.05 * rec.value)) imprecise = true;
            table.records.push_back(rec);
        }
    }
    for (const auto& r : reps) table.max_row_sum_error = std::max(table.max_row_sum_error, r.row_error);
    if (imprecise) table.warnings.push_back("some bins have relative standard error above 5%");
    return table;
}

SpikeTrajectory spike_trajectory(double mu1, double sigma2, std::vector<double> times) {
    if (!(mu1 > 0.0) || !(sigma2 > 0.0)) throw ParameterError("need mu1 > 0 and sigma2 > 0");
    SpikeTrajectory tr;
    tr.mu1 = mu1;
    tr.sigma2 = sigma2;
    tr.t_star = mu1 * mu1 / sigma2;
    for (double t : times) {
        if (!(t >= 0.0)) throw ParameterError("times must be nonnegative");
        tr.times.push_back(t);
        if (t <= tr.t_star) {
            tr.lambda1.push_back(mu1 + sigma2 * t / mu1);
            tr.phi1.push_back(1.0 - t / tr.t_star);
        } else {
            tr.lambda1.push_back(2.0 * std::sqrt(sigma2 * t));
            tr.phi1.push_back(0.0);
        }
    }
    return tr;
}

BbpMeasurement bbp_measure(double mu1, double sigma2, double t, int n, int n_reps, std::uint64_t seed,
                           int threads) {
    if (n_reps < 1 || n < 2) throw ParameterError("need n >= 2 and n_reps >= 1");
    if (!(t >= 0.0)) throw ParameterError("t must be nonnegative");
    BbpMeasurement out;
    if (t == 0.0) {
        out.lambda1 = std::max(mu1, 0.0);
        out.phi1 = mu1 > 0.0 ? 1.0 : 0.0;
        return out;
    }
    std::vector<double> lambdas(n_reps), phis(n_reps);
    parallel_for(static_cast<std::size_t>(n_reps), threads, [&](std::size_t r) {
        ensembles::EnsembleSpec spec;
        spec.kind = ensembles::EnsembleKind::spiked_goe;
        spec.n = n;
        spec.sigma2 = sigma2;
        spec.time = t;
        spec.spike = mu1;
        spec.seed = derive_seed(seed, r);
        const auto [lambda, u] = ensembles::top_eigenpair(ensembles::sample_spiked(spec));
        lambdas[r] = lambda;
        phis[r] = u(0) * u(0);
    });
    auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
        double s = 0.0, s2 = 0.0;
        for (double x : v) {
            s += x;
            s2 += x * x;
        }
        const double k = static_cast<double>(v.size());
        mean = s / k;
        se = k > 1 ? std::sqrt(std::max(0.0, s2 / k - mean * mean) / (k - 1)) : 0.0;
    };
    mean_se(lambdas, out.lambda1, out.lambda1_stderr);
    mean_se(phis, out.phi1, out.phi1_stderr);
    return out;
}

}  // namespace rmt::dyson
