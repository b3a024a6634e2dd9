#include "rmt/levy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rmt/ensembles.hpp"
#include "rmt/error.hpp"
#include "rmt/io.hpp"
#include "rmt/numerics.hpp"
#include "rmt/parallel.hpp"

namespace rmt::levy {

namespace {

constexpr double kPi = std::numbers::pi;
using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

// Adaptive Gauss–Kronrod on [a, b], mapped to [−1, 1] first.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-13, unsigned depth = 15) {
    if (!(b > a)) return 0.0;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    auto u = [&](double t) { return f(mid + half * t); };
    return half * GK::integrate(u, -1.0, 1.0, depth, tol);
}

// Unit-scale law (S1 parameterization), y > 0, through the finite-range
// integral over θ ∈ (−θ0, π/2) of functions of g(θ) = y^{α/(α−1)} V(θ).
// Two charts keep the endpoints exact: φ = θ + θ0 near the lower end and
// ψ = π/2 − θ near the upper one.
struct Unit {
    double alpha;
    double theta0;
    double d0;  // π/2 − θ0
    double width;  // π/2 + θ0
    double expo;   // α/(α − 1)
    double log_c;  // log(cos αθ0)/(α − 1)

    Unit(double a, double beta) : alpha(a), expo(a / (a - 1.0)) {
        if (beta >= 1.0) {
            theta0 = kPi / 2.0;
            d0 = 0.0;
        } else {
            theta0 = std::atan(beta * std::tan(kPi * a / 2.0)) / a;
            d0 = kPi / 2.0 - theta0;
        }
        width = kPi - d0;
        log_c = std::log(std::cos(a * theta0)) / (a - 1.0);
    }

    struct Point {
        bool upper;
        double c;  // φ or ψ
    };

    double lg_lower(double phi, double l0) const {
        const double ct = std::log(std::sin(phi + d0));
        return l0 + expo * (ct - std::log(std::sin(alpha * phi))) +
               std::log(std::sin(d0 + (1.0 - alpha) * phi)) - ct;
    }
    double lg_upper(double psi, double l0) const {
        const double phi = width - psi;
        const double ct = std::log(std::sin(psi));
        return l0 + expo * (ct - std::log(std::sin(alpha * phi))) +
               std::log(std::sin(d0 + (1.0 - alpha) * phi)) - ct;
    }

    // where log g crosses `level`; log g increases with θ
    Point level_point(double level, double l0) const {
        const double half = 0.5 * width;
        const double top = std::log(half);
        if (level <= lg_lower(half, l0)) {
            double lo = -700.0, hi = top;
            if (lg_lower(std::exp(lo), l0) >= level) return {false, 0.0};
            for (int i = 0; i < 60 && hi - lo > 1e-9; ++i) {
                const double mid = 0.5 * (lo + hi);
                if (lg_lower(std::exp(mid), l0) < level) lo = mid;
                else hi = mid;
            }
            return {false, std::exp(0.5 * (lo + hi))};
        }
        double lo = -700.0, hi = top;  // in log ψ; log g decreases with ψ
        for (int i = 0; i < 60 && hi - lo > 1e-9; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (lg_upper(std::exp(mid), l0) > level) lo = mid;
            else hi = mid;
        }
        return {true, std::exp(0.5 * (lo + hi))};
    }

    template <class H>
    double integrate_levels(double y, H&& h, double* rest) const {
        const double l0 = expo * std::log(y) + log_c;
        std::vector<double> levels{-40.0, -12.0, -3.0, -1.0, 0.0, 1.0, 2.5, 4.1};
        // fully skewed laws keep g bounded below at θ = −θ0
        const double lg_min = lg_lower(1e-300, l0);
        if (lg_min > -1.0) {
            const double g_min = std::exp(lg_min);
            std::erase_if(levels, [&](double lv) { return lv <= lg_min; });
            levels.push_back(lg_min - 1.0);  // maps to θ = −θ0
            for (double k : {0.25, 1.0, 3.0, 10.0, 45.0}) levels.push_back(lg_min + std::log1p(k / g_min));
            std::sort(levels.begin(), levels.end());
        }
        std::vector<Point> pts;
        for (double lv : levels) pts.push_back(level_point(lv, l0));
        // chart boundary
        const double half = 0.5 * width;
        std::vector<Point> all;
        bool crossed = false;
        for (const auto& p : pts) {
            if (p.upper && !crossed) {
                if (!all.empty() && !all.back().upper) all.push_back({false, half});
                crossed = true;
            }
            all.push_back(p);
        }
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < all.size(); ++i) {
            Point a = all[i];
            const Point b = all[i + 1];
            if (!a.upper && b.upper) a = {true, half};
            if (!a.upper) {
                if (b.c > a.c) {
                    total += integrate([&](double phi) { return h(lg_lower(phi, l0)); }, a.c, b.c, 1e-13);
                }
            } else if (a.c > b.c) {
                total += integrate([&](double psi) { return h(lg_upper(psi, l0)); }, b.c, a.c, 1e-13);
            }
        }
        if (rest) {
            const Point& e = all.back();
            *rest = e.upper ? e.c : width - e.c;
        }
        return total;
    }

    double density(double y) const {
        auto h = [](double lg) {
            if (lg > 700.0) return 0.0;
            const double g = std::exp(lg);
            return g * std::exp(-g);
        };
        const double total = integrate_levels(y, h, nullptr);
        return alpha * total / (kPi * (1.0 - alpha) * y);
    }

    // P(X > y)
    double survival(double y) const {
        auto h = [](double lg) { return lg > 700.0 ? 1.0 : -std::expm1(-std::exp(lg)); };
        double rest = 0.0;
        const double total = integrate_levels(y, h, &rest);
        return (total + rest) / kPi;
    }
};

double unit_density(double alpha, double beta, double y) {
    if (y == 0.0) {
        const double t = beta * std::tan(kPi * alpha / 2.0);
        const double theta0 = std::atan(t) / alpha;
        return std::tgamma(1.0 + 1.0 / alpha) * std::cos(theta0) /
               (kPi * std::pow(1.0 + t * t, 1.0 / (2.0 * alpha)));
    }
    if (y < 0.0) return unit_density(alpha, -beta, -y);
    if (beta <= -1.0) return 0.0;
    return Unit(alpha, beta).density(y);
}

double unit_cdf(double alpha, double beta, double y) {
    if (y < 0.0) return 1.0 - unit_cdf(alpha, -beta, -y);
    const double theta0 = std::atan(beta * std::tan(kPi * alpha / 2.0)) / alpha;
    const double at_zero = (kPi / 2.0 - theta0) / kPi;
    if (y == 0.0) return at_zero;
    if (beta <= -1.0) return 1.0;
    return 1.0 - Unit(alpha, beta).survival(y);
}

double unit_scale(const StableLaw& law) { return std::pow(law.scale, 1.0 / law.alpha); }

}  // namespace

void StableLaw::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("stable index alpha must lie in (0, 1)");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("stable scale must be positive");
    if (!(asym >= -1.0 && asym <= 1.0)) throw ParameterError("stable asymmetry must lie in [-1, 1]");
}

double stable_density(const StableLaw& law, double s) {
    law.validate();
    const double gam = unit_scale(law);
    return unit_density(law.alpha, law.asym, s / gam) / gam;
}

std::vector<double> stable_density(const StableLaw& law, std::span<const double> s_grid) {
    std::vector<double> out;
    out.reserve(s_grid.size());
    for (double s : s_grid) out.push_back(stable_density(law, s));
    return out;
}

double stable_cdf(const StableLaw& law, double s) {
    law.validate();
    return std::clamp(unit_cdf(law.alpha, law.asym, s / unit_scale(law)), 0.0, 1.0);
}

double stable_density_fourier(const StableLaw& law, double s) {
    law.validate();
    const double a = law.alpha, c = law.scale;
    const double skew = c * law.asym * std::tan(kPi * a / 2.0);
    auto f = [&](double k) {
        const double ka = std::pow(k, a);
        return std::exp(-c * ka) * std::cos(skew * ka - k * s);
    };
    // pieces self-scaled to the decay length (C^{-1/α}) and the oscillation period
    const double k_max = std::pow(60.0 / c, 1.0 / a);
    const double k_decay = std::pow(1.0 / c, 1.0 / a);
    const double period = std::abs(s) > 0.0 ? kPi / std::abs(s) : k_max;
    double total = 0.0;
    double lo = 0.0;
    double step = std::min(1e-6 * k_decay, period);
    while (lo < k_max) {
        const double hi = std::min(k_max, lo + step);
        total += integrate(f, lo, hi, 1e-14, 8);
        lo = hi;
        step = std::min(step * 1.5, period);
    }
    return total / kPi;
}

double stable_draw(const StableLaw& law, Rng& rng) {
    const double a = law.alpha;
    const double t = law.asym * std::tan(kPi * a / 2.0);
    const double b = std::atan(t) / a;
    const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * a));
    const double v = kPi * (uniform_open(rng) - 0.5);
    const double w = -std::log(uniform_open(rng));
    const double x = s * std::sin(a * (v + b)) / std::pow(std::cos(v), 1.0 / a) *
                     std::pow(std::cos(v - a * (v + b)) / w, (1.0 - a) / a);
    return x * unit_scale(law);
}

std::vector<double> stable_sample(const StableLaw& law, std::size_t n, std::uint64_t seed) {
    law.validate();
    Rng rng = make_rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = stable_draw(law, rng);
    return out;
}

double stable_tail_constant(const StableLaw& law, bool right) {
    law.validate();
    const double a = law.alpha;
    const double side = right ? 1.0 + law.asym : 1.0 - law.asym;
    return law.scale * side / (2.0 * std::tgamma(1.0 - a) * std::cos(kPi * a / 2.0));
}

double levy_scale_factor(double mu) {
    if (!(mu > 0.0 && mu < 2.0)) throw ParameterError("levy tail index must lie in (0, 2)");
    const double a = mu / 2.0;
    return std::tgamma(1.0 - a) * std::cos(kPi * a / 2.0) / a;
}

StableLaw cavity_law(const LevyFixedPoint& fp) {
    StableLaw law{fp.mu / 2.0, levy_scale_factor(fp.mu) * fp.C, std::clamp(fp.beta, -1.0, 1.0)};
    law.validate();
    return law;
}

std::pair<double, double> self_consistency_map(double x, double mu, double C, double beta) {
    const StableLaw law{mu / 2.0, levy_scale_factor(mu) * C, std::clamp(beta, -1.0, 1.0)};
    law.validate();
    // E|x − S|^{−α} and E[sign(x − S)|x − S|^{−α}] from the Fourier transforms of
    // |u|^{−α} and sign(u)|u|^{−α}; with q = k^α both become
    // ∫₀^∞ e^{−Cq} {cos, sin}(x q^{1/α} − Cβ tan(πα/2) q) dq.
    const double a = law.alpha, c = law.scale;
    const double skew = c * law.asym * std::tan(kPi * a / 2.0);
    const double inv = 1.0 / a;
    auto phase = [&](double q) { return x * std::pow(q, inv) - skew * q; };
    const double q_max = 42.0 / c;
    double ic = 0.0, ib = 0.0;
    using G20 = boost::math::quadrature::gauss<double, 20>;
    double lo = 0.0;
    double step = q_max * 1e-12;
    while (lo < q_max) {
        const double rate = std::abs(x * inv * std::pow(lo + 0.5 * step, inv - 1.0) - skew);
        const double limit = std::min(0.25 / c, rate > 0.0 ? 1.5 / rate : q_max);
        const double hi = std::min(q_max, lo + std::min(step, limit));
        ic += G20::integrate([&](double q) { return std::exp(-c * q) * std::cos(phase(q)); }, lo, hi);
        ib += G20::integrate([&](double q) { return std::exp(-c * q) * std::sin(phase(q)); }, lo, hi);
        step = 2.0 * (hi - lo);
        lo = hi;
    }
    const double g1 = std::tgamma(1.0 - a);
    ic *= 2.0 * g1 * std::sin(kPi * a / 2.0) / (kPi * a);
    ib *= 2.0 * g1 * std::cos(kPi * a / 2.0) / (kPi * a);
    return {ic, ib};
}

/// Same integrals by direct quadrature against the density; slow, for cross-checks.
std::pair<double, double> self_consistency_map_direct(double x, double mu, double C, double beta) {
    const StableLaw law{mu / 2.0, levy_scale_factor(mu) * C, std::clamp(beta, -1.0, 1.0)};
    law.validate();
    const double a = law.alpha;
    auto side = [&](double sign) {
        // ∫₀^∞ r^{−α} L(x ∓ r) dr with r = t^{1/(1−α)} to remove the endpoint singularity
        const double p = 1.0 / (1.0 - a);
        auto f = [&](double t) {
            if (t <= 0.0) return 0.0;
            const double r = std::pow(t, p);
            return p * stable_density(law, x - sign * r);
        };
        boost::math::quadrature::exp_sinh<double> es;
        return es.integrate(f, 1e-11);
    };
    const double left = side(1.0), right = side(-1.0);
    return {left + right, left - right};
}

LevyFixedPoint levy_fixed_point(double x, double mu, double init_C, double init_beta, double tol,
                                int max_iterations) {
    if (!(mu > 0.0 && mu < 2.0)) throw ParameterError("levy tail index must lie in (0, 2)");
    if (!(init_C > 0.0) || !(std::abs(init_beta) <= 1.0)) throw ParameterError("bad initial (C, beta)");
    if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
    LevyFixedPoint fp;
    fp.x = x;
    fp.mu = mu;
    double c = init_C, d = init_C * init_beta;  // d = Cβ

    auto residual_at = [&](double cc, double dd, double& ic, double& id) {
        const auto [a, b] = self_consistency_map(x, mu, cc, dd / cc);
        ic = a;
        id = b;
        return std::max(std::abs(cc - a), std::abs(dd - b));
    };

    std::vector<double> hc, hd;
    for (int it = 0; it < max_iterations; ++it) {
        double ic, id;
        const double r = residual_at(c, d, ic, id);
        fp.residual_trace.push_back(r);
        fp.iterations = it;
        if (r < tol) {
            fp.C = c;
            fp.beta = d / c;
            fp.residual = r;
            return fp;
        }
        c = 0.5 * c + 0.5 * ic;
        d = 0.5 * d + 0.5 * id;
        hc.push_back(c);
        hd.push_back(d);
        if (it >= 20 && hc.size() >= 3 && it % 3 == 2) {
            const std::size_t n = hc.size();
            auto aitken = [](double x0, double x1, double x2) {
                const double den = x2 - 2.0 * x1 + x0;
                return std::abs(den) > 1e-300 ? x2 - (x2 - x1) * (x2 - x1) / den : x2;
            };
            const double ca = aitken(hc[n - 3], hc[n - 2], hc[n - 1]);
            double da = aitken(hd[n - 3], hd[n - 2], hd[n - 1]);
            if (ca > 0.0 && std::isfinite(ca) && std::isfinite(da)) {
                da = std::clamp(da, -ca, ca);
                double t1, t2;
                const double ra = residual_at(ca, da, t1, t2);
                double u1, u2;
                const double rc = residual_at(c, d, u1, u2);
                if (ra < rc) {
                    c = ca;
                    d = da;
                    hc.clear();
                    hd.clear();
                }
            }
        }
    }
    double ic, id;
    fp.residual = residual_at(c, d, ic, id);
    fp.C = c;
    fp.beta = d / c;
    std::string trace;
    for (std::size_t i = 0; i < fp.residual_trace.size(); i += std::max<std::size_t>(1, fp.residual_trace.size() / 10)) {
        trace += " " + fmt17(fp.residual_trace[i]);
    }
    throw SolverError("levy fixed point did not converge at x = " + fmt17(x) + " (residual " +
                      fmt17(fp.residual) + "; trace" + trace + ")");
}

std::vector<LevyDensityPoint> levy_density(std::span<const double> x_grid, double mu, int threads,
                                           double tol) {
    if (!(mu > 0.0 && mu < 2.0)) throw ParameterError("levy tail index must lie in (0, 2)");
    std::vector<LevyDensityPoint> out(x_grid.size());
    parallel_for(x_grid.size(), threads, [&](std::size_t i) {
        LevyDensityPoint& p = out[i];
        p.x = x_grid[i];
        try {
            p.fixed_point = levy_fixed_point(p.x, mu, 1.0, 0.0, tol);
            p.rho = stable_density(cavity_law(p.fixed_point), p.x);
            p.ok = true;
        } catch (const Error& e) {
            p.error = e.what();
            p.rho = std::numeric_limits<double>::quiet_NaN();
        }
    });
    return out;
}

std::vector<double> levy_x_grid(double x_max, double linear_from, double first, double linear_step) {
    if (!(first > 0.0 && linear_from > first && x_max > linear_from && linear_step > 0.0)) {
        throw ParameterError("levy grid needs 0 < first < linear_from < x_max and a positive step");
    }
    std::vector<double> grid;
    const int geo = std::max(2, static_cast<int>(std::ceil(std::log(linear_from / first) / std::log(1.25))));
    for (int i = 0; i < geo; ++i) grid.push_back(first * std::pow(linear_from / first, double(i) / geo));
    const int lin = static_cast<int>(std::ceil((x_max - linear_from) / linear_step));
    for (int i = 0; i <= lin; ++i) grid.push_back(linear_from + (x_max - linear_from) * i / lin);
    return grid;
}

double levy_density_mass(std::span<const double> x, std::span<const double> rho, double mu) {
    if (x.size() != rho.size() || x.size() < 2) throw InputError("density arrays differ or are too short");
    double half = numerics::trapezoid(x, rho);
    half += x.front() * rho.front();                  // [0, first]
    // x^{1+μ}ρ = c + d/x through the last two points
    const std::size_t m = x.size();
    const double xa = x[m - 2], xb = x[m - 1];
    const double ya = rho[m - 2] * std::pow(xa, 1.0 + mu), yb = rho[m - 1] * std::pow(xb, 1.0 + mu);
    const double d = (ya - yb) / (1.0 / xa - 1.0 / xb);
    const double c = yb - d / xb;
    half += c * std::pow(xb, -mu) / mu + d * std::pow(xb, -mu - 1.0) / (mu + 1.0);
    return 2.0 * half;
}

double g00_density(const LevyFixedPoint& fp, double g) {
    if (g == 0.0) return 0.0;
    return stable_density(cavity_law(fp), fp.x - 1.0 / g) / (g * g);
}

std::vector<double> g00_distribution(const LevyFixedPoint& fp, std::span<const double> g_grid) {
    std::vector<double> out;
    out.reserve(g_grid.size());
    for (double g : g_grid) out.push_back(g00_density(fp, g));
    return out;
}

double g00_cdf(const LevyFixedPoint& fp, double g) {
    const StableLaw law = cavity_law(fp);
    const double at_x = stable_cdf(law, fp.x);
    if (g == 0.0) return 1.0 - at_x;
    const double shifted = stable_cdf(law, fp.x - 1.0 / g);
    if (g > 0.0) return std::clamp(1.0 - at_x + shifted, 0.0, 1.0);
    return std::clamp(shifted - at_x, 0.0, 1.0);
}

double g00_quantile(const LevyFixedPoint& fp, double p) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("quantile level must lie in (0, 1)");
    double lo = -1.0, hi = 1.0;
    while (g00_cdf(fp, lo) > p) lo *= 2.0;
    while (g00_cdf(fp, hi) < p) hi *= 2.0;
    for (int i = 0; i < 100 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g00_cdf(fp, mid) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> levy_population_dynamics(double x, double mu, std::size_t pool_size, int n_terms,
                                             std::size_t updates, std::uint64_t seed, double core_fraction,
                                             PopulationStats* stats) {
    if (pool_size < 2) throw ParameterError("pool needs at least two members");
    const ensembles::LevyEntryLaw entry(mu, n_terms, core_fraction);
    Rng rng = make_rng(seed, 0);
    // start from G = 1/(x − S) with S drawn from a symmetric stable law
    const StableLaw start{mu / 2.0, 1.0, 0.0};
    std::vector<double> pool(pool_size);
    for (auto& g : pool) g = 1.0 / (x - stable_draw(start, rng));
    std::uniform_int_distribution<std::size_t> pick(0, pool_size - 1);
    std::size_t resampled = 0;
    for (std::size_t u = 0; u < updates; ++u) {
        for (;;) {
            double s = 0.0;
            for (int i = 0; i < n_terms; ++i) {
                const double w = entry(rng);
                s += w * w * pool[pick(rng)];
            }
            const double g = 1.0 / (x - s);
            if (std::isfinite(g) && std::isfinite(s)) {
                pool[pick(rng)] = g;
                break;
            }
            ++resampled;
        }
    }
    if (stats) {
        stats->resampled = resampled;
        stats->overflow_rate = updates ? double(resampled) / double(updates + resampled) : 0.0;
    }
    return pool;
}

}  // namespace rmt::levy
