#include "rmt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rmt/error.hpp"

namespace rmt::numerics {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-12; }

// ∫_0^1 s^m / (1 − r s) ds for m > −1 and r < 1.
double tail_kernel_integral(double m, double r) {
    if (std::abs(r) < 0.5 || (!is_integer(m) && std::abs(r) < 0.9)) {
        double sum = 0.0;
        double rk = 1.0;
        for (int k = 0; k < 2000; ++k) {
            const double term = rk / (m + k + 1.0);
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
            rk *= r;
        }
        return sum;
    }
    if (is_integer(m)) {
        // I_0 = −ln(1 − r)/r,  I_k = (I_{k−1} − 1/k)/r; stable for |r| ≥ 1/2.
        double value = -std::log1p(-r) / r;
        const int steps = static_cast<int>(std::lround(m));
        for (int k = 1; k <= steps; ++k) value = (value - 1.0 / k) / r;
        return value;
    }
    auto integrand = [m, r](double s) { return std::pow(s, m) / (1.0 - r * s); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 20,
                                                                         1e-13);
}

// ∫_Y^∞ c·u^p / (u − y) du for y < Y, via u = Y/s.
double right_tail_integral(double Y, double c, double p, double y) {
    if (c == 0.0) return 0.0;
    return c * std::pow(Y, p) * tail_kernel_integral(-p - 1.0, y / Y);
}

}  // namespace

void GridFunction::validate() const {
    if (grid.size() < 2) throw InputError("grid function needs at least two nodes");
    if (grid.size() != values.size()) throw InputError("grid and values differ in length");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw InputError("grid must be strictly increasing");
    }
    if (tail) {
        if (!(tail->exponent < 0.0)) throw InputError("tail model must decay (exponent < 0)");
        if (tail->coef_right != 0.0 && !(grid.back() > 0.0))
            throw InputError("right tail requires a positive grid end");
        if (tail->coef_left != 0.0 && !(grid.front() < 0.0))
            throw InputError("left tail requires a negative grid start");
    }
}

double GridFunction::operator()(double y) const {
    if (y < grid.front()) {
        return tail ? tail->coef_left * std::pow(std::abs(y), tail->exponent) : 0.0;
    }
    if (y > grid.back()) {
        return tail ? tail->coef_right * std::pow(y, tail->exponent) : 0.0;
    }
    const auto it = std::upper_bound(grid.begin(), grid.end(), y);
    const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - grid.begin()),
                                                 grid.size() - 1);
    const std::size_t lo = hi - 1;
    const double w = (y - grid[lo]) / (grid[hi] - grid[lo]);
    return values[lo] + w * (values[hi] - values[lo]);
}

double principal_value_transform(const GridFunction& f, double y) {
    const auto& u = f.grid;
    const auto& v = f.values;
    const std::size_t n = u.size();
    if (f.tail && !(y > u.front() && y < u.back())) {
        throw DomainError("principal value with tails requires y strictly inside the grid");
    }

    // Exact PV integral of the linear interpolant:
    //   Σ_k s_k h_k + Σ_j c_j ln|u_j − y|
    // with c_j = (s_{j−1} − s_j)(y − u_j) at interior nodes.
    double regular = 0.0;
    double logs = 0.0;
    double prev_slope = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double h = u[k + 1] - u[k];
        const double slope = (v[k + 1] - v[k]) / h;
        regular += v[k + 1] - v[k];
        const double d = u[k] - y;
        if (k == 0) {
            if (d != 0.0) logs -= (v[0] + slope * (y - u[0])) * std::log(std::abs(d));
        } else if (d != 0.0) {
            logs += (prev_slope - slope) * (y - u[k]) * std::log(std::abs(d));
        }
        prev_slope = slope;
    }
    const double d_end = u[n - 1] - y;
    if (d_end != 0.0) {
        logs += (v[n - 1] + prev_slope * (y - u[n - 1])) * std::log(std::abs(d_end));
    }

    double tails = 0.0;
    if (f.tail) {
        const double p = f.tail->exponent;
        tails += right_tail_integral(u.back(), f.tail->coef_right, p, y);
        // ∫_{−∞}^{−Y} c|u|^p/(u − y) du = −∫_Y^∞ c w^p/(w + y) dw
        tails -= right_tail_integral(-u.front(), f.tail->coef_left, p, -y);
    }
    return regular + logs + tails;
}

std::vector<double> principal_value_transform_on_grid(const GridFunction& f) {
    f.validate();
    const auto& u = f.grid;
    const std::size_t n = u.size();
    if (n < 4) throw InputError("need at least four nodes to transform on the grid");
    std::vector<double> out(n);
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = principal_value_transform(f, u[i]);
    auto extrapolate = [&](std::size_t at, std::size_t a, std::size_t b) {
        const double w = (u[at] - u[a]) / (u[b] - u[a]);
        return out[a] + w * (out[b] - out[a]);
    };
    out[0] = extrapolate(0, 1, 2);
    out[n - 1] = extrapolate(n - 1, n - 2, n - 3);
    return out;
}

double principal_value_stieltjes(const GridFunction& density, double x) {
    density.validate();
    if (!(x > density.grid.front() && x < density.grid.back())) {
        throw DomainError("principal value Stieltjes requires x strictly inside the support");
    }
    GridFunction compact{density.grid, density.values, std::nullopt};
    return -principal_value_transform(compact, x);
}

TailModel fit_tail(const GridFunction& f, std::size_t points) {
    const std::size_t n = f.grid.size();
    points = std::min(points, n / 2);
    TailModel model{};
    std::vector<double> slopes;

    auto side_fit = [&](bool right) -> std::optional<double> {
        std::vector<double> lx, ly;
        double sign = 0.0;
        for (std::size_t k = 0; k < points; ++k) {
            const std::size_t i = right ? n - 1 - k : k;
            const double y = f.grid[i];
            const double val = f.values[i];
            if ((right && y <= 0.0) || (!right && y >= 0.0) || val == 0.0) return std::nullopt;
            const double s = val > 0 ? 1.0 : -1.0;
            if (sign == 0.0) sign = s;
            if (s != sign) return std::nullopt;
            lx.push_back(std::log(std::abs(y)));
            ly.push_back(std::log(std::abs(val)));
        }
        if (lx.size() < 2) return std::nullopt;
        return fit_line(lx, ly).slope;
    };
    const auto pr = side_fit(true);
    const auto pl = side_fit(false);
    if (pr) slopes.push_back(*pr);
    if (pl) slopes.push_back(*pl);
    if (slopes.empty()) return model;
    model.exponent = std::accumulate(slopes.begin(), slopes.end(), 0.0) / slopes.size();
    if (!(model.exponent < 0.0)) {
        model.exponent = -2.0;
        return model;
    }
    if (pr) model.coef_right = f.values.back() / std::pow(f.grid.back(), model.exponent);
    if (pl) model.coef_left = f.values.front() / std::pow(-f.grid.front(), model.exponent);
    return model;
}

GridFunction hilbert_inverse(const GridFunction& gamma) {
    if (!gamma.tail) throw InputError("hilbert_inverse requires a tail model on the input");
    auto transformed = principal_value_transform_on_grid(gamma);
    GridFunction out{gamma.grid, std::move(transformed), std::nullopt};
    for (auto& v : out.values) v *= -1.0 / (kPi * kPi);
    out.tail = fit_tail(out);
    return out;
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw InputError("KS statistic of an empty sample");
    const auto s = sorted(samples);
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double F = cdf(s[i]);
        d = std::max({d, (i + 1) / n - F, F - i / n});
    }
    return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InputError("KS statistic of an empty sample");
    const auto sa = sorted(a);
    const auto sb = sorted(b);
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() && j < sb.size()) {
        const double x = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] <= x) ++i;
        while (j < sb.size() && sb[j] <= x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

std::vector<double> sorted(std::span<const double> samples) {
    std::vector<double> out(samples.begin(), samples.end());
    std::sort(out.begin(), out.end());
    return out;
}

double quantile_sorted(std::span<const double> s, double p) {
    if (s.empty()) throw InputError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("quantile level must lie in [0, 1]");
    const double h = (static_cast<double>(s.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double quantile(std::span<const double> samples, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("quantile level must lie in [0, 1]");
    return quantile_sorted(sorted(samples), p);
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
    double sum = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) sum += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return sum;
}

std::vector<double> fd_weights(double x0, std::span<const double> nodes, int order) {
    const std::size_t n = nodes.size();
    const int m = order;
    // c[j][k]: weight of node j for derivative k
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min<int>(static_cast<int>(i), m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) w[j] = c[j][m];
    return w;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxx > 0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

double cauchy_cdf(double g, double center, double half_width) {
    return 0.5 + std::atan((g - center) / half_width) / kPi;
}

double cauchy_quantile(double p, double center, double half_width) {
    return center + half_width * std::tan(kPi * (p - 0.5));
}

double semicircle_density(double x, double sigma2) {
    const double r2 = 4.0 * sigma2 - x * x;
    return r2 > 0 ? std::sqrt(r2) / (2.0 * kPi * sigma2) : 0.0;
}

double semicircle_cdf(double x, double sigma2) {
    const double edge = 2.0 * std::sqrt(sigma2);
    if (x <= -edge) return 0.0;
    if (x >= edge) return 1.0;
    return 0.5 + x * std::sqrt(4.0 * sigma2 - x * x) / (4.0 * kPi * sigma2) +
           std::asin(x / edge) / kPi;
}

double semicircle_pv(double x, double sigma2) {
    const double edge = 2.0 * std::sqrt(sigma2);
    if (std::abs(x) < edge) return x / (2.0 * sigma2);
    const double root = std::sqrt(x * x - 4.0 * sigma2);
    return 2.0 / (x + std::copysign(root, x));
}

std::complex<double> semicircle_stieltjes(std::complex<double> z, double sigma2) {
    const double edge = 2.0 * std::sqrt(sigma2);
    const std::complex<double> s = std::sqrt(z - edge) * std::sqrt(z + edge);
    return 2.0 / (z + s);
}

double hill_tail_index(std::span<const double> samples, std::size_t k) {
    std::vector<double> a(samples.size());
    std::transform(samples.begin(), samples.end(), a.begin(), [](double v) { return std::abs(v); });
    if (k < 2 || k >= a.size()) throw ParameterError("Hill estimator needs 2 <= k < n");
    std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k), a.end(),
                     std::greater<>());
    const double threshold = a[k];
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += std::log(a[i] / threshold);
    return static_cast<double>(k) / sum;
}

}  // namespace rmt::numerics
