#include "rmt/coulomb_scaling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rmt/error.hpp"
#include "rmt/io.hpp"
#include "rmt/numerics.hpp"

namespace rmt::coulomb {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSeriesLimit = 30.0;

// Σ_k (−1)^k a_k(ν)/v^k of the large-argument expansion of e^{−v}√(2πv) I_ν(v).
template <class T>
T asymptotic_sum(double nu, T v) {
    const double mu = 4.0 * nu * nu;
    T sum = 1.0;
    T term = 1.0;
    double last = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (8.0 * k) / v;
        const double size = std::abs(term);
        if (size > last) break;
        sum += term;
        last = size;
        if (size < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

}  // namespace

std::complex<double> bessel_i(double nu, std::complex<double> v) {
    if (nu < 0.0 && nu == std::round(nu)) nu = -nu;  // I_{−n} = I_n
    const double r = std::abs(v);
    if (r == 0.0) {
        if (nu == 0.0) return 1.0;
        if (nu > 0.0) return 0.0;
        throw RangeError("I_nu(0) is infinite for negative non-integer nu");
    }
    if (r <= kSeriesLimit) {
        const std::complex<double> half = 0.5 * v;
        const std::complex<double> q = half * half;
        std::complex<double> term = std::pow(half, nu) / std::tgamma(nu + 1.0);
        std::complex<double> sum = term;
        for (int m = 1; m < 500; ++m) {
            term *= q / (m * (m + nu));
            sum += term;
            if (m > r && std::abs(term) < 1e-17 * std::abs(sum)) break;
        }
        return sum;
    }
    if (v.real() <= 0.0) throw RangeError("large-argument Bessel expansion needs Re v > 0");
    if (v.real() > 700.0) throw RangeError("I_nu(v) overflows; use bessel_i_scaled");
    return std::exp(v) / std::sqrt(2.0 * kPi * v) * asymptotic_sum(nu, v);
}

double bessel_i_scaled(double nu, double v) {
    if (!(v > 0.0)) throw RangeError("bessel_i_scaled needs v > 0");
    if (v <= kSeriesLimit) return std::exp(-v) * bessel_i(nu, v).real();
    return asymptotic_sum(nu, v) / std::sqrt(2.0 * kPi * v);
}

double psi(double v) {
    if (std::abs(v) <= kSeriesLimit) {
        const double q = 0.25 * v * v;
        double term = 1.0 / std::tgamma(0.25);
        double sum = term;
        for (int m = 1; m < 500; ++m) {
            term *= q / (m * (m - 0.75));
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return std::pow(2.0, 0.75) * sum;
    }
    const double a = std::abs(v);
    return std::pow(a, 0.75) * std::exp(a) * bessel_i_scaled(-0.75, a);
}

double psi_prime(double v) {
    if (std::abs(v) <= kSeriesLimit) {
        const double half = 0.5 * v;
        const double q = half * half;
        double term = half / std::tgamma(1.25);
        double sum = term;
        for (int m = 2; m < 500; ++m) {
            term *= q / ((m - 1) * (m - 0.75));
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
        }
        return std::pow(2.0, 0.75) * sum;
    }
    const double a = std::abs(v);
    const double value = std::pow(a, 0.75) * std::exp(a) * bessel_i_scaled(0.25, a);
    return v < 0.0 ? -value : value;
}

double psi_ratio(double v) {
    if (std::abs(v) <= kSeriesLimit) return psi_prime(v) / psi(v);
    const double a = std::abs(v);
    const double ratio = asymptotic_sum(0.25, a) / asymptotic_sum(-0.75, a);
    return v < 0.0 ? -ratio : ratio;
}

double gamma_closed_form(double gamma0, double y) {
    const double v = 0.25 * gamma0 * y * y;
    return gamma0 * (1.0 - psi_ratio(v));
}

std::vector<double> default_y_grid(double extent, double fine, double ratio) {
    if (!(extent > 2.0) || !(fine > 0.0) || !(ratio >= 1.0)) {
        throw ParameterError("default grid needs extent > 2, fine > 0, ratio >= 1");
    }
    std::vector<double> half;
    const int steps = static_cast<int>(std::lround(2.0 / fine));
    for (int i = 0; i <= steps; ++i) half.push_back(i * (2.0 / steps));
    double h = 2.0 / steps;
    while (half.back() < extent) {
        h *= ratio;
        half.push_back(std::min(extent, half.back() + h));
        if (extent - half.back() < 0.5 * h) half.back() = extent;
    }
    std::vector<double> grid;
    for (auto it = half.rbegin(); it != half.rend(); ++it) {
        if (*it != 0.0) grid.push_back(-*it);
    }
    grid.insert(grid.end(), half.begin(), half.end());
    return grid;
}

std::vector<double> uniform_y_grid(double extent, double spacing) {
    if (!(extent > 0.0) || !(spacing > 0.0)) throw ParameterError("uniform grid needs positive sizes");
    const int steps = static_cast<int>(std::lround(extent / spacing));
    std::vector<double> grid;
    for (int i = -steps; i <= steps; ++i) grid.push_back(extent * i / steps);
    return grid;
}

ScalingProfile gamma_profile(double gamma0, std::vector<double> y_grid) {
    if (!(gamma0 > 0.0)) throw ParameterError("gamma0 must be positive");
    for (std::size_t i = 1; i < y_grid.size(); ++i) {
        if (!(y_grid[i] > y_grid[i - 1])) throw ParameterError("y grid must increase strictly");
    }
    ScalingProfile p;
    p.gamma0 = gamma0;
    p.y_grid = std::move(y_grid);
    p.gamma.reserve(p.y_grid.size());
    for (double y : p.y_grid) p.gamma.push_back(gamma_closed_form(gamma0, std::abs(y)));
    return p;
}

OdeResidual ode_residual(const ScalingProfile& profile, double y_lo, double y_hi) {
    const auto& y = profile.y_grid;
    const auto& g = profile.gamma;
    if (y.size() != g.size() || y.size() < 5) throw InputError("profile grid too small");
    const double g0 = profile.gamma0;
    std::vector<double> h(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) h[i] = y[i] == 0.0 ? 0.0 : (g0 - g[i]) / y[i];

    OdeResidual out;
    bool any = false;
    for (std::size_t i = 2; i + 2 < y.size(); ++i) {
        if (y[i] < y_lo || y[i] > y_hi) continue;
        any = true;
        const std::span<const double> nodes(&y[i - 2], 5);
        const auto w = numerics::fd_weights(y[i], nodes, 1);
        double dh = 0.0;
        for (int k = 0; k < 5; ++k) dh += w[k] * h[i - 2 + k];
        for (int k = 0; k < 4; ++k) out.coarse = out.coarse || nodes[k + 1] - nodes[k] > 0.01 + 1e-12;
        const double lhs = -0.5 * g[i] * g[i] + g0 * g[i];
        const double r = std::abs(lhs - dh);
        if (r > out.max_residual) {
            out.max_residual = r;
            out.at_y = y[i];
        }
    }
    if (!any) throw InputError("no interior grid nodes in the residual range");
    return out;
}

ScalingProfile density_perturbation(ScalingProfile profile) {
    if (profile.y_grid.size() != profile.gamma.size()) throw InputError("profile arrays differ in length");
    const double extent = std::min(-profile.y_grid.front(), profile.y_grid.back());
    if (extent < 40.0 - 1e-9) {
        profile.warnings.push_back("grid extent " + fmt17(extent) +
                                   " < 40: the y^-2 tail correction is less accurate");
    }
    numerics::GridFunction gamma{profile.y_grid, profile.gamma, numerics::TailModel{-2.0, -1.0, -1.0}};
    gamma.validate();
    const auto f = numerics::hilbert_inverse(gamma);
    profile.f_grid = f.grid;
    profile.f = f.values;
    if (profile.zeta < 0) {
        for (auto& v : profile.f) v = -v;
    }
    return profile;
}

std::vector<double> forward_transform(const ScalingProfile& profile, const std::vector<double>& y) {
    if (profile.f.empty()) throw InputError("profile has no density perturbation");
    numerics::GridFunction f{profile.f_grid, profile.f, std::nullopt};
    f.tail = numerics::fit_tail(f);
    std::vector<double> out;
    out.reserve(y.size());
    for (double v : y) out.push_back(numerics::principal_value_transform(f, v));
    return out;
}

double asymptotic_matching(const ScalingProfile& profile, double pi_rho0) {
    if (pi_rho0 == 0.0) pi_rho0 = profile.gamma0;
    std::vector<double> ys, y2g, gs;
    for (std::size_t i = 0; i < profile.y_grid.size(); ++i) {
        const double y = profile.y_grid[i];
        if (y >= 10.0 - 1e-12 && y <= 40.0 + 1e-12) {
            ys.push_back(y);
            gs.push_back(profile.gamma[i]);
            y2g.push_back(y * y * profile.gamma[i]);
        }
    }
    if (ys.size() < 3) throw RangeError("grid has fewer than three nodes in [10, 40]");
    const double c = numerics::trapezoid(ys, y2g) / (ys.back() - ys.front());
    double mean = 0.0;
    for (double g : gs) mean += g;
    mean /= gs.size();
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double r = gs[i] - c / (ys[i] * ys[i]);
        ss_res += r * r;
        ss_tot += (gs[i] - mean) * (gs[i] - mean);
    }
    const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    if (r2 < 0.99) throw RangeError("y^-2 fit on [10, 40] is poor (R^2 = " + fmt17(r2) + ")");
    return c * pi_rho0 / profile.gamma0;
}

ScalingProfile flip_branch(ScalingProfile profile) {
    profile.zeta = -profile.zeta;
    for (auto& v : profile.f) v = -v;
    return profile;
}

std::string gamma_csv(const ScalingProfile& profile) {
    std::ostringstream os;
    os << "y,gamma\n";
    for (std::size_t i = 0; i < profile.y_grid.size(); ++i) {
        os << fmt17(profile.y_grid[i]) << ',' << fmt17(profile.gamma[i]) << '\n';
    }
    return os.str();
}

std::string f_csv(const ScalingProfile& profile) {
    std::ostringstream os;
    os << "u,F\n";
    for (std::size_t i = 0; i < profile.f_grid.size(); ++i) {
        os << fmt17(profile.f_grid[i]) << ',' << fmt17(profile.f[i]) << '\n';
    }
    return os.str();
}

}  // namespace rmt::coulomb
