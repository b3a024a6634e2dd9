#include "rmt/resolvent_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rmt/error.hpp"
#include "rmt/io.hpp"
#include "rmt/numerics.hpp"
#include "rmt/parallel.hpp"
#include "rmt/random.hpp"

namespace rmt::resolvent {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

std::string to_string(WindowLaw law) {
    switch (law) {
        case WindowLaw::uniform: return "uniform";
        case WindowLaw::cauchy: return "cauchy";
        case WindowLaw::squared_cauchy: return "squared_cauchy";
    }
    return "unknown";
}

WindowLaw parse_window_law(const std::string& name) {
    if (name == "uniform") return WindowLaw::uniform;
    if (name == "cauchy") return WindowLaw::cauchy;
    if (name == "squared_cauchy") return WindowLaw::squared_cauchy;
    throw ParameterError("unknown window law '" + name + "'");
}

double window_density(WindowLaw law, double u) {
    switch (law) {
        case WindowLaw::uniform: return std::abs(u) <= 1.0 ? 0.5 : 0.0;
        case WindowLaw::cauchy: return 1.0 / (kPi * (1.0 + u * u));
        case WindowLaw::squared_cauchy: {
            const double d = 1.0 + u * u;
            return 2.0 / (kPi * d * d);
        }
    }
    return 0.0;
}

double window_cdf(WindowLaw law, double u) {
    switch (law) {
        case WindowLaw::uniform: return std::clamp(0.5 * (u + 1.0), 0.0, 1.0);
        case WindowLaw::cauchy: return 0.5 + std::atan(u) / kPi;
        case WindowLaw::squared_cauchy: return 0.5 + (std::atan(u) + u / (1.0 + u * u)) / kPi;
    }
    return 0.0;
}

double window_quantile(WindowLaw law, double p) {
    if (!(p > 0.0 && p < 1.0) && law != WindowLaw::uniform) {
        throw ParameterError("window quantile needs p in (0, 1)");
    }
    switch (law) {
        case WindowLaw::uniform: return 2.0 * std::clamp(p, 0.0, 1.0) - 1.0;
        case WindowLaw::cauchy: return std::tan(kPi * (p - 0.5));
        case WindowLaw::squared_cauchy: {
            // with u = tan θ the CDF is 1/2 + (2θ + sin 2θ)/(2π)
            const double target = 2.0 * kPi * (p - 0.5);
            double lo = -kPi / 2, hi = kPi / 2;
            for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
                const double mid = 0.5 * (lo + hi);
                (2.0 * mid + std::sin(2.0 * mid) < target ? lo : hi) = mid;
            }
            return std::tan(0.5 * (lo + hi));
        }
    }
    return 0.0;
}

// ---- sources -----------------------------------------------------------------

SpectrumSource SpectrumSource::fixed(std::vector<double> values, double lo, double hi,
                                     std::string description) {
    SpectrumSource s;
    s.n = static_cast<int>(values.size());
    s.support_lo = lo;
    s.support_hi = hi;
    s.draws_per_spectrum = 0;
    s.description = std::move(description);
    s.draw = [v = std::move(values)](std::uint64_t) { return v; };
    return s;
}

SpectrumSource SpectrumSource::ensemble(const ensembles::EnsembleSpec& spec, int draws_per_spectrum,
                                        std::int64_t metropolis_steps) {
    spec.validate();
    if (draws_per_spectrum < 0) throw ParameterError("draws_per_spectrum must be nonnegative");
    SpectrumSource s;
    s.n = spec.n;
    const double edge = 2.0 * std::sqrt(spec.sigma2);
    if (spec.kind == ensembles::EnsembleKind::levy) {
        s.support_lo = -std::numeric_limits<double>::infinity();
        s.support_hi = std::numeric_limits<double>::infinity();
    } else if (spec.kind == ensembles::EnsembleKind::coulomb_metropolis) {
        const double b = spec.potential.support_edge();
        s.support_lo = -b;
        s.support_hi = b;
    } else {
        s.support_lo = -edge;
        s.support_hi = edge;
    }
    s.draws_per_spectrum = draws_per_spectrum;
    s.description = ensembles::to_string(spec.kind) + " n=" + std::to_string(spec.n) +
                    (draws_per_spectrum == 0 ? " (fixed matrix)"
                                             : " (fresh matrix every " +
                                                   std::to_string(draws_per_spectrum) + " draws)");
    s.draw = [spec, metropolis_steps](std::uint64_t seed) {
        ensembles::EnsembleSpec local = spec;
        local.seed = seed;
        return ensembles::sample_spectrum(local, metropolis_steps).values;
    };
    return s;
}

SpectrumSource SpectrumSource::synthetic(ensembles::EnsembleKind kind, int n,
                                         const ensembles::DensityProfile& profile, double x0,
                                         int draws_per_spectrum) {
    SpectrumSource s;
    s.n = n;
    s.support_lo = profile.lo;
    s.support_hi = profile.hi;
    s.draws_per_spectrum = draws_per_spectrum;
    s.description = ensembles::to_string(kind) + " n=" + std::to_string(n);
    s.draw = [kind, n, profile, x0](std::uint64_t seed) {
        return ensembles::synthetic_spectrum(kind, n, profile, x0, seed).values;
    };
    return s;
}

// ---- window sampling --------------------------------------------------------------

double stieltjes_real(std::span<const double> values, double x) {
    if (values.empty()) throw InputError("empty spectrum");
    double acc = 0.0;
    for (double l : values) {
        const double d = x - l;
        if (d == 0.0) throw EvaluationError("evaluation point coincides with an eigenvalue");
        acc += 1.0 / d;
    }
    return acc / static_cast<double>(values.size());
}

double stieltjes_real(const ensembles::Spectrum& spectrum, double x) {
    return stieltjes_real(std::span<const double>(spectrum.values), x);
}

ResolventSampleSet sample_g_window(const SpectrumSource& source, double x, double eta,
                                   WindowLaw law, std::size_t n_samples, std::uint64_t seed,
                                   int threads) {
    if (!(x > source.support_lo && x < source.support_hi)) {
        throw DomainError("x = " + fmt17(x) + " lies outside the bulk support of the source");
    }
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ParameterError("eta must be positive");
    ResolventSampleSet set;
    set.x = x;
    set.eta = eta;
    set.window_law = law;
    set.source = source.description;
    if (source.n > 0 && (eta < 10.0 / source.n || eta > 0.2)) {
        set.warnings.push_back("eta outside the band 10/N <= eta <= 0.2");
    }
    if (n_samples == 0) return set;

    Rng rng = make_rng(seed, 0);
    std::vector<std::size_t> strata(n_samples);
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), rng);
    std::vector<double> offset(n_samples);
    for (auto& o : offset) o = uniform_open(rng);

    const double nd = static_cast<double>(n_samples);
    auto u_of = [&](std::size_t i, double w) {
        return window_quantile(law, (static_cast<double>(strata[i]) + w) / nd);
    };

    set.u.resize(n_samples);
    set.samples.resize(n_samples);
    const std::size_t block = source.draws_per_spectrum > 0
                                  ? static_cast<std::size_t>(source.draws_per_spectrum)
                                  : std::size_t{1024};
    const std::size_t blocks = (n_samples + block - 1) / block;
    std::vector<double> shared;
    if (source.draws_per_spectrum == 0) shared = source.draw(derive_seed(seed, 1));

    parallel_for(blocks, threads, [&](std::size_t b) {
        std::vector<double> own;
        if (source.draws_per_spectrum > 0) own = source.draw(derive_seed(seed, 2 + b));
        const std::vector<double>& values = source.draws_per_spectrum > 0 ? own : shared;
        const std::size_t end = std::min(n_samples, (b + 1) * block);
        for (std::size_t i = b * block; i < end; ++i) {
            double w = offset[i];
            for (int attempt = 0;; ++attempt) {
                const double u = u_of(i, w);
                try {
                    set.samples[i] = stieltjes_real(values, x + eta * u);
                    set.u[i] = u;
                    break;
                } catch (const EvaluationError&) {
                    if (attempt > 50) throw;
                    Rng jitter = make_rng(seed, 0x100000000ULL + i * 64 + attempt);
                    w = uniform_open(jitter);
                }
            }
        }
    });
    return set;
}

// ---- fits -----------------------------------------------------------------------

CauchyFit fit_cauchy(std::span<const double> samples, FitMethod method) {
    if (samples.size() < 100) throw FitError("Cauchy fit needs at least 100 samples");
    const auto s = numerics::sorted(samples);
    CauchyFit fit;
    fit.n = s.size();
    fit.method = method;
    fit.center = numerics::quantile_sorted(s, 0.5);
    fit.half_width = 0.5 * (numerics::quantile_sorted(s, 0.75) - numerics::quantile_sorted(s, 0.25));
    if (!(fit.half_width > 0.0)) throw FitError("degenerate samples (zero interquartile range)");

    if (method == FitMethod::max_likelihood) {
        double m = fit.center, g = fit.half_width;
        const double n = static_cast<double>(s.size());
        for (int it = 0; it < 2000; ++it) {
            double sw = 0.0, swx = 0.0;
            for (double v : s) {
                const double w = 1.0 / (g * g + (v - m) * (v - m));
                sw += w;
                swx += w * v;
            }
            const double m_new = swx / sw;
            const double g_new = std::sqrt(n / (2.0 * sw));
            const bool done = std::abs(m_new - m) < 1e-13 * g && std::abs(g_new - g) < 1e-13 * g;
            m = m_new;
            g = g_new;
            if (done) break;
        }
        fit.center = m;
        fit.half_width = g;
    }
    const double c = fit.center, h = fit.half_width;
    fit.ks = numerics::ks_statistic(s, [c, h](double v) { return numerics::cauchy_cdf(v, c, h); });
    return fit;
}

CauchyFit fit_cauchy(const ResolventSampleSet& set, FitMethod method) {
    return fit_cauchy(std::span<const double>(set.samples), method);
}

FitInterval bootstrap_fit(std::span<const double> samples, std::size_t resamples, std::uint64_t seed,
                          double level, FitMethod method) {
    if (resamples < 10) throw ParameterError("bootstrap needs at least 10 resamples");
    if (!(level > 0.0 && level < 1.0)) throw ParameterError("confidence level must lie in (0, 1)");
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    std::vector<double> centers, widths, draw(samples.size());
    for (std::size_t r = 0; r < resamples; ++r) {
        for (auto& d : draw) d = samples[pick(rng)];
        const auto f = fit_cauchy(draw, method);
        centers.push_back(f.center);
        widths.push_back(f.half_width);
    }
    const double a = 0.5 * (1.0 - level);
    FitInterval ci;
    ci.center_lo = numerics::quantile(centers, a);
    ci.center_hi = numerics::quantile(centers, 1.0 - a);
    ci.width_lo = numerics::quantile(widths, a);
    ci.width_hi = numerics::quantile(widths, 1.0 - a);
    return ci;
}

TailDensity tail_density_estimate(std::span<const double> samples, double center,
                                  std::span<const double> thresholds) {
    if (samples.empty()) throw InputError("no samples");
    if (thresholds.empty()) throw ParameterError("no thresholds");
    const double n = static_cast<double>(samples.size());
    TailDensity out;
    double err = 0.0;
    for (double G : thresholds) {
        if (!(G > 0.0)) throw ParameterError("thresholds must be positive");
        std::size_t count = 0;
        for (double g : samples) count += std::abs(g - center) > G;
        if (count < 20) {
            throw PrecisionError("only " + std::to_string(count) + " exceedances at threshold " +
                                 fmt17(G));
        }
        const double p = count / n;
        out.per_threshold.push_back(0.5 * G * p);
        err += 0.5 * G * std::sqrt(p * (1.0 - p) / n);
    }
    const double k = static_cast<double>(thresholds.size());
    out.rho = std::accumulate(out.per_threshold.begin(), out.per_threshold.end(), 0.0) / k;
    out.stderr_ = err / k;
    return out;
}

// ---- cavity --------------------------------------------------------------------

CavityPool cavity_population_run(CavityPool pool, std::size_t iterations, std::uint64_t seed,
                                 CavityRunStats* stats) {
    if (pool.members.empty()) throw InputError("empty cavity pool");
    if (pool.n_terms < 1) throw ParameterError("n_terms must be positive");
    if (!(pool.sigma2 > 0.0)) throw ParameterError("sigma2 must be positive");
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.members.size() - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = pool.sigma2 / pool.n_terms;
    std::size_t resampled = 0;
    for (std::size_t it = 0; it < iterations; ++it) {
        for (;;) {
            double sum = 0.0;
            for (int k = 0; k < pool.n_terms; ++k) {
                const double w = normal(rng);
                sum += w * w * pool.members[pick(rng)];
            }
            const double g = 1.0 / (pool.x - sum * scale);
            if (std::isfinite(g) && std::abs(g) < 1e300) {
                pool.members[pick(rng)] = g;
                break;
            }
            ++resampled;
        }
    }
    if (stats) stats->resampled = resampled;
    return pool;
}

// ---- characteristic function ---------------------------------------------------------

CharFnEstimate char_fn_compare(std::span<const double> samples, std::span<const double> k_grid,
                               std::complex<double> w) {
    if (samples.empty()) throw InputError("no samples");
    const std::size_t m = k_grid.size();
    double kmax = 0.0;
    for (double k : k_grid) kmax = std::max(kmax, std::abs(k));
    auto ks = numerics::sorted(k_grid);
    for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(ks[i] + ks[m - 1 - i]) > 1e-12 * std::max(kmax, 1.0)) {
            throw ParameterError("k grid must be symmetric about 0");
        }
    }
    CharFnEstimate est;
    est.k_grid.assign(k_grid.begin(), k_grid.end());
    const double n = static_cast<double>(samples.size());
    for (double k : k_grid) {
        std::complex<double> value{1.0, 0.0};
        double se = 0.0;
        if (k != 0.0) {
            double c = 0.0, s = 0.0, c2 = 0.0, s2 = 0.0;
            for (double g : samples) {
                const double ci = std::cos(k * g), si = std::sin(k * g);
                c += ci;
                s += si;
                c2 += ci * ci;
                s2 += si * si;
            }
            c /= n;
            s /= n;
            value = {c, s};
            se = std::sqrt(std::max(0.0, (c2 / n - c * c) + (s2 / n - s * s)) / n);
        }
        const std::complex<double> predicted =
            std::exp(std::complex<double>(-std::abs(k) * w.imag(), k * w.real()));
        est.values.push_back(value);
        est.predicted.push_back(predicted);
        est.stderr_.push_back(se);
        est.max_deviation = std::max(est.max_deviation, std::abs(value - predicted));
    }
    return est;
}

// ---- picket fence --------------------------------------------------------------

double picket_partial_sum(double u, long long terms) {
    if (u == std::round(u)) throw DomainError("picket sum has a pole at integer u");
    if (terms < 0) throw ParameterError("number of terms must be nonnegative");
    double acc = 0.0;
    for (long long k = terms; k >= 1; --k) {
        const double kd = static_cast<double>(k);
        acc += 1.0 / (u * u - kd * kd);
    }
    return 1.0 / u + 2.0 * u * acc;
}

double picket_closed_form(double u) {
    if (u == std::round(u)) throw DomainError("π cot(πu) has a pole at integer u");
    return kPi / std::tan(kPi * u);
}

double picket_forward_map(double u, double g_r, double rho) {
    return g_r + rho * picket_closed_form(u);
}

double picket_inverse_map(double g, double g_r, double rho) {
    if (!(rho > 0.0)) throw ParameterError("rho must be positive");
    const double c = (g - g_r) / (kPi * rho);
    // arccot in (0, π)
    double u = (0.5 * kPi - std::atan(c)) / kPi;
    if (u > 0.5) u -= 1.0;
    return u;
}

// ---- output ------------------------------------------------------------------------

std::string samples_csv(const ResolventSampleSet& set) {
    std::ostringstream os;
    os << "sample_index,g\n";
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
        os << i << ',' << fmt17(set.samples[i]) << '\n';
    }
    return os.str();
}

nlohmann::json fit_record(const ResolventSampleSet& set, const CauchyFit& fit) {
    return {{"x", set.x},
            {"eta", set.eta},
            {"window_law", to_string(set.window_law)},
            {"center", fit.center},
            {"half_width", fit.half_width},
            {"ks", fit.ks},
            {"n", fit.n},
            {"method", fit.method == FitMethod::quantile ? "quantile" : "max_likelihood"}};
}

}  // namespace rmt::resolvent
