#include "rmt/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <openssl/evp.h>

#include "rmt/coulomb_scaling.hpp"
#include "rmt/dyson_flow.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/error.hpp"
#include "rmt/io.hpp"
#include "rmt/levy.hpp"
#include "rmt/numerics.hpp"
#include "rmt/parallel.hpp"
#include "rmt/platform.hpp"
#include "rmt/random.hpp"
#include "rmt/resolvent_stats.hpp"

namespace rmt::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using cplx = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

using Defaults = std::map<std::string, std::string>;

const std::map<std::string, Defaults>& registry() {
    static const std::map<std::string, Defaults> r = {
        {"cauchy_law",
         {{"n", "2000"}, {"sigma2", "1"}, {"x", "1"}, {"samples", "4000"}, {"eta", "auto"},
          {"window", "uniform"}, {"ensemble", "goe"}, {"beta", "1"}, {"mu", "1"},
          {"draws_per_spectrum", "0"}, {"fit", "quantile"}}},
        {"universality_sweep",
         {{"n", "1000"}, {"sigma2", "1"}, {"x", "1"}, {"x_flat", "1"}, {"rho_flat", "0.25"},
          {"samples", "10000"}, {"synthetic_samples", "100000"}, {"eta", "auto"}, {"betas", "1,2,4"}, {"draws_per_spectrum", "100"},
          {"synthetic_draws_per_spectrum", "1"}}},
        {"tail_density",
         {{"n", "2000"}, {"sigma2", "1"}, {"xs", "0,0.5,1,1.5"}, {"samples", "40000"}, {"eta", "0.05"},
          {"ensemble", "beta_tridiagonal"}, {"draws_per_spectrum", "200"}, {"thresholds", "5,10,20"}}},
        {"scaling_gamma",
         {{"gamma0", "1"}, {"extent", "40"}, {"fine", "0.005"}, {"ratio", "1.01"}, {"y_lo", "0.05"},
          {"y_hi", "8"}, {"check_spacing", "0.005"}, {"roundtrip_extent", "10"}}},
        {"dyson_flow",
         {{"n", "2000"}, {"sigma2", "1"}, {"t", "0.5"}, {"eps", "0.05"}, {"reps", "4"}, {"c_lo", "-1"},
          {"c_hi", "1"}, {"x_lo", "-1.2"}, {"x_hi", "1.2"}, {"x_points", "25"}, {"check_z", "3"},
          {"check_t", "1"}}},
        {"overlaps",
         {{"n", "1000"}, {"sigma2", "1"}, {"t", "0.25"}, {"reps", "50"}, {"eps", "0.1"},
          {"lambdas", "-0.5,-0.25,0,0.25,0.5"}, {"mu_lo", "-0.9"}, {"mu_hi", "0.9"}, {"mu_step", "0.1"},
          {"c_lo", "-1"}, {"c_hi", "1"}}},
        {"bbp", {{"n", "2000"}, {"mu1", "2"}, {"sigma2", "1"}, {"times", "1,2,8"}, {"reps", "4"}}},
        {"levy_density",
         {{"mu", "1"}, {"x_max", "10"}, {"grid_first", "0.01"}, {"grid_linear_from", "1"},
          {"grid_step", "0.1"}, {"x", "1"}, {"hist_n", "1000"}, {"hist_reps", "100"}, {"hist_lo", "0.5"},
          {"hist_hi", "2"}, {"hist_bins", "6"}, {"pool", "100000"}, {"n_terms", "200"},
          {"updates", "200000"}, {"core_fraction", "0.5"}, {"trace_n", "2000"}, {"trace_samples", "4000"},
          {"trace_eta", "auto"}, {"tol", "1e-10"}}},
        {"picket",
         {{"us", "0.1,0.3,0.45"}, {"terms", "100000"}, {"push_samples", "1000000"}, {"g_r", "0.5"},
          {"rho", "0.25"}}},
        {"aw_window",
         {{"n", "2000"}, {"sigma2", "1"}, {"x", "1"}, {"samples", "4000"}, {"eta", "auto"},
          {"windows", "uniform,cauchy,squared_cauchy"}, {"bootstrap", "400"}, {"level", "0.95"}}},
        {"ito_check",
         {{"n", "200"}, {"sigma2", "1"}, {"z_re", "3"}, {"z_im", "0"}, {"dt", "1e-5"}, {"reps", "10000"},
          {"identity_z_re", "3"}, {"identity_z_im", "0"}}},
    };
    return r;
}

const std::vector<std::string> kOrder = {"cauchy_law",   "universality_sweep", "tail_density",
                                         "scaling_gamma", "dyson_flow",        "overlaps",
                                         "bbp",          "levy_density",       "picket",
                                         "aw_window",    "ito_check"};

const std::vector<std::string> kTextKeys = {"window", "ensemble", "fit", "windows", "out_dir"};

bool parses_as_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end && *end == '\0';
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
    return out;
}

class Params {
public:
    explicit Params(const std::map<std::string, std::string>& m) : m_(m) {}

    const std::string& str(const std::string& key) const {
        const auto it = m_.find(key);
        if (it == m_.end()) throw ConfigError("missing parameter '" + key + "'");
        return it->second;
    }
    double num(const std::string& key) const {
        const auto& s = str(key);
        if (!parses_as_number(s)) throw ConfigError("parameter '" + key + "' is not a number: " + s);
        return std::strtod(s.c_str(), nullptr);
    }
    long long integer(const std::string& key) const {
        const double v = num(key);
        if (v != std::floor(v)) throw ConfigError("parameter '" + key + "' must be an integer");
        return static_cast<long long>(v);
    }
    std::uint64_t seed() const {
        const auto& s = str("seed");
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
            throw ConfigError("seed must be an unsigned integer: " + s);
        }
        try {
            std::size_t pos = 0;
            const auto v = std::stoull(s, &pos);
            if (pos != s.size()) throw ConfigError("seed must be an unsigned integer");
            return v;
        } catch (const std::logic_error&) {
            throw ConfigError("seed must be an unsigned integer: " + s);
        }
    }
    int threads() const { return static_cast<int>(std::max(1LL, integer("threads"))); }
    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : split(str(key), ',')) {
            if (!parses_as_number(item)) throw ConfigError("parameter '" + key + "' has a non-numeric entry");
            out.push_back(std::strtod(item.c_str(), nullptr));
        }
        return out;
    }
    double eta(const std::string& key, int n) const {
        return str(key) == "auto" ? 1.0 / std::sqrt(static_cast<double>(n)) : num(key);
    }

private:
    const std::map<std::string, std::string>& m_;
};

class Writer {
public:
    explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) throw InputError("cannot write " + (dir_ / name).string());
        f << content;
        records_.push_back({name, sha256_hex(content), content.size()});
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    std::vector<OutputRecord> records_;

private:
    fs::path dir_;
};

class Csv {
public:
    explicit Csv(const std::string& header) { os_ << header << '\n'; }
    template <class... T>
    void row(const T&... cells) {
        bool first = true;
        ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
        os_ << '\n';
    }
    std::string str() const { return os_.str(); }

private:
    static std::string cell(double v) { return fmt17(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long long v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }
    std::ostringstream os_;
};

ensembles::EnsembleKind parse_kind(const std::string& name) {
    using K = ensembles::EnsembleKind;
    if (name == "goe") return K::goe;
    if (name == "beta_tridiagonal") return K::beta_tridiagonal;
    if (name == "levy") return K::levy;
    throw ParameterError("ensemble must be goe, beta_tridiagonal or levy (got " + name + ")");
}

resolvent::FitMethod parse_fit(const std::string& name) {
    if (name == "quantile") return resolvent::FitMethod::quantile;
    if (name == "max_likelihood") return resolvent::FitMethod::max_likelihood;
    throw ParameterError("fit must be quantile or max_likelihood");
}

json fit_json(const resolvent::CauchyFit& f) {
    return {{"center", f.center}, {"half_width", f.half_width}, {"ks", f.ks}, {"n", f.n}};
}

// ---- experiments ---------------------------------------------------------------------

json cauchy_law(const Params& p, Writer& w) {
    const int n = static_cast<int>(p.integer("n"));
    const double sigma2 = p.num("sigma2"), x = p.num("x");
    ensembles::EnsembleSpec spec;
    spec.kind = parse_kind(p.str("ensemble"));
    spec.n = n;
    spec.sigma2 = sigma2;
    spec.beta = p.num("beta");
    spec.mu_tail = p.num("mu");
    spec.seed = derive_seed(p.seed(), 1);
    const auto law = resolvent::parse_window_law(p.str("window"));
    const auto source =
        resolvent::SpectrumSource::ensemble(spec, static_cast<int>(p.integer("draws_per_spectrum")));
    const auto set = resolvent::sample_g_window(source, x, p.eta("eta", n), law,
                                                static_cast<std::size_t>(p.integer("samples")),
                                                derive_seed(p.seed(), 2), p.threads());
    const auto fit = resolvent::fit_cauchy(set, parse_fit(p.str("fit")));
    json res = resolvent::fit_record(set, fit);

    const bool semicircle = spec.kind != ensembles::EnsembleKind::levy;
    const double pc = semicircle ? x / (2.0 * sigma2) : fit.center;
    const double pw = semicircle ? kPi * numerics::semicircle_density(x, sigma2) : fit.half_width;
    if (semicircle) {
        res["predicted_center"] = pc;
        res["predicted_half_width"] = pw;
        res["center_error"] = fit.center - pc;
        res["half_width_rel_error"] = fit.half_width / pw - 1.0;
        res["ks_predicted"] = numerics::ks_statistic(
            set.samples, [&](double g) { return numerics::cauchy_cdf(g, pc, pw); });
    }
    w.write("samples.csv", resolvent::samples_csv(set));

    const auto s = numerics::sorted(set.samples);
    Csv cdf("g,empirical_cdf,cauchy_cdf,empirical_survival,cauchy_survival");
    const double m = static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = numerics::cauchy_cdf(s[i], pc, pw);
        cdf.row(s[i], (i + 1.0) / m, f, 1.0 - i / m, 1.0 - f);
    }
    w.write("cdf.csv", cdf.str());
    w.write_json("fit.json", res);
    return res;
}

json universality_sweep(const Params& p, Writer& w) {
    const int n = static_cast<int>(p.integer("n"));
    const double sigma2 = p.num("sigma2"), x = p.num("x"), xf = p.num("x_flat"), rf = p.num("rho_flat");
    const auto samples = static_cast<std::size_t>(p.integer("samples"));
    const auto synthetic_samples = static_cast<std::size_t>(p.integer("synthetic_samples"));
    const int dps = static_cast<int>(p.integer("draws_per_spectrum"));
    const int sdps = static_cast<int>(p.integer("synthetic_draws_per_spectrum"));
    const double eta = p.eta("eta", n);
    if (!(rf > 0.0)) throw ParameterError("rho_flat must be positive");
    const double a = 0.5 / rf;

    struct Row {
        std::string kind;
        double beta;
        double x;
        resolvent::SpectrumSource source;
        double pc, pw;
        std::size_t samples;
    };
    std::vector<Row> rows;
    for (double beta : p.list("betas")) {
        ensembles::EnsembleSpec spec;
        spec.kind = ensembles::EnsembleKind::beta_tridiagonal;
        spec.n = n;
        spec.sigma2 = sigma2;
        spec.beta = beta;
        rows.push_back({"beta_tridiagonal", beta, x, resolvent::SpectrumSource::ensemble(spec, dps),
                        x / (2.0 * sigma2), kPi * numerics::semicircle_density(x, sigma2), samples});
    }
    const auto flat = ensembles::DensityProfile::uniform(-a, a);
    const double flat_center = rf * std::log((xf + a) / (a - xf));
    const double inf = std::numeric_limits<double>::infinity();
    rows.push_back({"picket_fence", inf, xf,
                    resolvent::SpectrumSource::synthetic(ensembles::EnsembleKind::picket_fence, n, flat, xf, sdps),
                    flat_center, kPi * rf, synthetic_samples});
    rows.push_back({"poisson", 0.0, xf,
                    resolvent::SpectrumSource::synthetic(ensembles::EnsembleKind::poisson, n, flat, xf, sdps),
                    flat_center, kPi * rf, synthetic_samples});

    Csv csv("kind,beta,x,center,half_width,predicted_center,predicted_half_width,center_error,"
            "half_width_rel_error,ks");
    json out = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const auto set = resolvent::sample_g_window(r.source, r.x, eta, resolvent::WindowLaw::uniform,
                                                    r.samples, derive_seed(p.seed(), 10 + i), p.threads());
        const auto fit = resolvent::fit_cauchy(set);
        const double ce = fit.center - r.pc, we = fit.half_width / r.pw - 1.0;
        csv.row(r.kind, r.beta, r.x, fit.center, fit.half_width, r.pc, r.pw, ce, we, fit.ks);
        out.push_back({{"kind", r.kind},
                       {"beta", std::isinf(r.beta) ? json("inf") : json(r.beta)},
                       {"x", r.x},
                       {"fit", fit_json(fit)},
                       {"predicted_center", r.pc},
                       {"predicted_half_width", r.pw},
                       {"center_error", ce},
                       {"half_width_rel_error", we},
                       {"warnings", set.warnings}});
    }
    w.write("sweep.csv", csv.str());
    return {{"rows", out}};
}

json tail_density(const Params& p, Writer& w) {
    const int n = static_cast<int>(p.integer("n"));
    const double sigma2 = p.num("sigma2");
    ensembles::EnsembleSpec spec;
    spec.kind = parse_kind(p.str("ensemble"));
    spec.n = n;
    spec.sigma2 = sigma2;
    spec.beta = 1.0;
    const auto source =
        resolvent::SpectrumSource::ensemble(spec, static_cast<int>(p.integer("draws_per_spectrum")));
    const auto ks = p.list("thresholds");
    Csv csv("x,rho_hat,stderr,rho_semicircle,rel_error");
    json rows = json::array();
    const auto xs = p.list("xs");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const auto set = resolvent::sample_g_window(source, x, p.eta("eta", n), resolvent::WindowLaw::uniform,
                                                    static_cast<std::size_t>(p.integer("samples")),
                                                    derive_seed(p.seed(), 10 + i), p.threads());
        const auto fit = resolvent::fit_cauchy(set);
        std::vector<double> thresholds;
        for (double k : ks) thresholds.push_back(k * fit.half_width);
        const auto td = resolvent::tail_density_estimate(set.samples, fit.center, thresholds);
        const double exact = numerics::semicircle_density(x, sigma2);
        const double rel = td.rho / exact - 1.0;
        csv.row(x, td.rho, td.stderr_, exact, rel);
        rows.push_back({{"x", x},
                        {"rho_hat", td.rho},
                        {"stderr", td.stderr_},
                        {"rho_semicircle", exact},
                        {"rel_error", rel},
                        {"per_threshold", td.per_threshold}});
    }
    w.write("tail.csv", csv.str());
    return {{"rows", rows}};
}

json scaling_gamma(const Params& p, Writer& w) {
    const double g0 = p.num("gamma0");
    auto profile = coulomb::gamma_profile(
        g0, coulomb::default_y_grid(p.num("extent"), p.num("fine"), p.num("ratio")));
    profile = coulomb::density_perturbation(std::move(profile));

    const double y_hi = p.num("y_hi"), h = p.num("check_spacing");
    const auto check = coulomb::gamma_profile(g0, coulomb::uniform_y_grid(y_hi + 4.0 * h, h));
    const auto ode = coulomb::ode_residual(check, p.num("y_lo"), y_hi);
    const auto ode_default = coulomb::ode_residual(profile, p.num("y_lo"), y_hi);

    double odd = 0.0;
    const std::size_t m = profile.f.size();
    for (std::size_t i = 0; i < m; ++i) odd = std::max(odd, std::abs(profile.f[i] + profile.f[m - 1 - i]));

    const double ext = p.num("roundtrip_extent");
    std::vector<double> ys, gs;
    for (std::size_t i = 0; i < profile.y_grid.size(); ++i) {
        if (std::abs(profile.y_grid[i]) <= ext) {
            ys.push_back(profile.y_grid[i]);
            gs.push_back(profile.gamma[i]);
        }
    }
    const auto back = coulomb::forward_transform(profile, ys);
    double sup = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        sup = std::max(sup, std::abs(back[i] - gs[i]));
        scale = std::max(scale, std::abs(gs[i]));
    }

    w.write("gamma.csv", coulomb::gamma_csv(profile));
    w.write("F.csv", coulomb::f_csv(profile));
    json res = {{"gamma0", g0},
                {"gamma_at_0_2", coulomb::gamma_closed_form(g0, 0.2)},
                {"y2_gamma_at_10", 100.0 * coulomb::gamma_closed_form(g0, 10.0)},
                {"ode_max_residual", ode.max_residual},
                {"ode_residual_at", ode.at_y},
                {"ode_grid_spacing", h},
                {"ode_max_residual_default_grid", ode_default.max_residual},
                {"ode_default_grid_coarse", ode_default.coarse},
                {"f_oddness", odd},
                {"roundtrip_sup_rel_error", sup / scale},
                {"asymptotic_coefficient", coulomb::asymptotic_matching(profile)},
                {"grid_nodes", profile.y_grid.size()},
                {"warnings", profile.warnings}};
    w.write_json("scaling.json", res);
    return res;
}

json dyson_flow(const Params& p, Writer& w) {
    const int n = static_cast<int>(p.integer("n"));
    const double sigma2 = p.num("sigma2"), t = p.num("t"), eps = p.num("eps");
    const int reps = static_cast<int>(p.integer("reps"));
    const auto c = dyson::equispaced(n, p.num("c_lo"), p.num("c_hi"));
    const auto gc = dyson::stieltjes_of_spectrum(c);
    const int xp = static_cast<int>(p.integer("x_points"));
    if (xp < 2 || reps < 1) throw ParameterError("need x_points >= 2 and reps >= 1");
    std::vector<double> xs;
    for (int i = 0; i < xp; ++i) xs.push_back(p.num("x_lo") + (p.num("x_hi") - p.num("x_lo")) * i / (xp - 1));

    std::vector<std::vector<cplx>> per(reps, std::vector<cplx>(xs.size()));
    parallel_for(reps, p.threads(), [&](std::size_t r) {
        ensembles::EnsembleSpec spec;
        spec.n = n;
        spec.sigma2 = sigma2 * t;
        spec.seed = derive_seed(p.seed(), 10 + r);
        auto m = ensembles::sample_goe(spec);
        for (int i = 0; i < n; ++i) m(i, i) += c[i];
        const auto ev = ensembles::eigenvalues(m);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const cplx z(xs[k], -eps);
            cplx acc = 0.0;
            for (double l : ev) acc += 1.0 / (z - l);
            per[r][k] = acc / static_cast<double>(n);
        }
    });

    Csv csv("x,re_mc,im_mc,im_mc_stderr,re_theory,im_theory,im_abs_error");
    double sup = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        cplx mean = 0.0;
        for (int r = 0; r < reps; ++r) mean += per[r][k];
        mean /= static_cast<double>(reps);
        double var = 0.0;
        for (int r = 0; r < reps; ++r) var += std::norm(per[r][k].imag() - mean.imag());
        const double se = reps > 1 ? std::sqrt(var / (reps - 1) / reps) : 0.0;
        const cplx th = dyson::solve_characteristics(gc, cplx(xs[k], -eps), sigma2, t).g;
        const double err = std::abs(mean.imag() - th.imag());
        sup = std::max(sup, err);
        csv.row(xs[k], mean.real(), mean.imag(), se, th.real(), th.imag(), err);
    }
    w.write("flow.csv", csv.str());

    const double cz = p.num("check_z"), ct = p.num("check_t");
    const cplx g0 = dyson::solve_characteristics(dyson::stieltjes_zero(), cz, 1.0, ct).g;
    const double g0_exact = (cz - std::sqrt(cz * cz - 4.0 * ct)) / (2.0 * ct);
    double comp = 0.0;
    for (double x : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
        const cplx z(x, -eps);
        const cplx direct = dyson::solve_characteristics(gc, z, sigma2, t).g;
        const cplx two = dyson::evolved_stieltjes(gc, z, sigma2, 0.5 * t, t).g;
        comp = std::max(comp, std::abs(direct - two));
    }
    const double burgers = dyson::burgers_residual(gc, cplx(0.3, -0.1), sigma2, t);
    json res = {{"sup_im_error", sup},
                {"reps", reps},
                {"zero_matrix_g", g0.real()},
                {"zero_matrix_g_imag", g0.imag()},
                {"zero_matrix_g_exact", g0_exact},
                {"zero_matrix_error", std::abs(g0 - g0_exact)},
                {"composition_error", comp},
                {"burgers_residual", burgers}};
    w.write_json("flow.json", res);
    return res;
}

json overlaps(const Params& p, Writer& w) {
    const int n = static_cast<int>(p.integer("n"));
    const double sigma2 = p.num("sigma2"), t = p.num("t"), st = sigma2 * t;
    const auto c = dyson::equispaced(n, p.num("c_lo"), p.num("c_hi"));
    const auto gc = dyson::stieltjes_of_spectrum(c);
    const auto lambdas = p.list("lambdas");
    std::vector<double> mus;
    const double lo = p.num("mu_lo"), hi = p.num("mu_hi"), step = p.num("mu_step");
    if (!(step > 0.0) || !(hi > lo)) throw ParameterError("need mu_hi > mu_lo and mu_step > 0");
    for (int k = 0; lo + k * step <= hi + 1e-9; ++k) mus.push_back(lo + k * step);

    const auto table = dyson::overlap_monte_carlo(c, sigma2, t, static_cast<int>(p.integer("reps")),
                                                  p.num("eps"), lambdas, mus, p.seed(), p.threads());
    std::map<double, cplx> g_at;
    for (double l : lambdas) g_at[l] = dyson::solve_characteristics(gc, cplx(l, -1e-9), sigma2, t).g;

    Csv csv("lambda,mu,mc,stderr,count,theory,rel_error");
    double max_rel = 0.0;
    std::map<double, std::vector<std::pair<double, double>>> by_lambda;
    for (const auto& r : table.records) {
        const cplx g = g_at.at(r.lambda);
        const double th = dyson::overlap_theory(r.lambda, r.mu, st, g.real(), g.imag() / kPi).value;
        const double rel = r.count > 0 ? std::abs(r.value / th - 1.0) : std::nan("");
        if (r.count > 0) max_rel = std::max(max_rel, rel);
        csv.row(r.lambda, r.mu, r.value, r.stderr_, r.count, th, rel);
        by_lambda[r.lambda].push_back({r.mu, r.value});
    }
    w.write("overlaps.csv", csv.str());

    Csv peaks("lambda,mu_peak_mc,mu_peak_theory,abs_diff");
    double max_peak = 0.0;
    json peak_rows = json::array();
    for (auto& [l, pts] : by_lambda) {
        std::sort(pts.begin(), pts.end());
        std::size_t j = 0;
        for (std::size_t k = 1; k < pts.size(); ++k) {
            if (pts[k].second > pts[j].second) j = k;
        }
        double mu_peak = pts[j].first;
        if (j > 0 && j + 1 < pts.size()) {
            const double y0 = pts[j - 1].second, y1 = pts[j].second, y2 = pts[j + 1].second;
            const double den = y0 - 2.0 * y1 + y2;
            if (den < 0.0) mu_peak += 0.5 * step * (y0 - y2) / den;
        }
        const double pred = l - st * g_at.at(l).real();
        const double diff = std::abs(mu_peak - pred);
        max_peak = std::max(max_peak, diff);
        peaks.row(l, mu_peak, pred, diff);
        peak_rows.push_back({{"lambda", l}, {"mu_peak_mc", mu_peak}, {"mu_peak_theory", pred}});
    }
    w.write("peaks.csv", peaks.str());
    return {{"max_rel_error", max_rel},
            {"max_row_sum_error", table.max_row_sum_error},
            {"max_peak_offset", max_peak},
            {"grid_step", step},
            {"peaks", peak_rows},
            {"warnings", table.warnings}};
}

json bbp(const Params& p, Writer& w) {
    const int n = static_cast<int>(p.integer("n"));
    const double mu1 = p.num("mu1"), sigma2 = p.num("sigma2");
    const auto times = p.list("times");
    const auto theory = dyson::spike_trajectory(mu1, sigma2, times);
    Csv csv("t,lambda1,lambda1_stderr,lambda1_theory,phi1,phi1_stderr,phi1_theory");
    json rows = json::array();
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto m = dyson::bbp_measure(mu1, sigma2, times[i], n, static_cast<int>(p.integer("reps")),
                                          derive_seed(p.seed(), i), p.threads());
        csv.row(times[i], m.lambda1, m.lambda1_stderr, theory.lambda1[i], m.phi1, m.phi1_stderr, theory.phi1[i]);
        rows.push_back({{"t", times[i]},
                        {"lambda1", m.lambda1},
                        {"lambda1_stderr", m.lambda1_stderr},
                        {"lambda1_theory", theory.lambda1[i]},
                        {"phi1", m.phi1},
                        {"phi1_stderr", m.phi1_stderr},
                        {"phi1_theory", theory.phi1[i]}});
    }
    w.write("bbp.csv", csv.str());

    const double t_end = std::max(*std::max_element(times.begin(), times.end()), 1.5 * theory.t_star);
    std::vector<double> fine;
    for (int k = 0; k <= 400; ++k) fine.push_back(t_end * k / 400.0);
    const auto curve = dyson::spike_trajectory(mu1, sigma2, fine);
    Csv tc("t,lambda1,phi1");
    for (std::size_t k = 0; k < fine.size(); ++k) tc.row(fine[k], curve.lambda1[k], curve.phi1[k]);
    w.write("bbp_theory.csv", tc.str());
    return {{"t_star", theory.t_star}, {"rows", rows}};
}

json levy_density(const Params& p, Writer& w) {
    const double mu = p.num("mu"), x = p.num("x"), tol = p.num("tol");
    const int threads = p.threads();
    const auto grid = levy::levy_x_grid(p.num("x_max"), p.num("grid_linear_from"), p.num("grid_first"),
                                        p.num("grid_step"));
    const auto pts = levy::levy_density(grid, mu, threads, tol);
    Csv csv("x,C,beta,rho_L,residual,iterations");
    std::vector<double> rho;
    json failed = json::array();
    for (const auto& q : pts) {
        csv.row(q.x, q.fixed_point.C, q.fixed_point.beta, q.rho, q.fixed_point.residual, q.fixed_point.iterations);
        rho.push_back(q.rho);
        if (!q.ok) failed.push_back({{"x", q.x}, {"error", q.error}});
    }
    w.write("levy_density.csv", csv.str());
    json res;
    res["grid_points"] = grid.size();
    res["failed_points"] = failed;
    if (failed.empty()) res["density_mass"] = levy::levy_density_mass(grid, rho, mu);

    const auto fp = levy::levy_fixed_point(x, mu, 1.0, 0.0, tol);
    const double rho_x = levy::stable_density(levy::cavity_law(fp), x);
    res["fixed_point"] = {{"x", x},           {"C", fp.C},
                          {"beta", fp.beta},  {"residual", fp.residual},
                          {"iterations", fp.iterations}, {"rho_L", rho_x}};

    Csv g00("g,density");
    for (int k = -400; k <= 400; ++k) {
        if (k == 0) continue;
        const double g = std::sinh(k / 400.0 * std::asinh(200.0));
        g00.row(g, levy::g00_density(fp, g));
    }
    w.write("g00.csv", g00.str());

    const int reps = static_cast<int>(p.integer("hist_reps"));
    if (reps > 0) {
        const int hn = static_cast<int>(p.integer("hist_n")), bins = static_cast<int>(p.integer("hist_bins"));
        const double hlo = p.num("hist_lo"), hhi = p.num("hist_hi");
        if (bins < 1 || !(hhi > hlo)) throw ParameterError("need hist_bins >= 1 and hist_hi > hist_lo");
        std::vector<std::vector<double>> counts(reps, std::vector<double>(bins, 0.0));
        parallel_for(reps, threads, [&](std::size_t r) {
            ensembles::EnsembleSpec spec;
            spec.kind = ensembles::EnsembleKind::levy;
            spec.n = hn;
            spec.mu_tail = mu;
            spec.levy_core_fraction = p.num("core_fraction");
            spec.seed = derive_seed(p.seed(), 1000 + r);
            for (double v : ensembles::eigenvalues(ensembles::sample_levy_matrix(spec))) {
                const double b = (v - hlo) / (hhi - hlo) * bins;
                if (b >= 0.0 && b < bins) counts[r][static_cast<int>(b)] += 1.0;
            }
        });
        Csv hist("x_lo,x_hi,histogram,rho_L,rel_error");
        double max_rel = 0.0;
        const double width = (hhi - hlo) / bins;
        for (int b = 0; b < bins; ++b) {
            double c = 0.0;
            for (int r = 0; r < reps; ++r) c += counts[r][b];
            const double h = c / (static_cast<double>(reps) * hn * width);
            double avg = 0.0;  // bin average of ρ_L, 5-point Gauss–Legendre
            static const double gx[] = {-0.906179845938664, -0.538469310105683, 0.0, 0.538469310105683,
                                        0.906179845938664};
            static const double gw[] = {0.236926885056189, 0.478628670499366, 0.568888888888889,
                                        0.478628670499366, 0.236926885056189};
            for (int k = 0; k < 5; ++k) {
                const double xx = hlo + width * (b + 0.5 + 0.5 * gx[k]);
                const auto f = levy::levy_fixed_point(xx, mu, 1.0, 0.0, tol);
                avg += 0.5 * gw[k] * levy::stable_density(levy::cavity_law(f), xx);
            }
            const double rel = h / avg - 1.0;
            max_rel = std::max(max_rel, std::abs(rel));
            hist.row(hlo + b * width, hlo + (b + 1) * width, h, avg, rel);
        }
        w.write("histogram.csv", hist.str());
        res["histogram_max_rel_error"] = max_rel;
        res["histogram_reps"] = reps;
    }

    levy::PopulationStats ps;
    const auto pool = levy::levy_population_dynamics(
        x, mu, static_cast<std::size_t>(p.integer("pool")), static_cast<int>(p.integer("n_terms")),
        static_cast<std::size_t>(p.integer("updates")), derive_seed(p.seed(), 2), p.num("core_fraction"), &ps);
    const double ks_pool = numerics::ks_statistic(pool, [&](double g) { return levy::g00_cdf(fp, g); });
    const std::vector<double> thresholds{20.0, 50.0, 100.0};
    const auto tail = resolvent::tail_density_estimate(pool, 0.0, thresholds);
    const auto entry_fit = resolvent::fit_cauchy(pool);
    res["pool"] = {{"size", pool.size()},
                   {"ks_vs_semi_analytic", ks_pool},
                   {"tail_coefficient", tail.rho},
                   {"tail_coefficient_stderr", tail.stderr_},
                   {"tail_rel_error", tail.rho / rho_x - 1.0},
                   {"entry_cauchy_fit", fit_json(entry_fit)},
                   {"resampled", ps.resampled}};

    const int tn = static_cast<int>(p.integer("trace_n"));
    if (tn > 0) {
        ensembles::EnsembleSpec spec;
        spec.kind = ensembles::EnsembleKind::levy;
        spec.n = tn;
        spec.mu_tail = mu;
        spec.levy_core_fraction = p.num("core_fraction");
        spec.seed = derive_seed(p.seed(), 3);
        const auto source = resolvent::SpectrumSource::ensemble(spec, 0);
        const auto set = resolvent::sample_g_window(source, x, p.eta("trace_eta", tn),
                                                    resolvent::WindowLaw::uniform,
                                                    static_cast<std::size_t>(p.integer("trace_samples")),
                                                    derive_seed(p.seed(), 4), threads);
        const auto fit = resolvent::fit_cauchy(set);
        w.write("trace_samples.csv", resolvent::samples_csv(set));
        res["trace_cauchy_fit"] = fit_json(fit);
    }
    w.write_json("levy.json", res);
    return res;
}

json picket(const Params& p, Writer& w) {
    const auto terms = p.integer("terms");
    Csv csv("u,partial_sum,closed_form,abs_error");
    double worst = 0.0;
    json rows = json::array();
    for (double u : p.list("us")) {
        const double s = resolvent::picket_partial_sum(u, terms);
        const double c = resolvent::picket_closed_form(u);
        worst = std::max(worst, std::abs(s - c));
        csv.row(u, s, c, std::abs(s - c));
        rows.push_back({{"u", u}, {"partial_sum", s}, {"closed_form", c}, {"abs_error", std::abs(s - c)}});
    }
    w.write("picket.csv", csv.str());

    const double gr = p.num("g_r"), rho = p.num("rho");
    Rng rng = make_rng(p.seed());
    std::vector<double> g(static_cast<std::size_t>(p.integer("push_samples")));
    double roundtrip = 0.0;
    for (auto& v : g) {
        const double u = uniform_open(rng) - 0.5;
        v = resolvent::picket_forward_map(u, gr, rho);
        roundtrip = std::max(roundtrip, std::abs(resolvent::picket_inverse_map(v, gr, rho) - u));
    }
    const auto fit = resolvent::fit_cauchy(g);
    return {{"rows", rows},
            {"max_abs_error", worst},
            {"pushforward_fit", fit_json(fit)},
            {"pushforward_center_rel_error", std::abs(fit.center - gr) / std::abs(gr)},
            {"pushforward_width_rel_error", std::abs(fit.half_width / (kPi * rho) - 1.0)},
            {"inverse_roundtrip_error", roundtrip}};
}

json aw_window(const Params& p, Writer& w) {
    const int n = static_cast<int>(p.integer("n"));
    ensembles::EnsembleSpec spec;
    spec.n = n;
    spec.sigma2 = p.num("sigma2");
    spec.seed = derive_seed(p.seed(), 1);
    const auto values = ensembles::eigenvalues(ensembles::sample_goe(spec));
    const double edge = 2.0 * std::sqrt(spec.sigma2);
    const auto source = resolvent::SpectrumSource::fixed(values, -edge, edge, "goe n=" + std::to_string(n));
    const double x = p.num("x"), level = p.num("level");
    const auto names = split(p.str("windows"), ',');

    Csv csv("window,center,center_lo,center_hi,half_width,half_width_lo,half_width_hi,ks");
    std::vector<resolvent::FitInterval> cis;
    json rows = json::array();
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto law = resolvent::parse_window_law(names[k]);
        const auto set = resolvent::sample_g_window(source, x, p.eta("eta", n), law,
                                                    static_cast<std::size_t>(p.integer("samples")),
                                                    derive_seed(p.seed(), 10 + k), p.threads());
        const auto fit = resolvent::fit_cauchy(set);
        const auto ci = resolvent::bootstrap_fit(set.samples, static_cast<std::size_t>(p.integer("bootstrap")),
                                                 derive_seed(p.seed(), 100 + k), level);
        cis.push_back(ci);
        csv.row(names[k], fit.center, ci.center_lo, ci.center_hi, fit.half_width, ci.width_lo, ci.width_hi, fit.ks);
        rows.push_back({{"window", names[k]},
                        {"fit", fit_json(fit)},
                        {"center_ci", {ci.center_lo, ci.center_hi}},
                        {"half_width_ci", {ci.width_lo, ci.width_hi}}});
    }
    bool agree = true;
    for (std::size_t a = 0; a < cis.size(); ++a) {
        for (std::size_t b = a + 1; b < cis.size(); ++b) {
            agree = agree && cis[a].center_lo <= cis[b].center_hi && cis[b].center_lo <= cis[a].center_hi &&
                    cis[a].width_lo <= cis[b].width_hi && cis[b].width_lo <= cis[a].width_hi;
        }
    }
    w.write("aw_window.csv", csv.str());
    return {{"rows", rows}, {"intervals_overlap", agree}};
}

json ito_check(const Params& p, Writer& w) {
    const int n = static_cast<int>(p.integer("n"));
    const double sigma2 = p.num("sigma2");
    const cplx z(p.num("z_re"), p.num("z_im"));
    const ensembles::SymmetricMatrix zero = ensembles::SymmetricMatrix::Zero(n, n);
    const auto rec = dyson::ito_drift_check(zero, sigma2, z, p.num("dt"), static_cast<int>(p.integer("reps")),
                                            derive_seed(p.seed(), 1));
    ensembles::EnsembleSpec spec;
    spec.n = n;
    spec.sigma2 = sigma2;
    spec.seed = derive_seed(p.seed(), 2);
    const auto ids = dyson::resolvent_identities(ensembles::sample_goe(spec),
                                                 cplx(p.num("identity_z_re"), p.num("identity_z_im")));
    const double leading = sigma2 / std::real(z * z * z);
    json res = {{"measured_trace", rec.measured_trace.real()},
                {"measured_trace_imag", rec.measured_trace.imag()},
                {"theory_trace", rec.theory_trace.real()},
                {"stderr_trace", rec.stderr_trace},
                {"leading_order", leading},
                {"rel_error_vs_leading", std::abs(rec.measured_trace.real() / leading - 1.0)},
                {"rel_error_vs_theory", std::abs(rec.measured_trace / rec.theory_trace - 1.0)},
                {"max_entry_rel_deviation", rec.max_rel_deviation},
                {"antisymmetric_max", rec.antisymmetric_max},
                {"identity_first", ids.first},
                {"identity_second", ids.second}};
    Csv csv("quantity,value");
    for (const auto& [k, v] : res.items()) csv.row(k, v.get<double>());
    w.write("ito.csv", csv.str());
    return res;
}

using Runner = std::function<json(const Params&, Writer&)>;

const std::map<std::string, Runner>& runners() {
    static const std::map<std::string, Runner> r = {
        {"cauchy_law", cauchy_law},     {"universality_sweep", universality_sweep},
        {"tail_density", tail_density}, {"scaling_gamma", scaling_gamma},
        {"dyson_flow", dyson_flow},     {"overlaps", overlaps},
        {"bbp", bbp},                   {"levy_density", levy_density},
        {"picket", picket},             {"aw_window", aw_window},
        {"ito_check", ito_check}};
    return r;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace

std::vector<std::string> experiment_names() { return kOrder; }

std::string subcommand_of(const std::string& experiment) {
    std::string s = experiment;
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

std::string experiment_of(const std::string& subcommand) {
    std::string s = subcommand;
    std::replace(s.begin(), s.end(), '-', '_');
    return s;
}

std::map<std::string, std::string> experiment_defaults(const std::string& experiment) {
    const auto it = registry().find(experiment);
    if (it == registry().end()) throw ConfigError("unknown experiment '" + experiment + "'");
    auto d = it->second;
    d["threads"] = "1";
    d["out_dir"] = "out/" + experiment;
    return d;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream is(text);
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key=value");
        auto key = line.substr(0, eq);
        auto value = line.substr(eq + 1);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        key = trim(key);
        if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
        out[key] = trim(value);
    }
    return out;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    ExperimentConfig c;
    c.parameters = parse_key_values(ss.str());
    const auto it = c.parameters.find("experiment");
    if (it != c.parameters.end()) {
        c.experiment = experiment_of(it->second);
        c.parameters.erase(it);
    }
    return c;
}

ExperimentConfig resolve(const ExperimentConfig& config) {
    if (!registry().count(config.experiment)) {
        throw ConfigError("unknown experiment '" + config.experiment + "'");
    }
    auto params = experiment_defaults(config.experiment);
    auto given = config.parameters;
    if (const auto it = given.find("N"); it != given.end()) {
        if (given.count("n")) throw ConfigError("both N and n given");
        given["n"] = it->second;
        given.erase(it);
    }
    for (const auto& [k, v] : given) {
        if (k != "seed" && !params.count(k)) {
            throw ConfigError("unknown parameter '" + k + "' for experiment " + config.experiment);
        }
    }
    const auto defaults = params;
    for (const auto& [k, v] : given) params[k] = v;
    if (!params.count("seed")) throw ConfigError("seed is mandatory");
    Params(params).seed();
    for (const auto& [k, v] : params) {
        if (k == "seed" || std::find(kTextKeys.begin(), kTextKeys.end(), k) != kTextKeys.end()) continue;
        const auto& d = defaults.at(k);
        if (v == "auto" && d == "auto") continue;
        for (const auto& item : split(v, ',')) {
            if (!parses_as_number(item)) throw ConfigError("parameter '" + k + "' is not numeric: " + v);
        }
        if (d.find(',') == std::string::npos && v.find(',') != std::string::npos) {
            throw ConfigError("parameter '" + k + "' takes a single value");
        }
    }
    return {config.experiment, params};
}

json RunManifest::to_json() const {
    json outs = json::array();
    for (const auto& o : outputs) outs.push_back({{"file", o.file}, {"sha256", o.sha256}, {"bytes", o.bytes}});
    return {{"experiment", config.experiment},
            {"config", config.parameters},
            {"version", version},
            {"blas_core", blas_core_name()},
            {"started", started},
            {"wall_time_s", wall_time},
            {"out_dir", out_dir},
            {"outputs", outs},
            {"results", results}};
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.config.experiment = j.value("experiment", "");
    if (j.contains("config")) m.config.parameters = j.at("config").get<std::map<std::string, std::string>>();
    m.version = j.value("version", "");
    m.started = j.value("started", "");
    m.wall_time = j.value("wall_time_s", 0.0);
    m.out_dir = j.value("out_dir", "");
    if (j.contains("outputs")) {
        for (const auto& o : j.at("outputs")) {
            m.outputs.push_back({o.at("file").get<std::string>(), o.value("sha256", ""), o.value("bytes", 0u)});
        }
    }
    if (j.contains("results")) m.results = j.at("results");
    return m;
}

RunManifest run(const ExperimentConfig& config) {
    const auto resolved = resolve(config);
    RunManifest m;
    m.config = resolved;
    m.started = utc_now();
    m.out_dir = resolved.parameters.at("out_dir");
    fs::create_directories(m.out_dir);
    Writer w(m.out_dir);
    const Params p(resolved.parameters);
    const auto t0 = std::chrono::steady_clock::now();
    m.results = runners().at(resolved.experiment)(p, w);
    m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    w.write_json("results.json", m.results);
    m.outputs = w.records_;
    std::ofstream f(fs::path(m.out_dir) / "manifest.json");
    f << m.to_json().dump(2) << '\n';
    return m;
}

std::string emit_plot_script(const RunManifest& manifest) {
    if (manifest.outputs.empty()) throw InputError("manifest lists no outputs");
    const fs::path dir = manifest.out_dir;
    std::vector<std::string> csvs;
    for (const auto& o : manifest.outputs) {
        if (!fs::exists(dir / o.file)) throw InputError("missing output file " + (dir / o.file).string());
        if (o.file.size() > 4 && o.file.substr(o.file.size() - 4) == ".csv") csvs.push_back(o.file);
    }
    std::ostringstream gp;
    gp << "# gnuplot script for " << manifest.config.experiment << "\n"
       << "set datafile separator ','\nset key top right\nset terminal pngcairo size 1200,500\n";
    const auto& e = manifest.config.experiment;
    if (e == "cauchy_law") {
        const double c = manifest.results.value("center", 0.0);
        gp << "set output 'cauchy_law.png'\nset multiplot layout 1,2\nset logscale xy\n"
           << "set xlabel '|g - m|'\nset ylabel 'P'\n"
           << "set title 'left cumulative'\n"
           << "plot 'cdf.csv' every ::1 using (" << c << "-$1):($1<" << c
           << "?$2:1/0) title 'sample' with points pt 7 ps 0.4, "
           << "'' every ::1 using (" << c << "-$1):($1<" << c << "?$3:1/0) title 'Cauchy' with lines lw 2\n"
           << "set title 'right cumulative'\n"
           << "plot 'cdf.csv' every ::1 using ($1-" << c << "):($1>" << c
           << "?$4:1/0) title 'sample' with points pt 7 ps 0.4, "
           << "'' every ::1 using ($1-" << c << "):($1>" << c << "?$5:1/0) title 'Cauchy' with lines lw 2\n"
           << "unset multiplot\n";
    } else if (e == "scaling_gamma") {
        gp << "set output 'scaling_gamma.png'\nset multiplot\n"
           << "set xlabel 'y'\nset ylabel 'Gamma(y)'\nset xrange [-10:10]\n"
           << "plot 'gamma.csv' every ::1 using 1:2 title 'Gamma' with lines lw 2\n"
           << "set origin 0.55,0.15\nset size 0.4,0.45\nset xlabel 'u'\nset ylabel 'F(u)'\nset xrange [-10:10]\n"
           << "plot 'F.csv' every ::1 using 1:2 notitle with lines\n"
           << "unset multiplot\n";
    } else {
        for (const auto& f : csvs) {
            const auto stem = f.substr(0, f.size() - 4);
            gp << "set output '" << stem << ".png'\nset title '" << stem << "'\n"
               << "plot for [i=2:*] '" << f << "' every ::1 using 1:i title columnhead(i) with linespoints\n";
        }
    }
    const auto path = (dir / "plot.gp").string();
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << gp.str();
    return path;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

json error_json(const std::string& kind, const std::string& message, const std::string& experiment) {
    return {{"error", {{"kind", kind}, {"message", message}, {"experiment", experiment}}}};
}

}  // namespace rmt::cli
