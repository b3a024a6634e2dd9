// Runs every acceptance experiment at its stated parameters and prints one
// PASS/FAIL line per criterion. Outputs go under argv[1] (default
// ./acceptance_out).

#include <cmath>
#include <cstdio>
#include <string>

#include "rmt/error.hpp"
#include "rmt/experiments.hpp"
#include "rmt/platform.hpp"

using nlohmann::json;

namespace {

std::string root = "acceptance_out";
int failures = 0;

json run(const std::string& experiment, std::map<std::string, std::string> params, double& wall) {
    params["seed"] = "20240601";
    params["out_dir"] = root + "/" + experiment;
    const auto m = rmt::cli::run({experiment, params});
    wall = m.wall_time;
    return m.results;
}

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

template <class Fn>
void criterion(int id, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what());
    }
}

double d(const json& j, const char* key) { return j.at(key).get<double>(); }

}  // namespace

int main(int argc, char** argv) {
    rmt::ensure_reliable_blas(argc, argv);
    if (argc > 1) root = argv[1];
    double wall = 0.0;

    criterion(1, [&] {
        const auto r = run("cauchy_law", {{"n", "2000"}, {"samples", "4000"}, {"x", "1"}}, wall);
        const bool ok = d(r, "ks_predicted") < 0.05 && std::abs(d(r, "center_error")) <= 0.03 &&
                        std::abs(d(r, "half_width_rel_error")) <= 0.05 && wall < 300.0;
        report(1, ok,
               "Cauchy law at x=1: KS " + fmt("%.4f", d(r, "ks_predicted")) + ", center " + fmt("%.4f", d(r, "center")) +
                   ", half-width " + fmt("%.4f", d(r, "half_width")) + ", " + fmt("%.1f s", wall));
    });

    criterion(2, [&] {
        const auto r = run("universality_sweep", {}, wall);
        bool ok = wall < 600.0;
        std::string detail;
        for (const auto& row : r.at("rows")) {
            const std::string kind = row.at("kind");
            const double we = d(row, "half_width_rel_error");
            ok = ok && std::abs(we) <= 0.07;
            detail += kind + (kind == "beta_tridiagonal" ? "(" + fmt("%g", d(row, "beta")) + ")" : "") + " width " +
                      fmt("%+.3f", we);
            if (kind != "beta_tridiagonal") {
                const double ce = d(row, "center_error");
                ok = ok && std::abs(ce) <= 0.02;
                detail += " center " + fmt("%+.4f", ce);
            }
            detail += "; ";
        }
        report(2, ok, "universality sweep: " + detail + fmt("%.1f s", wall));
    });

    criterion(3, [&] {
        const auto r = run("tail_density", {}, wall);
        bool ok = true;
        std::string detail;
        for (const auto& row : r.at("rows")) {
            ok = ok && std::abs(d(row, "rel_error")) <= 0.10;
            detail += "x=" + fmt("%g", d(row, "x")) + " " + fmt("%+.3f", d(row, "rel_error")) + "; ";
        }
        report(3, ok, "tail density vs semicircle: " + detail + fmt("%.1f s", wall));
    });

    criterion(4, [&] {
        const auto r = run("scaling_gamma", {}, wall);
        const bool ok = d(r, "ode_max_residual") < 1e-6 && std::abs(d(r, "gamma_at_0_2") - 0.98) <= 0.001 &&
                        std::abs(d(r, "y2_gamma_at_10") + 1.0) <= 0.03 && d(r, "roundtrip_sup_rel_error") < 0.01 &&
                        d(r, "f_oddness") < 1e-8;
        report(4, ok,
               "scaling function: ODE residual " + fmt("%.2e", d(r, "ode_max_residual")) + ", Gamma(0.2) " +
                   fmt("%.5f", d(r, "gamma_at_0_2")) + ", y^2 Gamma(10) " + fmt("%.4f", d(r, "y2_gamma_at_10")) +
                   ", round trip " + fmt("%.2e", d(r, "roundtrip_sup_rel_error")) + ", oddness " +
                   fmt("%.1e", d(r, "f_oddness")));
    });

    criterion(5, [&] {
        const auto r = run("dyson_flow", {}, wall);
        const bool ok = d(r, "sup_im_error") < 0.02 && d(r, "zero_matrix_error") <= 1e-9 &&
                        d(r, "composition_error") < 1e-9;
        report(5, ok,
               "flow vs Monte Carlo: sup |Im g error| " + fmt("%.4f", d(r, "sup_im_error")) + ", g(C=0,z=3,t=1) " +
                   fmt("%.9f", d(r, "zero_matrix_g")) + ", composition " + fmt("%.1e", d(r, "composition_error")));
    });

    criterion(6, [&] {
        const auto r = run("ito_check", {}, wall);
        const bool ok = d(r, "rel_error_vs_leading") <= 0.10 && d(r, "identity_first") < 1e-8 &&
                        d(r, "identity_second") < 1e-8;
        report(6, ok,
               "Ito drift: trace " + fmt("%.6f", d(r, "measured_trace")) + " vs 1/27, rel " +
                   fmt("%.4f", d(r, "rel_error_vs_leading")) + ", identities " + fmt("%.1e", d(r, "identity_first")) +
                   " / " + fmt("%.1e", d(r, "identity_second")));
    });

    criterion(7, [&] {
        const auto r = run("overlaps", {}, wall);
        const bool ok = d(r, "max_rel_error") <= 0.10 && d(r, "max_row_sum_error") < 1e-12 &&
                        d(r, "max_peak_offset") <= 0.5 * d(r, "grid_step");
        report(7, ok,
               "overlaps: max rel error " + fmt("%.4f", d(r, "max_rel_error")) + ", row sums " +
                   fmt("%.1e", d(r, "max_row_sum_error")) + ", peak offset " + fmt("%.4f", d(r, "max_peak_offset")));
    });

    criterion(8, [&] {
        const auto r = run("bbp", {}, wall);
        const auto& rows = r.at("rows");
        const bool ok = std::abs(d(rows[0], "lambda1") - 2.5) <= 0.05 && std::abs(d(rows[0], "phi1") - 0.75) <= 0.05 &&
                        std::abs(d(rows[1], "lambda1") - 3.0) <= 0.05 && std::abs(d(rows[1], "phi1") - 0.5) <= 0.05 &&
                        std::abs(d(rows[2], "lambda1") - 2.0 * std::sqrt(8.0)) <= 0.1 && wall < 600.0;
        report(8, ok,
               "spike: t=1 (" + fmt("%.4f", d(rows[0], "lambda1")) + ", " + fmt("%.4f", d(rows[0], "phi1")) + "), t=2 (" +
                   fmt("%.4f", d(rows[1], "lambda1")) + ", " + fmt("%.4f", d(rows[1], "phi1")) + "), t=8 " +
                   fmt("%.4f", d(rows[2], "lambda1")) + ", " + fmt("%.1f s", wall));
    });

    criterion(9, [&] {
        const auto r = run("levy_density", {}, wall);
        const auto& fp = r.at("fixed_point");
        const auto& pool = r.at("pool");
        const double trace_ks = d(r.at("trace_cauchy_fit"), "ks");
        const double entry_ks = d(pool.at("entry_cauchy_fit"), "ks");
        const bool ok = d(fp, "residual") < 1e-8 && d(r, "histogram_max_rel_error") <= 0.10 &&
                        std::abs(d(pool, "tail_rel_error")) <= 0.15 && trace_ks < 0.05 && entry_ks > 0.05;
        report(9, ok,
               "heavy tails mu=1: residual " + fmt("%.1e", d(fp, "residual")) + ", histogram " +
                   fmt("%.4f", d(r, "histogram_max_rel_error")) + ", tail coefficient " +
                   fmt("%+.4f", d(pool, "tail_rel_error")) + ", trace KS " + fmt("%.4f", trace_ks) + ", entry KS " +
                   fmt("%.4f", entry_ks));
    });

    criterion(10, [&] {
        const auto a = run("aw_window", {}, wall);
        const auto p = run("picket", {}, wall);
        const bool ok = a.at("intervals_overlap").get<bool>() && d(p, "max_abs_error") < 1e-4 &&
                        d(p, "pushforward_center_rel_error") <= 0.01 && d(p, "pushforward_width_rel_error") <= 0.01;
        report(10, ok,
               std::string("windows agree: ") + (a.at("intervals_overlap").get<bool>() ? "yes" : "no") +
                   ", picket sum error " + fmt("%.1e", d(p, "max_abs_error")) + ", pushforward center/width " +
                   fmt("%.4f", d(p, "pushforward_center_rel_error")) + " / " +
                   fmt("%.4f", d(p, "pushforward_width_rel_error")));
    });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
