#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "rmt/error.hpp"
#include "rmt/experiments.hpp"

using namespace rmt::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("rmtlab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::pair<int, std::string> shell(const std::string& cmd) {
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    std::array<char, 4096> buf;
    while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("key=value parsing") {
    const auto kv = parse_key_values("# comment\nn = 500\n\nx=1 # inline\nwindow=cauchy\n");
    CHECK(kv.at("n") == "500");
    CHECK(kv.at("x") == "1");
    CHECK(kv.at("window") == "cauchy");
    CHECK_THROWS_AS(parse_key_values("no equals sign"), rmt::ConfigError);
    CHECK_THROWS_AS(parse_key_values("=3"), rmt::ConfigError);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(resolve({"not_an_experiment", {{"seed", "1"}}}), rmt::ConfigError);
    CHECK_THROWS_AS(resolve({"picket", {}}), rmt::ConfigError);
    CHECK_THROWS_AS(resolve({"picket", {{"seed", "1"}, {"bogus", "2"}}}), rmt::ConfigError);
    CHECK_THROWS_AS(resolve({"picket", {{"seed", "-3"}}}), rmt::ConfigError);
    CHECK_THROWS_AS(resolve({"bbp", {{"seed", "1"}, {"n", "many"}}}), rmt::ConfigError);
    const auto r = resolve({"cauchy_law", {{"seed", "4"}, {"N", "300"}}});
    CHECK(r.parameters.at("n") == "300");
    CHECK(r.parameters.at("threads") == "1");
    CHECK(experiment_names().size() == 11);
    for (const auto& e : experiment_names()) CHECK(experiment_of(subcommand_of(e)) == e);
}

TEST_CASE("runs are reproducible byte for byte") {
    const auto a = scratch("a"), b = scratch("b");
    const std::map<std::string, std::string> p{{"seed", "5"}, {"terms", "1000"}, {"push_samples", "2000"}};
    auto pa = p, pb = p;
    pa["out_dir"] = a.string();
    pb["out_dir"] = b.string();
    const auto ma = run({"picket", pa});
    const auto mb = run({"picket", pb});
    REQUIRE(ma.outputs.size() == mb.outputs.size());
    for (std::size_t i = 0; i < ma.outputs.size(); ++i) {
        CHECK(ma.outputs[i].sha256 == mb.outputs[i].sha256);
        CHECK(ma.outputs[i].sha256 == sha256_hex(slurp(a / ma.outputs[i].file)));
    }
    CHECK(fs::exists(a / "manifest.json"));
    const auto back = RunManifest::from_json(nlohmann::json::parse(slurp(a / "manifest.json")));
    CHECK(back.outputs.size() == ma.outputs.size());
    CHECK(back.config.parameters.at("seed") == "5");
    CHECK(slurp(a / "picket.csv").rfind("u,partial_sum,closed_form,abs_error\n", 0) == 0);
}

TEST_CASE("thread count does not change the outputs") {
    std::vector<std::string> digests;
    for (const char* threads : {"1", "3"}) {
        const auto d = scratch(std::string("threads") + threads);
        const auto m = run({"cauchy_law", {{"seed", "9"}, {"n", "200"}, {"samples", "3000"}, {"draws_per_spectrum", "500"},
                                           {"threads", threads}, {"out_dir", d.string()}}});
        for (const auto& o : m.outputs) digests.push_back(o.sha256);
    }
    const std::size_t half = digests.size() / 2;
    for (std::size_t i = 0; i < half; ++i) CHECK(digests[i] == digests[half + i]);
}

TEST_CASE("sha256 of a known string") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("plot scripts") {
    const auto d = scratch("plot");
    const auto m = run({"scaling_gamma", {{"seed", "1"}, {"out_dir", d.string()}}});
    const auto script = slurp(emit_plot_script(m));
    CHECK(script.find("multiplot") != std::string::npos);
    CHECK(script.find("F.csv") != std::string::npos);
    CHECK(script.find("set origin") != std::string::npos);

    const auto c = scratch("plot_cauchy");
    const auto mc = run({"cauchy_law", {{"seed", "1"}, {"n", "300"}, {"samples", "400"}, {"out_dir", c.string()}}});
    const auto s2 = slurp(emit_plot_script(mc));
    CHECK(s2.find("left cumulative") != std::string::npos);
    CHECK(s2.find("right cumulative") != std::string::npos);

    RunManifest empty;
    CHECK_THROWS_AS(emit_plot_script(empty), rmt::InputError);
    auto broken = m;
    fs::remove(d / "gamma.csv");
    CHECK_THROWS_AS(emit_plot_script(broken), rmt::InputError);
}

TEST_CASE("command-line binary") {
    const std::string exe = RMTLAB_PATH;
    const auto bad = shell(exe + " no-such-experiment --seed 1 2>/dev/null");
    CHECK(bad.first != 0);
    CHECK(bad.second.find("\"error\"") != std::string::npos);

    const auto noseed = shell(exe + " picket --out " + scratch("noseed").string());
    CHECK(noseed.first != 0);
    CHECK(nlohmann::json::parse(noseed.second).at("error").at("kind") == "config");

    const auto d = scratch("cli");
    const auto ok = shell(exe + " picket --seed 3 --threads 1 --out " + d.string() + " terms=1000 push_samples=500 --plot");
    CHECK(ok.first == 0);
    CHECK(fs::exists(d / "plot.gp"));
    CHECK(nlohmann::json::parse(ok.second).at("experiment") == "picket");

    const auto cfg = scratch("cfg.txt");
    {
        std::ofstream f(cfg);
        f << "experiment = picket\nseed = 3\nterms = 1000\npush_samples = 500\nout_dir = " << scratch("cfgrun").string()
          << "\n";
    }
    const auto viafile = shell(exe + " run --config " + cfg.string());
    CHECK(viafile.first == 0);
    const auto a = nlohmann::json::parse(viafile.second).at("results");
    CHECK(a.at("max_abs_error") == nlohmann::json::parse(ok.second).at("results").at("max_abs_error"));
}
