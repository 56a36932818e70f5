#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "critsense/config.hpp"
#include "critsense/runner.hpp"

using namespace critsense;
namespace fs = std::filesystem;

namespace {

bool any_contains(const std::vector<std::string>& v, const std::string& s) {
    for (const auto& e : v) {
        if (e.find(s) != std::string::npos) return true;
    }
    return false;
}

std::vector<std::string> config_errors(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.errors();
    }
    return {};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("critsense_test_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

TEST(Config, MinimalQuenchUsesDefaults) {
    const RunConfig c = parse_config("scenario = fig2-quench\n");
    EXPECT_EQ(c.scenario, "fig2-quench");
    EXPECT_NEAR(c.params.omega, kTwoPi * 20.9, 1e-12);
    EXPECT_EQ(c.params.k, 10.0);
    EXPECT_EQ(c.params.kappa_q, 0.05);
    EXPECT_EQ(c.params.kappa_r, 0.08);
    EXPECT_EQ(c.params.gamma_q, 0.08);
    EXPECT_EQ(c.number("epsilon_target"), 0.99);
    EXPECT_EQ(c.list("k_values").size(), 3u);
    EXPECT_EQ(c.jobs, 1);
    EXPECT_TRUE(c.output_dir.empty());
}

TEST(Config, UnitFlags) {
    const RunConfig c = parse_config(
        "scenario = fig2-quench\n[params]\nomega.value = 20.9\nomega.unit = MHz\nomega.times_two_pi = true\n"
        "chi.value = 1000\nchi.unit = rad_per_us\nchi.times_two_pi = false\n"
        "[settings]\nk_values.values = linspace(2, 4, 3)\nk_values.unit = MHz\nk_values.times_two_pi = false\n");
    EXPECT_NEAR(c.params.omega, kTwoPi * 20.9, 1e-12);
    EXPECT_EQ(c.params.chi, 1000.0);
    EXPECT_EQ(c.list("k_values"), (std::vector<double>{2.0, 3.0, 4.0}));
}

TEST(Config, EpsilonOneNamesField) {
    const auto e = config_errors("scenario = fig2-quench\n[settings]\nepsilon_target = 1.0\n");
    ASSERT_FALSE(e.empty());
    EXPECT_TRUE(any_contains(e, "settings.epsilon_target")) << e.front();
}

TEST(Config, MissingTwoPiFlag) {
    const auto e = config_errors("scenario = fig2-quench\n[params]\nomega.value = 20.9\nomega.unit = MHz\n");
    EXPECT_TRUE(any_contains(e, "omega.times_two_pi"));
}

TEST(Config, NegativeRateAndUnknowns) {
    const auto e = config_errors(
        "scenario = fig2-quench\nbogus = 1\n[params]\nkappa_r.value = -0.1\nkappa_r.unit = MHz\n"
        "kappa_r.times_two_pi = false\nfoo.value = 1\n[settings]\nnope = 2\n[extra]\nx = 1\n");
    EXPECT_TRUE(any_contains(e, "params.kappa_r"));
    EXPECT_TRUE(any_contains(e, "params.foo"));
    EXPECT_TRUE(any_contains(e, "settings.nope"));
    EXPECT_TRUE(any_contains(e, "[extra]"));
    EXPECT_TRUE(any_contains(e, "bogus"));
}

TEST(Config, UnknownScenario) {
    EXPECT_TRUE(any_contains(config_errors("scenario = fig9\n"), "unknown scenario"));
    EXPECT_TRUE(any_contains(config_errors("out = x\n"), "missing"));
}

TEST(Config, ScenarioSpecificChecks) {
    EXPECT_TRUE(any_contains(config_errors("scenario = fisher-scan\n[settings]\nepsilon = 0.5, 0.6\n"), "at least 3"));
    EXPECT_TRUE(
        any_contains(config_errors("scenario = rabi-comparison\n[settings]\nn_values = 1, 2\n"), "odd integer"));
    EXPECT_TRUE(any_contains(
        config_errors("scenario = figS3-scan\n[settings]\nkappa_q_sets.values = 0.05, 0\n"
                      "kappa_q_sets.unit = MHz\nkappa_q_sets.times_two_pi = false\n"),
        "differ in length"));
}

TEST(Config, EveryScenarioParsesWithDefaults) {
    for (const auto& s : scenarios()) {
        EXPECT_NO_THROW(parse_config("scenario = " + s.name + "\n")) << s.name;
    }
}

TEST(Runner, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Runner, OutputSetRejectsPaths) {
    OutputSet out(fresh_dir("paths"));
    EXPECT_THROW(out.write("../x.csv", [](std::ostream&) {}), std::invalid_argument);
    EXPECT_THROW(out.write("sub/x.csv", [](std::ostream&) {}), std::invalid_argument);
    EXPECT_THROW(out.write("..", [](std::ostream&) {}), std::invalid_argument);
}

TEST(Runner, QuenchScenarioWritesFigureCsvs) {
    const fs::path dir = fresh_dir("fig2");
    RunConfig c = parse_config(
        "scenario = fig2-quench\n[settings]\nepsilon_target = 0.8\nfock_cutoff = 20\nn_samples = 20\n"
        "k_values.values = 10, 20\nk_values.unit = MHz\nk_values.times_two_pi = false\n");
    std::ostringstream log;
    ASSERT_EQ(run(c, dir, log), kExitOk) << log.str();
    for (const char* f : {"fig2a_ramp.csv", "fig2b_fidelity.csv", "fig2c_photon.csv", "fig2d_excitation.csv",
                          "trajectory.csv", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["files"].size(), 5u);
    for (const auto& f : manifest["files"]) {
        EXPECT_EQ(f["sha256"].get<std::string>(), sha256_hex(slurp(dir / f["name"].get<std::string>())));
    }
    // Nothing outside the output directory, nothing unlisted inside it.
    std::size_t count = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        (void)e;
        ++count;
    }
    EXPECT_EQ(count, 6u);
}

TEST(Runner, FisherScanColumns) {
    const fs::path dir = fresh_dir("fisher");
    RunConfig c = parse_config("scenario = fisher-scan\n[settings]\nepsilon = linspace(0.5, 0.7, 5)\nfock_cutoff = 20\n");
    std::ostringstream log;
    ASSERT_EQ(run(c, dir, log), kExitOk) << log.str();
    const std::string csv = slurp(dir / "fisher_scan.csv");
    EXPECT_NE(csv.find("\nepsilon,F_analytic,F_simulated\n"), std::string::npos);
}

TEST(Runner, RepeatedRunIsByteIdentical) {
    const RunConfig c = parse_config("scenario = figS6-crosstalk\n[settings]\ntau_points = 201\nphase_points = 36\n");
    std::ostringstream log;
    const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    ASSERT_EQ(run(c, a, log), kExitOk);
    ASSERT_EQ(run(c, b, log), kExitOk);
    EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
}

TEST(Runner, NumericalFailureWritesErrorRecord) {
    const fs::path dir = fresh_dir("fail");
    // A signal far shorter than one swap period makes the fit ill-conditioned.
    const RunConfig c = parse_config("scenario = figS8-tomography\n[settings]\ntau_max = 0.001\n");
    std::ostringstream log;
    EXPECT_EQ(run(c, dir, log), kExitNumericalFailure);
    ASSERT_TRUE(fs::exists(dir / "error.json"));
    EXPECT_FALSE(fs::exists(dir / "manifest.json"));
    const auto j = nlohmann::json::parse(slurp(dir / "error.json"));
    EXPECT_EQ(j["status"], "error");
    EXPECT_EQ(j["exit_code"], kExitNumericalFailure);
    EXPECT_EQ(j["error_type"], "ConditioningError");
    EXPECT_EQ(j["scenario"], "figS8-tomography");
}

#ifdef CRITSENSE_CLI_PATH
TEST(Cli, ExitCodes) {
    const fs::path dir = fresh_dir("cli");
    fs::create_directories(dir);
    const fs::path bad = dir / "bad.ini";
    std::ofstream(bad) << "scenario = fig2-quench\n[settings]\nepsilon_target = 1.0\n";
    const fs::path good = dir / "good.ini";
    std::ofstream(good) << "scenario = iontrap\n";
    const std::string cli = CRITSENSE_CLI_PATH;
    auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(s);
    };
    EXPECT_EQ(status(cli + " --config " + bad.string() + " --out " + (dir / "o1").string()), kExitConfigError);
    EXPECT_TRUE(fs::exists(dir / "o1" / "error.json"));
    EXPECT_EQ(status(cli + " --config " + good.string() + " --out " + (dir / "o2").string()), kExitOk);
    EXPECT_TRUE(fs::exists(dir / "o2" / "iontrap.csv"));
    EXPECT_EQ(status(cli + " --list-scenarios"), kExitOk);
    EXPECT_EQ(status(cli + " --config " + good.string()), kExitConfigError);  // no output directory
}
#endif
