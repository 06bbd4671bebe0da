#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isl/cli.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("isl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return isl::cli::run_cli(args, out_, err_);
    }
    std::string sub(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
    std::ostringstream out_, err_;
};

const std::vector<std::string> small_train{"train1d", "--target", "normal:4,2", "--n", "200",
                                           "--epochs", "3", "--eval-samples", "2000", "--seed", "7"};

std::vector<std::string> with_out(std::vector<std::string> a, const std::string& out) {
    a.push_back("--out");
    a.push_back(out);
    return a;
}

}  // namespace

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run({}), isl::cli::exit_usage);
    EXPECT_EQ(run({"frobnicate"}), isl::cli::exit_usage);
    EXPECT_EQ(run({"train1d"}), isl::cli::exit_usage);  // --target is required
    EXPECT_EQ(run({"train1d", "--target", "normal:4,2", "--epochs", "0", "--out", sub("a")}), isl::cli::exit_usage);
    EXPECT_NE(err_.str().find("epochs"), std::string::npos) << err_.str();
    EXPECT_EQ(run({"train1d", "--target", "gamma:1,1", "--out", sub("b")}), isl::cli::exit_usage);
    EXPECT_EQ(run({"forecast", "--checkpoint", "missing.bin", "--data", "x.csv", "--out", sub("c")}),
              isl::cli::exit_usage);
    EXPECT_EQ(run({"--help"}), isl::cli::exit_ok);
}

TEST_F(CliTest, Train1dWritesArtifactsAndManifest) {
    ASSERT_EQ(run(with_out(small_train, sub("run"))), isl::cli::exit_ok) << err_.str();
    for (const char* f : {"checkpoint.json", "runlog.jsonl", "histogram.json", "cdf.csv", "density.csv", "k_trace.csv",
                          "metrics.json", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir_ / "run" / f)) << f;
    }
    const auto metrics = json::parse(slurp(dir_ / "run" / "metrics.json"));
    EXPECT_TRUE(metrics.contains("ksd"));
    EXPECT_EQ(metrics.at("manifest"), "manifest.json");
    const auto manifest = json::parse(slurp(dir_ / "run" / "manifest.json"));
    EXPECT_EQ(manifest.at("command"), "train1d");
    EXPECT_EQ(manifest.at("seed"), 7);
    EXPECT_EQ(manifest.at("config").at("epochs"), "3");
    EXPECT_TRUE(manifest.contains("artifacts"));
}

TEST_F(CliTest, SameSeedByteIdenticalArtifacts) {
    ASSERT_EQ(run(with_out(small_train, sub("a"))), 0) << err_.str();
    ASSERT_EQ(run(with_out(small_train, sub("b"))), 0) << err_.str();
    int compared = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "a")) {
        const auto name = e.path().filename();
        if (name == "manifest.json") continue;
        EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / name)) << name;
        ++compared;
    }
    EXPECT_GE(compared, 7);
}

TEST_F(CliTest, ManifestReplayReproducesOutputs) {
    ASSERT_EQ(run(with_out(small_train, sub("a"))), 0) << err_.str();
    ASSERT_EQ(run({"train1d", "--config", sub("a/manifest.json"), "--out", sub("b")}), 0) << err_.str();
    EXPECT_EQ(slurp(dir_ / "a" / "metrics.json"), slurp(dir_ / "b" / "metrics.json"));
    EXPECT_EQ(slurp(dir_ / "a" / "checkpoint.json"), slurp(dir_ / "b" / "checkpoint.json"));
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
    std::ofstream(sub("cfg.txt")) << "# small run\ntarget = normal:4,2\nepochs = 4\nn = 200\neval-samples = 2000\n";
    ASSERT_EQ(run({"train1d", "--config", sub("cfg.txt"), "--epochs", "2", "--out", sub("r")}), 0) << err_.str();
    const auto manifest = json::parse(slurp(dir_ / "r" / "manifest.json"));
    EXPECT_EQ(manifest.at("config").at("epochs"), "2");
    EXPECT_EQ(manifest.at("config").at("n"), "200");

    std::ofstream(sub("cfg.json")) << R"({"target": "uniform:-2,2", "epochs": 2, "n": 200, "eval-samples": 2000})";
    ASSERT_EQ(run({"train1d", "--config", sub("cfg.json"), "--out", sub("j")}), 0) << err_.str();
    const auto mj = json::parse(slurp(dir_ / "j" / "metrics.json"));
    EXPECT_EQ(mj.at("target"), "uniform:-2,2");

    std::ofstream(sub("bad.txt")) << "this line has no equals sign\n";
    EXPECT_EQ(run({"train1d", "--config", sub("bad.txt"), "--out", sub("x")}), isl::cli::exit_usage);
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
    ::setenv(isl::cli::output_dir_env, sub("env").c_str(), 1);
    const int code = run(small_train);
    ::unsetenv(isl::cli::output_dir_env);
    ASSERT_EQ(code, 0) << err_.str();
    EXPECT_TRUE(fs::exists(dir_ / "env" / "metrics.json"));
}

TEST_F(CliTest, DivergenceExitStatus) {
    EXPECT_EQ(run({"train1d", "--target", "normal:4,2", "--n", "200", "--epochs", "3", "--lr", "1e200", "--out",
                   sub("d")}),
              isl::cli::exit_divergence);
}

TEST_F(CliTest, VerifySuites) {
    EXPECT_EQ(run({"verify", "--suite", "theorem1", "--k", "5", "--trials", "100000", "--out", sub("v")}), 0)
        << out_.str();
    EXPECT_NE(out_.str().find("PASS"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir_ / "v" / "verify.json"));
    EXPECT_EQ(run({"verify", "--suite", "theorem2", "--out", sub("b")}), 0) << out_.str();
    // An impossible tolerance must be reported as a property failure.
    EXPECT_EQ(run({"verify", "--suite", "oracle", "--mc-draws", "1000", "--tolerance", "1e-9", "--out", sub("o")}),
              isl::cli::exit_property);
    EXPECT_EQ(run({"verify", "--suite", "nonsense", "--out", sub("n")}), isl::cli::exit_usage);
}

TEST_F(CliTest, TimeSeriesPipeline) {
    ASSERT_EQ(run({"synth-ar", "--phi", "0.5,0.2", "--noise-var", "0.01", "--t", "120", "--series", "6", "--seed",
                   "1", "--out", sub("ar")}),
              0)
        << err_.str();
    const auto csv = (dir_ / "ar" / "ar.csv").string();
    ASSERT_TRUE(fs::exists(csv)) << out_.str();
    ASSERT_EQ(run({"train-ts", "--data", csv, "--time-column", "t", "--hidden", "4", "--gen-hidden", "6", "--window",
                   "20", "--batch", "3", "--k", "5", "--epochs", "2", "--seed", "2", "--out", sub("tr")}),
              0)
        << err_.str();
    const auto ckpt = (dir_ / "tr" / "checkpoint.json").string();
    ASSERT_EQ(run({"forecast", "--checkpoint", ckpt, "--data", csv, "--series", "ar1", "--history", "20", "--horizon",
                   "5", "--trajectories", "30", "--out", sub("fc")}),
              0)
        << err_.str();
    const auto f = json::parse(slurp(dir_ / "fc" / "forecast.json"));
    EXPECT_EQ(f.at("horizon"), 5);
    EXPECT_TRUE(f.contains("scaling"));
    ASSERT_EQ(run({"eval", "--forecast", (dir_ / "fc" / "forecast.json").string(), "--data", csv, "--out", sub("ev")}),
              0)
        << err_.str();
    const auto m = json::parse(slurp(dir_ / "ev" / "metrics.json"));
    EXPECT_TRUE(m.contains("nd"));
    EXPECT_TRUE(m.at("ql").contains("0.9"));
    EXPECT_TRUE(m.at("standardized").contains("nd"));

    // Same seed, same forecast bytes.
    ASSERT_EQ(run({"forecast", "--checkpoint", ckpt, "--data", csv, "--series", "ar1", "--history", "20", "--horizon",
                   "5", "--trajectories", "30", "--out", sub("fc2")}),
              0);
    EXPECT_EQ(slurp(dir_ / "fc" / "trajectories.csv"), slurp(dir_ / "fc2" / "trajectories.csv"));
}

TEST_F(CliTest, EvalCheckpoint) {
    ASSERT_EQ(run(with_out(small_train, sub("a"))), 0) << err_.str();
    ASSERT_EQ(run({"eval", "--checkpoint", sub("a/checkpoint.json"), "--n-mc", "5000", "--out", sub("e")}), 0)
        << err_.str();
    EXPECT_NE(out_.str().find("| KSD |"), std::string::npos);
    EXPECT_EQ(run({"eval", "--out", sub("f")}), isl::cli::exit_usage);
    EXPECT_EQ(run({"eval", "--checkpoint", sub("a/checkpoint.json"), "--n-mc", "10", "--out", sub("g")}),
              isl::cli::exit_usage);
}
