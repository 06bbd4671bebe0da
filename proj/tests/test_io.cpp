#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "isl/io.hpp"

namespace fs = std::filesystem;
using isl::io::json;

namespace {

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("isl_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

}  // namespace

TEST_F(IoTest, MlpCheckpointRoundTrip) {
    const isl::Mlp net(isl::MlpSpec::generator(1, {7, 13, 7}, 1, isl::Activation::ELU));
    isl::Stream rng(1);
    const auto theta = net.init(rng);
    isl::io::save_checkpoint(path("c.json"), isl::io::make_checkpoint(net, theta, {{"target", "normal:4,2"}}));
    const auto c = isl::io::load_checkpoint(path("c.json"));
    EXPECT_EQ(c.kind, "mlp");
    EXPECT_EQ(c.theta.values, theta.values);
    EXPECT_EQ(c.meta.at("target"), "normal:4,2");
    const auto back = isl::io::mlp_from_checkpoint(c);
    EXPECT_EQ(back.layout(), net.layout());
    EXPECT_EQ(back.forward_scalar(c.theta.values, 0.3), net.forward_scalar(theta.values, 0.3));
}

TEST_F(IoTest, TemporalCheckpointRoundTrip) {
    const auto m = isl::TemporalModel::make(2, 5, 2, isl::Activation::ReLU, {8, 8}, isl::Activation::ELU);
    isl::Stream rng(2);
    const auto theta = m.init(rng);
    isl::io::save_checkpoint(path("t.json"), isl::io::make_checkpoint(m, theta));
    const auto c = isl::io::load_checkpoint(path("t.json"));
    EXPECT_EQ(c.kind, "temporal");
    const auto back = isl::io::temporal_from_checkpoint(c);
    EXPECT_EQ(back.layout(), m.layout());
    EXPECT_EQ(c.theta.values, theta.values);
    EXPECT_THROW(isl::io::mlp_from_checkpoint(c), std::runtime_error);
}

TEST_F(IoTest, LoadRejectsDamagedCheckpoints) {
    const isl::Mlp net(isl::MlpSpec::generator(1, {3}, 1, isl::Activation::ReLU));
    isl::Stream rng(3);
    isl::io::save_checkpoint(path("ok.json"), isl::io::make_checkpoint(net, net.init(rng)));
    const auto good = isl::io::read_json(path("ok.json"));

    auto expect_rejected = [&](json j, const char* what) {
        isl::io::write_json(path("bad.json"), j);
        EXPECT_THROW(isl::io::load_checkpoint(path("bad.json")), std::runtime_error) << what;
    };
    auto j = good;
    j["format"] = "something-else";
    expect_rejected(j, "format");
    j = good;
    j["version"] = 99;
    expect_rejected(j, "version");
    j = good;
    j["theta"].erase(j["theta"].begin());
    expect_rejected(j, "size");
    j = good;
    j["theta"][0] = nullptr;
    expect_rejected(j, "non-finite");
    j = good;
    j["layout"][0]["rows"] = 4;
    expect_rejected(j, "layout");
    j = good;
    j.erase("spec");
    expect_rejected(j, "missing spec");

    std::ofstream(path("garbage.json")) << "{not json";
    EXPECT_THROW(isl::io::load_checkpoint(path("garbage.json")), std::runtime_error);
    EXPECT_THROW(isl::io::load_checkpoint(path("missing.json")), std::runtime_error);
}

TEST_F(IoTest, SpecsRoundTrip) {
    isl::MlpSpec s = isl::MlpSpec::generator(3, {4, 5}, 2, isl::Activation::Tanh);
    s.dropout = {0.1, 0.2, 0.0};
    const auto back = isl::io::mlp_spec_from_json(isl::io::to_json(s));
    EXPECT_EQ(back.widths, s.widths);
    EXPECT_EQ(back.activations, s.activations);
    EXPECT_EQ(back.dropout, s.dropout);
    const isl::RnnSpec r{2, 7, 3, isl::Activation::ELU};
    const auto rb = isl::io::rnn_spec_from_json(isl::io::to_json(r));
    EXPECT_EQ(rb.input_width, 2u);
    EXPECT_EQ(rb.hidden_width, 7u);
    EXPECT_EQ(rb.num_layers, 3u);
    EXPECT_EQ(rb.activation, isl::Activation::ELU);
}

TEST_F(IoTest, HistogramsRoundTrip) {
    const isl::RankHistogram h{{3, 1, 4, 1}, 9};
    const auto hb = isl::io::rank_histogram_from_json(isl::io::to_json(h));
    EXPECT_EQ(hb.counts, h.counts);
    EXPECT_EQ(hb.total, 9u);
    const isl::SoftHistogram q{{0.1, 0.25, 0.3}};
    EXPECT_EQ(isl::io::soft_histogram_from_json(isl::io::to_json(q)).q, q.q);
}

TEST_F(IoTest, RunLogIsOneRecordPerLine) {
    isl::RunLog log;
    log.records.push_back({1, 2, 0.5, 0.4, 3.0, true, 0});
    log.records.push_back({2, 3, 0.3, 0.2, 1.0, true, 1});
    log.transitions.push_back({10, 1, 2, 3});
    isl::io::write_run_log(path("log.jsonl"), log);
    std::ifstream in(path("log.jsonl"));
    std::string line;
    int n = 0, epochs = 0;
    while (std::getline(in, line)) {
        const auto j = json::parse(line);
        epochs += j.at("type") == "epoch";
        ++n;
    }
    EXPECT_EQ(n, 3);
    EXPECT_EQ(epochs, 2);
}

TEST_F(IoTest, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(isl::io::format_double(v)), v);
    EXPECT_EQ(isl::io::format_double(0.5), "0.5");
}

TEST_F(IoTest, ColumnsCsv) {
    isl::io::write_columns_csv(path("c.csv"), {"x", "y"}, {{1, 2}, {0.5, 0.25}});
    std::ifstream in(path("c.csv"));
    std::string a, b, c;
    std::getline(in, a);
    std::getline(in, b);
    std::getline(in, c);
    EXPECT_EQ(a, "x,y");
    EXPECT_EQ(b, "1,0.5");
    EXPECT_EQ(c, "2,0.25");
    EXPECT_THROW(isl::io::write_columns_csv(path("d.csv"), {"x", "y"}, {{1, 2}, {0.5}}), std::invalid_argument);
}
