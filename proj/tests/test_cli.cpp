#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "otpqkd/cli.hpp"

namespace otpqkd {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("otpqkd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "otpqkd");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  }

  static std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, RatesWritesDefaultGrid) {
  ASSERT_EQ(run({"rates", "--out", path("curve.csv")}), 0) << err_.str();
  const auto rows = lines(slurp(path("curve.csv")));
  ASSERT_EQ(rows.size(), 484U);
  EXPECT_EQ(rows[0], kCurveHeader);
  EXPECT_EQ(rows[1].substr(0, 20), "0,six-state-one-way,");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CurveRow r = CurveRow::parse(rows[i]);
    EXPECT_EQ(r.to_csv(), rows[i]);
    EXPECT_EQ(r.rate_clamped, std::max(0.0, r.rate_raw));
  }
  const CurveRow p3 = CurveRow::parse(rows[3 * 30 + 2]);
  EXPECT_EQ(p3.variant, "six-state-proposed");
  EXPECT_NEAR(p3.rate_raw, proposed_net_rate(depolarizing(0.015)), 1e-13);
}

TEST_F(CliTest, RatesBB84CarriesAlpha) {
  ASSERT_EQ(run({"rates", "--protocol", "bb84", "--variants", "proposed", "--p-end", "0.1", "--steps", "11", "--out",
                 path("b.csv")}),
            0);
  const auto rows = lines(slurp(path("b.csv")));
  ASSERT_EQ(rows.size(), 12U);
  EXPECT_TRUE(CurveRow::parse(rows[6]).alpha_star.has_value());
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"rates"}), 2);
  EXPECT_EQ(run({"rates", "--out", path("x"), "--variants", "nope"}), 2);
  EXPECT_EQ(run({"rates", "--out", path("x"), "--p-start", "0.2", "--p-end", "0.1"}), 2);
  EXPECT_EQ(run({"simulate", "--out", path("x")}), 2);
  EXPECT_EQ(run({"simulate", "--p", "0.03", "--n", "1001", "--out", path("x")}), 2);
  EXPECT_EQ(run({"simulate", "--p", "0.03", "--format", "xml", "--out", path("x")}), 2);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(CliTest, UnwritableOutput) {
  const std::string bad = path("missing/dir/out.csv");
  EXPECT_EQ(run({"rates", "--out", bad}), 3);
  EXPECT_EQ(run({"simulate", "--p", "0.03", "--n", "1000", "--out", bad}), 3);
}

TEST_F(CliTest, KeyMismatchExitCode) {
  // Explicit decoding at a high error rate with tiny redundancy fails often.
  const int code = run({"simulate", "--p", "0.05", "--n", "2000", "--trials", "10", "--mode", "explicit",
                        "--redundancy", "1", "--slack", "0", "--test-fraction", "0.5", "--out", path("m.csv")});
  EXPECT_EQ(code, 4) << out_.str();
  EXPECT_NE(out_.str().find("key_mismatches="), std::string::npos);
}

TEST_F(CliTest, NoCrossingExitCode) {
  EXPECT_EQ(run({"crossings", "--protocol", "six-state", "--p-end", "0.1"}), 5);
  ASSERT_EQ(run({"crossings", "--out", path("c.csv")}), 0);
  EXPECT_EQ(out_.str(), "variant,crossing_p_Z\nbb84-one-way,0.110028\n");
  EXPECT_EQ(slurp(path("c.csv")), out_.str());
}

TEST_F(CliTest, SimulateFormats) {
  ASSERT_EQ(run({"simulate", "--p", "0.03", "--n", "4000", "--trials", "3", "--out", path("s.csv")}), 0);
  EXPECT_EQ(lines(out_.str())[0], "seed=1");
  const auto csv = lines(slurp(path("s.csv")));
  ASSERT_EQ(csv.size(), 5U);
  EXPECT_EQ(csv[0], csv_header(report_fields("", SessionReport{})));
  EXPECT_EQ(csv[4].substr(0, 10), "aggregate,");

  ASSERT_EQ(run({"simulate", "--p", "0.03", "--n", "4000", "--format", "json-lines", "--out", path("s.jsonl")}), 0);
  const auto js = lines(slurp(path("s.jsonl")));
  ASSERT_EQ(js.size(), 2U);
  const auto first = nlohmann::json::parse(js[0]);
  EXPECT_EQ(first["row"], "0");
  EXPECT_TRUE(first["keys_match"].get<bool>());
  EXPECT_TRUE(first["p_Z"].is_number_float());
  const SessionReport direct = [] {
    SessionConfig c;
    c.channel = depolarizing(0.03);
    c.n_signals = 4000;
    return run_session(c);
  }();
  EXPECT_EQ(first["net"].get<long long>(), direct.ledger.net());

  ASSERT_EQ(run({"simulate", "--p", "0.03", "--n", "4000", "--format", "records", "--out", path("s.txt")}), 0);
  EXPECT_EQ(slurp(path("s.txt")).substr(0, 19), "row=0 seed=1 protoc");
}

TEST_F(CliTest, ConfigFileSuppliesOptions) {
  {
    std::ofstream cfg(path("run.toml"));
    cfg << "[simulate]\np = 0.03\nn = 4000\nseed = 42\n";
  }
  ASSERT_EQ(run({"simulate", "--config", path("run.toml"), "--out", path("a.csv")}), 0) << err_.str();
  EXPECT_EQ(lines(out_.str())[0], "seed=42");
  ASSERT_EQ(run({"simulate", "--p", "0.03", "--n", "4000", "--seed", "42", "--out", path("b.csv")}), 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

TEST_F(CliTest, TranscriptLog) {
  ASSERT_EQ(run({"simulate", "--qx", "0.02", "--qy", "0.01", "--qz", "0.03", "--n", "2000", "--trials", "2",
                 "--transcript", path("t.log"), "--out", path("s.csv")}),
            0);
  const std::string log = slurp(path("t.log"));
  EXPECT_EQ(log.rfind("# trial 0 seed=1\n", 0), 0U);
  EXPECT_NE(log.find("# trial 1 seed="), std::string::npos);
}

TEST_F(CliTest, BinaryOutputIsByteIdenticalAcrossRuns) {
  const std::string exe = OTPQKD_CLI_PATH;
  for (int k = 0; k < 2; ++k) {
    const std::string cmd = exe + " simulate --p 0.03 --n 4000 --trials 3 --seed 7 --out " + path("r" + std::to_string(k) + ".csv") +
                            " > " + path("o" + std::to_string(k) + ".txt");
    ASSERT_EQ(std::system(cmd.c_str()), 0);
  }
  EXPECT_EQ(slurp(path("r0.csv")), slurp(path("r1.csv")));
  EXPECT_EQ(slurp(path("o0.txt")), slurp(path("o1.txt")));
}

}  // namespace
}  // namespace otpqkd
