#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "ughc/cli.hpp"

using namespace ughc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int rc = 0;
  std::string out, err;
};

Run ughc_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.rc = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ughc_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    unsetenv("UGHC_THREADS");
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& f) const { return (dir_ / f).string(); }
  nlohmann::json json_at(const std::string& f) const { return nlohmann::json::parse(cli::read_file(path(f))); }

  fs::path dir_;
};

}  // namespace

TEST(CliHash, MatchesGitBlobHashes) {
  // `git hash-object` of an empty file and of "hello\n"
  EXPECT_EQ(cli::git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(cli::git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_F(CliTest, GenerateIsDeterministicWithRealizedValue) {
  auto a = ughc_run({"generate", "--n", "8", "--l", "2", "--alpha", "0.5", "--q", "2", "--eps", "0", "--out", path("a.json"),
                     "--report", path("ra.json")});
  ASSERT_EQ(a.rc, 0) << a.err;
  EXPECT_NE(a.out.find("realized value 1"), std::string::npos);
  ughc_run({"generate", "--n", "8", "--l", "2", "--alpha", "0.5", "--q", "2", "--eps", "0", "--out", path("b.json")});
  EXPECT_EQ(cli::read_file(path("a.json")), cli::read_file(path("b.json")));
  auto rep = json_at("ra.json");
  EXPECT_EQ(rep["realized_value"], 1.0);
  EXPECT_EQ(rep["output"]["git_blob_sha1"], cli::git_blob_sha1(cli::read_file(path("a.json"))));
  EXPECT_TRUE(rep["inputs"]["config"].contains("git_blob_sha1"));
  EXPECT_EQ(rep["config"]["n"], "8");
}

TEST_F(CliTest, GenerateRealizedValueIsMeasuredCorruption) {
  ASSERT_EQ(ughc_run({"generate", "--n", "8", "--l", "2", "--alpha", "0.5", "--q", "3", "--eps", "0.2", "--seed", "4",
                      "--out", path("c.json")}).rc, 0);
  auto j = json_at("c.json");
  auto A = j["metadata"]["planted"]["assignment"].get<std::vector<int>>();
  int bad = 0, total = 0;
  for (const auto& e : j["edges"]) {
    ++total;
    bad += mod(A[e[0].get<int>()] - A[e[1].get<int>()], 3) != e[2].get<int>();
  }
  EXPECT_GT(bad, 0);
  EXPECT_DOUBLE_EQ(j["metadata"]["planted"]["realized_value"].get<double>(), 1.0 - static_cast<double>(bad) / total);
}

TEST_F(CliTest, ParameterErrorsExitNonzero) {
  EXPECT_EQ(ughc_run({"generate", "--n", "8", "--l", "3", "--alpha", "0.5", "--out", path("x.json")}).rc, 2);
  EXPECT_EQ(ughc_run({"generate", "--n", "8"}).rc, 2);  // --out is required
  EXPECT_EQ(ughc_run({"frobnicate"}).rc, 2);
  EXPECT_EQ(ughc_run({}).rc, 2);
  EXPECT_EQ(ughc_run({"--help"}).rc, 0);
  EXPECT_EQ(ughc_run({"round", "--help"}).rc, 0);
  EXPECT_EQ(ughc_run({"verify", "--suite", "nonsense"}).rc, 2);
  EXPECT_EQ(ughc_run({"solve", "--instance", path("missing.json")}).rc, 2);
}

TEST_F(CliTest, RoundPlantedInstance) {
  ASSERT_EQ(ughc_run({"generate", "--n", "8", "--l", "2", "--alpha", "0.5", "--q", "2", "--eps", "0", "--seed", "2",
                      "--out", path("p.json")}).rc, 0);
  auto r = ughc_run({"round", "--instance", path("p.json"), "--eps", "0", "--out", path("f.json"), "--trace",
                     path("t.jsonl"), "--report", path("r.json")});
  ASSERT_EQ(r.rc, 0) << r.out << r.err;
  auto rep = json_at("r.json");
  EXPECT_GE(rep["value"].get<double>(), 0.9);
  EXPECT_TRUE(rep["ok"].get<bool>());
  EXPECT_TRUE(rep["opt"].is_null());  // 2^27 states exceed the default budget
  EXPECT_EQ(rep["inputs"]["instance"]["git_blob_sha1"], cli::git_blob_sha1(cli::read_file(path("p.json"))));
  EXPECT_EQ(rep["trace"]["git_blob_sha1"], cli::git_blob_sha1(cli::read_file(path("t.jsonl"))));
  std::istringstream lines(cli::read_file(path("t.jsonl")));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    auto rec = nlohmann::json::parse(line);
    EXPECT_EQ(rec["iteration"], ++n);
  }
  EXPECT_EQ(n, rep["trace_summary"]["iterations"].get<int>());
  // same instance, same seed: same bytes
  ASSERT_EQ(ughc_run({"round", "--instance", path("p.json"), "--eps", "0", "--trace", path("t2.jsonl")}).rc, 0);
  EXPECT_EQ(cli::read_file(path("t.jsonl")), cli::read_file(path("t2.jsonl")));
}

TEST_F(CliTest, RoundComparesToBruteForceWhenSmall) {
  ASSERT_EQ(ughc_run({"generate", "--n", "5", "--l", "2", "--alpha", "0.5", "--q", "2", "--eps", "0.1", "--seed", "3",
                      "--out", path("s.json")}).rc, 0);
  auto r = ughc_run({"round", "--instance", path("s.json"), "--eps", "0.1", "--report", path("r.json")});
  EXPECT_EQ(r.rc, 0) << r.out << r.err;
  auto rep = json_at("r.json");
  // degree 4 fits here, so SubRound sees raw moments and the step-weighted lemma checks are skipped
  EXPECT_EQ(rep["lemmas_unevaluated"], 1);
  ASSERT_FALSE(rep["opt"].is_null());
  auto inst = instance_from_json(json_at("s.json"));
  EXPECT_DOUBLE_EQ(rep["opt"].get<double>(), brute_force_opt(inst).value);
  EXPECT_LE(rep["value"].get<double>(), rep["opt"].get<double>() + 1e-12);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  cli::write_file(path("cfg.ini"), "# defaults for this run\nn = 6\nl = 2\nalpha = 0.5\nq = 3\nseed = 7\n");
  auto r = ughc_run({"generate", "--config", path("cfg.ini"), "--seed", "9", "--out", path("g.json"), "--report",
                     path("rep.json")});
  ASSERT_EQ(r.rc, 0) << r.err;
  auto rep = json_at("rep.json");
  EXPECT_EQ(rep["config"]["seed"], "9");
  EXPECT_EQ(rep["config"]["q"], "3");
  EXPECT_EQ(rep["vertices"], 15);
  EXPECT_EQ(rep["inputs"]["config_file"]["git_blob_sha1"], cli::git_blob_sha1(cli::read_file(path("cfg.ini"))));
  cli::write_file(path("typo.ini"), "sede = 3\n");
  EXPECT_EQ(ughc_run({"generate", "--config", path("typo.ini"), "--out", path("h.json")}).rc, 2);
}

TEST_F(CliTest, VerifySpectraSingleTuple) {
  auto r = ughc_run({"verify", "--suite", "spectra", "--n", "3", "--l", "2", "--alpha", "0.5", "--report", path("v.json")});
  ASSERT_EQ(r.rc, 0) << r.out;
  auto rep = json_at("v.json");
  ASSERT_TRUE(rep["ok"].get<bool>());
  bool dense = false;
  for (const auto& c : rep["result"]["checks"])
    if (c["name"] == "dense spectrum residual") {
      dense = true;
      EXPECT_LE(c["worst"].get<double>(), 1e-9);
    }
  EXPECT_TRUE(dense);
}

TEST_F(CliTest, SolveThenVerifyAndCorruptedPe) {
  ASSERT_EQ(ughc_run({"generate", "--n", "5", "--l", "2", "--alpha", "0.5", "--q", "3", "--eps", "0.2", "--out",
                      path("s.json")}).rc, 0);
  auto s = ughc_run({"solve", "--instance", path("s.json"), "--degree", "2", "--out", path("pe.json"), "--report",
                     path("sr.json")});
  ASSERT_EQ(s.rc, 0) << s.out << s.err;
  EXPECT_TRUE(json_at("sr.json")["validation"]["ok"].get<bool>());
  EXPECT_EQ(ughc_run({"verify", "--pe", path("pe.json"), "--instance", path("s.json")}).rc, 0);

  // break the partition constraint at vertex 0
  auto pe = json_at("pe.json");
  pe["moments"]["X:0:0"] = pe["moments"]["X:0:0"].get<double>() + 0.25;
  cli::write_file(path("bad.json"), pe.dump());
  auto v = ughc_run({"verify", "--pe", path("bad.json"), "--report", path("vr.json")});
  EXPECT_EQ(v.rc, 1);
  EXPECT_NE(v.err.find("failed invariant: partition"), std::string::npos) << v.err;
  auto failed = json_at("vr.json")["result"]["failed"].get<std::vector<std::string>>();
  EXPECT_NE(std::find(failed.begin(), failed.end(), "partition"), failed.end());

  // a scaling break is named too
  pe = json_at("pe.json");
  pe["moments"][""] = 0.5;
  cli::write_file(path("bad2.json"), pe.dump());
  auto v2 = ughc_run({"verify", "--pe", path("bad2.json")});
  EXPECT_EQ(v2.rc, 1);
  EXPECT_NE(v2.err.find("failed invariant: scaling"), std::string::npos) << v2.err;
}

TEST_F(CliTest, VerifyNeedsExactlyOneTarget) {
  EXPECT_EQ(ughc_run({"verify"}).rc, 2);
}

TEST_F(CliTest, ThreadCapFromEnvironment) {
  setenv("UGHC_THREADS", "1", 1);
  ASSERT_EQ(ughc_run({"spectra", "--n", "4", "--l", "2", "--alpha", "1", "--report", path("s.json")}).rc, 0);
  EXPECT_EQ(json_at("s.json")["threads"], 1);
  EXPECT_EQ(json_at("s.json")["spectrum"][1]["eigenvalue"], 0.0);
  setenv("UGHC_THREADS", "zero", 1);
  EXPECT_EQ(ughc_run({"spectra"}).rc, 2);
  unsetenv("UGHC_THREADS");
}
