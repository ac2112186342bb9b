#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "sgdva/harness.hpp"
#include "support/oracles.hpp"

using namespace sgdva;
namespace fs = std::filesystem;

namespace {

LearnOptions small_options(std::uint64_t seed) {
  LearnOptions o;
  o.d = 5;
  o.n = 1000;
  o.T = 20;
  o.seed = seed;
  o.test_samples = 3000;
  o.eval_samples = 5000;
  return o;
}

// Replaces every leaf by its type name so reports can be compared structurally.
Json shape(const Json& j) {
  if (j.is_object()) {
    Json out = Json::object();
    for (const auto& [k, v] : j.items()) out[k] = shape(v);
    return out;
  }
  if (j.is_array()) return j.empty() ? Json::array() : Json::array({shape(j.front())});
  if (j.is_number()) return "number";
  return j.type_name();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sgdva_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SGDVA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Harness, LearnReportMatchesGoldenSchema) {
  const LearnOutcome out = run_learn(small_options(7));
  const Json golden = Json::parse(read_file(std::string(SGDVA_TEST_DATA) + "/report_schema.json"));
  EXPECT_EQ(shape(out.report), golden) << shape(out.report).dump(2);
  EXPECT_EQ(out.report["trace"], "trace.csv");
  EXPECT_TRUE(out.report["invariants"]["unit_norm"].get<bool>());
  EXPECT_TRUE(out.report["invariants"]["rho_increasing"].get<bool>());
  EXPECT_TRUE(out.report["invariants"]["phi_consistent"].get<bool>());
  EXPECT_EQ(out.trace.size(), 21u);
}

TEST(Harness, LearnIsDeterministic) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  write_learn_outputs(a.string(), run_learn(small_options(3)));
  write_learn_outputs(b.string(), run_learn(small_options(3)));
  EXPECT_EQ(read_file((a / "report.json").string()), read_file((b / "report.json").string()));
  EXPECT_EQ(read_file((a / "trace.csv").string()), read_file((b / "trace.csv").string()));
  const LearnOutcome other = run_learn(small_options(4));
  EXPECT_NE(other.report.dump(), Json::parse(read_file((a / "report.json").string())).dump());
}

TEST(Harness, BandCertificateInReport) {
  LearnOptions o = small_options(1);
  o.corruption = parse_corruption("band:tau=0.1,s=1");
  const LearnOutcome out = run_learn(o);
  EXPECT_NEAR(out.report["certificate_loss"].get<double>(), 2 * oracle::cdf(0.1) - 1, 1e-14);
  EXPECT_NEAR(out.report["ratio"].get<double>(), out.final_loss / out.certificate, 1e-12);
}

TEST(Harness, ExactModeRecordsAngles) {
  LearnOptions o = small_options(2);
  o.theta_mode = ThetaMode::kExact;
  const LearnOutcome out = run_learn(o);
  for (const TraceRecord& t : out.trace) EXPECT_FALSE(std::isnan(t.angle));
  const LearnOutcome blind = run_learn(small_options(2));
  for (const TraceRecord& t : blind.trace) EXPECT_TRUE(std::isnan(t.angle));
}

TEST(Harness, ConfigRoundTrip) {
  LearnOptions o = small_options(9);
  o.act = parse_activation_shorthand("relu:shift=0.5");
  o.corruption = parse_corruption("flip:p=0.1,s=1");
  o.theta_mode = ThetaMode::kExact;
  const Json j = options_to_json(o);
  EXPECT_EQ(options_to_json(options_from_json(j)), j);
  EXPECT_EQ(options_from_json({{"activation", "sigmoid"}}).act.name, "sigmoid");
  EXPECT_THROW(options_from_json({{"dd", 3}}), Error);
  EXPECT_THROW(options_from_json({{"theta_mode", "psychic"}}), Error);
  EXPECT_THROW(options_from_json({{"d", "three"}}), Error);
}

TEST(Harness, Calibration) {
  const Calibration c = load_calibration(SGDVA_CALIBRATION_FILE);
  EXPECT_GT(c.K_smoothing_gap, 0.0);
  EXPECT_GT(c.K_hermite_tail, 0.0);
  EXPECT_GT(c.C_emp, 0.0);
  EXPECT_GE(c.C_init, 1.0);
  EXPECT_THROW(load_calibration("/nonexistent/constants.json"), Error);
}

TEST(Harness, PsiCsv) {
  const fs::path dir = scratch("psi");
  PsiJob job;
  job.acts = {{"identity", {}, 0.01, false}, {"relu", {{"shift", {1.0}}}, 0.01, false}};
  job.grid = 8;
  job.budget = {500, 8};
  const auto names = run_psi(job, dir.string());
  ASSERT_EQ(names.size(), 2u);
  EXPECT_EQ(names[0], "psi_identity.csv");
  EXPECT_EQ(names[1], "psi_relu_shift-1.csv");
  const std::string text = read_file((dir / names[0]).string());
  EXPECT_EQ(text.substr(0, 18), "theta,psi,stderr\r\n");
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    double theta, psi, se;
    ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf", &theta, &psi, &se), 3);
    EXPECT_NEAR(psi, std::sin(theta), 5 * se + 1e-5);
    ++rows;
  }
  EXPECT_EQ(rows, 9);
}

TEST(Harness, ParallelForCoversEveryIndexAndRethrows) {
  std::vector<int> hit(50, 0);
  parallel_for(50, 4, [&](Index i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3, [](Index i) {
                 if (i == 7) throw Error(ErrorCode::kIo, "boom");
               }),
               Error);
}

TEST(Harness, SuiteNamesAndUnknownSuite) {
  EXPECT_EQ(suite_names().back(), "all");
  EXPECT_THROW(run_suite("nope", {}), Error);
  const auto r = run_suite("hermite", load_calibration(SGDVA_CALIBRATION_FILE));
  const Json j = suite_report(r);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["properties"].size(), r.size());
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  EXPECT_EQ(run_cli("learn --act sigmoid --d 4 --n 500 --T 5 --test-samples 2000 --eval-samples 2000 --seed 7 --out " +
                    (dir / "run").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "run" / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "run" / "trace.csv"));
  EXPECT_EQ(run_cli("learn --act softplus --out " + (dir / "bad").string()), 2);
  EXPECT_EQ(run_cli("learn --corruption band:tau --out " + (dir / "bad").string()), 2);
  EXPECT_EQ(run_cli("learn --d 0 --out " + (dir / "bad").string()), 2);
  EXPECT_EQ(run_cli("learn --bogus"), 2);
  EXPECT_EQ(run_cli("verify --suite nonsense"), 2);
  EXPECT_EQ(run_cli("gen --d 3 --n 10 --out " + (dir / "b.bin").string() + " --csv " + (dir / "b.csv").string()), 0);
  EXPECT_EQ(load_batch((dir / "b.bin").string()).size(), 10);
  EXPECT_EQ(run_cli("gen --d 3 --n 10 --out /nonexistent/dir/b.bin"), 1);
  EXPECT_EQ(run_cli("--help"), 0);
}
