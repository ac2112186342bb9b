// sgdva command line: learn, verify, psi, gen, calibrate.
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "sgdva/harness.hpp"

#ifndef SGDVA_CALIBRATION_FILE
#define SGDVA_CALIBRATION_FILE "calibration/constants.json"
#endif

using namespace sgdva;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

bool is_config_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownActivation:
    case ErrorCode::kEpsTooLarge:
    case ErrorCode::kPreconditionViolation:
      return true;
    default:
      return false;
  }
}

ActivationSpec activation_from_flags(const std::string& shorthand, const std::string& file) {
  return file.empty() ? parse_activation_shorthand(shorthand) : activation_spec_from_json(Json::parse(read_file(file)));
}

struct LearnFlags {
  std::string config, act = "sigmoid", act_file, corruption, theta_mode, out = "out";
  double eps = 0, c_init = 0;
  Index d = 0, n = 0, test_samples = 0, init_samples = 0, eval_samples = 0;
  int T = 0;
  std::uint64_t seed = 0;
  bool no_opt_search = false, trace_angles = false;
};

LearnOptions resolve(const LearnFlags& f, const CLI::App& cmd) {
  LearnOptions o;
  if (!f.config.empty()) o = options_from_json(Json::parse(read_file(f.config)));
  if (cmd.count("--act") || cmd.count("--act-file") || f.config.empty()) {
    const double eps = o.act.eps;
    o.act = activation_from_flags(f.act, f.act_file);
    if (!cmd.count("--act-file")) o.act.eps = eps;
  }
  if (cmd.count("--eps")) o.act.eps = f.eps;
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
  if (given("--d")) o.d = f.d;
  if (given("--n")) o.n = f.n;
  if (given("--T")) o.T = f.T;
  if (given("--corruption")) o.corruption = parse_corruption(f.corruption);
  if (given("--seed")) o.seed = f.seed;
  if (given("--theta-mode")) o = options_from_json({{"theta_mode", f.theta_mode}}, o);
  if (given("--c-init")) o.c_init = f.c_init;
  if (given("--test-samples")) o.test_samples = f.test_samples;
  if (given("--init-samples")) o.init_samples = f.init_samples;
  if (given("--eval-samples")) o.eval_samples = f.eval_samples;
  if (f.no_opt_search) o.opt_search = false;
  if (f.trace_angles) o.trace_angles = true;
  return o;
}

void print_results(const std::vector<PropertyResult>& results) {
  for (const PropertyResult& p : results)
    std::printf("%-4s %-10s %-26s measured=%-12.6g threshold=%-12.6g %s\n", p.passed ? "PASS" : "FAIL",
                p.suite.c_str(), p.name.c_str(), p.measured, p.threshold, p.detail.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust learning of monotone GLMs with SGD and variable augmentation"};
  app.require_subcommand(1);

  LearnFlags lf;
  CLI::App* learn = app.add_subcommand("learn", "initialize, run SGD-VA and select a hypothesis; writes report.json and trace.csv");
  learn->add_option("--config", lf.config, "JSON config; flags override its fields");
  learn->add_option("--act", lf.act, "activation shorthand, e.g. sigmoid or relu:shift=1");
  learn->add_option("--act-file", lf.act_file, "activation spec as JSON");
  learn->add_option("--eps", lf.eps, "target accuracy");
  learn->add_option("--d", lf.d, "dimension");
  learn->add_option("--n", lf.n, "samples per iteration (0 = default)");
  learn->add_option("--T", lf.T, "iterations (0 = default)");
  learn->add_option("--corruption", lf.corruption, "none | band:tau=..,s=.. | flip:p=..,s=..");
  learn->add_option("--seed", lf.seed, "seed");
  learn->add_option("--theta-mode", lf.theta_mode, "blind | exact")->check(CLI::IsMember({"blind", "exact"}));
  learn->add_option("--c-init", lf.c_init, "initial angle constant");
  learn->add_option("--test-samples", lf.test_samples, "test batch size (0 = default)");
  learn->add_option("--init-samples", lf.init_samples, "initialization batch size (0 = n)");
  learn->add_option("--eval-samples", lf.eval_samples, "samples for the reported loss");
  learn->add_flag("--no-opt-search", lf.no_opt_search, "use OPT = eps only");
  learn->add_flag("--trace-angles", lf.trace_angles, "record the angle to w* in trace.csv");
  learn->add_option("--out", lf.out, "output directory");

  std::string suite = "all", calibration_path = SGDVA_CALIBRATION_FILE, verify_out;
  CLI::App* verify = app.add_subcommand("verify", "run a property suite; exit 1 if any property fails");
  verify->add_option("--suite", suite, "hermite | semigroup | alignment | staircase | init | all")
      ->check(CLI::IsMember(suite_names()));
  verify->add_option("--calibration", calibration_path, "calibration constants");
  verify->add_option("--out", verify_out, "write the JSON suite report here");

  std::vector<std::string> psi_acts;
  PsiJob psi_job;
  std::string psi_out = "psi";
  CLI::App* psi = app.add_subcommand("psi", "write theta,psi,stderr curves, one CSV per activation");
  psi->add_option("--act", psi_acts, "activation shorthand (repeatable); default He_2..He_4 and relu shifts 0, 1, 3");
  psi->add_option("--grid", psi_job.grid, "intervals on [0, pi/2]");
  psi->add_option("--outer", psi_job.budget.outer, "outer MC samples per point");
  psi->add_option("--inner", psi_job.budget.inner, "inner MC samples per point");
  psi->add_option("--seed", psi_job.seed, "seed");
  psi->add_option("--out", psi_out, "output directory");

  std::string gen_act = "sigmoid", gen_act_file, gen_corruption = "none", gen_out, gen_csv;
  Index gen_d = 20, gen_n = 10000;
  std::uint64_t gen_seed = 0;
  bool gen_truncate = false;
  CLI::App* gen = app.add_subcommand("gen", "generate a labelled batch");
  gen->add_option("--act", gen_act, "activation shorthand");
  gen->add_option("--act-file", gen_act_file, "activation spec as JSON");
  gen->add_option("--d", gen_d, "dimension");
  gen->add_option("--n", gen_n, "rows");
  gen->add_option("--corruption", gen_corruption, "none | band:tau=..,s=.. | flip:p=..,s=..");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_flag("--truncate", gen_truncate, "truncate the activation as learn does");
  gen->add_option("--out", gen_out, "binary batch file")->required();
  gen->add_option("--csv", gen_csv, "also write the batch as CSV");

  std::uint64_t cal_seed = 1001;
  std::string cal_out;
  CLI::App* cal = app.add_subcommand("calibrate", "measure the verification constants on seeds disjoint from {1..20}");
  cal->add_option("--seed", cal_seed, "seed");
  cal->add_option("--out", cal_out, "write constants here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*learn) {
      const LearnOptions o = resolve(lf, *learn);
      const LearnOutcome out = run_learn(o);
      write_learn_outputs(lf.out, out);
      std::printf("final_loss=%.6g certificate=%.6g ratio=%.4g angle=%.4g -> %s\n", out.final_loss, out.certificate,
                  out.ratio, out.angle, lf.out.c_str());
      return 0;
    }
    if (*verify) {
      const Calibration c = load_calibration(calibration_path);
      const auto results = run_suite(suite, c);
      print_results(results);
      const Json report = suite_report(results);
      if (!verify_out.empty()) write_file(verify_out, report.dump(2) + "\n");
      return report["passed"].get<bool>() ? 0 : kExitRuntime;
    }
    if (*psi) {
      if (psi_acts.empty()) psi_acts = {"hermite:i=2", "hermite:i=3", "hermite:i=4", "relu:shift=0", "relu:shift=1", "relu:shift=3"};
      for (const std::string& a : psi_acts) {
        ActivationSpec spec = parse_activation_shorthand(a);
        spec.truncate = false;
        psi_job.acts.push_back(spec);
      }
      for (const std::string& name : run_psi(psi_job, psi_out)) std::printf("%s\n", (std::filesystem::path(psi_out) / name).c_str());
      return 0;
    }
    if (*gen) {
      ActivationSpec spec = activation_from_flags(gen_act, gen_act_file);
      if (!gen_truncate) spec.truncate = false;
      const Activation act = make_activation(spec);
      const Vector w_star = Rng(derive_seed(gen_seed, 11)).unit_vector(gen_d);
      const CorruptionSpec corruption = parse_corruption(gen_corruption);
      if (gen_d < 1 || gen_n < 1) throw Error(ErrorCode::kInvalidArgument, "d and n must be positive");
      const GeneratedBatch g = generate(gen_d, gen_n, act, w_star, corruption, gen_seed);
      save_batch(gen_out, g.batch);
      if (!gen_csv.empty()) export_batch_csv(gen_csv, g.batch);
      std::printf("wrote %lld x %lld batch, certificate_loss=%.6g\n", static_cast<long long>(gen_n),
                  static_cast<long long>(gen_d), g.certificate_loss);
      return 0;
    }
    if (*cal) {
      const Json j = calibrate(cal_seed);
      if (cal_out.empty()) std::cout << j.dump(2) << "\n";
      else write_file(cal_out, j.dump(2) + "\n");
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.code()), e.what());
    return is_config_error(e.code()) ? kExitConfig : kExitRuntime;
  } catch (const Json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
