#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgdva/io.hpp"

namespace sgdva {

using Json = nlohmann::ordered_json;

enum class ThetaMode { kBlind, kExact };

struct LearnOptions {
  ActivationSpec act{"sigmoid", {}, 0.01, std::nullopt};
  Index d = 20;
  Index n = 0;             // per-iteration batch; 0 = default
  int T = 0;               // 0 = default
  CorruptionSpec corruption;
  std::uint64_t seed = 0;
  ThetaMode theta_mode = ThetaMode::kBlind;
  double c_init = 1.0;
  Index test_samples = 0;  // 0 = default
  Index init_samples = 0;  // 0 = same as n
  Index eval_samples = 200000;
  bool opt_search = true;  // run the 2^k eps grid of OPT guesses
  bool trace_angles = false;  // record angle to w* in the trace; always on in exact mode
};

struct LearnOutcome {
  Json report;
  std::vector<TraceRecord> trace;  // run that produced the selected candidate
  Vector w_star;
  Vector w_hat;
  double certificate = 0.0;
  double final_loss = 0.0;
  double ratio = 0.0;
  double angle = 0.0;
  double init_angle = 0.0;
  double theta_bar = 0.0;
  double wall_seconds = 0.0;
};

// initialize -> run -> test_select with the OPT grid; losses of the output are measured with the generating activation.
LearnOutcome run_learn(const LearnOptions& options);

Json options_to_json(const LearnOptions& options);
// Inverse of options_to_json; absent keys keep the values already in `base`. "activation" may also be a shorthand string.
LearnOptions options_from_json(const Json& j, LearnOptions base = {});

// {"name": ..., "params": {...}, "eps": ..., "truncate": ...}
Json activation_spec_to_json(const ActivationSpec& spec);
ActivationSpec activation_spec_from_json(const Json& j);

// Writes report.json, trace.csv and timing.json into `dir`.
void write_learn_outputs(const std::string& dir, const LearnOutcome& outcome);

struct Calibration {
  double K_smoothing_gap = 0.0;
  double K_hermite_tail = 0.0;
  double C_emp = 0.0;
  double C_init = 1.0;
  std::uint64_t seed = 0;
  Json raw;
};

Calibration load_calibration(const std::string& path);

struct PropertyResult {
  std::string suite;
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

const std::vector<std::string>& suite_names();
std::vector<PropertyResult> run_suite(const std::string& name, const Calibration& calibration);
Json suite_report(const std::vector<PropertyResult>& results);

// theta grid in (0, pi/2]; one CSV per activation.
struct PsiJob {
  std::vector<ActivationSpec> acts;
  int grid = 48;
  NestedBudget budget{4000, 64};
  std::uint64_t seed = 0;
};
// Returns the written file names.
std::vector<std::string> run_psi(const PsiJob& job, const std::string& dir);
std::string csv_name_for(const ActivationSpec& spec, const std::string& prefix);

// Runs f(0..count-1) on up to `workers` threads (0 = hardware concurrency). Results land by index.
void parallel_for(Index count, unsigned workers, const std::function<void(Index)>& f);

// Keys of the calibration file, measured on seeds disjoint from the acceptance seeds.
Json calibrate(std::uint64_t seed);

}  // namespace sgdva
