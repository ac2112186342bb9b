#include "sgdva/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

namespace sgdva {

namespace {

constexpr std::uint64_t kWStarStream = 11;
constexpr std::uint64_t kInitStream = 12;
constexpr std::uint64_t kTestStream = 13;
constexpr std::uint64_t kEvalStream = 14;
constexpr std::uint64_t kRunStream = 15;
constexpr std::uint64_t kTrainStream = 16;

struct InitCandidate {
  Vector w0;
  double theta_bar = 0.0;
  double threshold = 0.0;
  std::string rule;
  std::vector<double> guesses;
};

Json params_to_json(const ParamMap& params) {
  Json j = Json::object();
  for (const auto& [k, v] : params) j[k] = v.size() == 1 ? Json(v.front()) : Json(v);
  return j;
}

Json vector_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

Json activation_spec_to_json(const ActivationSpec& spec) {
  Json act;
  act["name"] = spec.name;
  act["params"] = params_to_json(spec.params);
  act["eps"] = spec.eps;
  act["truncate"] = spec.truncate ? Json(*spec.truncate) : Json(nullptr);
  return act;
}

ActivationSpec activation_spec_from_json(const Json& j) {
  ActivationSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    if (j.contains("params"))
      for (const auto& [k, v] : j.at("params").items())
        spec.params[k] = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
    if (j.contains("eps")) spec.eps = j.at("eps").get<double>();
    if (j.contains("truncate") && !j.at("truncate").is_null()) spec.truncate = j.at("truncate").get<bool>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("activation spec: ") + e.what());
  }
  return spec;
}

Json options_to_json(const LearnOptions& o) {
  Json j;
  j["activation"] = activation_spec_to_json(o.act);
  j["d"] = o.d;
  j["n"] = o.n;
  j["T"] = o.T;
  j["corruption"] = corruption_shorthand(o.corruption);
  j["seed"] = o.seed;
  j["theta_mode"] = o.theta_mode == ThetaMode::kBlind ? "blind" : "exact";
  j["c_init"] = o.c_init;
  j["test_samples"] = o.test_samples;
  j["init_samples"] = o.init_samples;
  j["eval_samples"] = o.eval_samples;
  j["opt_search"] = o.opt_search;
  j["trace_angles"] = o.trace_angles;
  return j;
}

LearnOptions options_from_json(const Json& j, LearnOptions o) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "activation") o.act = v.is_string() ? parse_activation_shorthand(v.get<std::string>()) : activation_spec_from_json(v);
      else if (key == "d") o.d = v.get<Index>();
      else if (key == "n") o.n = v.get<Index>();
      else if (key == "T") o.T = v.get<int>();
      else if (key == "corruption") o.corruption = parse_corruption(v.get<std::string>());
      else if (key == "seed") o.seed = v.get<std::uint64_t>();
      else if (key == "theta_mode") {
        const auto m = v.get<std::string>();
        if (m != "blind" && m != "exact") throw Error(ErrorCode::kInvalidArgument, "theta_mode must be blind or exact");
        o.theta_mode = m == "blind" ? ThetaMode::kBlind : ThetaMode::kExact;
      } else if (key == "c_init") o.c_init = v.get<double>();
      else if (key == "test_samples") o.test_samples = v.get<Index>();
      else if (key == "init_samples") o.init_samples = v.get<Index>();
      else if (key == "eval_samples") o.eval_samples = v.get<Index>();
      else if (key == "opt_search") o.opt_search = v.get<bool>();
      else if (key == "trace_angles") o.trace_angles = v.get<bool>();
      else throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
  return o;
}

LearnOutcome run_learn(const LearnOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  if (o.d < 1) throw Error(ErrorCode::kInvalidArgument, "d must be >= 1");
  if (!(o.act.eps > 0.0 && o.act.eps < 1.0)) throw Error(ErrorCode::kInvalidArgument, "eps must lie in (0, 1)");
  const double eps = o.act.eps;
  const Activation act = make_activation(o.act);
  const Activation gen = builtin(o.act.name, o.act.params);
  if (!act.monotone || !act.M)
    throw Error(ErrorCode::kInvalidArgument, "learn needs a monotone activation with bounded derivative support");

  Rng star_rng(derive_seed(o.seed, kWStarStream));
  const Vector w_star = star_rng.unit_vector(o.d);
  CorruptionSpec corruption = o.corruption;
  if (corruption.kind == CorruptionKind::kBandShift && !corruption.direction)
    corruption.direction = default_band_direction(w_star, o.seed);

  const int T = o.T > 0 ? o.T : default_iterations(act.L, eps);
  const Index n = o.n > 0 ? o.n : default_batch_size(o.d, act.B, eps);
  const Index m_test = o.test_samples > 0 ? o.test_samples : default_test_samples(act.B, T, eps);
  const Index n_init = o.init_samples > 0 ? o.init_samples : n;
  const DataSource source = [&](Index rows, std::uint64_t s) {
    return generate(o.d, rows, gen, w_star, corruption, s).batch;
  };

  // Initialization for every OPT guess; identical starting points are run once.
  const std::vector<double> guesses = o.opt_search ? opt_guess_grid(eps) : std::vector<double>{eps};
  const SampleBatch init_batch = source(n_init, derive_seed(o.seed, kInitStream));
  std::vector<InitCandidate> inits;
  std::optional<InitResult> central;
  for (double guess : guesses) {
    InitResult r;
    std::string rule = "threshold";
    try {
      r = initialize(act, init_batch, eps, guess, o.c_init);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kThresholdDegenerate) throw;
      if (!central) central = initialize_central(act, init_batch, eps, o.c_init);
      r = *central;
      rule = "central_step";
    }
    auto same = std::find_if(inits.begin(), inits.end(), [&](const InitCandidate& c) { return c.w0 == r.w0; });
    if (same != inits.end()) {
      same->guesses.push_back(guess);
      continue;
    }
    inits.push_back({r.w0, r.theta_bar, r.threshold, rule, {guess}});
  }

  std::vector<RunResult> runs;
  std::vector<Vector> pool;
  std::vector<std::pair<std::size_t, std::size_t>> origin;  // (run, iterate)
  for (std::size_t k = 0; k < inits.size(); ++k) {
    const InitCandidate& init = inits[k];
    double theta_bar = init.theta_bar;
    if (o.theta_mode == ThetaMode::kExact) theta_bar = std::clamp(angle_between(init.w0, w_star), 1e-6, kMaxThetaBar);
    LearnerConfig cfg;
    cfg.eps = eps;
    cfg.T = T;
    cfg.batch_size = n;
    cfg.seed = derive_seed(derive_seed(o.seed, kRunStream), k);
    const DataSource train = [&, k](Index rows, std::uint64_t s) {
      return source(rows, derive_seed(derive_seed(o.seed, kTrainStream + k), s));
    };
    const bool trace_angles = o.trace_angles || o.theta_mode == ThetaMode::kExact;
    runs.push_back(run(cfg, act, train, init.w0, theta_bar, trace_angles ? std::optional<Vector>(w_star) : std::nullopt));
    for (std::size_t i = 0; i < runs.back().candidates.size(); ++i) {
      pool.push_back(runs.back().candidates[i]);
      origin.emplace_back(k, i);
    }
  }

  SampleBatch test = source(m_test, derive_seed(o.seed, kTestStream));
  test = truncate_batch_labels(test, act.B);
  const Index pick = test_select(pool, act, test);

  LearnOutcome out;
  out.w_star = w_star;
  out.w_hat = pool[pick];
  out.trace = runs[origin[pick].first].trace;
  out.certificate = certificate_loss(corruption);
  const SampleBatch eval = source(o.eval_samples, derive_seed(o.seed, kEvalStream));
  const Estimate final_loss = empirical_loss(gen, out.w_hat, eval);
  const Estimate star_loss = empirical_loss(gen, w_star, eval);
  out.final_loss = final_loss.value;
  out.ratio = final_loss.value / std::max(out.certificate, eps);
  out.angle = angle_between(out.w_hat, w_star);
  out.init_angle = angle_between(inits[origin[pick].first].w0, w_star);
  out.theta_bar = inits[origin[pick].first].theta_bar;

  // Invariants of the selected run.
  bool unit = true, increasing = true, phi_ok = true;
  for (const RunResult& r : runs) {
    for (const Vector& w : r.candidates) unit = unit && std::abs(w.norm() - 1.0) <= 1e-10;
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      const double rho = r.trace[i].rho;
      increasing = increasing && rho > 0.0 && rho < 1.0 && (i == 0 || rho > r.trace[i - 1].rho);
    }
  }
  {
    LearnerState s = initial_state(inits.front().w0, inits.front().theta_bar);
    for (int t = 0; t < T; ++t) {
      s = advance_schedule(s);
      phi_ok = phi_ok && std::abs(s.phi * s.phi - (1.0 - s.rho) / 2.0) <= 1e-12;
    }
  }

  Json j;
  j["config"] = options_to_json(o);
  Json a;
  a["name"] = act.name;
  a["M"] = *act.M;
  a["B"] = act.B;
  a["L"] = act.L;
  j["activation"] = a;
  Json sched;
  sched["T"] = T;
  sched["n"] = n;
  sched["beta"] = kBeta;
  sched["test_samples"] = m_test;
  sched["init_samples"] = n_init;
  sched["opt_guesses"] = guesses;
  j["schedule"] = sched;
  Json init_list = Json::array();
  for (const InitCandidate& c : inits) {
    Json e;
    e["rule"] = c.rule;
    e["opt_guesses"] = c.guesses;
    e["threshold"] = c.threshold;
    e["theta_bar"] = c.theta_bar;
    e["angle"] = angle_between(c.w0, w_star);
    init_list.push_back(e);
  }
  j["initialization"] = init_list;
  j["certificate_loss"] = out.certificate;
  j["final_loss"] = out.final_loss;
  j["final_loss_stderr"] = final_loss.std_error;
  j["loss_w_star"] = star_loss.value;
  j["ratio"] = out.ratio;
  j["angle"] = out.angle;
  j["selected"] = {{"run", origin[pick].first}, {"iterate", origin[pick].second}};
  j["w_star"] = vector_json(w_star);
  j["w_hat"] = vector_json(out.w_hat);
  j["trace"] = "trace.csv";
  j["invariants"] = {{"unit_norm", unit}, {"rho_increasing", increasing}, {"phi_consistent", phi_ok}};
  out.report = j;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void write_learn_outputs(const std::string& dir, const LearnOutcome& outcome) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_file((base / "report.json").string(), outcome.report.dump(2) + "\n");
  std::ostringstream trace;
  write_trace_csv(trace, outcome.trace);
  write_file((base / "trace.csv").string(), trace.str());
  Json timing;
  timing["wall_seconds"] = outcome.wall_seconds;
  write_file((base / "timing.json").string(), timing.dump(2) + "\n");
}

Calibration load_calibration(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIo, path + ": " + e.what());
  }
  Calibration c;
  try {
    c.K_smoothing_gap = j.at("K_smoothing_gap").get<double>();
    c.K_hermite_tail = j.at("K_hermite_tail").get<double>();
    c.C_emp = j.at("C_emp").get<double>();
    c.C_init = j.at("C_init").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIo, path + ": " + e.what());
  }
  c.raw = j;
  return c;
}

std::string csv_name_for(const ActivationSpec& spec, const std::string& prefix) {
  std::string name = prefix + "_" + spec.name;
  for (const auto& [k, v] : spec.params) {
    name += "_" + k;
    for (double x : v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", x);
      name += std::string("-") + buf;
    }
  }
  for (char& ch : name)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-' && ch != '.') ch = '_';
  return name + ".csv";
}

std::vector<std::string> run_psi(const PsiJob& job, const std::string& dir) {
  if (job.grid < 1) throw Error(ErrorCode::kInvalidArgument, "psi: grid must be >= 1");
  std::filesystem::create_directories(dir);
  Vector thetas(job.grid + 1);
  for (int k = 0; k <= job.grid; ++k) thetas(k) = std::numbers::pi / 2 * k / job.grid;
  std::vector<std::string> names(job.acts.size());
  std::vector<std::string> bodies(job.acts.size());
  std::vector<Activation> acts;
  for (const ActivationSpec& spec : job.acts) acts.push_back(make_activation(spec));
  parallel_for(static_cast<Index>(acts.size()), 0, [&](Index i) {
    const PsiCurve curve = psi_curve(acts[i], thetas, job.budget, job.seed);
    std::ostringstream out;
    write_psi_curve_csv(out, curve);
    bodies[i] = out.str();
    names[i] = csv_name_for(job.acts[i], "psi");
  });
  for (std::size_t i = 0; i < names.size(); ++i) write_file((std::filesystem::path(dir) / names[i]).string(), bodies[i]);
  return names;
}

void parallel_for(Index count, unsigned workers, const std::function<void(Index)>& f) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<Index>(workers, std::max<Index>(count, 1)));
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (Index i = next++; i < count; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sgdva
