#include "stokesopt/scenario.hpp"

#include <cmath>

#include "stokesopt/error.hpp"
#include "stokesopt/gram_metrics.hpp"
#include "stokesopt/optimizer.hpp"
#include "stokesopt/rng.hpp"
#include "stokesopt/serialization.hpp"

namespace stokesopt {

namespace {

using nlohmann::json;

double number_or(const json& obj, const char* key, double fallback, const std::string& prefix) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) throw ParseError(prefix + key + ": expected a number");
  return it->get<double>();
}

long long integer_or(const json& obj, const char* key, long long fallback, const std::string& prefix) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_integer()) throw ParseError(prefix + key + ": expected an integer");
  return it->get<long long>();
}

std::optional<RVector> vector_or(const json& obj, const char* key, const std::string& prefix) {
  auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  if (!it->is_array()) throw ParseError(prefix + key + ": expected an array of numbers");
  RVector v(static_cast<int>(it->size()));
  for (int i = 0; i < v.size(); ++i) {
    if (!(*it)[i].is_number()) throw ParseError(prefix + key + "[" + std::to_string(i) + "]: expected a number");
    v[i] = (*it)[i].get<double>();
  }
  return v;
}

json object_or_empty(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) return json::object();
  if (!it->is_object()) throw ParseError(std::string(key) + ": expected an object");
  return *it;
}

std::string mode_name(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::kMd: return "md";
    case ScenarioMode::kMdl: return "mdl";
    case ScenarioMode::kJoint: return "joint";
  }
  return "md";
}

json vector_json(const RVector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mdl_json(const MdlEstimate& e) {
  return json{{"alpha0", e.alpha0}, {"gamma", vector_json(e.gamma)}, {"mdl_ratio", e.mdl_ratio}};
}

}  // namespace

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ParseError("scenario: expected a JSON object");
  Scenario s;
  auto mode = doc.find("mode");
  if (mode == doc.end() || !mode->is_string()) throw ParseError("mode: expected \"md\", \"mdl\" or \"joint\"");
  const std::string m = mode->get<std::string>();
  if (m == "md") {
    s.mode = ScenarioMode::kMd;
  } else if (m == "mdl") {
    s.mode = ScenarioMode::kMdl;
  } else if (m == "joint") {
    s.mode = ScenarioMode::kJoint;
  } else {
    throw ParseError("mode: unknown value \"" + m + "\"");
  }
  const long long n = integer_or(doc, "n", -1, "");
  if (n < 2 || n > 64) throw ParseError("n: expected an integer in [2, 64]");
  s.n = static_cast<int>(n);
  s.seed = static_cast<std::uint64_t>(integer_or(doc, "seed", 1, ""));
  const long long trials = integer_or(doc, "trials", 1000, "");
  if (trials < 2) throw ParseError("trials: must be at least 2");
  s.trials = static_cast<int>(trials);
  auto meas = doc.find("measurement");
  if (meas != doc.end()) {
    if (!meas->is_string()) throw ParseError("measurement: expected a string");
    try {
      s.measurement = measure_mode_from_name(meas->get<std::string>());
    } catch (const ConfigError& e) {
      throw ParseError(e.what());
    }
  }
  s.rel_sigma = number_or(doc, "rel_sigma", 0.0, "");
  if (s.rel_sigma < 0.0) throw ParseError("rel_sigma: must be non-negative");
  s.dw = number_or(doc, "dw", 0.0, "");

  const json fiber = object_or_empty(doc, "fiber");
  const std::string fp = "fiber.";
  const auto fiber_seed = static_cast<std::uint64_t>(integer_or(fiber, "seed", static_cast<long long>(s.seed), fp));
  const double tau0 = number_or(fiber, "tau0", 0.0, fp);
  RVector md;
  if (auto v = vector_or(fiber, "md_vector", fp)) {
    if (v->size() != stokes_dim(s.n)) throw ParseError("fiber.md_vector: expected N^2 - 1 entries");
    md = *v;
  } else {
    const double norm = number_or(fiber, "md_norm", s.mode == ScenarioMode::kMdl ? 0.0 : 1e-12, fp);
    Rng rng = substream(fiber_seed, 2);
    std::normal_distribution<double> g(0.0, 1.0);
    md.resize(stokes_dim(s.n));
    for (int i = 0; i < md.size(); ++i) md[i] = g(rng);
    md *= norm / md.norm();
  }
  RVector pa = vector_or(fiber, "pa_coeffs", fp).value_or(RVector::Zero(s.n));
  RVector slopes = vector_or(fiber, "pa_slopes", fp).value_or(RVector::Zero(s.n));
  if (pa.size() != s.n) throw ParseError("fiber.pa_coeffs: expected N entries");
  if (slopes.size() != s.n) throw ParseError("fiber.pa_slopes: expected N entries");
  const double length = number_or(fiber, "length", 0.0, fp);
  try {
    s.fiber = synth_joint_fiber(s.n, tau0, md, pa, slopes, length, fiber_seed);
  } catch (const Error& e) {
    throw ParseError(std::string("fiber: ") + e.what());
  }

  const json rx = object_or_empty(doc, "receiver");
  const std::string rp = "receiver.";
  ReceiverModel& r = s.receiver;
  r.responsivity = number_or(rx, "responsivity", r.responsivity, rp);
  r.n0 = number_or(rx, "n0", r.n0, rp);
  r.window = number_or(rx, "window", r.window, rp);
  r.pulse_halfwidth = number_or(rx, "pulse_halfwidth", r.pulse_halfwidth, rp);
  r.sample_rate = number_or(rx, "sample_rate", r.sample_rate, rp);
  r.pulse_energy = number_or(rx, "pulse_energy", r.pulse_energy, rp);
  r.window_center = number_or(rx, "window_center", r.window_center, rp);
  r.spectral_samples = static_cast<int>(integer_or(rx, "spectral_samples", r.spectral_samples, rp));
  try {
    r.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }

  auto ls = doc.find("launch_set");
  if (ls != doc.end()) {
    if (ls->is_string()) {
      std::filesystem::path p = ls->get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      s.launch_path = p;
    } else if (ls->is_object()) {
      auto fam = ls->find("family");
      if (fam == ls->end() || !fam->is_string()) throw ParseError("launch_set.family: expected a string");
      s.launch_family = fam->get<std::string>();
      s.launch_seed = static_cast<std::uint64_t>(integer_or(*ls, "seed", 1, "launch_set."));
      s.launch_starts = static_cast<int>(integer_or(*ls, "starts", 4, "launch_set."));
      if (s.launch_starts < 1) throw ParseError("launch_set.starts: must be at least 1");
    } else {
      throw ParseError("launch_set: expected a path or an object");
    }
  }
  return s;
}

LaunchSet scenario_launch_set(const Scenario& s) {
  if (s.launch_path) {
    LaunchSet set = read_launch_set(*s.launch_path);
    if (set.n() != s.n) throw ParseError("launch_set: dimension does not match scenario n");
    return set;
  }
  const std::string& f = s.launch_family;
  if (f == "yang" || f == "yang-nolan") return yang_nolan(s.n);
  if (f == "mub") return mub_set(s.n);
  if (f == "sic") return sic_search(s.n, s.launch_seed);
  if (f == "random") return random_set(s.n, s.launch_seed);
  if (f == "optimized") {
    OptimizerConfig cfg;
    cfg.seed = s.launch_seed;
    return multi_start(s.n, cfg, s.launch_starts, InitSpec{}).best.final_set;
  }
  throw ParseError("launch_set.family: unknown value \"" + f + "\"");
}

ScenarioResult run_scenario(const Scenario& s) {
  const LaunchSet set = scenario_launch_set(s);
  const SetMetrics met = metrics(set);
  const SimplexSet simplex = simplex_set(s.n, mix_seed(s.seed, 3));
  ScenarioResult out;
  json& j = out.summary;
  j["mode"] = mode_name(s.mode);
  j["n"] = s.n;
  j["seed"] = s.seed;
  j["launch_family"] = family_name(set.family());
  j["launch_metrics"] = metrics_to_json(met);

  switch (s.mode) {
    case ScenarioMode::kMd: {
      const MdMonteCarloResult mc = monte_carlo_md(s.fiber, set, s.receiver, s.trials, s.seed, s.measurement);
      const double c2 = 2.0 * stokes_constant(s.n) * stokes_constant(s.n);
      j["measurement"] = measure_mode_name(s.measurement);
      j["trials"] = mc.trials;
      j["sigma_tau_g_sq"] = s.receiver.delay_variance();
      j["sigma_dtg_sq"] = c2 * c2 * s.receiver.delay_variance();
      j["empirical_mean_sq_error"] = mc.mean_sq_error;
      j["empirical_stderr"] = mc.sq_error_stderr;
      j["predicted_mean_sq_error"] = mc.predicted;
      j["variance_ratio"] = mc.ratio;
      j["mean_error"] = vector_json(mc.mean_error);
      out.per_trial_csv = "trial,sq_error\n";
      for (int t = 0; t < mc.trials; ++t)
        out.per_trial_csv += std::to_string(t) + "," + format_double(mc.per_trial_sq_error[t]) + "\n";
      break;
    }
    case ScenarioMode::kMdl: {
      const MdlEstimate truth = true_mdl(s.fiber);
      RVector a_set(set.size()), a_simplex(s.n);
      for (int i = 0; i < set.size(); ++i) a_set[i] = measure_attenuation(s.fiber, set.state(i));
      for (int i = 0; i < s.n; ++i) a_simplex[i] = measure_attenuation(s.fiber, simplex.state(i));
      const MdlEstimate est = reconstruct_mdl(set, simplex, a_set, a_simplex);
      const FiberModel eq = equalize(s.fiber, est);
      const CMatrix he = transfer_matrix(eq, 0.0);
      j["true_mdl"] = mdl_json(truth);
      j["estimated_mdl"] = mdl_json(est);
      j["alpha0_relative_error"] = std::abs(est.alpha0 - truth.alpha0) / truth.alpha0;
      j["gamma_error_norm"] = (est.gamma - truth.gamma).norm();
      j["equalized_unitarity_error"] =
          (he.adjoint() * he - CMatrix::Identity(s.n, s.n)).cwiseAbs().maxCoeff();
      if (s.rel_sigma > 0.0) {
        const MdlMonteCarloResult mc = monte_carlo_mdl(s.fiber, set, simplex, s.rel_sigma, s.trials, s.seed);
        j["rel_sigma"] = s.rel_sigma;
        j["trials"] = mc.trials;
        j["mean_sq_gamma_error"] = mc.mean_sq_gamma_error;
        j["mean_sq_alpha0_error"] = mc.mean_sq_alpha0_error;
      }
      break;
    }
    case ScenarioMode::kJoint: {
      const double dw = s.dw > 0.0 ? s.dw : default_frequency_step(s.fiber);
      const JointPipelineResult r = joint_pipeline(s.fiber, set, simplex, s.receiver, dw);
      j["dw"] = dw;
      j["estimated_mdl"] = mdl_json(r.mdl);
      j["tau0"] = r.tau0;
      j["md_vector"] = vector_json(r.md_vector);
      j["equalized_unitarity_error"] = r.equalized_unitarity_error;
      j["composed_dmgds"] = vector_json(r.composed.dmgds);
      j["direct_dmgds"] = vector_json(r.direct.dmgds);
      j["dmgd_relative_error"] = r.dmgd_relative_error;
      j["schur_fallback"] = r.composed.schur_fallback || r.direct.schur_fallback;
      break;
    }
  }
  return out;
}

}  // namespace stokesopt
