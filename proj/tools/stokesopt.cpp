// stokesopt: launch-set generation, optimization, evaluation, sweeps and
// fiber simulations.
//
// Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 I/O error.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stokesopt/error.hpp"
#include "stokesopt/fiber_sim.hpp"
#include "stokesopt/gram_metrics.hpp"
#include "stokesopt/optimizer.hpp"
#include "stokesopt/scenario.hpp"
#include "stokesopt/serialization.hpp"
#include "stokesopt/vector_sets.hpp"

#ifndef STOKESOPT_VERSION
#define STOKESOPT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stokesopt;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Manifest {
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const fs::path& primary) const {
    json m;
    m["command"] = command;
    m["config"] = config;
    m["seed"] = seed;
    m["tool_version"] = STOKESOPT_VERSION;
    m["outputs"] = outputs;
    m["threads"] = omp_get_max_threads();
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m["finished_at_unix"] = static_cast<long long>(std::time(nullptr));
    write_json_file(manifest_path(primary), m);
  }

  static fs::path manifest_path(const fs::path& primary) {
    fs::path p = primary;
    p += ".manifest.json";
    return p;
  }
};

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out.parent_path() / out.stem();
  p += suffix;
  return p;
}

void configure_threads() {
  const char* env = std::getenv("STOKES_OPT_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) throw UsageError("STOKES_OPT_THREADS must be a positive integer");
  omp_set_num_threads(static_cast<int>(v));
}

void print_metrics_line(const std::string& prefix, const SetMetrics& m) {
  std::printf("%sxi=%s penalty_db=%s condition_number=%s log_volume=%s\n", prefix.c_str(),
              format_double(m.xi).c_str(), format_double(m.penalty_db).c_str(),
              format_double(m.condition_number).c_str(), format_double(m.log_volume).c_str());
}

std::vector<int> parse_n_list(const std::string& spec) {
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      const auto dots = item.find("..");
      if (dots == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int lo = std::stoi(item.substr(0, dots));
        const int hi = std::stoi(item.substr(dots + 2));
        if (hi < lo) throw UsageError("--n-list: empty range " + item);
        for (int n = lo; n <= hi; ++n) out.push_back(n);
      }
    } catch (const std::logic_error&) {
      throw UsageError("--n-list: cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--n-list: no dimensions given");
  for (int n : out)
    if (n < 2) throw UsageError("--n-list: dimensions must be at least 2");
  return out;
}

std::vector<std::string> split_list(const std::string& spec) {
  std::vector<std::string> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// gen-set

struct GenSetArgs {
  std::string family;
  int n = 0;
  std::uint64_t seed = 1;
  double tol = 1e-10;
  std::string out;
};

int cmd_gen_set(const GenSetArgs& a) {
  Manifest man;
  man.command = "gen-set";
  man.seed = a.seed;
  man.config = {{"family", a.family}, {"n", a.n}, {"seed", a.seed}, {"tol", a.tol}};
  if (a.n < 2) throw UsageError("--n must be at least 2");

  if (a.family == "simplex") {
    const SimplexSet s = simplex_set(a.n, a.seed);
    std::printf("n=%d family=simplex states=%d\n", a.n, a.n);
    if (!a.out.empty()) {
      write_json_file(a.out, simplex_set_to_json(s));
      man.outputs.push_back(a.out);
      man.write(a.out);
    } else {
      std::cout << simplex_set_to_json(s).dump(2) << "\n";
    }
    return 0;
  }

  std::optional<LaunchSet> set;
  if (a.family == "yang") {
    set = yang_nolan(a.n);
  } else if (a.family == "mub") {
    set = mub_set(a.n);
  } else if (a.family == "sic") {
    set = sic_search(a.n, a.seed, a.tol);
  } else if (a.family == "random") {
    set = random_set(a.n, a.seed);
  } else {
    throw UsageError("--family: unknown value '" + a.family + "'");
  }
  const SetMetrics m = metrics(*set);
  print_metrics_line("n=" + std::to_string(a.n) + " family=" + family_name(set->family()) + " ", m);
  if (set->meta().contains("residual"))
    std::printf("residual=%s\n", format_double(set->meta()["residual"].get<double>()).c_str());
  if (!a.out.empty()) {
    write_launch_set(a.out, *set);
    man.outputs.push_back(a.out);
    man.write(a.out);
  } else {
    std::cout << launch_set_to_json(*set).dump(2) << "\n";
  }
  return 0;
}

// optimize

struct OptimizeArgs {
  int n = 0;
  std::string algo = "projected";
  std::string init = "random";
  int starts = 8;
  int max_iter = 100000;
  std::uint64_t seed = 1;
  double grad_tol = 0.0;
  std::string out;
};

InitSpec parse_init(const std::string& spec, int n) {
  InitSpec init;
  if (spec == "random") {
    init.family = InitFamily::kRandom;
  } else if (spec == "sic") {
    init.family = InitFamily::kSic;
  } else if (spec == "mub") {
    init.family = InitFamily::kMub;
  } else if (spec == "yang") {
    init.family = InitFamily::kYang;
  } else if (spec.rfind("file:", 0) == 0) {
    init.family = InitFamily::kFile;
    init.file_set = read_launch_set(spec.substr(5));
    if (init.file_set->n() != n) throw UsageError("--init file: set dimension does not match --n");
  } else {
    throw UsageError("--init: expected random, sic, mub, yang or file:PATH");
  }
  return init;
}

int cmd_optimize(const OptimizeArgs& a) {
  Manifest man;
  man.command = "optimize";
  man.seed = a.seed;
  man.config = {{"n", a.n},           {"algo", a.algo}, {"init", a.init},         {"starts", a.starts},
                {"max_iter", a.max_iter}, {"seed", a.seed}, {"grad_tol", a.grad_tol}};
  if (a.n < 2) throw UsageError("--n must be at least 2");
  OptimizerConfig cfg;
  try {
    cfg.algorithm = algorithm_from_name(a.algo);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  cfg.max_iters = a.max_iter;
  cfg.seed = a.seed;
  cfg.grad_tol = a.grad_tol;
  const InitSpec init = parse_init(a.init, a.n);
  const MultiStartResult r = multi_start(a.n, cfg, a.starts, init);
  const SetMetrics m = metrics(r.best.final_set);

  json starts = json::array();
  for (const auto& s : r.summaries) starts.push_back(run_summary_to_json(s));
  for (const auto& s : r.summaries) {
    std::printf("start=%d ok=%d initial_xi=%s final_xi=%s iterations=%d stop=%s\n", s.index, s.ok ? 1 : 0,
                format_double(s.initial_xi).c_str(), format_double(s.final_xi).c_str(), s.iterations_used,
                stop_reason_name(s.stop_reason).c_str());
  }
  std::printf("best_start=%d ", r.best_index);
  print_metrics_line("", m);

  if (!a.out.empty()) {
    const fs::path out = a.out;
    const fs::path starts_path = sibling(out, ".starts.json");
    const fs::path traj_path = sibling(out, ".trajectory.csv");
    write_launch_set(out, r.best.final_set);
    write_json_file(starts_path, json{{"best_index", r.best_index},
                                      {"best_metrics", metrics_to_json(m)},
                                      {"final_xi", r.best.final_xi},
                                      {"initial_xi", r.best.initial_xi},
                                      {"iterations_used", r.best.iterations_used},
                                      {"converged", r.best.converged},
                                      {"starts", starts}});
    write_text_file(traj_path, trajectory_csv(r.best.trajectory));
    man.outputs = {out.string(), starts_path.string(), traj_path.string()};
    man.write(out);
  }
  return 0;
}

// evaluate

int cmd_evaluate(const std::string& path, const std::string& out) {
  const LaunchSet set = read_launch_set(path);
  json doc = metrics_to_json(metrics(set));
  doc["n"] = set.n();
  doc["family"] = family_name(set.family());
  std::cout << doc.dump(2) << "\n";
  if (!out.empty()) {
    write_json_file(out, doc);
    Manifest man;
    man.command = "evaluate";
    man.config = {{"set", path}};
    man.outputs.push_back(out);
    man.write(out);
  }
  return 0;
}

// sweep

int cmd_sweep(const std::string& families_spec, const std::string& n_spec, std::uint64_t seed,
              const std::string& out) {
  const std::vector<std::string> families = split_list(families_spec);
  const std::vector<int> ns = parse_n_list(n_spec);
  const std::vector<std::string> known = {"yang", "mub", "sic", "random", "sic-analytic", "mub-analytic"};
  for (const auto& f : families)
    if (std::find(known.begin(), known.end(), f) == known.end())
      throw UsageError("--families: unknown value '" + f + "'");

  std::string csv = sweep_csv_header() + "\n";
  for (const auto& f : families) {
    for (int n : ns) {
      SetMetrics m;
      if (f == "yang") {
        m = metrics(yang_nolan(n));
      } else if (f == "mub") {
        if (!is_prime(n)) {
          std::fprintf(stderr, "sweep: skipping mub at n=%d (n must be prime)\n", n);
          continue;
        }
        m = metrics(mub_set(n));
      } else if (f == "sic") {
        m = metrics(sic_search(n, seed));
      } else if (f == "random") {
        m = metrics(random_set(n, seed));
      } else if (f == "sic-analytic") {
        m = sic_metrics_closed_form(n);
      } else {
        m = mub_metrics_closed_form(n);
      }
      csv += sweep_csv_row(n, f, m.xi, m.penalty_db, m.condition_number, m.log_volume) + "\n";
    }
  }
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_text_file(out, csv);
    Manifest man;
    man.command = "sweep";
    man.seed = seed;
    man.config = {{"families", families_spec}, {"n_list", n_spec}, {"seed", seed}};
    man.outputs.push_back(out);
    man.write(out);
  }
  return 0;
}

// simulate

int cmd_simulate(const std::string& scenario_path, const std::string& out, const std::string& trials_csv) {
  const fs::path sp = scenario_path;
  const json doc = read_json_file(sp);
  const Scenario s = parse_scenario(doc, sp.parent_path());
  const ScenarioResult r = run_scenario(s);
  std::cout << r.summary.dump(2) << "\n";
  Manifest man;
  man.command = "simulate";
  man.seed = s.seed;
  man.config = doc;
  if (!trials_csv.empty()) {
    if (r.per_trial_csv.empty()) throw UsageError("--trials-csv is only available for md scenarios");
    write_text_file(trials_csv, r.per_trial_csv);
    man.outputs.push_back(trials_csv);
  }
  if (!out.empty()) {
    write_json_file(out, r.summary);
    man.outputs.insert(man.outputs.begin(), out);
    man.write(out);
  } else if (!trials_csv.empty()) {
    man.write(trials_csv);
  }
  return 0;
}

// gradcheck

int cmd_gradcheck(int n, const std::string& algo, int trials, std::uint64_t seed) {
  if (n < 2) throw UsageError("--n must be at least 2");
  Algorithm a;
  try {
    a = algorithm_from_name(algo);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const GradCheckResult r = gradient_check(n, a, trials, seed);
  std::printf("n=%d algo=%s points=%d max_rel_error=%.3e\n", n, algorithm_name(a).c_str(), r.points,
              r.max_rel_error);
  return r.max_rel_error < 1e-6 ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Launch-state design and modal-dispersion measurement simulator"};
  app.set_version_flag("--version", STOKESOPT_VERSION);
  app.require_subcommand(1, 1);

  GenSetArgs gen;
  auto* c_gen = app.add_subcommand("gen-set", "Construct a launch-state family and write it as JSON");
  c_gen->add_option("--family", gen.family, "yang | mub | sic | simplex | random")->required();
  c_gen->add_option("--n", gen.n, "Number of modes")->required();
  c_gen->add_option("--seed", gen.seed, "Random seed");
  c_gen->add_option("--tol", gen.tol, "SIC residual tolerance");
  c_gen->add_option("--out", gen.out, "Output JSON path (stdout when omitted)");

  OptimizeArgs opt;
  auto* c_opt = app.add_subcommand("optimize", "Minimize the noise-amplification cost by gradient descent");
  c_opt->add_option("--n", opt.n, "Number of modes")->required();
  c_opt->add_option("--algo", opt.algo, "projected | hyperspherical");
  c_opt->add_option("--init", opt.init, "random | sic | mub | yang | file:PATH");
  c_opt->add_option("--starts", opt.starts, "Independent starts");
  c_opt->add_option("--max-iter", opt.max_iter, "Iteration budget per start");
  c_opt->add_option("--seed", opt.seed, "Base seed (start i uses seed + i)");
  c_opt->add_option("--grad-tol", opt.grad_tol, "Gradient-norm tolerance (0 = 1e-9 (N^2 - 1))");
  c_opt->add_option("--out", opt.out, "Best set JSON path; summaries and trajectory go alongside");

  std::string eval_set, eval_out;
  auto* c_eval = app.add_subcommand("evaluate", "Print the metrics of a launch-set file");
  c_eval->add_option("--set", eval_set, "Launch-set JSON")->required();
  c_eval->add_option("--out", eval_out, "Also write the metrics JSON here");

  std::string sw_families = "yang,sic-analytic,mub-analytic", sw_n = "2..12", sw_out;
  std::uint64_t sw_seed = 1;
  auto* c_sweep = app.add_subcommand("sweep", "Metrics of several families over a range of dimensions");
  c_sweep->add_option("--families", sw_families, "Comma list: yang, mub, sic, random, sic-analytic, mub-analytic");
  c_sweep->add_option("--n-list", sw_n, "Dimensions, e.g. 2..12 or 2,3,5");
  c_sweep->add_option("--seed", sw_seed, "Seed for sic and random");
  c_sweep->add_option("--out", sw_out, "CSV path (stdout when omitted)");

  std::string sim_scenario, sim_out, sim_csv;
  auto* c_sim = app.add_subcommand("simulate", "Run an md, mdl or joint fiber scenario");
  c_sim->add_option("--scenario", sim_scenario, "Scenario JSON")->required();
  c_sim->add_option("--out", sim_out, "Summary JSON path");
  c_sim->add_option("--trials-csv", sim_csv, "Per-trial squared errors (md mode)");

  int gc_n = 3, gc_trials = 100;
  std::string gc_algo = "projected";
  std::uint64_t gc_seed = 1;
  auto* c_gc = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
  c_gc->add_option("--n", gc_n, "Number of modes");
  c_gc->add_option("--algo", gc_algo, "projected | hyperspherical");
  c_gc->add_option("--trials", gc_trials, "Random points");
  c_gc->add_option("--seed", gc_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    configure_threads();
    if (*c_gen) return cmd_gen_set(gen);
    if (*c_opt) return cmd_optimize(opt);
    if (*c_eval) return cmd_evaluate(eval_set, eval_out);
    if (*c_sweep) return cmd_sweep(sw_families, sw_n, sw_seed, sw_out);
    if (*c_sim) return cmd_simulate(sim_scenario, sim_out, sim_csv);
    if (*c_gc) return cmd_gradcheck(gc_n, gc_algo, gc_trials, gc_seed);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const InvalidDimension& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const UnsupportedDimension& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  return kExitUsage;
}
