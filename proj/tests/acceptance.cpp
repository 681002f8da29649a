// Acceptance gate: one PASS/FAIL line per criterion, with the measured
// values and wall time. Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "stokesopt/error.hpp"
#include "stokesopt/fiber_sim.hpp"
#include "stokesopt/gram_metrics.hpp"
#include "stokesopt/optimizer.hpp"
#include "stokesopt/rng.hpp"
#include "stokesopt/serialization.hpp"
#include "stokesopt/sphere.hpp"
#include "stokesopt/vector_sets.hpp"
#include "support.hpp"

using namespace stokesopt;
namespace t = stokesopt::oracle;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Every logged descent run in this binary, for the monotonicity half of
// criterion 9.
struct RunLog {
  int runs = 0;
  int violations = 0;
} g_runs;

void log_run(const OptimizerRun& run) {
  ++g_runs.runs;
  for (std::size_t i = 1; i < run.trajectory.size(); ++i)
    if (run.trajectory[i].xi > run.trajectory[i - 1].xi) {
      ++g_runs.violations;
      break;
    }
  t::record_bounds(run.final_set);
  if (run.final_xi < stokes_dim(run.final_set.n()) - 1e-6) ++t::bound_registry().violations;
}

double penalty_db(double xi, int n) { return to_db(xi / stokes_dim(n)); }

RVector random_md(int n, double norm, std::uint64_t seed) {
  Rng rng = substream(seed, 0);
  std::normal_distribution<double> d;
  RVector v(stokes_dim(n));
  for (auto& x : v) x = d(rng);
  return norm * v / v.norm();
}

Outcome criterion1() {
  bool ok = true;
  double worst_mub = 0.0, worst_sic = 0.0;
  for (int n : {2, 3, 5, 7}) {
    const auto set = mub_set(n);
    const auto m = metrics(set);
    t::record_bounds(m, n);
    worst_mub = std::max(worst_mub, std::abs(m.penalty_linear - 2.0 * (n - 1) / n));
  }
  for (int n = 2; n <= 10; ++n) {
    const auto m = metrics_from_gram(sic_gram_analytic(n));
    t::record_bounds(m, n);
    worst_sic = std::max(worst_sic, std::abs(m.penalty_linear - 2.0 * (n * n - 1) / (n * n)));
  }
  ok = worst_mub < 1e-10 && worst_sic < 1e-12;
  const double limit_db = 10.0 * std::log10(2.0);
  bool monotone = true;
  double prev_sic = -1.0, prev_mub = -1.0;
  for (int n = 2; n <= 100; ++n) {
    const auto s = sic_metrics_closed_form(n);
    const auto m = mub_metrics_closed_form(n);
    t::record_bounds(s, n);
    t::record_bounds(m, n);
    monotone = monotone && s.penalty_db > prev_sic && m.penalty_db > prev_mub && s.penalty_db < limit_db &&
               m.penalty_db < limit_db;
    prev_sic = s.penalty_db;
    prev_mub = m.penalty_db;
  }
  const bool near_limit = limit_db - prev_sic < 0.01 && limit_db - prev_mub < 0.05;
  ok = ok && monotone && near_limit;
  return {ok, "mub |d-delta|=" + fmt("%.2e", worst_mub) + " sic |d-delta|=" + fmt("%.2e", worst_sic) +
                  " monotone=" + (monotone ? "yes" : "no") + " N=100: sic " + fmt("%.4f", prev_sic) + " dB, mub " +
                  fmt("%.4f", prev_mub) + " dB (limit " + fmt("%.4f", limit_db) + ")"};
}

Outcome criterion2() {
  const auto set = read_launch_set(std::filesystem::path(STOKESOPT_DATA_DIR) / "table1_n4.json");
  const auto m = metrics(set);
  t::record_bounds(m, 4);
  const bool ok = std::abs(m.xi - 16.9) <= 0.3 && std::abs(m.penalty_db - 0.517) <= 0.08;
  return {ok, "xi=" + fmt("%.4f", m.xi) + " penalty=" + fmt("%.4f", m.penalty_db) + " dB"};
}

double best_of(int n, Algorithm a, int starts, std::uint64_t seed) {
  OptimizerConfig cfg;
  cfg.algorithm = a;
  cfg.seed = seed;
  cfg.trajectory_stride = 1;
  const auto r = multi_start(n, cfg, starts, {});
  log_run(r.best);
  return r.best.final_xi;
}

Outcome criterion3() {
  OptimizerConfig cfg;
  cfg.trajectory_stride = 1;
  cfg.seed = 1;
  const auto two = descend(random_set(2, 1), cfg);
  log_run(two);
  const double p2 = penalty_db(two.final_xi, 2);
  const double xi4p = best_of(4, Algorithm::kProjected, 8, 1);
  const double xi4h = best_of(4, Algorithm::kHyperspherical, 8, 1);
  const double p4 = penalty_db(std::min(xi4p, xi4h), 4);
  const double p5 = penalty_db(best_of(5, Algorithm::kProjected, 8, 1), 5);
  const double p6 = penalty_db(best_of(6, Algorithm::kProjected, 8, 1), 6);
  const bool ok = p2 <= 0.001 && xi4p <= 17.0 && xi4h <= 17.0 && p5 < p4 && p6 < p4;
  return {ok, "N=2 " + fmt("%.2e", p2) + " dB; N=4 xi projected " + fmt("%.4f", xi4p) + " hyperspherical " +
                  fmt("%.4f", xi4h) + "; optimum N=4/5/6 " + fmt("%.4f", p4) + "/" + fmt("%.4f", p5) + "/" +
                  fmt("%.4f", p6) + " dB"};
}

Outcome criterion4() {
  const int n = 5;
  bool ok = true;
  std::string detail;
  for (Algorithm a : {Algorithm::kProjected, Algorithm::kHyperspherical}) {
    OptimizerConfig cfg;
    cfg.algorithm = a;
    cfg.max_iters = 20000;
    cfg.seed = 1;
    cfg.trajectory_stride = 1;
    const InitSpec sic{InitFamily::kFile, sic_search(n, cfg.seed)};
    struct Entry {
      const char* name;
      InitSpec init;
      double initial = 0.0, final = 0.0;
    };
    std::vector<Entry> entries = {{"sic", sic}, {"mub", {InitFamily::kMub, {}}}, {"yang", {InitFamily::kYang, {}}},
                                  {"random", {InitFamily::kRandom, {}}}};
    for (auto& e : entries) {
      const auto start = initial_set(n, cfg, e.init, 0);
      t::record_bounds(start);
      const auto run = descend(start, cfg);
      log_run(run);
      e.initial = penalty_db(run.initial_xi, n);
      e.final = penalty_db(run.final_xi, n);
      ok = ok && run.final_xi < run.initial_xi;
    }
    // Converged runs reaching the same minimum count as equal.
    auto le = [](double x, double y) { return x <= y + 1e-9 * std::abs(y); };
    ok = ok && le(entries[0].final, entries[1].final) && le(entries[0].final, entries[2].final);
    for (int i = 0; i < 3; ++i) ok = ok && entries[3].initial > entries[i].initial;
    detail += std::string(algorithm_name(a)) + ":";
    for (const auto& e : entries) detail += std::string(" ") + e.name + " " + fmt("%.3f", e.initial) + "->" + fmt("%.4f", e.final);
    detail += "; ";
  }
  return {ok, detail + "(dB)"};
}

Outcome criterion5() {
  bool ok = true;
  std::string detail;
  const ReceiverModel rx;
  for (int n : {2, 3}) {
    OptimizerConfig cfg;
    cfg.seed = 5;
    cfg.trajectory_stride = 1;
    const auto opt = multi_start(n, cfg, 4, {});
    log_run(opt.best);
    const LaunchSet good = opt.best.final_set;
    const LaunchSet oblique = t::oblique_set(good);
    t::record_bounds(good);
    t::record_bounds(oblique);
    const FiberModel f = synth_md_fiber(n, 2e-12, random_md(n, 1e-12, 10 + n), 10 + n);
    const auto rg = monte_carlo_md(f, good, rx, 10000, 100 + n);
    const auto ro = monte_carlo_md(f, oblique, rx, 10000, 200 + n);
    const double c2 = 2.0 * stokes_constant(n) * stokes_constant(n);
    // sigma^2_{dT_g} Tr(A A^T), formed independently of the Monte-Carlo driver.
    const double law_g = c2 * c2 * rx.delay_variance() * cost(good);
    const double law_o = c2 * c2 * rx.delay_variance() * cost(oblique);
    const double q_g = rg.mean_sq_error / law_g, q_o = ro.mean_sq_error / law_o;
    ok = ok && std::abs(q_g - 1.0) < 0.05 && std::abs(q_o - 1.0) < 0.05 && ro.mean_sq_error > rg.mean_sq_error;
    detail += "N=" + std::to_string(n) + " ratio optimized " + fmt("%.4f", q_g) + " oblique " + fmt("%.4f", q_o) +
              " (E|d|^2 " + fmt("%.3e", rg.mean_sq_error) + " < " + fmt("%.3e", ro.mean_sq_error) + "); ";
  }
  return {ok, detail};
}

Outcome criterion6() {
  ReceiverModel rx;
  rx.n0 = 0.0;
  rx.pulse_halfwidth = 10e-9;
  rx.sample_rate = 5e9;
  rx.window = 50.4e-9;  // nearest window >= 50 ns with a multiple of 3 intervals
  bool ok = true;
  std::string detail;
  // Common delay only, then a mode-dependent delay reaching the same total.
  RVector md(3);
  md << 0.0, 0.0, 0.1e-12;
  const std::vector<FiberModel> fibers = {synth_md_fiber(2, 0.1e-12, RVector::Zero(3), 1),
                                          synth_md_fiber(2, 0.05e-12, md, 2)};
  for (const auto& f : fibers) {
    const auto s = JonesState::basis(2, 0);
    const double truth = measure_delay(f, s, rx, MeasureMode::kAnalytic, 0).value;
    const double wave = measure_delay(f, s, rx, MeasureMode::kWaveform, 0).value;
    const double rel = std::abs(wave - truth) / std::abs(truth);
    ok = ok && std::abs(truth - 0.1e-12) < 1e-24 && rel < 0.01;
    detail += "true " + fmt("%.4g", truth) + " s waveform " + fmt("%.6g", wave) + " s rel " + fmt("%.3e", rel) + "; ";
  }
  return {ok, detail + "T=50.4 ns"};
}

Outcome criterion7() {
  bool ok = true;
  std::string detail;
  for (int n = 2; n <= 4; ++n) {
    RVector a(n), slopes(n);
    for (int k = 0; k < n; ++k) {
      a[k] = 1e-4 * (1.0 + 0.7 * k);
      slopes[k] = 1e-15 * ((k % 2 == 0) ? -1.0 : 2.0);
    }
    const RVector md = random_md(n, 1e-12, 70 + n);
    const FiberModel f = synth_joint_fiber(n, 2e-12, md, a, slopes, 1000.0, 70 + n);
    const auto set = yang_nolan(n);
    t::record_bounds(set);
    const auto r = joint_pipeline(f, set, simplex_set(n, 7), ReceiverModel{}, default_frequency_step(f));
    const auto truth = true_mdl(f);
    const double gamma_err = (r.mdl.gamma - truth.gamma).norm() / truth.gamma.norm();
    ok = ok && r.equalized_unitarity_error < 1e-8 && r.dmgd_relative_error < 1e-6 && gamma_err < 1e-8;
    detail += "N=" + std::to_string(n) + " unitarity " + fmt("%.1e", r.equalized_unitarity_error) + " gamma " +
              fmt("%.1e", gamma_err) + " dmgd " + fmt("%.1e", r.dmgd_relative_error) + "; ";
  }
  return {ok, detail};
}

Outcome criterion8() {
  bool ok = true;
  std::string detail = "ratio";
  for (double eps : {1e-6, 1e-7, 1e-8, 1e-9}) {
    const double ratio = crosstalk_bound(eps).norm_ds / (2.0 * std::sqrt(2.0 * eps));
    ok = ok && ratio >= 0.99 && ratio <= 1.01;
    detail += " " + fmt("%.6f", ratio);
  }
  const auto b = crosstalk_bound(1e-4);
  ok = ok && std::abs(b.rel_bound - 0.0283) < 5e-5;
  return {ok, detail + "; rel bound at 1e-4 = " + fmt("%.6f", b.rel_bound)};
}

Outcome criterion9() {
  double worst_j = 0.0, worst_h = 0.0;
  for (int n = 2; n <= 4; ++n) {
    for (int p = 0; p < 100; ++p) {
      const std::uint64_t seed = 9000 + 1000 * n + p;
      const auto set = random_set(n, seed);
      t::record_bounds(set);
      const CMatrix fd = t::fd_gradient_jones(set.states());
      worst_j = std::max(worst_j, t::rel_error(gradient_jones(set).tangent, fd));

      Rng rng = substream(seed, 1);
      std::uniform_real_distribution<double> phi(0.1, 1.47), theta(0.0, 6.283185307179586);
      std::vector<HypersphericalPoint> pts(stokes_dim(n), HypersphericalPoint{RVector(n - 1), RVector(n - 1)});
      for (auto& q : pts)
        for (int i = 0; i < n - 1; ++i) {
          q.phis[i] = phi(rng);
          q.thetas[i] = theta(rng);
        }
      worst_h = std::max(worst_h, t::rel_error(gradient_hyperspherical(pts).angles, t::fd_gradient_angles(pts)));
    }
  }
  const bool ok = worst_j < 1e-6 && worst_h < 1e-6 && g_runs.violations == 0 && g_runs.runs > 0;
  return {ok, "max rel err projected " + fmt("%.2e", worst_j) + " hyperspherical " + fmt("%.2e", worst_h) +
                  "; monotone runs " + std::to_string(g_runs.runs - g_runs.violations) + "/" +
                  std::to_string(g_runs.runs)};
}

Outcome criterion10() {
  const auto& r = t::bound_registry();
  const bool ok = r.violations == 0 && r.checked > 0;
  return {ok, std::to_string(r.checked) + " sets, min xi-(N^2-1)=" + fmt("%.3e", r.worst_margin) +
                  ", max log_volume=" + fmt("%.3e", r.max_log_volume)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    double budget_s;
    std::function<Outcome()> run;
  };
  // Criterion 9 runs after the optimizer criteria so their logged runs count;
  // criterion 10 last so it sees every set produced here.
  const std::vector<Criterion> criteria = {
      {1, 10, criterion1},  {2, 1, criterion2},    {3, 600, criterion3}, {4, 900, criterion4}, {5, 120, criterion5},
      {6, 5, criterion6},   {7, 30, criterion7},   {8, 1, criterion8},   {9, 120, criterion9}, {10, 1e9, criterion10}};
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("criterion %2d: %s  %s [%.2f s%s]\n", c.id, pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
