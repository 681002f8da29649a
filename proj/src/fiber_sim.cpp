#include "stokesopt/fiber_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "stokesopt/error.hpp"
#include "stokesopt/gram_metrics.hpp"
#include "stokesopt/rng.hpp"

namespace stokesopt {

namespace {

constexpr double kPi = 3.14159265358979323846;
const cplx kI(0.0, 1.0);

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

void require_unitary(const CMatrix& u, double tol, const char* what) {
  const CMatrix d = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
  if (max_abs(d) > tol) throw ConfigError(std::string(what) + ": matrix is not unitary");
}

struct Propagator {
  CMatrix u0;
  CMatrix eigvecs;
  RVector eigvals;

  explicit Propagator(const FiberModel& f) : u0(f.base_unitary) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(delay_generator(f));
    eigvecs = es.eigenvectors();
    eigvals = es.eigenvalues();
  }

  CMatrix at(double dw) const {
    CVector phase(eigvals.size());
    for (int i = 0; i < eigvals.size(); ++i) phase[i] = std::exp(-kI * (eigvals[i] * dw));
    return u0 * eigvecs * phase.asDiagonal() * eigvecs.adjoint();
  }
};

CMatrix mdl_at(const FiberModel& f, double dw, bool derivative) {
  const int n = f.n;
  CVector d(n);
  for (int k = 0; k < n; ++k) {
    const double slope = f.pa_slopes.size() == n ? f.pa_slopes[k] : 0.0;
    const double amp = std::exp(-(f.pa_coeffs[k] + slope * dw) * f.length / 2.0);
    d[k] = derivative ? -slope * f.length / 2.0 * amp : amp;
  }
  return f.pa_modes * d.asDiagonal() * f.pa_modes.adjoint();
}

// Noiseless delay of one launch plus the linear map from noise draws to the
// delay error; measure_delay and the Monte-Carlo drivers share it so both
// consume the random stream identically.
struct DelayProbe {
  MeasureMode mode = MeasureMode::kAnalytic;
  double value = 0.0;
  double sigma = 0.0;         // analytic: delay noise sd
  RVector noise_weights;      // waveform: w_k t_k / (R_d Q0)
  double sample_sigma = 0.0;  // waveform: per-sample current noise sd

  double variance() const {
    if (mode == MeasureMode::kAnalytic) return sigma * sigma;
    return sample_sigma * sample_sigma * noise_weights.squaredNorm();
  }

  double draw(std::uint64_t seed) const {
    if (mode == MeasureMode::kAnalytic) {
      if (sigma == 0.0) return value;
      Rng rng = substream(seed, 0);
      std::normal_distribution<double> g(0.0, sigma);
      return value + g(rng);
    }
    if (sample_sigma == 0.0) return value;
    Rng rng = substream(seed, 0);
    std::normal_distribution<double> g(0.0, sample_sigma);
    double err = 0.0;
    for (int k = 0; k < noise_weights.size(); ++k) err += noise_weights[k] * g(rng);
    return value + err;
  }
};

RVector simpson38_weights(int intervals, double h) {
  RVector w(intervals + 1);
  for (int k = 0; k <= intervals; ++k) {
    if (k == 0 || k == intervals) {
      w[k] = 1.0;
    } else {
      w[k] = (k % 3 == 0) ? 2.0 : 3.0;
    }
  }
  return w * (3.0 * h / 8.0);
}

double analytic_delay(const FiberModel& f, const JonesState& s) {
  const CVector hs = transfer_matrix(f, 0.0) * s.amplitudes();
  const CVector dhs = transfer_derivative(f) * s.amplitudes();
  const double power = hs.squaredNorm();
  if (!(power > 0.0)) throw EstimationFailed("measure_delay: launch is fully attenuated");
  return (hs.dot(kI * dhs)).real() / power;
}

DelayProbe make_probe(const FiberModel& f, const JonesState& s, const ReceiverModel& rx, MeasureMode mode) {
  if (s.dim() != f.n) throw InvalidDimension("measure_delay: launch dimension does not match fiber");
  rx.validate();
  DelayProbe p;
  p.mode = mode;
  if (mode == MeasureMode::kAnalytic) {
    p.value = analytic_delay(f, s);
    p.sigma = std::sqrt(rx.delay_variance());
    return p;
  }
  const Waveform w = received_waveform(f, s, rx);
  const double q0 = w.weights.dot(w.current);
  if (!(q0 > 0.0)) throw EstimationFailed("measure_delay: no received energy in the window");
  p.value = w.weights.dot(w.current.cwiseProduct(w.times)) / q0;
  p.noise_weights = w.weights.cwiseProduct(w.times) / q0;
  p.sample_sigma = std::sqrt(rx.n0 * rx.sample_rate / 2.0);
  return p;
}

std::vector<DelayProbe> make_probes(const FiberModel& f, const LaunchSet& set, const ReceiverModel& rx,
                                    MeasureMode mode) {
  std::vector<DelayProbe> probes;
  probes.reserve(set.size());
  for (int i = 0; i < set.size(); ++i) probes.push_back(make_probe(f, set.state(i), rx, mode));
  return probes;
}

std::uint64_t trial_launch_seed(std::uint64_t seed, int trial, int launch) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(trial)), static_cast<std::uint64_t>(launch));
}

Eigen::PartialPivLU<RMatrix> coefficient_lu(const LaunchSet& set) {
  require_nonsingular(gram(set));
  return Eigen::PartialPivLU<RMatrix>(coefficient_matrix(set));
}

MdMonteCarloResult run_md_monte_carlo(const FiberModel& f, const LaunchSet& set, const ReceiverModel& rx,
                                      int trials, std::uint64_t seed, MeasureMode mode, bool parallel) {
  if (trials < 2) throw ConfigError("monte_carlo_md: trials must be at least 2");
  if (set.n() != f.n) throw InvalidDimension("monte_carlo_md: set dimension does not match fiber");
  const int m = set.size();
  const double c2 = 2.0 * stokes_constant(f.n) * stokes_constant(f.n);
  const auto lu = coefficient_lu(set);
  const std::vector<DelayProbe> probes = make_probes(f, set, rx, mode);

  RMatrix errors(m, trials);
#pragma omp parallel for schedule(static) if (parallel)
  for (int t = 0; t < trials; ++t) {
    RVector tg(m);
    for (int i = 0; i < m; ++i) tg[i] = c2 * (probes[i].draw(trial_launch_seed(seed, t, i)) - f.tau0);
    errors.col(t) = lu.solve(tg) - f.md_vector;
  }

  MdMonteCarloResult r;
  r.trials = trials;
  r.per_trial_sq_error.resize(trials);
  for (int t = 0; t < trials; ++t) r.per_trial_sq_error[t] = errors.col(t).squaredNorm();
  r.mean_sq_error = pairwise_sum(r.per_trial_sq_error.data(), trials) / trials;
  std::vector<double> dev(trials);
  for (int t = 0; t < trials; ++t) {
    const double d = r.per_trial_sq_error[t] - r.mean_sq_error;
    dev[t] = d * d;
  }
  r.sq_error_stderr = std::sqrt(pairwise_sum(dev.data(), trials) / (trials - 1) / trials);

  r.mean_error.resize(m);
  std::vector<double> row(trials);
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < trials; ++t) row[t] = errors(i, t);
    r.mean_error[i] = pairwise_sum(row.data(), trials) / trials;
  }
  r.covariance.resize(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      for (int t = 0; t < trials; ++t) row[t] = (errors(i, t) - r.mean_error[i]) * (errors(j, t) - r.mean_error[j]);
      r.covariance(i, j) = r.covariance(j, i) = pairwise_sum(row.data(), trials) / (trials - 1);
    }
  }

  // E||A dT||^2 = sum_i var(dT_i) ||A e_i||^2 for independent measurement noise.
  const RMatrix a = lu.inverse();
  double predicted = 0.0;
  for (int i = 0; i < m; ++i) predicted += c2 * c2 * probes[i].variance() * a.col(i).squaredNorm();
  r.predicted = predicted;
  r.ratio = predicted > 0.0 ? r.mean_sq_error / predicted : 0.0;
  return r;
}

ComplexGdOperator sort_by_real(const CVector& values, const CMatrix& vectors, bool fallback) {
  const int n = static_cast<int>(values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a].real() < values[b].real(); });
  ComplexGdOperator out;
  out.eigenvalues.resize(n);
  out.dmgds.resize(n);
  out.pms.resize(vectors.rows(), n);
  for (int i = 0; i < n; ++i) {
    out.eigenvalues[i] = values[order[i]];
    out.dmgds[i] = values[order[i]].real();
    out.pms.col(i) = vectors.col(order[i]).normalized();
  }
  out.schur_fallback = fallback;
  return out;
}

}  // namespace

void FiberModel::validate() const {
  if (n < 2) throw InvalidDimension("fiber: n must be at least 2");
  if (md_vector.size() != stokes_dim(n)) throw InvalidDimension("fiber: md_vector must have N^2 - 1 entries");
  if (base_unitary.rows() != n || base_unitary.cols() != n)
    throw InvalidDimension("fiber: base_unitary must be N x N");
  require_unitary(base_unitary, 1e-10, "fiber: base_unitary");
  if (pa_coeffs.size() != n) throw InvalidDimension("fiber: pa_coeffs must have N entries");
  if (pa_slopes.size() != 0 && pa_slopes.size() != n)
    throw InvalidDimension("fiber: pa_slopes must be empty or have N entries");
  if (pa_modes.rows() != n || pa_modes.cols() != n) throw InvalidDimension("fiber: pa_modes must be N x N");
  require_unitary(pa_modes, 1e-10, "fiber: pa_modes");
  if (input_compensator.rows() != n || input_compensator.cols() != n)
    throw InvalidDimension("fiber: input_compensator must be N x N");
  if (!(length >= 0.0) || !std::isfinite(length)) throw ConfigError("fiber: length must be non-negative");
  if (!std::isfinite(tau0) || !md_vector.allFinite() || !pa_coeffs.allFinite())
    throw ConfigError("fiber: non-finite parameters");
}

void ReceiverModel::validate() const {
  if (!(responsivity > 0.0)) throw ConfigError("receiver: responsivity must be positive");
  if (!(n0 >= 0.0)) throw ConfigError("receiver: n0 must be non-negative");
  if (!(window > 0.0) || !(pulse_halfwidth > 0.0) || !(sample_rate > 0.0) || !(pulse_energy > 0.0))
    throw ConfigError("receiver: window, pulse_halfwidth, sample_rate and pulse_energy must be positive");
  if (!(window > 4.0 * pulse_halfwidth)) throw ConfigError("receiver: window must exceed 4 pulse half-widths");
  const double samples = sample_rate * window;
  const double rounded = std::round(samples);
  if (std::abs(samples - rounded) > 1e-6 * samples)
    throw ConfigError("receiver: sample_rate * window must be an integer number of intervals");
  const long long k = static_cast<long long>(rounded);
  if (k < 3 || k % 3 != 0)
    throw ConfigError("receiver: Simpson 3/8 rule needs a multiple of 3 intervals (sample_rate * window)");
  if (spectral_samples < 3) throw ConfigError("receiver: spectral_samples must be at least 3");
}

int ReceiverModel::intervals() const { return static_cast<int>(std::lround(sample_rate * window)); }

double ReceiverModel::delay_variance() const {
  return n0 * window * window * window / (24.0 * responsivity * responsivity * pulse_energy * pulse_energy);
}

std::string measure_mode_name(MeasureMode m) { return m == MeasureMode::kAnalytic ? "analytic" : "waveform"; }

MeasureMode measure_mode_from_name(const std::string& name) {
  if (name == "analytic") return MeasureMode::kAnalytic;
  if (name == "waveform") return MeasureMode::kWaveform;
  throw ConfigError("measurement mode: unknown value '" + name + "' (expected analytic or waveform)");
}

FiberModel synth_joint_fiber(int n, double tau0, const RVector& md_vector, const RVector& pa_coeffs,
                             const RVector& pa_slopes, double z, std::uint64_t seed) {
  if (n < 2) throw InvalidDimension("fiber: n must be at least 2");
  FiberModel f;
  f.n = n;
  f.tau0 = tau0;
  f.md_vector = md_vector;
  Rng ru = substream(seed, 0);
  f.base_unitary = haar_unitary(n, ru);
  Rng rp = substream(seed, 1);
  f.pa_modes = haar_unitary(n, rp);
  f.pa_coeffs = pa_coeffs;
  f.pa_slopes = pa_slopes.size() == 0 ? RVector::Zero(n) : pa_slopes;
  f.length = z;
  f.input_compensator = CMatrix::Identity(n, n);
  f.validate();
  return f;
}

FiberModel synth_md_fiber(int n, double tau0, const RVector& md_vector, std::uint64_t seed) {
  if (n < 2) throw InvalidDimension("fiber: n must be at least 2");
  FiberModel f = synth_joint_fiber(n, tau0, md_vector, RVector::Zero(n), RVector(), 0.0, seed);
  f.pa_modes = CMatrix::Identity(n, n);
  return f;
}

FiberModel synth_mdl_fiber(int n, const RVector& pa_coeffs, double z, std::uint64_t seed) {
  if (n < 2) throw InvalidDimension("fiber: n must be at least 2");
  if ((pa_coeffs.array() < 0.0).any()) throw ConfigError("fiber: pa_coeffs must be non-negative");
  return synth_joint_fiber(n, 0.0, RVector::Zero(stokes_dim(n)), pa_coeffs, RVector(), z, seed);
}

CMatrix delay_generator(const FiberModel& f) {
  const GellMannBasis basis(f.n);
  return f.tau0 * CMatrix::Identity(f.n, f.n) + basis.combine(f.md_vector) / (2.0 * stokes_constant(f.n));
}

CMatrix propagate_unitary(const FiberModel& f, double dw) { return Propagator(f).at(dw); }

CMatrix mdl_operator(const FiberModel& f, double dw) { return mdl_at(f, dw, false); }

CMatrix transfer_matrix(const FiberModel& f, double dw) {
  return propagate_unitary(f, dw) * mdl_operator(f, dw) * f.input_compensator;
}

CMatrix transfer_derivative(const FiberModel& f) {
  const CMatrix u_w = f.base_unitary * (-kI * delay_generator(f));
  return (u_w * mdl_at(f, 0.0, false) + f.base_unitary * mdl_at(f, 0.0, true)) * f.input_compensator;
}

CMatrix input_gd_operator(const FiberModel& f, double dw) {
  if (!(dw > 0.0)) throw ConfigError("input_gd_operator: dw must be positive");
  const Propagator p(f);
  const CMatrix du = (p.at(dw) - p.at(-dw)) / (2.0 * dw);
  return kI * f.base_unitary.adjoint() * du;
}

double default_frequency_step(const FiberModel& f) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(delay_generator(f), Eigen::EigenvaluesOnly);
  double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  if (f.pa_slopes.size() == f.n) scale = std::max(scale, f.pa_slopes.cwiseAbs().maxCoeff() * f.length / 2.0);
  if (!(scale > 0.0)) return 1.0;
  return 3e-5 / scale;
}

Waveform received_waveform(const FiberModel& f, const JonesState& s, const ReceiverModel& rx) {
  rx.validate();
  if (s.dim() != f.n) throw InvalidDimension("received_waveform: launch dimension does not match fiber");
  const int intervals = rx.intervals();
  const double h = 1.0 / rx.sample_rate;
  const double t0 = rx.pulse_halfwidth;
  const double amp = std::sqrt(rx.pulse_energy / (t0 * std::sqrt(kPi)));

  // Spectral samples over +-8/T0; the sum is periodic in t with period
  // 2 pi / dOmega, far longer than the window.
  const int ns = rx.spectral_samples;
  const double wmax = 8.0 / t0;
  const double dw = 2.0 * wmax / (ns - 1);
  const Propagator prop(f);
  std::vector<double> omega(ns);
  std::vector<CVector> field(ns);
  for (int m = 0; m < ns; ++m) {
    omega[m] = -wmax + m * dw;
    const double g = amp * t0 * std::sqrt(2.0 * kPi) * std::exp(-omega[m] * omega[m] * t0 * t0 / 2.0);
    const CMatrix hm = prop.at(omega[m]) * mdl_at(f, omega[m], false) * f.input_compensator;
    field[m] = hm * s.amplitudes() * (g * dw / (2.0 * kPi));
  }

  Waveform w;
  w.times.resize(intervals + 1);
  w.current.resize(intervals + 1);
  for (int k = 0; k <= intervals; ++k) {
    const double t = rx.window_center - rx.window / 2.0 + k * h;
    CVector e = CVector::Zero(f.n);
    for (int m = 0; m < ns; ++m) e += field[m] * std::exp(kI * (omega[m] * t));
    w.times[k] = t;
    w.current[k] = rx.responsivity * e.squaredNorm();
  }
  w.weights = simpson38_weights(intervals, h);
  return w;
}

double waveform_delay_variance(const Waveform& w, const ReceiverModel& rx) {
  const double q0 = w.weights.dot(w.current);
  const double s = w.weights.cwiseProduct(w.times).squaredNorm();
  return rx.n0 * rx.sample_rate / 2.0 * s / (q0 * q0);
}

MeasurementRecord measure_delay(const FiberModel& f, const JonesState& s, const ReceiverModel& rx,
                                MeasureMode mode, std::uint64_t seed, int launch_index) {
  const DelayProbe p = make_probe(f, s, rx, mode);
  MeasurementRecord r;
  r.launch_index = launch_index;
  r.value = p.draw(seed);
  r.mode = measure_mode_name(mode);
  r.noise_seed = seed;
  return r;
}

double estimate_tau0(const FiberModel& f, const ReceiverModel& rx, const SimplexSet& simplex, int repeats,
                     std::uint64_t seed, MeasureMode mode) {
  if (repeats < 1) throw ConfigError("estimate_tau0: repeats must be at least 1");
  if (simplex.n() != f.n) throw InvalidDimension("estimate_tau0: simplex dimension does not match fiber");
  const int n = f.n;
  std::vector<DelayProbe> probes;
  for (int i = 0; i < n; ++i) probes.push_back(make_probe(f, simplex.state(i), rx, mode));
  std::vector<double> values(static_cast<std::size_t>(repeats) * n);
  for (int r = 0; r < repeats; ++r)
    for (int i = 0; i < n; ++i) values[r * n + i] = probes[i].draw(mix_seed(seed, r * n + i));
  return pairwise_sum(values.data(), values.size()) / static_cast<double>(values.size());
}

RVector reconstruct_md(const LaunchSet& set, const RVector& delays, double tau0) {
  if (delays.size() != set.size()) throw InvalidDimension("reconstruct_md: need one delay per launch state");
  const double c2 = 2.0 * stokes_constant(set.n()) * stokes_constant(set.n());
  const RVector tg = c2 * (delays.array() - tau0).matrix();
  return coefficient_lu(set).solve(tg);
}

RVector reconstruct_md(const LaunchSet& set, const std::vector<MeasurementRecord>& records, double tau0) {
  if (static_cast<int>(records.size()) != set.size())
    throw InvalidDimension("reconstruct_md: need one record per launch state");
  RVector delays(set.size());
  for (int i = 0; i < set.size(); ++i) {
    if (records[i].launch_index != i) throw ConfigError("reconstruct_md: records must follow launch order");
    delays[i] = records[i].value;
  }
  return reconstruct_md(set, delays, tau0);
}

double measure_attenuation(const FiberModel& f, const JonesState& s, double dw) {
  if (s.dim() != f.n) throw InvalidDimension("measure_attenuation: launch dimension does not match fiber");
  return (transfer_matrix(f, dw) * s.amplitudes()).squaredNorm();
}

MdlEstimate true_mdl(const FiberModel& f, double dw) {
  const CMatrix h = transfer_matrix(f, dw);
  const CMatrix p2 = h.adjoint() * h;
  const GellMannBasis basis(f.n);
  const HermitianExpansion e = expand_matrix(p2, basis);
  MdlEstimate est;
  est.alpha0 = e.scalar_part.real();
  est.gamma = e.vector_part.real() / est.alpha0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(p2, Eigen::EigenvaluesOnly);
  est.mdl_ratio = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  return est;
}

MdlEstimate reconstruct_mdl(const LaunchSet& set, const SimplexSet& simplex, const RVector& set_attenuation,
                            const RVector& simplex_attenuation) {
  const int n = set.n();
  if (simplex.n() != n) throw InvalidDimension("reconstruct_mdl: simplex dimension does not match set");
  if (set_attenuation.size() != set.size() || simplex_attenuation.size() != n)
    throw InvalidDimension("reconstruct_mdl: need one attenuation per launch and simplex state");
  MdlEstimate est;
  est.alpha0 = pairwise_sum(simplex_attenuation.data(), n) / n;
  if (!(est.alpha0 > 0.0)) throw EstimationFailed("reconstruct_mdl: mean attenuation is not positive");
  const double c2 = 2.0 * stokes_constant(n) * stokes_constant(n);
  const RVector rhs = c2 * (set_attenuation.array() / est.alpha0 - 1.0).matrix();
  est.gamma = coefficient_lu(set).solve(rhs);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(mdl_squared_from_estimate(est, n), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (!(lo > 0.0)) throw EstimationFailed("reconstruct_mdl: estimated P^2 is not positive definite");
  est.mdl_ratio = es.eigenvalues().maxCoeff() / lo;
  return est;
}

CMatrix mdl_squared_from_estimate(const MdlEstimate& est, int n) {
  if (est.gamma.size() != stokes_dim(n)) throw InvalidDimension("mdl estimate: gamma must have N^2 - 1 entries");
  const GellMannBasis basis(n);
  const CMatrix p2 = est.alpha0 * CMatrix::Identity(n, n) +
                     basis.combine(RVector(est.alpha0 * est.gamma)) / (2.0 * stokes_constant(n));
  return (p2 + p2.adjoint()) / 2.0;
}

CMatrix mdl_root_from_estimate(const MdlEstimate& est, int n) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(mdl_squared_from_estimate(est, n));
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw EstimationFailed("mdl estimate: P^2 is not positive definite");
  const RVector root = es.eigenvalues().cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

FiberModel equalize(const FiberModel& f, const MdlEstimate& est) {
  FiberModel g = f;
  const CMatrix p = mdl_root_from_estimate(est, f.n);
  g.input_compensator = f.input_compensator * p.inverse();
  return g;
}

ComplexGdOperator analyze_gd_operator(const CMatrix& op) {
  const int n = static_cast<int>(op.rows());
  const GellMannBasis basis(n);
  const HermitianExpansion e = expand_matrix(op, basis);
  const CMatrix traceless = op - e.scalar_part * CMatrix::Identity(n, n);

  Eigen::ComplexEigenSolver<CMatrix> es(traceless);
  ComplexGdOperator out;
  bool fallback = es.info() != Eigen::Success;
  if (!fallback) {
    Eigen::JacobiSVD<CMatrix> svd(es.eigenvectors());
    const RVector sv = svd.singularValues();
    fallback = !(sv[sv.size() - 1] > 0.0) || sv[0] / sv[sv.size() - 1] > 1e12;
  }
  if (fallback) {
    Eigen::ComplexSchur<CMatrix> schur(traceless);
    out = sort_by_real(schur.matrixT().diagonal(), schur.matrixU(), true);
  } else {
    out = sort_by_real(es.eigenvalues(), es.eigenvectors(), false);
  }
  out.chi0 = e.scalar_part;
  out.chi_vector = e.vector_part;
  return out;
}

ComplexGdOperator full_gd_operator(const FiberModel& f, double dw) {
  if (!(dw > 0.0)) throw ConfigError("full_gd_operator: dw must be positive");
  const CMatrix h0 = transfer_matrix(f, 0.0);
  const CMatrix dh = (transfer_matrix(f, dw) - transfer_matrix(f, -dw)) / (2.0 * dw);
  Eigen::PartialPivLU<CMatrix> lu(h0);
  return analyze_gd_operator(kI * lu.solve(dh));
}

RMatrix crosstalk_coefficient_matrix(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ConfigError("crosstalk: epsilon must be in [0, 0.5)");
  const double d = 1.0 - 2.0 * epsilon;
  const double a = 2.0 * std::sqrt((1.0 - epsilon) * epsilon);
  RMatrix s(3, 3);
  s << d, a, 0.0, a, d, 0.0, a, 0.0, d;
  return s;
}

CrosstalkBound crosstalk_bound(double epsilon) {
  const RMatrix s = RMatrix::Identity(3, 3);
  const RMatrix ds = crosstalk_coefficient_matrix(epsilon) - s;
  Eigen::JacobiSVD<RMatrix> svd_s(s);
  const RVector sv = svd_s.singularValues();
  CrosstalkBound b;
  b.norm_ds = Eigen::JacobiSVD<RMatrix>(ds).singularValues()[0];
  b.rel_bound = (sv[0] / sv[sv.size() - 1]) * b.norm_ds / sv[0];
  return b;
}

MdMonteCarloResult monte_carlo_md(const FiberModel& f, const LaunchSet& set, const ReceiverModel& rx, int trials,
                                  std::uint64_t seed, MeasureMode mode) {
  return run_md_monte_carlo(f, set, rx, trials, seed, mode, true);
}

MdMonteCarloResult monte_carlo_md_serial(const FiberModel& f, const LaunchSet& set, const ReceiverModel& rx,
                                         int trials, std::uint64_t seed, MeasureMode mode) {
  return run_md_monte_carlo(f, set, rx, trials, seed, mode, false);
}

MdlMonteCarloResult monte_carlo_mdl(const FiberModel& f, const LaunchSet& set, const SimplexSet& simplex,
                                    double rel_sigma, int trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("monte_carlo_mdl: trials must be positive");
  if (!(rel_sigma >= 0.0)) throw ConfigError("monte_carlo_mdl: rel_sigma must be non-negative");
  const int n = f.n;
  const int m = set.size();
  const MdlEstimate truth = true_mdl(f);
  RVector clean_set(m), clean_simplex(n);
  for (int i = 0; i < m; ++i) clean_set[i] = measure_attenuation(f, set.state(i));
  for (int i = 0; i < n; ++i) clean_simplex[i] = measure_attenuation(f, simplex.state(i));

  std::vector<double> gamma_err(trials), alpha_err(trials);
  std::vector<std::string> failures(trials);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < trials; ++t) {
    Rng rng = substream(seed, static_cast<std::uint64_t>(t));
    std::normal_distribution<double> g(0.0, rel_sigma);
    RVector a_set(m), a_simplex(n);
    for (int i = 0; i < n; ++i) a_simplex[i] = clean_simplex[i] * (1.0 + g(rng));
    for (int i = 0; i < m; ++i) a_set[i] = clean_set[i] * (1.0 + g(rng));
    try {
      const MdlEstimate est = reconstruct_mdl(set, simplex, a_set, a_simplex);
      gamma_err[t] = (est.gamma - truth.gamma).squaredNorm();
      alpha_err[t] = (est.alpha0 - truth.alpha0) * (est.alpha0 - truth.alpha0);
    } catch (const Error& e) {
      failures[t] = e.what();
    }
  }
  for (const auto& msg : failures)
    if (!msg.empty()) throw EstimationFailed("monte_carlo_mdl: " + msg);

  MdlMonteCarloResult r;
  r.trials = trials;
  r.mean_sq_gamma_error = pairwise_sum(gamma_err.data(), trials) / trials;
  r.mean_sq_alpha0_error = pairwise_sum(alpha_err.data(), trials) / trials;
  return r;
}

JointPipelineResult joint_pipeline(const FiberModel& f, const LaunchSet& set, const SimplexSet& simplex,
                                   const ReceiverModel& rx, double dw) {
  if (!(dw > 0.0)) throw ConfigError("joint_pipeline: dw must be positive");
  const int n = f.n;
  const int m = set.size();
  auto estimate_at = [&](double w) {
    RVector a_set(m), a_simplex(n);
    for (int i = 0; i < m; ++i) a_set[i] = measure_attenuation(f, set.state(i), w);
    for (int i = 0; i < n; ++i) a_simplex[i] = measure_attenuation(f, simplex.state(i), w);
    return reconstruct_mdl(set, simplex, a_set, a_simplex);
  };

  JointPipelineResult r;
  r.mdl = estimate_at(0.0);
  const CMatrix p0 = mdl_root_from_estimate(r.mdl, n);
  const CMatrix p_w = (mdl_root_from_estimate(estimate_at(dw), n) - mdl_root_from_estimate(estimate_at(-dw), n)) /
                      (2.0 * dw);

  const FiberModel eq = equalize(f, r.mdl);
  const CMatrix he = transfer_matrix(eq, 0.0);
  r.equalized_unitarity_error = max_abs(he.adjoint() * he - CMatrix::Identity(n, n));

  ReceiverModel quiet = rx;
  quiet.n0 = 0.0;
  r.tau0 = estimate_tau0(eq, quiet, simplex, 1, 0);
  RVector delays(m);
  for (int i = 0; i < m; ++i) delays[i] = measure_delay(eq, set.state(i), quiet, MeasureMode::kAnalytic, 0, i).value;
  r.md_vector = reconstruct_md(set, delays, r.tau0);

  const GellMannBasis basis(n);
  const CMatrix k = r.tau0 * CMatrix::Identity(n, n) + basis.combine(r.md_vector) / (2.0 * stokes_constant(n));
  Eigen::PartialPivLU<CMatrix> lu(p0);
  const CMatrix composed = lu.solve(k * p0) + kI * lu.solve(p_w);
  r.composed = analyze_gd_operator(composed);
  r.direct = full_gd_operator(f, dw);
  const double scale = r.direct.dmgds.cwiseAbs().maxCoeff();
  const double diff = (r.composed.dmgds - r.direct.dmgds).cwiseAbs().maxCoeff();
  r.dmgd_relative_error = scale > 0.0 ? diff / scale : diff;
  return r;
}

double pairwise_sum(const double* values, std::size_t count) {
  if (count <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += values[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

}  // namespace stokesopt
