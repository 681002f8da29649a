#pragma once

// Virtual testbed for the mode-dependent signal delay method: lumped fiber
// models with modal dispersion (MD) and mode-dependent loss (MDL), delay and
// power measurements with receiver noise, MD/MDL reconstruction, MDL
// equalization, the complex group-delay operator, a crosstalk demonstrator
// and Monte-Carlo drivers. SI units throughout.

#include <cstdint>
#include <string>
#include <vector>

#include "stokesopt/stokes_core.hpp"
#include "stokesopt/vector_sets.hpp"

namespace stokesopt {

/// H(w0 + dw) = U(w0 + dw) P(w0 + dw) C with
///   U(w0 + dw) = U0 exp[-i (tau0 I + tau_s . L / (2 C_N)) dw],
///   P(w0 + dw)^2 = sum_k exp(-(a_k + a'_k dw) z) |v_k><v_k|,
/// and C an input compensator (identity unless equalized).
struct FiberModel {
  int n = 0;
  double tau0 = 0.0;           // s
  RVector md_vector;           // tau_s (s), N^2 - 1
  CMatrix base_unitary;        // U0
  RVector pa_coeffs;           // a_k (1/m)
  RVector pa_slopes;           // da_k/dw (s/m); zero for frequency-flat MDL
  CMatrix pa_modes;            // columns v_k, orthonormal
  double length = 0.0;         // z (m)
  CMatrix input_compensator;   // C

  /// Throws InvalidDimension / ConfigError on inconsistent fields.
  void validate() const;
};

enum class QuadratureRule { kSimpson38 };

/// Direct-detection receiver. The noise current is white with two-sided
/// PSD n0 / 2 (A^2/Hz). Samples cover [center - T/2, center + T/2].
struct ReceiverModel {
  double responsivity = 1.0;      // R_d (A/W)
  double n0 = 1e-22;              // N_0 (A^2/Hz)
  double window = 50.4e-9;        // T (s)
  double pulse_halfwidth = 10e-9; // T_0, half-width at the 1/e power point (s)
  double sample_rate = 5e9;       // f_s (Hz)
  double pulse_energy = 1e-10;    // E (J)
  double window_center = 0.0;     // s
  QuadratureRule rule = QuadratureRule::kSimpson38;
  // Frequency samples used to synthesize the output waveform.
  int spectral_samples = 101;

  /// T > 4 T_0 and f_s T a positive multiple of 3 (to 1e-6); throws ConfigError.
  void validate() const;
  int intervals() const;
  /// N_0 T^3 / (24 R_d^2 E^2).
  double delay_variance() const;
};

enum class MeasureMode { kAnalytic, kWaveform };
std::string measure_mode_name(MeasureMode m);
MeasureMode measure_mode_from_name(const std::string& name);

struct MeasurementRecord {
  int launch_index = 0;
  double value = 0.0;  // delay (s) or attenuation
  std::string mode;    // analytic | waveform | power
  std::uint64_t noise_seed = 0;
};

struct MdlEstimate {
  double alpha0 = 0.0;
  RVector gamma;
  double mdl_ratio = 1.0;
};

struct ComplexGdOperator {
  cplx chi0;
  CVector chi_vector;
  RVector dmgds;       // Re of the eigenvalues of chi_s . L / (2 C_N), ascending
  CVector eigenvalues; // same order as dmgds
  CMatrix pms;         // unit columns, possibly non-orthogonal
  bool schur_fallback = false;
};

/// Unitary-only fiber with a Haar-random U0 drawn from `seed`.
FiberModel synth_md_fiber(int n, double tau0, const RVector& md_vector, std::uint64_t seed);

/// Lossy fiber with random orthonormal principal attenuation modes; tau0 and
/// the MD vector are zero.
FiberModel synth_mdl_fiber(int n, const RVector& pa_coeffs, double z, std::uint64_t seed);

/// MD and MDL together; empty `pa_slopes` means frequency-flat MDL.
FiberModel synth_joint_fiber(int n, double tau0, const RVector& md_vector, const RVector& pa_coeffs,
                             const RVector& pa_slopes, double z, std::uint64_t seed);

/// tau0 I + tau_s . L / (2 C_N), the exact input group-delay operator of U.
CMatrix delay_generator(const FiberModel& f);

CMatrix propagate_unitary(const FiberModel& f, double dw);
CMatrix mdl_operator(const FiberModel& f, double dw);
CMatrix transfer_matrix(const FiberModel& f, double dw);
/// Exact dH/dw at w0.
CMatrix transfer_derivative(const FiberModel& f);

/// i U^dag U_w at w0 by central difference with step `dw`.
CMatrix input_gd_operator(const FiberModel& f, double dw);

/// Step small enough that central differences are accurate to ~1e-10
/// relative for this fiber.
double default_frequency_step(const FiberModel& f);

/// Group delay of launch `s`. Analytic mode evaluates
/// Re<Hs| i H_w s> / |Hs|^2 plus Gaussian
/// noise of variance rx.delay_variance(); waveform mode synthesizes the
/// Gaussian pulse, detects total intensity with per-sample noise of
/// variance n0 f_s / 2 and takes the first moment by composite Simpson 3/8,
/// normalized by the noiseless received energy. n0 = 0 is noiseless.
MeasurementRecord measure_delay(const FiberModel& f, const JonesState& s, const ReceiverModel& rx,
                                MeasureMode mode, std::uint64_t seed, int launch_index = 0);

/// Noiseless detected current R_d |E(t)|^2 at the receiver sample times.
struct Waveform {
  RVector times;
  RVector current;
  RVector weights;  // quadrature weights including the step
};
Waveform received_waveform(const FiberModel& f, const JonesState& s, const ReceiverModel& rx);

/// Exact variance of the waveform-mode delay noise for this waveform:
/// (n0 f_s / 2) sum_k w_k^2 t_k^2 / (sum_k w_k i_k)^2.
double waveform_delay_variance(const Waveform& w, const ReceiverModel& rx);

/// Mean of k N delay measurements over the simplex states.
double estimate_tau0(const FiberModel& f, const ReceiverModel& rx, const SimplexSet& simplex, int repeats,
                     std::uint64_t seed, MeasureMode mode = MeasureMode::kAnalytic);

/// S^-1 T_g with T_g = 2 C_N^2 (tau_g - tau0), by LU solve. Throws SingularSet.
RVector reconstruct_md(const LaunchSet& set, const RVector& delays, double tau0);
RVector reconstruct_md(const LaunchSet& set, const std::vector<MeasurementRecord>& records, double tau0);

/// <s|H^dag H|s> at w0 + dw.
double measure_attenuation(const FiberModel& f, const JonesState& s, double dw = 0.0);

/// (alpha0, Gamma) of P^2 at w0 + dw from its Gell-Mann expansion.
MdlEstimate true_mdl(const FiberModel& f, double dw = 0.0);

/// alpha0 = simplex mean, Gamma = 2 C_N^2 S^-1 (alpha / alpha0 - 1).
/// Throws SingularSet, or EstimationFailed when the implied P^2 is not
/// positive definite.
MdlEstimate reconstruct_mdl(const LaunchSet& set, const SimplexSet& simplex, const RVector& set_attenuation,
                            const RVector& simplex_attenuation);

/// P^2 = alpha0 [I + Gamma . L / (2 C_N)] and its principal square root.
CMatrix mdl_squared_from_estimate(const MdlEstimate& est, int n);
CMatrix mdl_root_from_estimate(const MdlEstimate& est, int n);

/// Fiber with input compensator P_est^-1 composed onto the existing one.
FiberModel equalize(const FiberModel& f, const MdlEstimate& est);

/// Eigen-analysis of a complex input group-delay operator i H^-1 H_w.
ComplexGdOperator analyze_gd_operator(const CMatrix& op);

/// i H^-1 H_w by central difference on the full transfer matrix.
ComplexGdOperator full_gd_operator(const FiberModel& f, double dw);

struct CrosstalkBound {
  double norm_ds = 0.0;
  double rel_bound = 0.0;
};

/// N = 2 demonstrator: S = I, S' built from launch states carrying
/// crosstalk epsilon; returns ||S' - S|| and kappa(S) ||dS|| / ||S||.
CrosstalkBound crosstalk_bound(double epsilon);
RMatrix crosstalk_coefficient_matrix(double epsilon);

/// Monte-Carlo check of the MD noise law with the true tau0 supplied.
struct MdMonteCarloResult {
  int trials = 0;
  double mean_sq_error = 0.0;     // E||d tau_s||^2
  double sq_error_stderr = 0.0;   // standard error of the above
  double predicted = 0.0;         // sigma^2_{dT_g} Tr(A A^T)
  double ratio = 0.0;             // mean_sq_error / predicted
  RVector mean_error;
  RMatrix covariance;
  std::vector<double> per_trial_sq_error;
};

/// Trials draw measurement noise from per-trial substreams of `seed`; the
/// OpenMP variant is bitwise identical to the serial one.
MdMonteCarloResult monte_carlo_md(const FiberModel& f, const LaunchSet& set, const ReceiverModel& rx,
                                  int trials, std::uint64_t seed, MeasureMode mode = MeasureMode::kAnalytic);
MdMonteCarloResult monte_carlo_md_serial(const FiberModel& f, const LaunchSet& set, const ReceiverModel& rx,
                                         int trials, std::uint64_t seed,
                                         MeasureMode mode = MeasureMode::kAnalytic);

/// Monte-Carlo MDL reconstruction with multiplicative power noise of
/// relative standard deviation `rel_sigma`.
struct MdlMonteCarloResult {
  int trials = 0;
  double mean_sq_gamma_error = 0.0;
  double mean_sq_alpha0_error = 0.0;
};
MdlMonteCarloResult monte_carlo_mdl(const FiberModel& f, const LaunchSet& set, const SimplexSet& simplex,
                                    double rel_sigma, int trials, std::uint64_t seed);

/// Noiseless divide-and-conquer pipeline on a joint MD + MDL fiber:
/// MDL at w0 and w0 +- dw, equalization, tau0 and tau_s of the equalized
/// fiber, composition P^-1 K P + i P^-1 P_w, compared with the direct
/// operator of the true fiber.
struct JointPipelineResult {
  MdlEstimate mdl;
  double tau0 = 0.0;
  RVector md_vector;
  double equalized_unitarity_error = 0.0;  // ||(HC)^dag (HC) - I||_max at w0
  ComplexGdOperator composed;
  ComplexGdOperator direct;
  double dmgd_relative_error = 0.0;        // max |diff| / max |direct dmgd|
};
JointPipelineResult joint_pipeline(const FiberModel& f, const LaunchSet& set, const SimplexSet& simplex,
                                   const ReceiverModel& rx, double dw);

/// Pairwise (cascade) summation; fixed association order.
double pairwise_sum(const double* values, std::size_t count);

}  // namespace stokesopt
