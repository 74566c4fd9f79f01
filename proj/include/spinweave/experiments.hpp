#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spinweave/control.hpp"
#include "spinweave/sequence.hpp"
#include "spinweave/spin_system.hpp"

namespace spinweave {

/// Normalized signal sampled at block boundaries N * t_c.
struct DecayCurve {
  std::vector<double> times;   ///< seconds
  std::vector<double> values;  ///< C(0) = 1
  std::string label;
  nlohmann::json metadata = nlohmann::json::object();
  /// Indices where c_avg inputs disagreed in sign.
  std::vector<std::size_t> sign_conflicts;
};

/// C_aa(N t_c) = Tr(S_a(t) S_a) / Tr(S_a^2) with S_a(t) = U^N S_a U^N^dag and U
/// one cycle of `seq`. Block counts must be >= 0.
DecayCurve autocorrelation(const SpinSystem& sys, const PulseSequence& seq, const ErrorModel& err, double tau,
                           Axis axis, const std::vector<int>& blocks);

/// Pointwise cube root of |cx cy cz| carrying the majority sign.
DecayCurve c_avg(const DecayCurve& cx, const DecayCurve& cy, const DecayCurve& cz);

enum class DecayModel { stretched, oscillating_stretched };

std::string model_name(DecayModel m);
DecayModel parse_model(const std::string& name);

struct FitBounds {
  double g_min = 0.5;
  double g_max = 2.5;
  /// Upper T2 bound; 0 means 1000 times the curve's time span.
  double t2_max = 0.0;

  static FitBounds tau_sweep() { return {0.5, 2.5, 0.0}; }
  static FitBounds offset_sweep() { return {0.0, 3.0, 0.0}; }
};

/// Stretched:     C0 exp(-(t/T2)^g)
/// Oscillating:   C0 cos(2 pi f t) exp(-(t/T2)^g) + C1
struct FitResult {
  DecayModel model = DecayModel::stretched;
  double c0 = 0.0;
  double c1 = 0.0;
  double t2 = 0.0;  ///< seconds
  double g = 1.0;
  double f = 0.0;   ///< Hz
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool at_bound = false;

  bool flagged() const { return !converged || at_bound; }
  double evaluate(double t) const;
};

nlohmann::json to_json(const FitResult& fit);

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bounded least squares with 8 starting points; returns the best fit.
FitResult fit_decay(const DecayCurve& curve, DecayModel model, const FitBounds& bounds = {});

/// Least-squares slope of fitted frequency against offset (both Hz).
struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
};
ScalingFit oscillation_scaling(const std::vector<double>& offsets_hz, const std::vector<double>& frequencies_hz);
ScalingFit oscillation_scaling(const std::vector<double>& offsets_hz, const std::vector<FitResult>& fits);

/// Coherence orders -n_max..n_max with I_n = Tr(rho_n^dag rho_n).
struct CoherenceSpectrum {
  std::vector<int> orders;
  std::vector<double> intensities;

  double intensity(int n) const;
  double total() const;
};

/// Blocks of rho by the difference of S_axis eigenvalues between row and column.
CoherenceSpectrum coherence_intensities(const Operator& rho, Axis axis);

struct MqcWindow {
  enum class Kind { none, free, protected_cycles };
  Kind kind = Kind::none;
  double duration = 0.0;  ///< free window, seconds
  PulseSequence sequence; ///< protected window
  int cycles = 0;
  double tau = 0.0;
  ErrorModel errors;

  static MqcWindow free(double t) { return {Kind::free, t, {}, 0, 0.0, {}}; }
  static MqcWindow protected_by(PulseSequence seq, int cycles, double tau, ErrorModel err = {}) {
    return {Kind::protected_cycles, 0.0, std::move(seq), cycles, tau, err};
  }
  double length() const;
};

/// DQ cycle time used to convert m cycles to an evolution time.
inline constexpr double kDqCycleTime = 54.4e-6;
inline double dq_time(int m_cycles) { return m_cycles * kDqCycleTime; }

struct MqcResult {
  std::vector<double> phis;    ///< radians
  std::vector<double> signal;  ///< S(phi) / Tr(Z^2)
  CoherenceSpectrum spectrum;  ///< from the DFT of signal
};

class AliasingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Smallest power of two >= 4 n_spins.
int default_phi_count(int n_spins);

/// rho_0 = Z; forward exp(-i H_DQ tau_dq), z rotation by phi, window,
/// backward exp(+i H_DQ tau_dq); S(phi) = Tr(Z rho_f) / Tr(Z^2).
MqcResult mqc_experiment(const SpinSystem& sys, double tau_dq, int phi_count, const MqcWindow& window = {});

/// I_order / I_order(no window) across windows, one entry per window.
DecayCurve mqc_decay(const SpinSystem& sys, double tau_dq, int order, int phi_count,
                     const std::vector<MqcWindow>& windows);

/// Fit of A_k exp(-n^2 / N_k) over orders with nonzero intensity.
struct ClusterFit {
  std::vector<double> sizes;       ///< N_k = 2 sigma_k^2, ascending
  std::vector<double> amplitudes;
  double residual_norm = 0.0;
};

ClusterFit cluster_size(const CoherenceSpectrum& spectrum, int components);

}  // namespace spinweave
