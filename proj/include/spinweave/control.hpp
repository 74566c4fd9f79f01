#pragma once

#include <map>

#include "spinweave/operator.hpp"
#include "spinweave/sequence.hpp"
#include "spinweave/spin_system.hpp"

namespace spinweave {

/// Pulse imperfections. A zero pulse width means delta-function pulses.
struct ErrorModel {
  double pulse_width = 0.0;         ///< t_w, seconds
  double rotation_error = 0.0;      ///< epsilon: fractional over/under-rotation
  double transient_leading = 0.0;   ///< alpha_l, fraction of the pi/2 rotation
  double transient_trailing = 0.0;  ///< alpha_tr

  static ErrorModel symmetric_transients(double alpha) { return {0.0, 0.0, alpha, alpha}; }
  bool is_ideal() const {
    return pulse_width == 0.0 && rotation_error == 0.0 && transient_leading == 0.0 &&
           transient_trailing == 0.0;
  }
  void validate() const;
};

struct PropagatorDiagnostics {
  /// Finite pulse whose nutation rate is below the internal Hamiltonian scale.
  bool weak_pulse = false;
};

/// In-plane collective operator for a pulse phase; cardinal phases are exact.
Operator pulse_axis_operator(int n_spins, double phase_deg);

/// Unitary of one nominal pi/2 pulse with errors. Delta pulses:
///   exp(-i a_tr pi/2 S_{phi+90}) exp(-i (1+eps) pi/2 S_phi) exp(-i a_l pi/2 S_{phi+90}).
/// Finite pulses replace the core by exp(-i (h_int + w1 (1+eps) S_phi) t_w), w1 t_w = pi/2.
Operator pulse_unitary(double phase_deg, const ErrorModel& err, const Operator& h_int, int n_spins,
                       PropagatorDiagnostics* diagnostics = nullptr);

/// Caches the internal-Hamiltonian spectrum and per-phase pulse unitaries so a
/// cycle can be rebuilt cheaply for many tau values.
class CycleBuilder {
 public:
  CycleBuilder(const Operator& h_int, int n_spins, ErrorModel err);

  /// One-cycle propagator. With finite pulses each pulse takes its width from
  /// the end of the preceding delay (cyclically, for a leading pulse), so the
  /// cycle time stays M tau.
  Operator cycle(const PulseSequence& seq, double tau);

  const PropagatorDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  const Operator& pulse(double phase_deg);

  Operator h_int_;
  int n_spins_;
  ErrorModel err_;
  HermitianSpectrum spectrum_;
  std::map<double, Operator> pulses_;
  PropagatorDiagnostics diagnostics_;
};

/// Free-evolution duration of every event (0 for pulses) under the timing
/// convention above. Throws if a pulse has no preceding delay long enough.
std::vector<double> event_durations(const PulseSequence& seq, double tau, double pulse_width);

Operator cycle_unitary(const SpinSystem& sys, const PulseSequence& seq, const ErrorModel& err, double tau);
Operator cycle_unitary(const Operator& h_int, int n_spins, const PulseSequence& seq, const ErrorModel& err,
                       double tau);

/// |Tr(u_th^dag u_exp^{1/m})| / dim, in [0, 1].
double fidelity(const Operator& u_exp, const Operator& u_th, int m);
double fidelity(const Operator& u_exp, int m);

/// 1 - fidelity evaluated from eigenphases so values far below machine epsilon
/// stay resolved.
double infidelity(const Operator& u_exp, const Operator& u_th, int m);
double infidelity(const Operator& u_exp, int m);

/// 1 - |mean exp(i phi_k)| computed without cancellation.
double infidelity_from_phases(const RealVector& phases);

}  // namespace spinweave
