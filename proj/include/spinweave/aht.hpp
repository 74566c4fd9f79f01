#pragma once

#include <vector>

#include "spinweave/control.hpp"
#include "spinweave/operator.hpp"
#include "spinweave/sequence.hpp"

namespace spinweave {

/// Piece of the toggling-frame Hamiltonian that is constant over `duration`.
struct TogglingSegment {
  Operator hamiltonian;  ///< rad/s
  double duration = 0.0; ///< seconds
};

/// Toggling-frame Hamiltonian R^dag h_int R, with R the accumulated ideal
/// rotation, as piecewise-constant segments over one cycle. Delta pulses give
/// one segment per delay; finite pulses add `pulse_slices` sub-segments per
/// pulse using the mid-slice rotation. Rotation errors and phase transients
/// are not represented in this frame.
std::vector<TogglingSegment> toggling_segments(const Operator& h_int, int n_spins, const PulseSequence& seq,
                                               double tau, const ErrorModel& err = {}, int pulse_slices = 32);

double total_duration(const std::vector<TogglingSegment>& segments);

/// Closed-form order 0 or 1 average Hamiltonian for piecewise-constant segments.
Operator average_h(const std::vector<TogglingSegment>& segments, int order);

struct DysonOptions {
  /// Highest Magnus order H^(n) that may be requested (Dyson terms up to
  /// n + 1). 0 selects 72 for sequences with at most 12 segments and 8
  /// otherwise.
  int max_order_cap = 0;
};

/// P_0 .. P_nmax with P_0 = I and
/// P_n = int_0^tc dt1 int_0^t1 dt2 ... H(t1) H(t2) ... H(tn), evaluated exactly
/// for piecewise-constant H.
std::vector<Operator> dyson_terms(const std::vector<TogglingSegment>& segments, int n_max,
                                  const DysonOptions& options = {});

/// Average Hamiltonian terms H^(0), H^(1), ... with exp(-i tc sum_j H^(j)) the
/// cycle propagator.
struct MagnusSeries {
  std::vector<Operator> terms;
  double cycle_time = 0.0;
  std::vector<double> hermiticity_residuals;

  int max_order() const { return static_cast<int>(terms.size()) - 1; }
  /// sum_{j <= n} H^(j), Hermitian part.
  Operator partial_sum(int n) const;
};

/// Magnus terms from Dyson terms by the Burum recursion:
///   Omega_n = P_n - sum_{k=2}^{n} Q_n^(k) / k!,
///   Q_n^(k) = sum_{m=1}^{n-k+1} Omega_m Q_{n-m}^(k-1),  Q_n^(1) = Omega_n,
///   H^(n-1) = (-i)^(n-1) Omega_n / tc.
MagnusSeries burum_terms(const std::vector<Operator>& dyson, double cycle_time);

/// Convenience: segments -> Dyson -> Magnus with H^(0..max_order).
MagnusSeries magnus_series(const std::vector<TogglingSegment>& segments, int max_order,
                           const DysonOptions& options = {});

inline constexpr double kNegligibleMagnitude = 1e-15;

/// |H^(n)| / |h_dip| with |A| = sqrt(Tr(A^dag A)).
std::vector<double> term_magnitudes(const MagnusSeries& series, const Operator& h_dip);

struct ConvergenceCheck {
  double value = 0.0;       ///< sum_k ||H_k||_2 dt_k
  bool guaranteed = false;  ///< value < pi
};

ConvergenceCheck convergence_check(const std::vector<TogglingSegment>& segments);

/// 1 - F_n for n = 0..max_order where F_n = |Tr(U_n^dag U_exp^{1/M})| / dim and
/// U_n = exp(-i tau sum_{j<=n} H^(j)) is the truncated effective propagator
/// over one tau (delta pulses, no errors).
struct NthOrderFidelity {
  std::vector<double> infidelity;  ///< indexed by n
  double plain_infidelity = 0.0;   ///< U_th = I
};

NthOrderFidelity nth_order_fidelity(const Operator& h_int, int n_spins, const PulseSequence& seq, double tau,
                                    int max_order, const DysonOptions& options = {});

}  // namespace spinweave
