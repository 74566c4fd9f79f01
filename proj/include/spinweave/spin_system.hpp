#pragma once

#include <cstdint>

#include "json.hpp"
#include "spinweave/operator.hpp"

namespace spinweave {

enum class Axis { x, y, z };

Axis parse_axis(char c);
char axis_name(Axis a);

/// N spin-1/2 particles with pairwise secular dipolar couplings and per-spin
/// z fields. All frequencies are in Hz; Hamiltonian builders convert to rad/s.
struct SpinSystem {
  int n_spins = 0;
  Eigen::MatrixXd couplings_hz;      ///< symmetric, zero diagonal
  RealVector chemical_shifts_hz;     ///< delta_i
  RealVector disorder_hz;            ///< h_i
  double global_offset_hz = 0.0;     ///< resonance offset

  static SpinSystem uncoupled(int n_spins);
  static SpinSystem with_couplings(const Eigen::MatrixXd& couplings_hz);

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  Eigen::Index dim() const { return Eigen::Index{1} << n_spins; }

  /// a_i = delta_i + h_i + global offset, in Hz.
  RealVector total_offsets_hz() const;
};

/// Sum_i S_axis^i on n spins (S = sigma / 2, spin 0 is the leftmost tensor factor).
Operator collective_operator(int n_spins, Axis axis);

/// S_axis on a single spin embedded in the n-spin space.
Operator spin_operator(int n_spins, int spin, Axis axis);

/// Collective operator along an in-plane direction: cos(phi) S_x + sin(phi) S_y.
Operator collective_phase_operator(int n_spins, double phase_rad);

/// H_D = sum_{i<j} d_ij (3 S_z^i S_z^j - S^i . S^j), rad/s.
Operator dipolar_hamiltonian(const SpinSystem& sys);

/// sum_i a_i S_z^i with a_i = delta_i + h_i + global offset, rad/s.
Operator offset_hamiltonian(const SpinSystem& sys);

/// H_D + offset Hamiltonian.
Operator internal_hamiltonian(const SpinSystem& sys);

/// H_DQ = (1/2) sum_{j<k} J_jk (S_x^j S_x^k - S_y^j S_y^k) with J = couplings, rad/s.
Operator dq_hamiltonian(const SpinSystem& sys);

/// scale * (1 - 3 cos^2 theta) / r^3. Physical constants are folded into
/// `scale`, so the result is in whatever unit the scale carries (Hz m^3 -> Hz).
double coupling_from_geometry(double r, double theta, double scale);

/// Symmetric coupling matrix with d_ij ~ N(0, sigma^2) for i < j.
Eigen::MatrixXd sample_couplings(std::uint64_t seed, int n_spins, double sigma_hz);

/// Per-spin fields h_i ~ N(0, sigma_h^2).
RealVector sample_disorder(std::uint64_t seed, int n_spins, double sigma_h_hz);

/// Unit-variance normals used by sample_disorder before scaling, so sweeps over
/// sigma_h can share one disorder pattern per sample.
RealVector standard_disorder_pattern(std::uint64_t seed, int n_spins);

/// Default ensemble width: 3 sigma = 5000 Hz.
inline constexpr double kDefaultCouplingSigmaHz = 5000.0 / 3.0;

nlohmann::json to_json(const SpinSystem& sys);
SpinSystem spin_system_from_json(const nlohmann::json& doc);

}  // namespace spinweave
