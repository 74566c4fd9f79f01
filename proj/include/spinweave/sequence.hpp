#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spinweave/operator.hpp"

namespace spinweave {

/// One element of a pulse sequence: a free-evolution window of an integer
/// number of tau units, or a nominal pi/2 pulse about an in-plane axis.
struct PulseEvent {
  enum class Kind { delay, pulse };

  Kind kind = Kind::delay;
  int windows = 1;          ///< delay length in units of tau
  double phase_deg = 0.0;   ///< pulse axis: 0 = +x, 90 = +y, 180 = -x, 270 = -y

  static PulseEvent delay(int windows) { return {Kind::delay, windows, 0.0}; }
  static PulseEvent pulse(double phase_deg) { return {Kind::pulse, 0, phase_deg}; }

  bool is_pulse() const { return kind == Kind::pulse; }
  double phase_rad() const;

  friend bool operator==(const PulseEvent&, const PulseEvent&) = default;
};

class PulseSequence {
 public:
  PulseSequence() = default;
  PulseSequence(std::string name, std::vector<PulseEvent> events);

  const std::string& name() const { return name_; }
  const std::vector<PulseEvent>& events() const { return events_; }
  int n_pulses() const { return n_pulses_; }
  /// M = t_c / tau.
  int cycle_windows() const { return cycle_windows_; }
  /// True when the cycle starts with a pulse rather than a delay.
  bool leading_pulse() const { return !events_.empty() && events_.front().is_pulse(); }
  /// A sequence without pulses is cyclic only in the trivial sense.
  bool is_trivial() const { return n_pulses_ == 0; }

 private:
  std::string name_;
  std::vector<PulseEvent> events_;
  int n_pulses_ = 0;
  int cycle_windows_ = 0;
};

class SequenceParseError : public std::runtime_error {
 public:
  SequenceParseError(const std::string& message, std::size_t position)
      : std::runtime_error(message + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class NonCyclicError : public std::runtime_error {
 public:
  NonCyclicError(const std::string& message, double residual)
      : std::runtime_error(message), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Parses the text form: tokens joined by '-', token := [INT]"tau" | x | -x |
/// y | -y | p<degrees>. Whitespace is ignored and lines starting with '#' are
/// comments.
PulseSequence parse_sequence(std::string_view text, std::string name = "custom");

/// Canonical text form, e.g. "tau - -x - tau - y - 2tau".
std::string render_sequence(const PulseSequence& seq);

inline constexpr std::array<std::string_view, 7> kBuiltinNames = {
    "WHH", "MREV8", "MREV16", "BR24", "CORY48", "YXX24", "YXX48"};

PulseSequence builtin(std::string_view name);
bool is_builtin(std::string_view name);
/// True for CORY48, YXX24 and YXX48.
bool is_time_suspension(std::string_view name);

/// Ideal pi/2 rotation exp(-i (pi/2) S_phi) on one spin.
Eigen::Matrix2cd ideal_pulse_rotation(double phase_rad);

/// Composes ideal delta-pulse rotations on one spin and returns s where the
/// composite equals s * I. Throws NonCyclicError otherwise.
int validate_cyclic(const PulseSequence& seq);

/// Signed toggling-frame axis of S_z per tau column (3 x M, entries -1/0/+1).
struct FMatrix {
  Eigen::Matrix<int, 3, Eigen::Dynamic> entries;
  bool leading_pulse = false;

  int columns() const { return static_cast<int>(entries.cols()); }
};

FMatrix frame_matrix(const PulseSequence& seq);

struct RowSums {
  Eigen::Vector3i sums = Eigen::Vector3i::Zero();
  /// All rows zero: interactions proportional to S_z average out.
  bool time_suspension_capable() const { return sums.isZero(); }
};

RowSums row_sum_check(const FMatrix& f);

/// Zeroth-order offset average from the frame matrix:
/// sum_axis (row_sum / M) * sum_i a_i S_axis^i, with a_i in Hz.
Operator offset_average_from_frame(const FMatrix& f, const RealVector& offsets_hz);

/// ASCII grid with rows X/Y/Z and "+", "-", "." cells.
std::string render_frame_matrix(const FMatrix& f);

}  // namespace spinweave
