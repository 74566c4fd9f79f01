#include "spinweave/control.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spinweave {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

}  // namespace

void ErrorModel::validate() const {
  if (!(pulse_width >= 0.0) || !std::isfinite(pulse_width)) {
    throw std::invalid_argument("pulse width must be finite and >= 0");
  }
  if (!std::isfinite(rotation_error) || !std::isfinite(transient_leading) ||
      !std::isfinite(transient_trailing)) {
    throw std::invalid_argument("error model contains non-finite values");
  }
}

Operator pulse_axis_operator(int n_spins, double phase_deg) {
  double p = std::fmod(phase_deg, 360.0);
  if (p < 0) p += 360.0;
  if (p == 0.0) return collective_operator(n_spins, Axis::x);
  if (p == 90.0) return collective_operator(n_spins, Axis::y);
  if (p == 180.0) return -collective_operator(n_spins, Axis::x);
  if (p == 270.0) return -collective_operator(n_spins, Axis::y);
  return collective_phase_operator(n_spins, p * std::numbers::pi / 180.0);
}

Operator pulse_unitary(double phase_deg, const ErrorModel& err, const Operator& h_int, int n_spins,
                       PropagatorDiagnostics* diagnostics) {
  err.validate();
  const Operator axis = pulse_axis_operator(n_spins, phase_deg);
  const Operator quadrature = pulse_axis_operator(n_spins, phase_deg + 90.0);
  const double angle = kHalfPi * (1.0 + err.rotation_error);

  Operator core;
  if (err.pulse_width == 0.0) {
    core = expm_hermitian(axis, angle);
  } else {
    const double w1 = kHalfPi / err.pulse_width;
    if (diagnostics && w1 < spectral_norm_hermitian(h_int)) diagnostics->weak_pulse = true;
    const Operator generator = h_int + (w1 * (1.0 + err.rotation_error)) * axis;
    core = expm_hermitian(generator, err.pulse_width);
  }
  if (err.transient_leading == 0.0 && err.transient_trailing == 0.0) return core;

  const HermitianSpectrum kick(quadrature);
  return kick.propagator(kHalfPi * err.transient_trailing) * core *
         kick.propagator(kHalfPi * err.transient_leading);
}

std::vector<double> event_durations(const PulseSequence& seq, double tau, double pulse_width) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const auto& events = seq.events();
  const std::size_t n = events.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!events[k].is_pulse()) out[k] = events[k].windows * tau;
  }
  if (pulse_width == 0.0) return out;
  for (std::size_t k = 0; k < n; ++k) {
    if (!events[k].is_pulse()) continue;
    const std::size_t prev = (k + n - 1) % n;
    if (events[prev].is_pulse() || n == 1) {
      throw std::invalid_argument("finite pulse has no preceding delay to occupy");
    }
    out[prev] -= pulse_width;
    if (out[prev] < 0.0) throw std::invalid_argument("pulse width exceeds its delay window");
  }
  return out;
}

CycleBuilder::CycleBuilder(const Operator& h_int, int n_spins, ErrorModel err)
    : h_int_(h_int), n_spins_(n_spins), err_(err), spectrum_(h_int) {
  err_.validate();
  if (h_int.rows() != (Eigen::Index{1} << n_spins)) throw OperatorError("Hamiltonian dimension mismatch");
}

const Operator& CycleBuilder::pulse(double phase_deg) {
  auto it = pulses_.find(phase_deg);
  if (it == pulses_.end()) {
    it = pulses_.emplace(phase_deg, pulse_unitary(phase_deg, err_, h_int_, n_spins_, &diagnostics_)).first;
  }
  return it->second;
}

Operator CycleBuilder::cycle(const PulseSequence& seq, double tau) {
  const std::vector<double> durations = event_durations(seq, tau, err_.pulse_width);
  const Eigen::Index dim = h_int_.rows();
  Operator u = Operator::Identity(dim, dim);
  const auto& events = seq.events();
  for (std::size_t k = 0; k < events.size(); ++k) {
    if (events[k].is_pulse()) {
      u = pulse(events[k].phase_deg) * u;
    } else if (durations[k] > 0.0) {
      u = spectrum_.propagator(durations[k]) * u;
    }
  }
  return u;
}

Operator cycle_unitary(const Operator& h_int, int n_spins, const PulseSequence& seq, const ErrorModel& err,
                       double tau) {
  CycleBuilder builder(h_int, n_spins, err);
  return builder.cycle(seq, tau);
}

Operator cycle_unitary(const SpinSystem& sys, const PulseSequence& seq, const ErrorModel& err, double tau) {
  return cycle_unitary(internal_hamiltonian(sys), sys.n_spins, seq, err, tau);
}

double fidelity(const Operator& u_exp, const Operator& u_th, int m) {
  if (u_exp.rows() != u_th.rows() || u_exp.cols() != u_th.cols()) {
    throw OperatorError("fidelity: dimension mismatch");
  }
  const Operator root = unitary_root(u_exp, m);
  return std::abs((u_th.adjoint() * root).trace()) / static_cast<double>(u_exp.rows());
}

double fidelity(const Operator& u_exp, int m) {
  const Operator root = unitary_root(u_exp, m);
  return std::abs(root.trace()) / static_cast<double>(u_exp.rows());
}

double infidelity_from_phases(const RealVector& phases) {
  const auto d = static_cast<double>(phases.size());
  if (phases.size() == 0) throw std::invalid_argument("no phases");
  cplx mean(0.0, 0.0);
  for (Eigen::Index k = 0; k < phases.size(); ++k) mean += std::polar(1.0, phases(k));
  mean /= d;
  const double center = std::abs(mean) > 0.0 ? std::arg(mean) : 0.0;

  // z_k = exp(i psi_k) - 1 with psi centered, so small spreads stay exact.
  std::vector<cplx> z(static_cast<std::size_t>(phases.size()));
  cplx zbar(0.0, 0.0);
  for (Eigen::Index k = 0; k < phases.size(); ++k) {
    const double psi = std::remainder(phases(k) - center, 2.0 * std::numbers::pi);
    const double s = std::sin(0.5 * psi);
    z[static_cast<std::size_t>(k)] = cplx(-2.0 * s * s, std::sin(psi));
    zbar += z[static_cast<std::size_t>(k)];
  }
  zbar /= d;
  double spread = 0.0;  // 1 - F^2
  for (const auto& zk : z) spread += std::norm(zk - zbar);
  spread /= d;
  const double f = std::abs(cplx(1.0, 0.0) + zbar);
  return spread / (1.0 + f);
}

double infidelity(const Operator& u_exp, int m) {
  if (m < 1) throw std::invalid_argument("root order must be >= 1");
  RealVector phases = unitary_spectrum(u_exp).phases / static_cast<double>(m);
  return infidelity_from_phases(phases);
}

double infidelity(const Operator& u_exp, const Operator& u_th, int m) {
  if (u_exp.rows() != u_th.rows() || u_exp.cols() != u_th.cols()) {
    throw OperatorError("fidelity: dimension mismatch");
  }
  const Operator w = u_th.adjoint() * unitary_root(u_exp, m);
  return infidelity_from_phases(unitary_spectrum(w).phases);
}

}  // namespace spinweave
