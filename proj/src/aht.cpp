#include "spinweave/aht.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spinweave {

namespace {

// Kahan-compensated accumulation of matrix terms.
class CompensatedSum {
 public:
  explicit CompensatedSum(Eigen::Index dim) : sum_(Operator::Zero(dim, dim)), carry_(Operator::Zero(dim, dim)) {}

  void add(const Operator& term) {
    const Operator y = term - carry_;
    const Operator t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }

  const Operator& value() const { return sum_; }

 private:
  Operator sum_;
  Operator carry_;
};

int resolve_cap(const DysonOptions& options, std::size_t n_segments) {
  if (options.max_order_cap > 0) return options.max_order_cap;
  return n_segments <= 12 ? 72 : 8;
}

}  // namespace

std::vector<TogglingSegment> toggling_segments(const Operator& h_int, int n_spins, const PulseSequence& seq,
                                               double tau, const ErrorModel& err, int pulse_slices) {
  err.validate();
  if (err.rotation_error != 0.0 || err.transient_leading != 0.0 || err.transient_trailing != 0.0) {
    throw std::invalid_argument("toggling frame supports pulse width only; rotation errors and transients "
                                "must be zero");
  }
  if (pulse_slices < 1) throw std::invalid_argument("pulse_slices must be >= 1");
  validate_cyclic(seq);

  const std::vector<double> durations = event_durations(seq, tau, err.pulse_width);
  const Eigen::Index dim = h_int.rows();
  Operator rotation = Operator::Identity(dim, dim);
  std::vector<TogglingSegment> segments;
  const auto& events = seq.events();
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto& e = events[k];
    if (!e.is_pulse()) {
      if (durations[k] > 0.0) segments.push_back({rotation.adjoint() * h_int * rotation, durations[k]});
      continue;
    }
    const HermitianSpectrum axis(pulse_axis_operator(n_spins, e.phase_deg));
    if (err.pulse_width > 0.0) {
      const double slice = err.pulse_width / pulse_slices;
      const double rate = (std::numbers::pi / 2.0) / err.pulse_width;
      for (int j = 0; j < pulse_slices; ++j) {
        const Operator r = axis.propagator(rate * (j + 0.5) * slice) * rotation;
        segments.push_back({r.adjoint() * h_int * r, slice});
      }
    }
    rotation = axis.propagator(std::numbers::pi / 2.0) * rotation;
  }
  if (segments.empty()) throw std::invalid_argument("sequence has no evolution segments");
  return segments;
}

double total_duration(const std::vector<TogglingSegment>& segments) {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

Operator average_h(const std::vector<TogglingSegment>& segments, int order) {
  if (segments.empty()) throw std::invalid_argument("no segments");
  const double tc = total_duration(segments);
  const Eigen::Index dim = segments.front().hamiltonian.rows();
  if (order == 0) {
    Operator avg = Operator::Zero(dim, dim);
    for (const auto& s : segments) avg += s.hamiltonian * s.duration;
    return avg / tc;
  }
  if (order == 1) {
    Operator acc = Operator::Zero(dim, dim);
    Operator earlier = Operator::Zero(dim, dim);  // sum_{l<k} H_l dt_l
    for (const auto& s : segments) {
      const Operator a = s.hamiltonian * s.duration;
      acc += a * earlier - earlier * a;
      earlier += a;
    }
    return cplx(0.0, -0.5 / tc) * acc;
  }
  throw std::invalid_argument("closed-form average Hamiltonian is available for orders 0 and 1 only");
}

std::vector<Operator> dyson_terms(const std::vector<TogglingSegment>& segments, int n_max,
                                  const DysonOptions& options) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  if (segments.empty()) throw std::invalid_argument("no segments");
  const int cap = resolve_cap(options, segments.size());
  if (n_max > cap + 1) {
    throw std::invalid_argument("Dyson order " + std::to_string(n_max) + " exceeds cap " + std::to_string(cap + 1) +
                                " (Magnus order cap " + std::to_string(cap) + ")");
  }
  const Eigen::Index dim = segments.front().hamiltonian.rows();
  std::vector<Operator> p(static_cast<std::size_t>(n_max) + 1, Operator::Zero(dim, dim));
  p[0] = Operator::Identity(dim, dim);

  std::vector<Operator> powers(static_cast<std::size_t>(n_max) + 1);
  for (const auto& seg : segments) {
    // (H dt)^j / j!
    powers[0] = Operator::Identity(dim, dim);
    const Operator step = seg.hamiltonian * seg.duration;
    for (int j = 1; j <= n_max; ++j) powers[j] = (step * powers[j - 1]) / static_cast<double>(j);

    // P_n(s + dt) = sum_j (H dt)^j / j! P_{n-j}(s); descending n keeps inputs intact.
    for (int n = n_max; n >= 1; --n) {
      CompensatedSum sum(dim);
      for (int j = n; j >= 0; --j) sum.add(powers[j] * p[n - j]);
      p[n] = sum.value();
    }
  }
  return p;
}

Operator MagnusSeries::partial_sum(int n) const {
  if (n < 0 || n > max_order()) throw std::out_of_range("Magnus order beyond computed series");
  Operator s = terms[0];
  for (int j = 1; j <= n; ++j) s += terms[j];
  return 0.5 * (s + s.adjoint());
}

MagnusSeries burum_terms(const std::vector<Operator>& dyson, double cycle_time) {
  if (dyson.size() < 2) throw std::invalid_argument("need at least P_0 and P_1");
  if (!(cycle_time > 0.0)) throw std::invalid_argument("cycle time must be positive");
  const int n_max = static_cast<int>(dyson.size()) - 1;
  const Eigen::Index dim = dyson[1].rows();

  std::vector<Operator> omega(static_cast<std::size_t>(n_max) + 1);
  // q[n][k] = order-n part of Omega^k, 1 <= k <= n
  std::vector<std::vector<Operator>> q(static_cast<std::size_t>(n_max) + 1);
  for (int n = 1; n <= n_max; ++n) {
    q[n].resize(static_cast<std::size_t>(n) + 1);
    CompensatedSum higher(dim);
    double factorial = 1.0;
    for (int k = 2; k <= n; ++k) {
      factorial *= k;
      Operator qk = Operator::Zero(dim, dim);
      for (int m = 1; m <= n - k + 1; ++m) qk += omega[m] * q[n - m][k - 1];
      higher.add(qk / factorial);
      q[n][k] = std::move(qk);
    }
    omega[n] = dyson[n] - higher.value();
    q[n][1] = omega[n];
  }

  MagnusSeries series;
  series.cycle_time = cycle_time;
  cplx phase(1.0, 0.0);  // (-i)^(n-1)
  for (int n = 1; n <= n_max; ++n) {
    Operator term = (phase / cycle_time) * omega[n];
    series.hermiticity_residuals.push_back(hermiticity_residual(term));
    series.terms.push_back(std::move(term));
    phase *= cplx(0.0, -1.0);
  }
  return series;
}

MagnusSeries magnus_series(const std::vector<TogglingSegment>& segments, int max_order,
                           const DysonOptions& options) {
  if (max_order < 0) throw std::invalid_argument("max_order must be >= 0");
  return burum_terms(dyson_terms(segments, max_order + 1, options), total_duration(segments));
}

std::vector<double> term_magnitudes(const MagnusSeries& series, const Operator& h_dip) {
  const double scale = frobenius_magnitude(h_dip);
  if (scale == 0.0) throw std::invalid_argument("reference dipolar Hamiltonian is zero");
  std::vector<double> out;
  out.reserve(series.terms.size());
  for (const auto& t : series.terms) out.push_back(frobenius_magnitude(t) / scale);
  return out;
}

ConvergenceCheck convergence_check(const std::vector<TogglingSegment>& segments) {
  ConvergenceCheck c;
  for (const auto& s : segments) c.value += spectral_norm_hermitian(s.hamiltonian) * s.duration;
  c.guaranteed = c.value < std::numbers::pi;
  return c;
}

NthOrderFidelity nth_order_fidelity(const Operator& h_int, int n_spins, const PulseSequence& seq, double tau,
                                    int max_order, const DysonOptions& options) {
  const auto segments = toggling_segments(h_int, n_spins, seq, tau);
  const MagnusSeries series = magnus_series(segments, max_order, options);
  const Operator u_exp = cycle_unitary(h_int, n_spins, seq, ErrorModel{}, tau);
  const int m = seq.cycle_windows();
  const Operator root = unitary_root(u_exp, m);

  NthOrderFidelity out;
  out.plain_infidelity = infidelity_from_phases(unitary_spectrum(root).phases);
  for (int n = 0; n <= max_order; ++n) {
    const Operator u_n = expm_hermitian(series.partial_sum(n), tau);
    out.infidelity.push_back(infidelity_from_phases(unitary_spectrum(u_n.adjoint() * root).phases));
  }
  return out;
}

}  // namespace spinweave
