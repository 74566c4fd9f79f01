#include "spinweave/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "spinweave/fit.hpp"

namespace spinweave {

namespace {

Operator matrix_power(const Operator& u, long long n) {
  Operator result = Operator::Identity(u.rows(), u.cols());
  Operator base = u;
  while (n > 0) {
    if (n & 1) result = base * result;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

// Magnetic quantum number of a computational basis state (bit set = down).
double basis_m(Eigen::Index b, int n_spins) {
  return 0.5 * n_spins - std::popcount(static_cast<unsigned long long>(b));
}

}  // namespace

DecayCurve autocorrelation(const SpinSystem& sys, const PulseSequence& seq, const ErrorModel& err, double tau,
                           Axis axis, const std::vector<int>& blocks) {
  sys.validate();
  const Operator u = cycle_unitary(sys, seq, err, tau);
  const Operator s = collective_operator(sys.n_spins, axis);
  const double norm = (s * s).trace().real();
  const double tc = seq.cycle_windows() * tau;

  std::vector<int> order(blocks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return blocks[a] < blocks[b]; });

  DecayCurve curve;
  curve.label = std::string("C_") + axis_name(axis) + axis_name(axis);
  curve.times.resize(blocks.size());
  curve.values.resize(blocks.size());
  Operator power = Operator::Identity(u.rows(), u.cols());
  int current = 0;
  for (int idx : order) {
    const int n = blocks[static_cast<std::size_t>(idx)];
    if (n < 0) throw std::invalid_argument("block counts must be >= 0");
    if (n > current) {
      power = matrix_power(u, n - current) * power;
      current = n;
    }
    const Operator evolved = power * s * power.adjoint();
    curve.times[static_cast<std::size_t>(idx)] = n * tc;
    curve.values[static_cast<std::size_t>(idx)] = (evolved * s).trace().real() / norm;
  }
  curve.metadata = {{"sequence", seq.name()},
                    {"tau", tau},
                    {"axis", std::string(1, axis_name(axis))},
                    {"pulse_width", err.pulse_width},
                    {"rotation_error", err.rotation_error},
                    {"transient_leading", err.transient_leading},
                    {"transient_trailing", err.transient_trailing}};
  return curve;
}

DecayCurve c_avg(const DecayCurve& cx, const DecayCurve& cy, const DecayCurve& cz) {
  const std::size_t n = cx.times.size();
  if (cy.times.size() != n || cz.times.size() != n || cx.values.size() != n || cy.values.size() != n ||
      cz.values.size() != n) {
    throw std::invalid_argument("c_avg: curves have different lengths");
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double t = cx.times[k];
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    if (std::abs(cy.times[k] - t) > tol || std::abs(cz.times[k] - t) > tol) {
      throw std::invalid_argument("c_avg: time grids differ at index " + std::to_string(k));
    }
  }
  DecayCurve out;
  out.label = "C_avg";
  out.times = cx.times;
  out.values.resize(n);
  out.metadata = cx.metadata;
  for (std::size_t k = 0; k < n; ++k) {
    const double v[3] = {cx.values[k], cy.values[k], cz.values[k]};
    int negative = 0;
    for (double x : v) negative += x < 0.0 ? 1 : 0;
    if (negative != 0 && negative != 3) out.sign_conflicts.push_back(k);
    const double magnitude = std::cbrt(std::abs(v[0]) * std::abs(v[1]) * std::abs(v[2]));
    out.values[k] = negative >= 2 ? -magnitude : magnitude;
  }
  return out;
}

std::string model_name(DecayModel m) {
  return m == DecayModel::stretched ? "stretched" : "oscillating_stretched";
}

DecayModel parse_model(const std::string& name) {
  if (name == "stretched") return DecayModel::stretched;
  if (name == "oscillating_stretched") return DecayModel::oscillating_stretched;
  throw std::invalid_argument("unknown decay model '" + name + "'");
}

double FitResult::evaluate(double t) const {
  const double envelope = t > 0.0 ? std::exp(-std::pow(t / t2, g)) : (g > 0.0 ? 1.0 : std::exp(-1.0));
  if (model == DecayModel::stretched) return c0 * envelope;
  return c0 * std::cos(kTwoPi * f * t) * envelope + c1;
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json j = {{"model", model_name(fit.model)},
                      {"C0", fit.c0},
                      {"T2_eff", fit.t2},
                      {"g", fit.g},
                      {"residual_norm", fit.residual_norm},
                      {"iterations", fit.iterations},
                      {"converged", fit.converged},
                      {"at_bound", fit.at_bound}};
  if (fit.model == DecayModel::oscillating_stretched) {
    j["C1"] = fit.c1;
    j["f"] = fit.f;
  }
  return j;
}

namespace {

// Parameters in scaled time s = t / span: stretched (C0, T, g);
// oscillating (C0, F, T, g, C1) with F = f * span.
struct ScaledProblem {
  DecayModel model;
  Eigen::VectorXd s;
  Eigen::VectorXd y;

  void operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) const {
    const Eigen::Index m = s.size();
    const bool osc = model == DecayModel::oscillating_stretched;
    r.resize(m);
    jac.resize(m, p.size());
    const double c0 = p(0);
    const double big_t = osc ? p(2) : p(1);
    const double g = osc ? p(3) : p(2);
    for (Eigen::Index k = 0; k < m; ++k) {
      double u = 0.0;
      double log_ratio = 0.0;
      if (s(k) > 0.0) {
        log_ratio = std::log(s(k) / big_t);
        u = std::exp(g * log_ratio);
      } else if (g == 0.0) {
        u = 1.0;
      }
      const double e = std::exp(-u);
      const double d_t = e * g * u / big_t;   // d e / d T
      const double d_g = -e * u * log_ratio;  // d e / d g
      if (!osc) {
        r(k) = c0 * e - y(k);
        jac(k, 0) = e;
        jac(k, 1) = c0 * d_t;
        jac(k, 2) = c0 * d_g;
      } else {
        const double arg = kTwoPi * p(1) * s(k);
        const double c = std::cos(arg);
        r(k) = c0 * c * e + p(4) - y(k);
        jac(k, 0) = c * e;
        jac(k, 1) = -c0 * kTwoPi * s(k) * std::sin(arg) * e;
        jac(k, 2) = c0 * c * d_t;
        jac(k, 3) = c0 * c * d_g;
        jac(k, 4) = 1.0;
      }
    }
  }
};

double first_crossing(const Eigen::VectorXd& s, const Eigen::VectorXd& y, double level) {
  for (Eigen::Index k = 1; k < s.size(); ++k) {
    if (y(k) < level) {
      const double y0 = y(k - 1);
      const double y1 = y(k);
      const double w = y0 != y1 ? (y0 - level) / (y0 - y1) : 0.5;
      return s(k - 1) + w * (s(k) - s(k - 1));
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double periodogram_peak(const Eigen::VectorXd& s, const Eigen::VectorXd& y, double f_max) {
  const int grid = 4000;
  double best_f = 0.0;
  double best_power = -1.0;
  for (int i = 0; i <= grid; ++i) {
    const double f = f_max * i / grid;
    cplx acc(0.0, 0.0);
    for (Eigen::Index k = 0; k < s.size(); ++k) acc += y(k) * std::polar(1.0, -kTwoPi * f * s(k));
    const double power = std::norm(acc);
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  return best_f;
}

}  // namespace

FitResult fit_decay(const DecayCurve& curve, DecayModel model, const FitBounds& bounds) {
  const std::size_t n = curve.times.size();
  if (n < 6 || curve.values.size() != n) throw FitError("fit_decay needs at least 6 points");
  if (!(bounds.g_min >= 0.0) || !(bounds.g_max > bounds.g_min)) throw FitError("invalid stretch bounds");

  const auto [t_lo, t_hi] = std::minmax_element(curve.times.begin(), curve.times.end());
  const double span = *t_hi;
  if (!(span > 0.0) || *t_lo < 0.0) throw FitError("fit_decay needs nonnegative times with positive span");

  ScaledProblem problem{model, Eigen::VectorXd(n), Eigen::VectorXd(n)};
  double min_dt = std::numeric_limits<double>::infinity();
  std::vector<double> sorted(curve.times);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < n; ++k) {
    problem.s(static_cast<Eigen::Index>(k)) = curve.times[k] / span;
    problem.y(static_cast<Eigen::Index>(k)) = curve.values[k];
    if (k > 0 && sorted[k] > sorted[k - 1]) min_dt = std::min(min_dt, (sorted[k] - sorted[k - 1]) / span);
  }
  const double amp = std::max(problem.y.cwiseAbs().maxCoeff(), 1e-300);
  const double t_upper = bounds.t2_max > 0.0 ? bounds.t2_max / span : 1e3;
  const double t_lower = 1e-6;
  const double f_upper = std::isfinite(min_dt) ? 1.0 / min_dt : 1e3;
  const bool osc = model == DecayModel::oscillating_stretched;

  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  if (!osc) {
    lower = Eigen::Vector3d(-10 * amp, t_lower, bounds.g_min);
    upper = Eigen::Vector3d(10 * amp, t_upper, bounds.g_max);
  } else {
    lower.resize(5);
    upper.resize(5);
    lower << -10 * amp, 0.0, t_lower, bounds.g_min, -10 * amp;
    upper << 10 * amp, f_upper, t_upper, bounds.g_max, 10 * amp;
  }

  // Starting points.
  const Eigen::Index first = static_cast<Eigen::Index>(std::min_element(curve.times.begin(), curve.times.end()) -
                                                       curve.times.begin());
  std::vector<Eigen::VectorXd> starts;
  const double g_starts[2] = {std::clamp(1.0, bounds.g_min, bounds.g_max),
                              std::clamp(2.0, bounds.g_min, bounds.g_max)};
  if (!osc) {
    const double c0 = std::abs(problem.y(first)) > 1e-12 * amp ? problem.y(first) : amp;
    double te = first_crossing(problem.s, problem.y / c0, std::exp(-1.0));
    if (!std::isfinite(te) || te <= 0.0) te = 2.0;
    for (double scale : {0.5, 1.0, 2.0, 4.0}) {
      for (double g0 : g_starts) starts.push_back(Eigen::Vector3d(c0, std::clamp(te * scale, t_lower, t_upper), g0));
    }
  } else {
    const Eigen::Index tail = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(n) / 5);
    std::vector<std::pair<double, double>> by_time;
    for (std::size_t k = 0; k < n; ++k) by_time.emplace_back(problem.s(k), problem.y(k));
    std::sort(by_time.begin(), by_time.end());
    double c1 = 0.0;
    for (Eigen::Index k = static_cast<Eigen::Index>(n) - tail; k < static_cast<Eigen::Index>(n); ++k) {
      c1 += by_time[static_cast<std::size_t>(k)].second;
    }
    c1 /= static_cast<double>(tail);
    const double c0 = problem.y(first) - c1;
    const Eigen::VectorXd centered = problem.y.array() - c1;
    const double f0 = periodogram_peak(problem.s, centered, std::min(f_upper, 0.5 / min_dt));
    for (double big_t : {0.25, 0.5, 1.0, 2.0}) {
      for (double g0 : g_starts) {
        Eigen::VectorXd p(5);
        p << c0, f0, std::clamp(big_t, t_lower, t_upper), g0, c1;
        starts.push_back(p);
      }
    }
  }

  LmResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (const auto& p0 : starts) {
    LmResult r = levenberg_marquardt(problem, p0, lower, upper);
    if (std::isfinite(r.cost) && r.cost < best.cost) best = r;
  }
  if (!std::isfinite(best.cost)) throw FitError("fit_decay: no finite solution");

  FitResult out;
  out.model = model;
  const Eigen::VectorXd& p = best.params;
  out.c0 = p(0);
  if (!osc) {
    out.t2 = p(1) * span;
    out.g = p(2);
  } else {
    out.f = p(1) / span;
    out.t2 = p(2) * span;
    out.g = p(3);
    out.c1 = p(4);
  }
  out.residual_norm = std::sqrt(2.0 * best.cost);
  out.iterations = best.iterations;
  out.converged = best.converged;
  const double big_t = osc ? p(2) : p(1);
  const double g = osc ? p(3) : p(2);
  out.at_bound = big_t >= t_upper * (1 - 1e-9) || big_t <= t_lower * (1 + 1e-9) ||
                 g >= bounds.g_max - 1e-9 || g <= bounds.g_min + 1e-9;
  return out;
}

ScalingFit oscillation_scaling(const std::vector<double>& offsets_hz, const std::vector<double>& frequencies_hz) {
  if (offsets_hz.size() != frequencies_hz.size()) throw FitError("offset and frequency counts differ");
  if (offsets_hz.size() < 3) throw FitError("oscillation_scaling needs at least 3 offsets");
  const auto n = static_cast<double>(offsets_hz.size());
  const double mx = std::accumulate(offsets_hz.begin(), offsets_hz.end(), 0.0) / n;
  const double my = std::accumulate(frequencies_hz.begin(), frequencies_hz.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < offsets_hz.size(); ++k) {
    sxx += (offsets_hz[k] - mx) * (offsets_hz[k] - mx);
    sxy += (offsets_hz[k] - mx) * (frequencies_hz[k] - my);
  }
  const double scale = std::max(std::abs(mx), 1.0);
  if (!(sxx > 1e-20 * scale * scale * n)) throw FitError("oscillation_scaling: offsets are degenerate");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

ScalingFit oscillation_scaling(const std::vector<double>& offsets_hz, const std::vector<FitResult>& fits) {
  std::vector<double> f;
  f.reserve(fits.size());
  for (const auto& r : fits) {
    if (r.model != DecayModel::oscillating_stretched) throw FitError("oscillation_scaling needs oscillating fits");
    f.push_back(r.f);
  }
  return oscillation_scaling(offsets_hz, f);
}

double CoherenceSpectrum::intensity(int n) const {
  for (std::size_t k = 0; k < orders.size(); ++k) {
    if (orders[k] == n) return intensities[k];
  }
  return 0.0;
}

double CoherenceSpectrum::total() const { return std::accumulate(intensities.begin(), intensities.end(), 0.0); }

CoherenceSpectrum coherence_intensities(const Operator& rho, Axis axis) {
  const Eigen::Index dim = rho.rows();
  if (rho.cols() != dim || !is_power_of_two(dim)) throw OperatorError("rho must be square with dimension 2^N");
  const int n_spins = std::countr_zero(static_cast<unsigned long long>(dim));

  // Rotate so S_axis becomes diagonal: W S_axis W^dag = S_z.
  Operator rotated;
  if (axis == Axis::z) {
    rotated = rho;
  } else {
    const Operator w = axis == Axis::x ? expm_hermitian(collective_operator(n_spins, Axis::y), -std::numbers::pi / 2)
                                       : expm_hermitian(collective_operator(n_spins, Axis::x), std::numbers::pi / 2);
    rotated = w * rho * w.adjoint();
  }

  CoherenceSpectrum spec;
  for (int n = -n_spins; n <= n_spins; ++n) spec.orders.push_back(n);
  spec.intensities.assign(spec.orders.size(), 0.0);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const int n = static_cast<int>(std::lround(basis_m(i, n_spins) - basis_m(j, n_spins)));
      spec.intensities[static_cast<std::size_t>(n + n_spins)] += std::norm(rotated(i, j));
    }
  }
  return spec;
}

double MqcWindow::length() const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::free:
      return duration;
    case Kind::protected_cycles:
      return cycles * sequence.cycle_windows() * tau;
  }
  return 0.0;
}

int default_phi_count(int n_spins) { return static_cast<int>(std::bit_ceil(static_cast<unsigned>(4 * n_spins))); }

namespace {

struct MqcSetup {
  int n_spins;
  Operator rho_tau;   // forward-evolved Z
  double z_norm;      // Tr(Z^2)
  Eigen::VectorXd m;  // basis magnetic numbers
};

MqcSetup prepare_mqc(const SpinSystem& sys, double tau_dq) {
  sys.validate();
  if (!(tau_dq >= 0.0)) throw std::invalid_argument("tau_dq must be >= 0");
  const Operator z = collective_operator(sys.n_spins, Axis::z);
  const Operator forward = expm_hermitian(dq_hamiltonian(sys), tau_dq);
  MqcSetup s{sys.n_spins, forward * z * forward.adjoint(), (z * z).trace().real(), Eigen::VectorXd(sys.dim())};
  for (Eigen::Index b = 0; b < sys.dim(); ++b) s.m(b) = basis_m(b, sys.n_spins);
  return s;
}

Operator window_unitary(const SpinSystem& sys, const MqcWindow& window) {
  const Eigen::Index dim = sys.dim();
  switch (window.kind) {
    case MqcWindow::Kind::none:
      return Operator::Identity(dim, dim);
    case MqcWindow::Kind::free:
      if (!(window.duration >= 0.0)) throw std::invalid_argument("free window duration must be >= 0");
      return expm_hermitian(internal_hamiltonian(sys), window.duration);
    case MqcWindow::Kind::protected_cycles:
      if (window.cycles < 0) throw std::invalid_argument("protected window cycles must be >= 0");
      return matrix_power(cycle_unitary(sys, window.sequence, window.errors, window.tau), window.cycles);
  }
  return Operator::Identity(dim, dim);
}

MqcResult run_mqc(const MqcSetup& setup, const Operator& w, int phi_count) {
  if (phi_count < 2 * setup.n_spins + 2) {
    throw AliasingError("phi_count " + std::to_string(phi_count) + " aliases coherence orders up to " +
                        std::to_string(setup.n_spins) + "; need at least " + std::to_string(2 * setup.n_spins + 2));
  }
  // Readout Tr(Z U_b W rho_phi W^dag U_b^dag) = Tr(B rho_phi) with
  // B = W^dag U_b^dag Z U_b W and U_b^dag Z U_b = rho_tau.
  const Operator b = w.adjoint() * setup.rho_tau * w;
  const Eigen::Index dim = b.rows();

  MqcResult out;
  out.phis.resize(static_cast<std::size_t>(phi_count));
  out.signal.resize(static_cast<std::size_t>(phi_count));
  for (int k = 0; k < phi_count; ++k) {
    const double phi = kTwoPi * k / phi_count;
    cplx acc(0.0, 0.0);
    for (Eigen::Index j = 0; j < dim; ++j) {
      for (Eigen::Index i = 0; i < dim; ++i) {
        // (R rho R^dag)_ij = exp(-i phi (m_i - m_j)) rho_ij
        acc += b(j, i) * setup.rho_tau(i, j) * std::polar(1.0, -phi * (setup.m(i) - setup.m(j)));
      }
    }
    out.phis[static_cast<std::size_t>(k)] = phi;
    out.signal[static_cast<std::size_t>(k)] = acc.real() / setup.z_norm;
  }
  for (int n = -setup.n_spins; n <= setup.n_spins; ++n) {
    cplx x(0.0, 0.0);
    for (int k = 0; k < phi_count; ++k) {
      x += out.signal[static_cast<std::size_t>(k)] * std::polar(1.0, n * out.phis[static_cast<std::size_t>(k)]);
    }
    out.spectrum.orders.push_back(n);
    out.spectrum.intensities.push_back(x.real() / phi_count);
  }
  return out;
}

}  // namespace

MqcResult mqc_experiment(const SpinSystem& sys, double tau_dq, int phi_count, const MqcWindow& window) {
  const MqcSetup setup = prepare_mqc(sys, tau_dq);
  return run_mqc(setup, window_unitary(sys, window), phi_count);
}

DecayCurve mqc_decay(const SpinSystem& sys, double tau_dq, int order, int phi_count,
                     const std::vector<MqcWindow>& windows) {
  const MqcSetup setup = prepare_mqc(sys, tau_dq);
  const Eigen::Index dim = sys.dim();
  const double reference = run_mqc(setup, Operator::Identity(dim, dim), phi_count).spectrum.intensity(order);
  if (!(std::abs(reference) > 0.0)) {
    throw std::invalid_argument("coherence order " + std::to_string(order) + " is not populated");
  }
  DecayCurve curve;
  curve.label = "I_" + std::to_string(order);
  for (const auto& w : windows) {
    curve.times.push_back(w.length());
    curve.values.push_back(run_mqc(setup, window_unitary(sys, w), phi_count).spectrum.intensity(order) / reference);
  }
  curve.metadata = {{"tau_dq", tau_dq}, {"order", order}, {"phi_count", phi_count}};
  return curve;
}

ClusterFit cluster_size(const CoherenceSpectrum& spectrum, int components) {
  if (components != 1 && components != 2) throw FitError("cluster_size supports 1 or 2 components");
  if (spectrum.orders.size() != spectrum.intensities.size()) throw FitError("malformed coherence spectrum");
  double peak = 0.0;
  for (double v : spectrum.intensities) {
    if (v < -1e-12) throw FitError("coherence intensities must be nonnegative");
    peak = std::max(peak, v);
  }
  std::vector<double> n_vals;
  std::vector<double> i_vals;
  std::set<int> nonzero;
  std::set<int> distinct_abs;
  for (std::size_t k = 0; k < spectrum.orders.size(); ++k) {
    if (spectrum.intensities[k] > 1e-12 * peak && peak > 0.0) {
      n_vals.push_back(spectrum.orders[k]);
      i_vals.push_back(spectrum.intensities[k] / peak);
      nonzero.insert(spectrum.orders[k]);
      distinct_abs.insert(std::abs(spectrum.orders[k]));
    }
  }
  if (nonzero.size() < 3 || static_cast<int>(distinct_abs.size()) < 2 * components) {
    throw FitError("coherence spectrum has too few nonzero orders for a Gaussian fit");
  }

  const Eigen::Index m = static_cast<Eigen::Index>(n_vals.size());
  Eigen::VectorXd nsq(m);
  Eigen::VectorXd y(m);
  double w_sum = 0.0;
  double var = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    nsq(k) = n_vals[static_cast<std::size_t>(k)] * n_vals[static_cast<std::size_t>(k)];
    y(k) = i_vals[static_cast<std::size_t>(k)];
    w_sum += y(k);
    var += y(k) * nsq(k);
  }
  const double n0 = std::max(2.0 * var / w_sum, 1e-2);

  auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    r = -y;
    jac.resize(m, p.size());
    for (int c = 0; c < components; ++c) {
      const double a = p(2 * c);
      const double width = p(2 * c + 1);
      for (Eigen::Index k = 0; k < m; ++k) {
        const double e = std::exp(-nsq(k) / width);
        r(k) += a * e;
        jac(k, 2 * c) = e;
        jac(k, 2 * c + 1) = a * e * nsq(k) / (width * width);
      }
    }
  };

  Eigen::VectorXd lower(2 * components);
  Eigen::VectorXd upper(2 * components);
  for (int c = 0; c < components; ++c) {
    lower(2 * c) = 0.0;
    upper(2 * c) = 1e3;
    lower(2 * c + 1) = 1e-3;
    upper(2 * c + 1) = 1e6;
  }
  std::vector<Eigen::VectorXd> starts;
  if (components == 1) {
    for (double s : {0.5, 1.0, 2.0, 4.0}) starts.push_back(Eigen::Vector2d(1.0, n0 * s));
  } else {
    for (double narrow : {0.1, 0.25, 0.5}) {
      for (double wide : {1.5, 3.0, 6.0}) {
        Eigen::VectorXd p(4);
        p << 0.7, n0 * narrow, 0.3, n0 * wide;
        starts.push_back(p);
      }
    }
  }
  LmResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (const auto& p0 : starts) {
    LmResult r = levenberg_marquardt(residuals, p0, lower, upper);
    if (r.cost < best.cost) best = r;
  }

  ClusterFit fit;
  std::vector<std::pair<double, double>> comps;
  for (int c = 0; c < components; ++c) comps.emplace_back(best.params(2 * c + 1), best.params(2 * c) * peak);
  std::sort(comps.begin(), comps.end());
  for (const auto& [width, a] : comps) {
    fit.sizes.push_back(width);
    fit.amplitudes.push_back(a);
  }
  fit.residual_norm = std::sqrt(2.0 * best.cost) * peak;
  return fit;
}

}  // namespace spinweave
