#include <cmath>

#include "doctest.h"
#include "spinweave/experiments.hpp"
#include "spinweave/random.hpp"

using namespace spinweave;

namespace {

DecayCurve synthetic(const FitResult& truth, int n, double t_max) {
  DecayCurve c;
  for (int k = 0; k < n; ++k) {
    const double t = t_max * k / (n - 1);
    c.times.push_back(t);
    c.values.push_back(truth.evaluate(t));
  }
  return c;
}

DecayCurve constant_curve(std::vector<double> values) {
  DecayCurve c;
  for (std::size_t k = 0; k < values.size(); ++k) c.times.push_back(1e-3 * static_cast<double>(k));
  c.values = std::move(values);
  return c;
}

}  // namespace

TEST_CASE("autocorrelation is flat without interactions") {
  const SpinSystem sys = SpinSystem::uncoupled(3);
  for (Axis a : {Axis::x, Axis::y, Axis::z}) {
    const DecayCurve c = autocorrelation(sys, builtin("MREV8"), ErrorModel{}, 4e-6, a, {0, 1, 5, 20});
    for (double v : c.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.times[2] == doctest::Approx(5 * 12 * 4e-6));
  }
}

TEST_CASE("free-evolution Czz is conserved under secular Hamiltonians") {
  SpinSystem sys = SpinSystem::with_couplings(sample_couplings(2, 4, kDefaultCouplingSigmaHz));
  sys.global_offset_hz = 300.0;
  const DecayCurve c = autocorrelation(sys, parse_sequence("tau", "free"), ErrorModel{}, 10e-6, Axis::z, {0, 3, 50});
  for (double v : c.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
  const DecayCurve cx = autocorrelation(sys, parse_sequence("tau", "free"), ErrorModel{}, 10e-6, Axis::x, {0, 50});
  CHECK(cx.values[0] == doctest::Approx(1.0));
  CHECK(std::abs(cx.values[1]) <= 1.0 + 1e-12);
}

TEST_CASE("autocorrelation handles unsorted block lists") {
  const SpinSystem sys = SpinSystem::with_couplings(sample_couplings(3, 3, 2000.0));
  const DecayCurve a = autocorrelation(sys, builtin("WHH"), ErrorModel{}, 5e-6, Axis::x, {8, 0, 3});
  const DecayCurve b = autocorrelation(sys, builtin("WHH"), ErrorModel{}, 5e-6, Axis::x, {0, 3, 8});
  CHECK(a.values[0] == doctest::Approx(b.values[2]).epsilon(1e-10));
  CHECK(a.values[1] == doctest::Approx(b.values[0]));
  CHECK(a.values[2] == doctest::Approx(b.values[1]).epsilon(1e-10));
}

TEST_CASE("geometric mean of autocorrelations") {
  const DecayCurve ones = constant_curve({1, 1, 1});
  const DecayCurve low = constant_curve({1, 0.729, 0.5});
  const DecayCurve avg = c_avg(ones, ones, low);
  CHECK(avg.values[0] == doctest::Approx(1.0));
  CHECK(avg.values[1] == doctest::Approx(0.9));
  for (std::size_t k = 0; k < 3; ++k) CHECK(avg.values[k] <= 1.0 + 1e-15);
  CHECK(avg.sign_conflicts.empty());

  const DecayCurve neg = constant_curve({1, -0.5, -0.5});
  const DecayCurve mixed = c_avg(ones, neg, neg);
  CHECK(mixed.values[1] < 0.0);
  CHECK(mixed.sign_conflicts.size() == 2);

  CHECK_THROWS(c_avg(ones, ones, constant_curve({1, 1})));
  DecayCurve shifted = ones;
  shifted.times[1] += 1e-6;
  CHECK_THROWS(c_avg(ones, ones, shifted));
}

TEST_CASE("stretched fit recovers exact synthetic data") {
  FitResult truth;
  truth.c0 = 1.0;
  truth.t2 = 10e-3;
  truth.g = 1.5;
  const FitResult fit = fit_decay(synthetic(truth, 60, 30e-3), DecayModel::stretched, FitBounds::tau_sweep());
  CHECK(fit.c0 == doctest::Approx(1.0).epsilon(0.01));
  CHECK(fit.t2 == doctest::Approx(10e-3).epsilon(0.01));
  CHECK(fit.g == doctest::Approx(1.5).epsilon(0.01));
  CHECK_FALSE(fit.flagged());
}

TEST_CASE("oscillating fit recovers exact synthetic data") {
  FitResult truth;
  truth.model = DecayModel::oscillating_stretched;
  truth.c0 = 0.8;
  truth.c1 = 0.15;
  truth.t2 = 4e-3;
  truth.g = 1.2;
  truth.f = 900.0;
  const FitResult fit =
      fit_decay(synthetic(truth, 150, 16e-3), DecayModel::oscillating_stretched, FitBounds::offset_sweep());
  CHECK(fit.c0 == doctest::Approx(0.8).epsilon(0.01));
  CHECK(fit.c1 == doctest::Approx(0.15).epsilon(0.01));
  CHECK(fit.t2 == doctest::Approx(4e-3).epsilon(0.01));
  CHECK(fit.g == doctest::Approx(1.2).epsilon(0.01));
  CHECK(fit.f == doctest::Approx(900.0).epsilon(0.01));
}

TEST_CASE("degenerate and short curves") {
  const FitResult flat = fit_decay(constant_curve({1, 1, 1, 1, 1, 1, 1, 1}), DecayModel::stretched);
  CHECK(flat.at_bound);
  CHECK(flat.flagged());
  CHECK_THROWS_AS(fit_decay(constant_curve({1, 0.9, 0.8}), DecayModel::stretched), FitError);
  CHECK(FitBounds::tau_sweep().g_min == 0.5);
  CHECK(FitBounds::tau_sweep().g_max == 2.5);
  CHECK(FitBounds::offset_sweep().g_min == 0.0);
  CHECK(FitBounds::offset_sweep().g_max == 3.0);
}

TEST_CASE("oscillation scaling slope") {
  const std::vector<double> offsets = {100, 200, 300, 400};
  std::vector<double> f;
  for (double o : offsets) f.push_back(o / std::sqrt(3.0));
  CHECK(oscillation_scaling(offsets, f).slope == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK_THROWS_AS(oscillation_scaling({100, 200}, {50, 100}), FitError);
  CHECK_THROWS_AS(oscillation_scaling({0, 0, 0}, {0, 0, 0}), FitError);
}

TEST_CASE("coherence spectrum of the thermal deviation") {
  const Operator z = collective_operator(4, Axis::z);
  const CoherenceSpectrum s = coherence_intensities(z / 16.0, Axis::z);
  CHECK(s.orders.front() == -4);
  CHECK(s.orders.back() == 4);
  for (std::size_t k = 0; k < s.orders.size(); ++k) {
    if (s.orders[k] != 0) CHECK(s.intensities[k] == 0.0);
  }
  CHECK(s.intensity(0) > 0.0);
  // Sx is diagonal in the x basis
  const CoherenceSpectrum sx = coherence_intensities(collective_operator(4, Axis::x), Axis::x);
  CHECK(sx.intensity(0) == doctest::Approx(sx.total()));
  const CoherenceSpectrum sy = coherence_intensities(collective_operator(4, Axis::y), Axis::y);
  CHECK(sy.intensity(0) == doctest::Approx(sy.total()));
}

TEST_CASE("double-quantum evolution populates even orders only") {
  for (int n = 2; n <= 6; ++n) {
    CAPTURE(n);
    const SpinSystem sys = SpinSystem::with_couplings(sample_couplings(static_cast<std::uint64_t>(n), n, 2000.0));
    const Operator u = expm_hermitian(dq_hamiltonian(sys), 200e-6);
    const Operator z = collective_operator(n, Axis::z);
    const Operator rho = u * z * u.adjoint();
    const CoherenceSpectrum s = coherence_intensities(rho, Axis::z);
    const double total = (rho.adjoint() * rho).trace().real();
    CHECK(s.total() == doctest::Approx(total).epsilon(1e-12));
    for (std::size_t k = 0; k < s.orders.size(); ++k) {
      if (s.orders[k] % 2 != 0) CHECK(s.intensities[k] < 1e-20 * total);
      CHECK(s.intensities[k] == doctest::Approx(s.intensity(-s.orders[k])).epsilon(1e-10));
    }
  }
}

TEST_CASE("mqc experiment echoes and matches the direct spectrum") {
  const SpinSystem sys = SpinSystem::with_couplings(sample_couplings(4, 4, kDefaultCouplingSigmaHz));
  const double tau = dq_time(3);
  CHECK(tau == doctest::Approx(163.2e-6));
  CHECK(dq_time(6) == doctest::Approx(326.4e-6));
  const MqcResult r = mqc_experiment(sys, tau, default_phi_count(4));
  CHECK(r.signal[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.spectrum.total() == doctest::Approx(1.0).epsilon(1e-12));

  const Operator u = expm_hermitian(dq_hamiltonian(sys), tau);
  const Operator z = collective_operator(4, Axis::z);
  const CoherenceSpectrum direct = coherence_intensities(u * z * u.adjoint(), Axis::z);
  const double z_norm = (z * z).trace().real();
  for (int n = -4; n <= 4; ++n) {
    CHECK(r.spectrum.intensity(n) == doctest::Approx(direct.intensity(n) / z_norm).epsilon(1e-10).scale(1.0));
  }
  CHECK_THROWS_AS(mqc_experiment(sys, tau, 9), AliasingError);
  CHECK(default_phi_count(4) == 16);
  CHECK(default_phi_count(6) == 32);
}

TEST_CASE("mqc windows reduce the echo") {
  const SpinSystem sys = SpinSystem::with_couplings(sample_couplings(5, 4, kDefaultCouplingSigmaHz));
  const auto curve = mqc_decay(sys, dq_time(2), 2, 16,
                               {MqcWindow{}, MqcWindow::free(20e-6), MqcWindow::protected_by(builtin("CORY48"), 1, 2e-6)});
  CHECK(curve.values[0] == doctest::Approx(1.0));
  CHECK(curve.times[2] == doctest::Approx(72 * 2e-6).epsilon(1e-12));
  CHECK(std::isfinite(curve.values[1]));
}

TEST_CASE("cluster size from Gaussian coherence spectra") {
  CoherenceSpectrum g;
  for (int n = -12; n <= 12; n += 2) {
    g.orders.push_back(n);
    g.intensities.push_back(3.0 * std::exp(-double(n * n) / 16.0));
  }
  const ClusterFit one = cluster_size(g, 1);
  CHECK(one.sizes[0] == doctest::Approx(16.0).epsilon(0.02));

  CoherenceSpectrum mix;
  for (int n = -30; n <= 30; ++n) {
    mix.orders.push_back(n);
    mix.intensities.push_back(std::exp(-double(n * n) / 6.0) + 0.2 * std::exp(-double(n * n) / 120.0));
  }
  const ClusterFit two = cluster_size(mix, 2);
  CHECK(two.sizes[0] == doctest::Approx(6.0).epsilon(0.05));
  CHECK(two.sizes[1] == doctest::Approx(120.0).epsilon(0.05));

  CoherenceSpectrum single;
  single.orders = {-2, 0, 2};
  single.intensities = {0, 1, 0};
  CHECK_THROWS_AS(cluster_size(single, 1), FitError);
}
