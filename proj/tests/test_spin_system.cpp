#include <algorithm>
#include <bit>
#include <cmath>

#include "doctest.h"
#include "spinweave/spin_system.hpp"

using namespace spinweave;

TEST_CASE("two-spin dipolar Hamiltonian spectrum and norm") {
  const double d = 1000.0;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  c(0, 1) = c(1, 0) = d;
  const Operator h = dipolar_hamiltonian(SpinSystem::with_couplings(c));
  Eigen::SelfAdjointEigenSolver<Operator> es(h);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + 4);
  std::sort(ev.begin(), ev.end());
  const double w = hz_to_rad(d);
  CHECK(ev[0] == doctest::Approx(-w));
  CHECK(ev[1] == doctest::Approx(0.0).epsilon(1e-12).scale(w));
  CHECK(ev[2] == doctest::Approx(w / 2));
  CHECK(ev[3] == doctest::Approx(w / 2));
  CHECK(h.norm() == doctest::Approx(w * std::sqrt(1.5)));
}

TEST_CASE("collective operators obey spin commutation") {
  const int n = 3;
  const Operator x = collective_operator(n, Axis::x);
  const Operator y = collective_operator(n, Axis::y);
  const Operator z = collective_operator(n, Axis::z);
  CHECK((x * y - y * x - cplx(0, 1) * z).norm() < 1e-13);
  CHECK((collective_phase_operator(n, 0.0) - x).norm() < 1e-15);
  CHECK((collective_phase_operator(n, std::numbers::pi / 2) - y).norm() < 1e-15);
  CHECK((spin_operator(n, 0, Axis::z) + spin_operator(n, 1, Axis::z) + spin_operator(n, 2, Axis::z) - z).norm() ==
        0.0);
}

TEST_CASE("spin 0 is the leftmost tensor factor") {
  const Operator z0 = spin_operator(2, 0, Axis::z);
  CHECK(z0(0, 0).real() == 0.5);
  CHECK(z0(1, 1).real() == 0.5);   // |up down>
  CHECK(z0(2, 2).real() == -0.5);  // |down up>
}

TEST_CASE("secular Hamiltonians commute with total Sz") {
  SpinSystem sys = SpinSystem::with_couplings(sample_couplings(5, 5, 1000.0));
  sys.chemical_shifts_hz = RealVector::LinSpaced(5, -50, 50);
  sys.global_offset_hz = 17.0;
  const Operator h = internal_hamiltonian(sys);
  const Operator z = collective_operator(5, Axis::z);
  CHECK((h * z - z * h).norm() < 1e-9 * h.norm());
  CHECK(hermiticity_residual(h) < 1e-15);
}

TEST_CASE("double-quantum Hamiltonian changes magnetization by two") {
  const int n = 4;
  const Operator h = dq_hamiltonian(SpinSystem::with_couplings(sample_couplings(3, n, 1000.0)));
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      if (std::abs(h(i, j)) == 0.0) continue;
      const int dm = std::popcount(static_cast<unsigned>(i)) - std::popcount(static_cast<unsigned>(j));
      CHECK(std::abs(dm) == 2);
    }
  }
  CHECK(hermiticity_residual(h) < 1e-15);
}

TEST_CASE("double-quantum pair term equals quarter J (S+S+ + S-S-)") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  c(0, 1) = c(1, 0) = 1.0 / kTwoPi;  // J = 1 rad/s
  const Operator h = dq_hamiltonian(SpinSystem::with_couplings(c));
  CHECK(h(0, 3).real() == doctest::Approx(0.25));
  CHECK(h(3, 0).real() == doctest::Approx(0.25));
  CHECK(std::abs(h(1, 2)) < 1e-15);
}

TEST_CASE("offset Hamiltonian sums shift, disorder and global offset") {
  SpinSystem sys = SpinSystem::uncoupled(2);
  sys.chemical_shifts_hz << 10, 20;
  sys.disorder_hz << 1, 2;
  sys.global_offset_hz = 100;
  const RealVector a = sys.total_offsets_hz();
  CHECK(a(0) == 111);
  CHECK(a(1) == 122);
  const Operator h = offset_hamiltonian(sys);
  CHECK(h(0, 0).real() == doctest::Approx(hz_to_rad(0.5 * 111 + 0.5 * 122)));
}

TEST_CASE("coupling from geometry") {
  CHECK(coupling_from_geometry(1.0, 0.0, 3.0) == doctest::Approx(-6.0));
  CHECK(std::abs(coupling_from_geometry(2.0, std::acos(1.0 / std::sqrt(3.0)), 5.0)) < 1e-14);
  CHECK(coupling_from_geometry(2.0, std::numbers::pi / 2, 8.0) == doctest::Approx(1.0));
  CHECK_THROWS(coupling_from_geometry(0.0, 0.3, 1.0));
}

TEST_CASE("sampled couplings have the requested width") {
  const double sigma = kDefaultCouplingSigmaHz;
  double sum = 0.0;
  double sum_sq = 0.0;
  int count = 0;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    const Eigen::MatrixXd c = sample_couplings(seed, 10, sigma);
    CHECK((c - c.transpose()).norm() == 0.0);
    CHECK(c.diagonal().isZero());
    for (int i = 0; i < 10; ++i) {
      for (int j = i + 1; j < 10; ++j) {
        sum += c(i, j);
        sum_sq += c(i, j) * c(i, j);
        ++count;
      }
    }
  }
  const double mean = sum / count;
  const double sd = std::sqrt(sum_sq / count - mean * mean);
  CHECK(std::abs(sd / sigma - 1.0) < 0.02);
  CHECK(std::abs(mean) < 0.05 * sigma);
}

TEST_CASE("disorder sampling scales a shared pattern") {
  const RealVector p = standard_disorder_pattern(4, 6);
  CHECK((sample_disorder(4, 6, 30.0) - 30.0 * p).norm() < 1e-12);
  CHECK(sample_disorder(4, 6, 0.0).isZero());
  CHECK((sample_couplings(4, 6, 1.0)).norm() > 0.0);
}

TEST_CASE("spin system validation") {
  CHECK_THROWS(SpinSystem::uncoupled(11));
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 3);
  c(0, 1) = 1.0;
  SpinSystem bad = SpinSystem::uncoupled(3);
  bad.couplings_hz = c;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("spin system json round trip") {
  SpinSystem sys = SpinSystem::with_couplings(sample_couplings(8, 4, 500.0));
  sys.chemical_shifts_hz << 1, 2, 3, 4;
  sys.disorder_hz = sample_disorder(8, 4, 12.0);
  sys.global_offset_hz = -7.5;
  const SpinSystem back = spin_system_from_json(to_json(sys));
  CHECK(back.n_spins == 4);
  CHECK((back.couplings_hz - sys.couplings_hz).norm() == 0.0);
  CHECK((back.disorder_hz - sys.disorder_hz).norm() == 0.0);
  CHECK((back.chemical_shifts_hz - sys.chemical_shifts_hz).norm() == 0.0);
  CHECK(back.global_offset_hz == -7.5);
}
