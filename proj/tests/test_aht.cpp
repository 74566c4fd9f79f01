#include <cmath>

#include "doctest.h"
#include "spinweave/aht.hpp"
#include "spinweave/random.hpp"

using namespace spinweave;

namespace {

std::vector<TogglingSegment> random_segments(int n_seg, int dim, std::uint64_t seed) {
  CounterRng rng(seed, 5);
  std::vector<TogglingSegment> out;
  for (int s = 0; s < n_seg; ++s) {
    Operator a(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) a(i, j) = cplx(rng.normal(), rng.normal());
    }
    out.push_back({1e3 * (a + a.adjoint()), 1e-5 * (0.5 + rng.uniform())});
  }
  return out;
}

SpinSystem random_system(int n, std::uint64_t seed) {
  SpinSystem sys = SpinSystem::with_couplings(sample_couplings(seed, n, kDefaultCouplingSigmaHz));
  sys.disorder_hz = sample_disorder(seed, n, 200.0);
  sys.global_offset_hz = 50.0;
  return sys;
}

}  // namespace

TEST_CASE("Dyson terms match the piecewise-constant closed forms") {
  const auto segs = random_segments(5, 4, 1);
  const auto p = dyson_terms(segs, 2);
  Operator p1 = Operator::Zero(4, 4);
  Operator p2 = Operator::Zero(4, 4);
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const Operator ak = segs[k].hamiltonian * segs[k].duration;
    p1 += ak;
    p2 += 0.5 * ak * ak;
    for (std::size_t l = 0; l < k; ++l) p2 += ak * segs[l].hamiltonian * segs[l].duration;
  }
  CHECK((p[0] - Operator::Identity(4, 4)).norm() == 0.0);
  CHECK((p[1] - p1).norm() < 1e-12 * p1.norm());
  CHECK((p[2] - p2).norm() < 1e-9 * p2.norm());
}

TEST_CASE("Dyson series resums to the time-ordered exponential") {
  const auto segs = random_segments(4, 4, 2);
  const auto p = dyson_terms(segs, 30);
  Operator u = Operator::Identity(4, 4);
  for (const auto& s : segs) u = expm_hermitian(s.hamiltonian, s.duration) * u;
  Operator sum = Operator::Zero(4, 4);
  cplx phase(1.0, 0.0);
  for (const auto& pn : p) {
    sum += phase * pn;
    phase *= cplx(0.0, -1.0);
  }
  CHECK((sum - u).norm() < 1e-10);
}

TEST_CASE("Dyson order cap") {
  const auto few = random_segments(3, 2, 3);
  CHECK_NOTHROW(dyson_terms(few, 73));
  CHECK_THROWS(dyson_terms(few, 74));
  const auto many = random_segments(13, 2, 3);
  CHECK_NOTHROW(magnus_series(many, 8));
  CHECK_THROWS(magnus_series(many, 9));
  CHECK_NOTHROW(dyson_terms(many, 21, DysonOptions{20}));
}

TEST_CASE("Burum orders 0 and 1 equal the closed-form averages") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const SpinSystem sys = random_system(3, seed);
    for (const char* name : {"WHH", "MREV8", "YXX24"}) {
      const auto segs = toggling_segments(internal_hamiltonian(sys), 3, builtin(name), 5e-6);
      const MagnusSeries m = magnus_series(segs, 1);
      const Operator h0 = average_h(segs, 0);
      const Operator h1 = average_h(segs, 1);
      CHECK((m.terms[0] - h0).norm() <= 1e-10 * std::max(1.0, h0.norm()));
      CHECK((m.terms[1] - h1).norm() <= 1e-10 * std::max(1.0, h1.norm()));
    }
  }
}

TEST_CASE("truncated Magnus series reproduces the cycle propagator") {
  const SpinSystem sys = random_system(3, 7);
  const Operator h = internal_hamiltonian(sys);
  for (auto name : kBuiltinNames) {
    CAPTURE(name);
    const PulseSequence seq = builtin(name);
    const auto segs = toggling_segments(h, 3, seq, 1e-6);
    const MagnusSeries m = magnus_series(segs, 10, DysonOptions{10});
    const Operator approx = expm_hermitian(m.partial_sum(10), m.cycle_time);
    const Operator exact = cycle_unitary(h, 3, seq, ErrorModel{}, 1e-6);
    CHECK(1.0 - std::abs((approx.adjoint() * exact).trace()) / 8.0 < 1e-13);
  }
}

TEST_CASE("finite-pulse toggling frame keeps the cycle time") {
  const SpinSystem sys = random_system(3, 3);
  const Operator h = internal_hamiltonian(sys);
  const auto segs = toggling_segments(h, 3, builtin("WHH"), 4e-6, ErrorModel{1e-6, 0, 0, 0});
  CHECK(total_duration(segs) == doctest::Approx(24e-6));
  CHECK_THROWS(toggling_segments(h, 3, builtin("WHH"), 4e-6, ErrorModel{0, 0.01, 0, 0}));
  CHECK_THROWS(toggling_segments(h, 3, parse_sequence("tau - x - tau"), 4e-6));
}

TEST_CASE("finite-pulse Magnus series converges to the finite-pulse cycle") {
  const SpinSystem sys = random_system(3, 5);
  const Operator h = internal_hamiltonian(sys);
  const ErrorModel err{0.5e-6, 0, 0, 0};
  const auto segs = toggling_segments(h, 3, builtin("WHH"), 2e-6, err, 400);
  const MagnusSeries m = magnus_series(segs, 6, DysonOptions{8});
  const Operator approx = expm_hermitian(m.partial_sum(6), m.cycle_time);
  const Operator exact = cycle_unitary(h, 3, builtin("WHH"), err, 2e-6);
  // slicing error is second order in the slice length
  CHECK(1.0 - std::abs((approx.adjoint() * exact).trace()) / 8.0 < 1e-9);
}

TEST_CASE("spectroscopic offset scaling factors") {
  SpinSystem sys = SpinSystem::uncoupled(2);
  sys.global_offset_hz = 1000.0;
  const Operator h = offset_hamiltonian(sys);
  const std::pair<const char*, double> expected[] = {{"WHH", 1.0 / std::sqrt(3.0)},
                                                     {"MREV8", std::sqrt(2.0) / 3.0},
                                                     {"MREV16", 1.0 / 3.0},
                                                     {"BR24", 2.0 / (3.0 * std::sqrt(3.0))}};
  for (const auto& [name, factor] : expected) {
    CAPTURE(name);
    const Operator avg = average_h(toggling_segments(h, 2, builtin(name), 5e-6), 0);
    CHECK(avg.norm() / h.norm() == doctest::Approx(factor).epsilon(1e-9));
  }
}

TEST_CASE("term magnitudes and convergence bound") {
  const SpinSystem sys = random_system(3, 1);
  const Operator h = internal_hamiltonian(sys);
  const auto segs = toggling_segments(h, 3, builtin("WHH"), 4e-6);
  const ConvergenceCheck c = convergence_check(segs);
  CHECK(c.value == doctest::Approx(spectral_norm_hermitian(h) * 24e-6));
  CHECK(c.guaranteed);
  const auto mags = term_magnitudes(magnus_series(segs, 2), dipolar_hamiltonian(sys));
  CHECK(mags.size() == 3);
  CHECK_THROWS(term_magnitudes(magnus_series(segs, 1), Operator::Zero(8, 8)));
}

TEST_CASE("nth-order fidelity is finite and improves from order 0 to 2") {
  const SpinSystem sys = SpinSystem::with_couplings(sample_couplings(3, 3, kDefaultCouplingSigmaHz));
  const auto r = nth_order_fidelity(internal_hamiltonian(sys), 3, builtin("WHH"), 2e-6, 4);
  REQUIRE(r.infidelity.size() == 5);
  for (double v : r.infidelity) CHECK(std::isfinite(v));
  CHECK(r.infidelity[2] < r.infidelity[0]);
  CHECK(r.plain_infidelity == doctest::Approx(r.infidelity[0]).epsilon(1e-6));  // H^(0) vanishes without offsets
}
