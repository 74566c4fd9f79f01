#include <cmath>
#include <string>

#include "doctest.h"
#include "spinweave/sequence.hpp"
#include "spinweave/spin_system.hpp"

using namespace spinweave;

TEST_CASE("parser accepts tokens, whitespace and comments") {
  const PulseSequence s = parse_sequence("# echo\n tau - x -\n 2tau - p45 - tau - -y", "demo");
  REQUIRE(s.events().size() == 6);
  CHECK(s.events()[0] == PulseEvent::delay(1));
  CHECK(s.events()[1] == PulseEvent::pulse(0.0));
  CHECK(s.events()[2] == PulseEvent::delay(2));
  CHECK(s.events()[3] == PulseEvent::pulse(45.0));
  CHECK(s.events()[5] == PulseEvent::pulse(270.0));
  CHECK(s.n_pulses() == 3);
  CHECK(s.cycle_windows() == 4);
  CHECK(s.name() == "demo");
}

TEST_CASE("parser reports error offsets") {
  try {
    parse_sequence("tau - q - tau");
    FAIL("expected a parse error");
  } catch (const SequenceParseError& e) {
    CHECK(e.position() == 6);
  }
  CHECK_THROWS_AS(parse_sequence(""), SequenceParseError);
  CHECK_THROWS_AS(parse_sequence("# only a comment\n"), SequenceParseError);
  CHECK_THROWS_AS(parse_sequence("tau - x -"), SequenceParseError);
  CHECK_THROWS_AS(parse_sequence("tau - p - tau"), SequenceParseError);
}

TEST_CASE("render and parse round trip for every built-in") {
  for (auto name : kBuiltinNames) {
    const PulseSequence s = builtin(name);
    const PulseSequence back = parse_sequence(render_sequence(s), std::string(name));
    CHECK(back.events() == s.events());
  }
}

TEST_CASE("built-in pulse and window counts") {
  const std::pair<const char*, int> pulses[] = {{"WHH", 4},   {"MREV8", 8},   {"MREV16", 16}, {"BR24", 24},
                                                {"CORY48", 48}, {"YXX24", 24}, {"YXX48", 48}};
  for (const auto& [name, n] : pulses) {
    CAPTURE(name);
    CHECK(builtin(name).n_pulses() == n);
  }
  CHECK(builtin("WHH").cycle_windows() == 6);
  CHECK(builtin("MREV8").cycle_windows() == 12);
  CHECK(builtin("YXX24").leading_pulse());
  CHECK_FALSE(builtin("WHH").leading_pulse());
  CHECK_THROWS(builtin("NOPE"));
}

TEST_CASE("built-ins are cyclic and a lone pulse is not") {
  for (auto name : kBuiltinNames) {
    const int s = validate_cyclic(builtin(name));
    CHECK(std::abs(s) == 1);
  }
  CHECK_THROWS_AS(validate_cyclic(parse_sequence("tau - x - tau")), NonCyclicError);
  CHECK(validate_cyclic(parse_sequence("tau")) == 1);
  CHECK(validate_cyclic(parse_sequence("tau - x - tau - x - tau - x - tau - x")) == -1);
}

TEST_CASE("ideal pulse rotation is the spin-1/2 pi/2 rotation") {
  const Eigen::Matrix2cd u = ideal_pulse_rotation(0.0);
  CHECK((u.adjoint() * u - Eigen::Matrix2cd::Identity()).norm() < 1e-15);
  // toggling frame of an x pulse: u^dag Sz u = Sy
  Eigen::Matrix2cd sz;
  sz << 0.5, 0, 0, -0.5;
  Eigen::Matrix2cd sy;
  sy << 0, cplx(0, -0.5), cplx(0, 0.5), 0;
  CHECK((u.adjoint() * sz * u - sy).norm() < 1e-15);
}

TEST_CASE("WHH frame matrix dwells two windows on each axis") {
  const FMatrix f = frame_matrix(builtin("WHH"));
  CHECK(f.columns() == 6);
  for (int r = 0; r < 3; ++r) CHECK(f.entries.row(r).cwiseAbs().sum() == 2);
  CHECK(render_frame_matrix(f) == "X ..--..\nY .-..-.\nZ +....+\n");
  CHECK_FALSE(row_sum_check(f).time_suspension_capable());
}

TEST_CASE("time-suspension sequences have zero row sums") {
  for (const char* name : {"CORY48", "YXX24", "YXX48"}) {
    CAPTURE(name);
    CHECK(row_sum_check(frame_matrix(builtin(name))).time_suspension_capable());
    CHECK(is_time_suspension(name));
  }
  for (const char* name : {"WHH", "MREV8", "MREV16", "BR24"}) {
    CAPTURE(name);
    CHECK_FALSE(row_sum_check(frame_matrix(builtin(name))).time_suspension_capable());
  }
}

TEST_CASE("every frame-matrix column is a single signed axis") {
  for (auto name : kBuiltinNames) {
    const FMatrix f = frame_matrix(builtin(name));
    CHECK(f.columns() == builtin(name).cycle_windows());
    for (int c = 0; c < f.columns(); ++c) CHECK(f.entries.col(c).cwiseAbs().sum() == 1);
  }
}

TEST_CASE("frame-matrix offset average for WHH lies along the cube diagonal") {
  const RealVector a = RealVector::Constant(3, 100.0);
  const Operator h = offset_average_from_frame(frame_matrix(builtin("WHH")), a);
  const Operator expected = hz_to_rad(100.0) / 3.0 *
                            (-collective_operator(3, Axis::x) - collective_operator(3, Axis::y) +
                             collective_operator(3, Axis::z));
  CHECK((h - expected).norm() < 1e-9);
}
