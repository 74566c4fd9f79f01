#include "spinweave/sequence.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "spinweave/spin_system.hpp"

namespace spinweave {

namespace {

struct BuiltinEntry {
  std::string_view name;
  std::string_view text;
};

// Overbar phases are written with a leading minus.
constexpr BuiltinEntry kBuiltins[] = {
    {"WHH", "tau - -x - tau - y - 2tau - -y - tau - x - tau"},
    {"MREV8",
     "tau - x - tau - y - 2tau - -y - tau - -x - 2tau - -x - tau - y - 2tau - -y - tau - x - tau"},
    {"MREV16",
     "tau - -x - tau - y - 2tau - -y - tau - x - 2tau - x - tau - y - 2tau - -y - tau - -x - 2tau - "
     "-x - tau - -y - 2tau - y - tau - x - 2tau - x - tau - -y - 2tau - y - tau - -x - tau"},
    {"BR24",
     "tau - x - tau - y - 2tau - -y - tau - -x - 2tau - -x - tau - y - 2tau - -y - tau - x - 2tau - "
     "y - tau - x - 2tau - -x - tau - -y - 2tau - -y - tau - x - 2tau - y - tau - x - 2tau - "
     "-x - tau - -y - 2tau - -y - tau - x - 2tau - -x - tau - y - 2tau - -x - tau - y - tau"},
    {"CORY48",
     "tau - x - tau - y - 2tau - -x - tau - y - 2tau - x - tau - y - 2tau - x - tau - y - 2tau - "
     "x - tau - -y - 2tau - x - tau - y - 2tau - "
     "-y - tau - -x - 2tau - y - tau - -x - 2tau - -y - tau - -x - 2tau - -y - tau - -x - 2tau - "
     "-y - tau - x - 2tau - -y - tau - -x - 2tau - "
     "-x - tau - y - 2tau - -x - tau - -y - 2tau - -x - tau - y - 2tau - x - tau - -y - 2tau - "
     "-x - tau - -y - 2tau - x - tau - -y - 2tau - "
     "y - tau - -x - 2tau - y - tau - x - 2tau - y - tau - -x - 2tau - -y - tau - x - 2tau - "
     "y - tau - x - 2tau - -y - tau - x - tau"},
    {"YXX24",
     "-y - tau - x - tau - -x - tau - y - tau - -x - tau - -x - tau - y - tau - -x - tau - "
     "x - tau - -y - tau - x - tau - x - tau - y - tau - -x - tau - x - tau - -y - tau - "
     "x - tau - x - tau - -y - tau - x - tau - -x - tau - y - tau - -x - tau - -x - tau"},
    {"YXX48",
     "y - tau - -x - tau - -x - tau - y - tau - -x - tau - -x - tau - -y - tau - x - tau - "
     "x - tau - y - tau - -x - tau - -x - tau - -y - tau - x - tau - x - tau - -y - tau - "
     "x - tau - x - tau - y - tau - -x - tau - -x - tau - y - tau - -x - tau - -x - tau - "
     "-y - tau - x - tau - x - tau - y - tau - -x - tau - -x - tau - -y - tau - x - tau - "
     "x - tau - -y - tau - x - tau - x - tau - y - tau - -x - tau - -x - tau - -y - tau - "
     "x - tau - x - tau - y - tau - -x - tau - -x - tau - -y - tau - x - tau - x - tau"},
};

constexpr double kCyclicTolerance = 1e-10;

bool is_cardinal(double phase_deg) {
  const double r = std::fmod(phase_deg, 90.0);
  return std::abs(r) < 1e-12;
}

double normalize_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0) r += 360.0;
  return r;
}

std::string phase_token(double phase_deg) {
  const double p = normalize_degrees(phase_deg);
  if (is_cardinal(p)) {
    switch (static_cast<int>(std::lround(p))) {
      case 0: case 360: return "x";
      case 90: return "y";
      case 180: return "-x";
      case 270: return "-y";
    }
  }
  std::ostringstream os;
  os.precision(17);
  os << 'p' << p;
  return os.str();
}

// Strips comment lines and whitespace, remembering each kept character's
// offset in the original text for error reporting.
struct Cleaned {
  std::string text;
  std::vector<std::size_t> origin;
};

Cleaned clean(std::string_view raw) {
  Cleaned out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t end = raw.find('\n', pos);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view line = raw.substr(pos, end - pos);
    const auto first = line.find_first_not_of(" \t\r");
    const bool comment = first != std::string_view::npos && line[first] == '#';
    if (!comment) {
      for (std::size_t i = 0; i < line.size(); ++i) {
        if (!std::isspace(static_cast<unsigned char>(line[i]))) {
          out.text.push_back(line[i]);
          out.origin.push_back(pos + i);
        }
      }
    }
    pos = end + 1;
  }
  return out;
}

}  // namespace

double PulseEvent::phase_rad() const { return phase_deg * std::numbers::pi / 180.0; }

PulseSequence::PulseSequence(std::string name, std::vector<PulseEvent> events)
    : name_(std::move(name)), events_(std::move(events)) {
  for (const auto& e : events_) {
    if (e.is_pulse()) {
      ++n_pulses_;
    } else {
      if (e.windows < 1) throw std::invalid_argument("delay windows must be positive");
      cycle_windows_ += e.windows;
    }
  }
}

PulseSequence parse_sequence(std::string_view text, std::string name) {
  const Cleaned c = clean(text);
  const std::string& s = c.text;
  auto where = [&](std::size_t i) { return i < c.origin.size() ? c.origin[i] : text.size(); };
  if (s.empty()) throw SequenceParseError("empty sequence", 0);

  std::vector<PulseEvent> events;
  std::size_t i = 0;
  while (true) {
    const std::size_t start = i;
    if (i >= s.size()) throw SequenceParseError("expected token", where(i));
    if (std::isdigit(static_cast<unsigned char>(s[i])) || s.compare(i, 3, "tau") == 0) {
      int count = 1;
      if (std::isdigit(static_cast<unsigned char>(s[i]))) {
        auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + s.size(), count);
        if (ec != std::errc{} || count < 1) throw SequenceParseError("invalid delay multiplier", where(start));
        i = static_cast<std::size_t>(ptr - s.data());
      }
      if (s.compare(i, 3, "tau") != 0) throw SequenceParseError("unknown token", where(start));
      i += 3;
      events.push_back(PulseEvent::delay(count));
    } else if (s[i] == 'p') {
      double deg = 0.0;
      auto [ptr, ec] = std::from_chars(s.data() + i + 1, s.data() + s.size(), deg);
      if (ec != std::errc{}) throw SequenceParseError("invalid phase angle", where(start));
      i = static_cast<std::size_t>(ptr - s.data());
      events.push_back(PulseEvent::pulse(normalize_degrees(deg)));
    } else {
      bool negative = false;
      if (s[i] == '-') {
        negative = true;
        ++i;
      }
      if (i < s.size() && (s[i] == 'x' || s[i] == 'y')) {
        const double base = s[i] == 'x' ? 0.0 : 90.0;
        events.push_back(PulseEvent::pulse(base + (negative ? 180.0 : 0.0)));
        ++i;
      } else {
        throw SequenceParseError("unknown token", where(start));
      }
    }
    if (i == s.size()) break;
    if (s[i] != '-') throw SequenceParseError("expected '-' separator", where(i));
    ++i;
  }
  return PulseSequence(std::move(name), std::move(events));
}

std::string render_sequence(const PulseSequence& seq) {
  std::string out;
  for (const auto& e : seq.events()) {
    if (!out.empty()) out += " - ";
    if (e.is_pulse()) {
      out += phase_token(e.phase_deg);
    } else {
      if (e.windows != 1) out += std::to_string(e.windows);
      out += "tau";
    }
  }
  return out;
}

PulseSequence builtin(std::string_view name) {
  for (const auto& b : kBuiltins) {
    if (b.name == name) return parse_sequence(b.text, std::string(name));
  }
  throw std::invalid_argument("unknown sequence '" + std::string(name) + "'");
}

bool is_builtin(std::string_view name) {
  for (const auto& b : kBuiltins)
    if (b.name == name) return true;
  return false;
}

bool is_time_suspension(std::string_view name) {
  return name == "CORY48" || name == "YXX24" || name == "YXX48";
}

Eigen::Matrix2cd ideal_pulse_rotation(double phase_rad) {
  // exp(-i theta n.sigma / 2) = cos(theta/2) I - i sin(theta/2) n.sigma, theta = pi/2
  const double c = std::cos(std::numbers::pi / 4), s = std::sin(std::numbers::pi / 4);
  const double nx = std::cos(phase_rad), ny = std::sin(phase_rad);
  Eigen::Matrix2cd u;
  u << cplx(c, 0.0), cplx(-s * ny, -s * nx),
       cplx(s * ny, -s * nx), cplx(c, 0.0);
  return u;
}

int validate_cyclic(const PulseSequence& seq) {
  Eigen::Matrix2cd total = Eigen::Matrix2cd::Identity();
  for (const auto& e : seq.events()) {
    if (e.is_pulse()) total = ideal_pulse_rotation(e.phase_rad()) * total;
  }
  for (int sign : {1, -1}) {
    const double residual = (total - double(sign) * Eigen::Matrix2cd::Identity()).norm();
    if (residual < kCyclicTolerance) return sign;
  }
  const double residual = std::min((total - Eigen::Matrix2cd::Identity()).norm(),
                                   (total + Eigen::Matrix2cd::Identity()).norm());
  throw NonCyclicError("sequence '" + seq.name() + "' is not cyclic (residual " +
                           std::to_string(residual) + ")",
                       residual);
}

FMatrix frame_matrix(const PulseSequence& seq) {
  validate_cyclic(seq);
  const Eigen::Matrix2cd sx = (Eigen::Matrix2cd() << 0, 0.5, 0.5, 0).finished();
  const Eigen::Matrix2cd sy = (Eigen::Matrix2cd() << 0, cplx(0, -0.5), cplx(0, 0.5), 0).finished();
  const Eigen::Matrix2cd sz = (Eigen::Matrix2cd() << 0.5, 0, 0, -0.5).finished();

  FMatrix f;
  f.leading_pulse = seq.leading_pulse();
  f.entries.setZero(3, seq.cycle_windows());
  Eigen::Matrix2cd rotation = Eigen::Matrix2cd::Identity();
  int column = 0;
  for (const auto& e : seq.events()) {
    if (e.is_pulse()) {
      rotation = ideal_pulse_rotation(e.phase_rad()) * rotation;
      continue;
    }
    const Eigen::Matrix2cd image = rotation.adjoint() * sz * rotation;
    const Eigen::Vector3d v(2.0 * (image * sx).trace().real(), 2.0 * (image * sy).trace().real(),
                            2.0 * (image * sz).trace().real());
    Eigen::Vector3i axis = Eigen::Vector3i::Zero();
    for (int k = 0; k < 3; ++k) {
      if (std::abs(std::abs(v(k)) - 1.0) < 1e-9) axis(k) = v(k) > 0 ? 1 : -1;
      else if (std::abs(v(k)) > 1e-9) {
        throw std::logic_error("toggling frame of '" + seq.name() + "' is not a signed coordinate axis");
      }
    }
    if (axis.cwiseAbs().sum() != 1) {
      throw std::logic_error("toggling frame of '" + seq.name() + "' is not a signed coordinate axis");
    }
    for (int w = 0; w < e.windows; ++w) f.entries.col(column++) = axis;
  }
  return f;
}

RowSums row_sum_check(const FMatrix& f) {
  RowSums r;
  r.sums = f.entries.rowwise().sum();
  return r;
}

Operator offset_average_from_frame(const FMatrix& f, const RealVector& offsets_hz) {
  const int n = static_cast<int>(offsets_hz.size());
  const Eigen::Vector3i sums = row_sum_check(f).sums;
  const Eigen::Index dim = Eigen::Index{1} << n;
  Operator out = Operator::Zero(dim, dim);
  const Axis axes[3] = {Axis::x, Axis::y, Axis::z};
  for (int k = 0; k < 3; ++k) {
    if (sums(k) == 0) continue;
    const double weight = static_cast<double>(sums(k)) / f.columns();
    for (int i = 0; i < n; ++i) out += weight * hz_to_rad(offsets_hz(i)) * spin_operator(n, i, axes[k]);
  }
  return out;
}

std::string render_frame_matrix(const FMatrix& f) {
  std::string out;
  const char labels[3] = {'X', 'Y', 'Z'};
  for (int k = 0; k < 3; ++k) {
    out += labels[k];
    out += ' ';
    for (int c = 0; c < f.columns(); ++c) {
      const int v = f.entries(k, c);
      out += v > 0 ? '+' : (v < 0 ? '-' : '.');
    }
    out += '\n';
  }
  return out;
}

}  // namespace spinweave
