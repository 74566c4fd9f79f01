#include "spinweave/spin_system.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spinweave/random.hpp"

namespace spinweave {

namespace {

void require_spin_count(int n) {
  if (n < 1 || n > kMaxSpins) {
    throw std::invalid_argument("n_spins must be in [1, " + std::to_string(kMaxSpins) +
                                "], got " + std::to_string(n));
  }
}

// Basis index b: bit (n - 1 - i) set means spin i is down.
inline std::uint32_t spin_bit(int n_spins, int spin) {
  return std::uint32_t{1} << (n_spins - 1 - spin);
}

inline double sz_value(std::uint32_t b, std::uint32_t bit) { return (b & bit) ? -0.5 : 0.5; }

}  // namespace

Axis parse_axis(char c) {
  switch (c) {
    case 'x': case 'X': return Axis::x;
    case 'y': case 'Y': return Axis::y;
    case 'z': case 'Z': return Axis::z;
    default: throw std::invalid_argument(std::string("invalid axis '") + c + "'");
  }
}

char axis_name(Axis a) {
  switch (a) {
    case Axis::x: return 'x';
    case Axis::y: return 'y';
    case Axis::z: return 'z';
  }
  return '?';
}

SpinSystem SpinSystem::uncoupled(int n_spins) {
  require_spin_count(n_spins);
  SpinSystem sys;
  sys.n_spins = n_spins;
  sys.couplings_hz = Eigen::MatrixXd::Zero(n_spins, n_spins);
  sys.chemical_shifts_hz = RealVector::Zero(n_spins);
  sys.disorder_hz = RealVector::Zero(n_spins);
  return sys;
}

SpinSystem SpinSystem::with_couplings(const Eigen::MatrixXd& couplings_hz) {
  SpinSystem sys = uncoupled(static_cast<int>(couplings_hz.rows()));
  sys.couplings_hz = couplings_hz;
  sys.validate();
  return sys;
}

void SpinSystem::validate() const {
  require_spin_count(n_spins);
  if (couplings_hz.rows() != n_spins || couplings_hz.cols() != n_spins) {
    throw std::invalid_argument("coupling matrix must be n_spins x n_spins");
  }
  for (int i = 0; i < n_spins; ++i) {
    if (couplings_hz(i, i) != 0.0) throw std::invalid_argument("coupling matrix diagonal must be zero");
    for (int j = i + 1; j < n_spins; ++j) {
      if (couplings_hz(i, j) != couplings_hz(j, i)) {
        throw std::invalid_argument("coupling matrix must be symmetric");
      }
    }
  }
  if (chemical_shifts_hz.size() != n_spins || disorder_hz.size() != n_spins) {
    throw std::invalid_argument("per-spin arrays must have length n_spins");
  }
  if (!couplings_hz.allFinite() || !chemical_shifts_hz.allFinite() || !disorder_hz.allFinite() ||
      !std::isfinite(global_offset_hz)) {
    throw std::invalid_argument("spin system contains non-finite values");
  }
}

RealVector SpinSystem::total_offsets_hz() const {
  return chemical_shifts_hz + disorder_hz + RealVector::Constant(n_spins, global_offset_hz);
}

Operator spin_operator(int n_spins, int spin, Axis axis) {
  require_spin_count(n_spins);
  if (spin < 0 || spin >= n_spins) throw std::invalid_argument("spin index out of range");
  const Eigen::Index dim = Eigen::Index{1} << n_spins;
  const std::uint32_t bit = spin_bit(n_spins, spin);
  Operator op = Operator::Zero(dim, dim);
  for (std::uint32_t b = 0; b < dim; ++b) {
    const std::uint32_t f = b ^ bit;
    switch (axis) {
      case Axis::z: op(b, b) = sz_value(b, bit); break;
      case Axis::x: op(f, b) = 0.5; break;
      // S_y |up> = (i/2)|down>, S_y |down> = (-i/2)|up>
      case Axis::y: op(f, b) = (b & bit) ? cplx(0.0, -0.5) : cplx(0.0, 0.5); break;
    }
  }
  return op;
}

Operator collective_operator(int n_spins, Axis axis) {
  require_spin_count(n_spins);
  Operator total = spin_operator(n_spins, 0, axis);
  for (int i = 1; i < n_spins; ++i) total += spin_operator(n_spins, i, axis);
  return total;
}

Operator collective_phase_operator(int n_spins, double phase_rad) {
  return std::cos(phase_rad) * collective_operator(n_spins, Axis::x) +
         std::sin(phase_rad) * collective_operator(n_spins, Axis::y);
}

Operator dipolar_hamiltonian(const SpinSystem& sys) {
  sys.validate();
  const int n = sys.n_spins;
  const Eigen::Index dim = sys.dim();
  Operator h = Operator::Zero(dim, dim);
  // 3 SzSz - S.S = 2 SzSz - (S+S- + S-S+)/2
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = hz_to_rad(sys.couplings_hz(i, j));
      if (d == 0.0) continue;
      const std::uint32_t bi = spin_bit(n, i), bj = spin_bit(n, j);
      for (std::uint32_t b = 0; b < dim; ++b) {
        h(b, b) += 2.0 * d * sz_value(b, bi) * sz_value(b, bj);
        if (((b & bi) != 0) != ((b & bj) != 0)) h(b ^ bi ^ bj, b) += -0.5 * d;
      }
    }
  }
  return h;
}

Operator offset_hamiltonian(const SpinSystem& sys) {
  sys.validate();
  const RealVector a = sys.total_offsets_hz();
  const Eigen::Index dim = sys.dim();
  Operator h = Operator::Zero(dim, dim);
  for (std::uint32_t b = 0; b < dim; ++b) {
    double diag = 0.0;
    for (int i = 0; i < sys.n_spins; ++i) diag += hz_to_rad(a(i)) * sz_value(b, spin_bit(sys.n_spins, i));
    h(b, b) = diag;
  }
  return h;
}

Operator internal_hamiltonian(const SpinSystem& sys) {
  return dipolar_hamiltonian(sys) + offset_hamiltonian(sys);
}

Operator dq_hamiltonian(const SpinSystem& sys) {
  sys.validate();
  const int n = sys.n_spins;
  const Eigen::Index dim = sys.dim();
  Operator h = Operator::Zero(dim, dim);
  // SxSx - SySy = (S+S+ + S-S-)/2, so each flip of two aligned spins carries J/4.
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const double coupling = hz_to_rad(sys.couplings_hz(j, k));
      if (coupling == 0.0) continue;
      const std::uint32_t bj = spin_bit(n, j), bk = spin_bit(n, k);
      for (std::uint32_t b = 0; b < dim; ++b) {
        if (((b & bj) != 0) == ((b & bk) != 0)) h(b ^ bj ^ bk, b) += 0.25 * coupling;
      }
    }
  }
  return h;
}

double coupling_from_geometry(double r, double theta, double scale) {
  if (!(r > 0.0)) throw std::invalid_argument("distance must be positive");
  const double c = std::cos(theta);
  return scale * (1.0 - 3.0 * c * c) / (r * r * r);
}

Eigen::MatrixXd sample_couplings(std::uint64_t seed, int n_spins, double sigma_hz) {
  require_spin_count(n_spins);
  if (!(sigma_hz > 0.0)) throw std::invalid_argument("coupling sigma must be positive");
  CounterRng rng(seed, static_cast<std::uint64_t>(RngStream::couplings));
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_spins, n_spins);
  for (int i = 0; i < n_spins; ++i) {
    for (int j = i + 1; j < n_spins; ++j) {
      d(i, j) = d(j, i) = sigma_hz * rng.normal();
    }
  }
  return d;
}

RealVector standard_disorder_pattern(std::uint64_t seed, int n_spins) {
  require_spin_count(n_spins);
  CounterRng rng(seed, static_cast<std::uint64_t>(RngStream::disorder));
  RealVector z(n_spins);
  for (int i = 0; i < n_spins; ++i) z(i) = rng.normal();
  return z;
}

RealVector sample_disorder(std::uint64_t seed, int n_spins, double sigma_h_hz) {
  if (sigma_h_hz < 0.0) throw std::invalid_argument("disorder sigma must be >= 0");
  if (sigma_h_hz == 0.0) {
    require_spin_count(n_spins);
    return RealVector::Zero(n_spins);
  }
  return sigma_h_hz * standard_disorder_pattern(seed, n_spins);
}

nlohmann::json to_json(const SpinSystem& sys) {
  sys.validate();
  nlohmann::json upper = nlohmann::json::array();
  for (int i = 0; i < sys.n_spins; ++i)
    for (int j = i + 1; j < sys.n_spins; ++j) upper.push_back(sys.couplings_hz(i, j));
  auto vec = [](const RealVector& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  return {{"n_spins", sys.n_spins},
          {"couplings_hz", upper},
          {"chemical_shifts_hz", vec(sys.chemical_shifts_hz)},
          {"disorder_hz", vec(sys.disorder_hz)},
          {"global_offset_hz", sys.global_offset_hz}};
}

SpinSystem spin_system_from_json(const nlohmann::json& doc) {
  const int n = doc.at("n_spins").get<int>();
  SpinSystem sys = SpinSystem::uncoupled(n);
  if (doc.contains("couplings_hz")) {
    const auto& upper = doc.at("couplings_hz");
    const std::size_t expected = static_cast<std::size_t>(n) * (n - 1) / 2;
    if (upper.size() != expected) {
      throw std::invalid_argument("couplings_hz must list the " + std::to_string(expected) +
                                  " upper-triangle entries row-major");
    }
    std::size_t k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) sys.couplings_hz(i, j) = sys.couplings_hz(j, i) = upper[k++].get<double>();
  }
  auto read_vec = [&](const char* key, RealVector& out) {
    if (!doc.contains(key)) return;
    const auto& a = doc.at(key);
    if (a.size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument(std::string(key) + " must have n_spins entries");
    }
    for (int i = 0; i < n; ++i) out(i) = a[i].get<double>();
  };
  read_vec("chemical_shifts_hz", sys.chemical_shifts_hz);
  read_vec("disorder_hz", sys.disorder_hz);
  sys.global_offset_hz = doc.value("global_offset_hz", 0.0);
  sys.validate();
  return sys;
}

}  // namespace spinweave
