#include "spinweave/sweep.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "spinweave/aht.hpp"
#include "spinweave/parallel.hpp"

namespace spinweave {

namespace {

const std::vector<std::pair<SweepVariable, std::string>> kVariableNames = {
    {SweepVariable::tau, "tau"},
    {SweepVariable::pulse_width, "pulse_width"},
    {SweepVariable::disorder_sigma, "disorder_sigma"},
    {SweepVariable::global_offset, "global_offset"},
    {SweepVariable::rotation_error, "rotation_error"},
    {SweepVariable::phase_transient, "phase_transient"},
};

std::vector<std::string> all_builtins() { return {kBuiltinNames.begin(), kBuiltinNames.end()}; }

std::vector<double> default_grid(SweepVariable v) {
  switch (v) {
    case SweepVariable::tau:
      return logspace(-6.0, -4.5, 13);
    case SweepVariable::pulse_width:
      return logspace(-7.0, std::log10(3e-6), 12);
    case SweepVariable::disorder_sigma:
    case SweepVariable::global_offset:
      return logspace(0.0, std::log10(300.0), 12);
    case SweepVariable::rotation_error:
    case SweepVariable::phase_transient:
      return logspace(-4.0, -1.0, 10);
  }
  return {};
}

struct Point {
  double tau;
  ErrorModel err;
  double disorder_sigma_hz;
  double global_offset_hz;
};

Point point_at(const SweepConfig& cfg, double value) {
  Point p{cfg.tau,
          {cfg.pulse_width, cfg.rotation_error, cfg.phase_transient, cfg.phase_transient},
          cfg.disorder_sigma_hz,
          cfg.global_offset_hz};
  switch (cfg.variable) {
    case SweepVariable::tau:
      p.tau = value;
      break;
    case SweepVariable::pulse_width:
      p.err.pulse_width = value;
      break;
    case SweepVariable::disorder_sigma:
      p.disorder_sigma_hz = value;
      break;
    case SweepVariable::global_offset:
      p.global_offset_hz = value;
      break;
    case SweepVariable::rotation_error:
      p.err.rotation_error = value;
      break;
    case SweepVariable::phase_transient:
      p.err.transient_leading = value;
      p.err.transient_trailing = value;
      break;
  }
  return p;
}

std::vector<double> sample_row(const SweepConfig& cfg, const PulseSequence& seq, std::size_t sample) {
  const std::uint64_t seed = cfg.base_seed + sample;
  SpinSystem sys = SpinSystem::with_couplings(sample_couplings(seed, cfg.n_spins, cfg.coupling_sigma_hz));
  const RealVector pattern = standard_disorder_pattern(seed, cfg.n_spins);
  const int m = seq.cycle_windows();

  std::vector<double> row;
  row.reserve(cfg.grid.size());
  std::optional<CycleBuilder> shared;
  for (double value : cfg.grid) {
    const Point p = point_at(cfg, value);
    Operator u;
    if (cfg.variable == SweepVariable::tau) {
      if (!shared) {
        sys.disorder_hz = p.disorder_sigma_hz * pattern;
        sys.global_offset_hz = p.global_offset_hz;
        shared.emplace(internal_hamiltonian(sys), cfg.n_spins, p.err);
      }
      u = shared->cycle(seq, p.tau);
    } else {
      sys.disorder_hz = p.disorder_sigma_hz * pattern;
      sys.global_offset_hz = p.global_offset_hz;
      CycleBuilder builder(internal_hamiltonian(sys), cfg.n_spins, p.err);
      u = builder.cycle(seq, p.tau);
    }
    const double defect = unitarity_residual(u);
    if (!(defect < 1e-8)) {
      throw NumericalError("cycle propagator for " + seq.name() + " is not unitary (residual " +
                           format_number(defect) + ")");
    }
    row.push_back(infidelity(u, m));
  }
  return row;
}

template <typename T>
void read_field(const nlohmann::json& doc, const char* key, T& target, std::vector<std::string>& problems) {
  if (!doc.contains(key)) return;
  try {
    target = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    problems.push_back(std::string("field '") + key + "' has the wrong type");
  }
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string variable_name(SweepVariable v) {
  for (const auto& [var, name] : kVariableNames) {
    if (var == v) return name;
  }
  return "?";
}

SweepVariable parse_variable(const std::string& name) {
  for (const auto& [var, n] : kVariableNames) {
    if (n == name) return var;
  }
  throw std::invalid_argument("unknown sweep variable '" + name + "'");
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid config: " + join(problems, "; ")), problems_(std::move(problems)) {}

PulseSequence resolve_sequence(const std::string& name_or_text) {
  if (is_builtin(name_or_text)) return builtin(name_or_text);
  return parse_sequence(name_or_text, name_or_text);
}

SweepConfig validate_config(const nlohmann::json& input) {
  std::vector<std::string> problems;
  if (!input.is_object()) throw ConfigError({"config must be a JSON object"});
  const nlohmann::json& doc = input.contains("config") && input.contains("rows") ? input.at("config") : input;
  if (!doc.is_object()) throw ConfigError({"embedded config must be a JSON object"});

  static const std::vector<std::string> known = {
      "preset",     "profile",       "sequences",         "n_spins",          "n_coupling_sets",
      "coupling_sigma_hz", "tau",    "pulse_width",       "disorder_sigma_hz", "global_offset_hz",
      "rotation_error", "phase_transient", "sweep_variable", "grid",           "base_seed",
      "output",     "format"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) problems.push_back("unknown field '" + key + "'");
  }

  SweepConfig cfg;
  read_field(doc, "preset", cfg.preset, problems);
  read_field(doc, "profile", cfg.profile, problems);
  read_field(doc, "sequences", cfg.sequences, problems);
  read_field(doc, "n_spins", cfg.n_spins, problems);
  read_field(doc, "n_coupling_sets", cfg.n_coupling_sets, problems);
  read_field(doc, "coupling_sigma_hz", cfg.coupling_sigma_hz, problems);
  read_field(doc, "tau", cfg.tau, problems);
  read_field(doc, "pulse_width", cfg.pulse_width, problems);
  read_field(doc, "disorder_sigma_hz", cfg.disorder_sigma_hz, problems);
  read_field(doc, "global_offset_hz", cfg.global_offset_hz, problems);
  read_field(doc, "rotation_error", cfg.rotation_error, problems);
  read_field(doc, "phase_transient", cfg.phase_transient, problems);
  read_field(doc, "grid", cfg.grid, problems);
  read_field(doc, "base_seed", cfg.base_seed, problems);
  read_field(doc, "output", cfg.output, problems);
  read_field(doc, "format", cfg.format, problems);
  if (doc.contains("sweep_variable")) {
    try {
      cfg.variable = parse_variable(doc.at("sweep_variable").get<std::string>());
    } catch (const std::exception&) {
      problems.push_back("sweep_variable must be one of tau, pulse_width, disorder_sigma, global_offset, "
                         "rotation_error, phase_transient");
    }
  }

  if (cfg.sequences.empty()) cfg.sequences = all_builtins();
  if (cfg.grid.empty() && !doc.contains("grid")) cfg.grid = default_grid(cfg.variable);

  if (cfg.n_spins < 1 || cfg.n_spins > kMaxSpins) {
    problems.push_back("n_spins must be in [1, " + std::to_string(kMaxSpins) + "], got " +
                       std::to_string(cfg.n_spins));
  }
  if (cfg.n_coupling_sets < 1) problems.push_back("n_coupling_sets must be >= 1");
  if (!(cfg.coupling_sigma_hz >= 0.0) || !std::isfinite(cfg.coupling_sigma_hz)) {
    problems.push_back("coupling_sigma_hz must be finite and >= 0");
  }
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) problems.push_back("tau must be finite and > 0");
  if (!(cfg.pulse_width >= 0.0) || !std::isfinite(cfg.pulse_width)) {
    problems.push_back("pulse_width must be finite and >= 0");
  }
  if (!(cfg.disorder_sigma_hz >= 0.0)) problems.push_back("disorder_sigma_hz must be >= 0");
  for (double v : {cfg.global_offset_hz, cfg.rotation_error, cfg.phase_transient}) {
    if (!std::isfinite(v)) problems.push_back("error model values must be finite");
  }
  if (cfg.format != "csv" && cfg.format != "json") problems.push_back("format must be csv or json");

  if (cfg.grid.empty()) problems.push_back("grid must not be empty");
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    if (!std::isfinite(cfg.grid[i])) {
      problems.push_back("grid value " + std::to_string(i) + " is not finite");
    } else if (i > 0 && !(cfg.grid[i] > cfg.grid[i - 1])) {
      problems.push_back("grid must be strictly increasing (index " + std::to_string(i) + ")");
      break;
    }
  }
  if (!cfg.grid.empty()) {
    const double lo = cfg.grid.front();
    if (cfg.variable == SweepVariable::tau && !(lo > 0.0)) problems.push_back("tau grid must be > 0");
    if ((cfg.variable == SweepVariable::pulse_width || cfg.variable == SweepVariable::disorder_sigma) &&
        !(lo >= 0.0)) {
      problems.push_back(variable_name(cfg.variable) + " grid must be >= 0");
    }
  }
  for (const auto& s : cfg.sequences) {
    try {
      validate_cyclic(resolve_sequence(s));
    } catch (const std::exception& e) {
      problems.push_back("sequence '" + s + "': " + e.what());
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

nlohmann::json to_json(const SweepConfig& cfg) {
  return {{"preset", cfg.preset},
          {"profile", cfg.profile},
          {"sequences", cfg.sequences},
          {"n_spins", cfg.n_spins},
          {"n_coupling_sets", cfg.n_coupling_sets},
          {"coupling_sigma_hz", cfg.coupling_sigma_hz},
          {"tau", cfg.tau},
          {"pulse_width", cfg.pulse_width},
          {"disorder_sigma_hz", cfg.disorder_sigma_hz},
          {"global_offset_hz", cfg.global_offset_hz},
          {"rotation_error", cfg.rotation_error},
          {"phase_transient", cfg.phase_transient},
          {"sweep_variable", variable_name(cfg.variable)},
          {"grid", cfg.grid},
          {"base_seed", cfg.base_seed},
          {"output", cfg.output},
          {"format", cfg.format}};
}

std::uint64_t config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::vector<std::vector<double>> sequence_infidelities(const SweepConfig& cfg, const std::string& sequence,
                                                       int threads) {
  const PulseSequence seq = resolve_sequence(sequence);
  validate_cyclic(seq);
  return parallel_map(static_cast<std::size_t>(cfg.n_coupling_sets), resolve_threads(threads),
                      [&](std::size_t s) { return sample_row(cfg, seq, s); });
}

ResultTable run_sweep(const SweepConfig& cfg, int threads) {
  std::vector<PulseSequence> seqs;
  for (const auto& s : cfg.sequences) seqs.push_back(resolve_sequence(s));
  const std::size_t n_samples = static_cast<std::size_t>(cfg.n_coupling_sets);
  const auto rows = parallel_map(seqs.size() * n_samples, resolve_threads(threads), [&](std::size_t task) {
    return sample_row(cfg, seqs[task / n_samples], task % n_samples);
  });

  ResultTable table;
  table.columns = {"sweep_param", "value", "sequence", "mean_infidelity", "stddev", "n_samples"};
  for (std::size_t q = 0; q < seqs.size(); ++q) {
    for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
      std::vector<double> v(n_samples);
      for (std::size_t s = 0; s < n_samples; ++s) v[s] = rows[q * n_samples + s][g];
      const double mean = pairwise_sum(v) / static_cast<double>(n_samples);
      std::vector<double> dev(n_samples);
      for (std::size_t s = 0; s < n_samples; ++s) dev[s] = (v[s] - mean) * (v[s] - mean);
      const double stddev = n_samples > 1 ? std::sqrt(pairwise_sum(dev) / static_cast<double>(n_samples - 1)) : 0.0;
      table.rows.push_back({variable_name(cfg.variable), format_number(cfg.grid[g]), cfg.sequences[q],
                            format_number(mean), format_number(stddev), std::to_string(n_samples)});
    }
  }
  return table;
}

SweepConfig preset_config(const std::string& name, const std::string& profile) {
  if (profile != "paper" && profile != "ci") throw ConfigError({"profile must be paper or ci"});
  nlohmann::json doc = {{"preset", name}, {"profile", profile}};
  if (profile == "ci") {
    doc["n_spins"] = 4;
    doc["n_coupling_sets"] = 8;
  }
  if (name == "fig2a") {
    doc["sweep_variable"] = "tau";
  } else if (name == "fig2b") {
    doc["sweep_variable"] = "pulse_width";
    doc["tau"] = 4e-6;
  } else if (name == "fig6a" || name == "fig6b") {
    doc["sweep_variable"] = "disorder_sigma";
    doc["tau"] = 4e-6;
    if (name == "fig6b") doc["pulse_width"] = 1e-6;
  } else if (name == "figA2") {
    doc["sweep_variable"] = "global_offset";
    doc["tau"] = 4e-6;
  } else if (name == "fig8a" || name == "fig8b") {
    doc["sweep_variable"] = name == "fig8a" ? "rotation_error" : "phase_transient";
    doc["tau"] = 4e-6;
    doc["pulse_width"] = 1e-6;
  } else {
    throw ConfigError({"unknown sweep preset '" + name + "'"});
  }
  return validate_config(doc);
}

namespace {

PresetRun magnus_terms_preset(const std::string& profile) {
  constexpr int kSpins = 4;
  constexpr double kCouplingHz = 420.0;
  constexpr double kOffsetHz = 30.0;
  constexpr double kTau = 4e-6;
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(kSpins, kSpins, kCouplingHz);
  d.diagonal().setZero();
  SpinSystem dip = SpinSystem::with_couplings(d);
  SpinSystem offset = SpinSystem::uncoupled(kSpins);
  offset.global_offset_hz = kOffsetHz;
  SpinSystem full = dip;
  full.global_offset_hz = kOffsetHz;
  const Operator h_dip = dipolar_hamiltonian(dip);

  PresetRun run;
  run.config = {{"preset", "figA3"}, {"profile", profile}, {"n_spins", kSpins}, {"coupling_hz", kCouplingHz},
                {"global_offset_hz", kOffsetHz}, {"tau", kTau}};
  run.table.columns = {"sequence", "term", "order", "magnitude_dipolar_normalized"};
  for (auto name : kBuiltinNames) {
    const PulseSequence seq = builtin(name);
    const auto s_dip = magnus_series(toggling_segments(h_dip, kSpins, seq, kTau), 4);
    const auto s_off = magnus_series(toggling_segments(offset_hamiltonian(offset), kSpins, seq, kTau), 1);
    const auto s_full = magnus_series(toggling_segments(internal_hamiltonian(full), kSpins, seq, kTau), 1);
    const auto m_dip = term_magnitudes(s_dip, h_dip);
    const auto m_off = term_magnitudes(s_off, h_dip);
    for (int n = 0; n <= 4; ++n) {
      run.table.rows.push_back({std::string(name), "dip", std::to_string(n), format_number(m_dip[n])});
    }
    for (int n = 0; n <= 1; ++n) {
      run.table.rows.push_back({std::string(name), "delta", std::to_string(n), format_number(m_off[n])});
    }
    const Operator cross = s_full.terms[1] - s_dip.terms[1] - s_off.terms[1];
    run.table.rows.push_back(
        {std::string(name), "dip_delta", "1", format_number(frobenius_magnitude(cross) / frobenius_magnitude(h_dip))});
  }
  return run;
}

PresetRun nth_order_preset(const std::string& profile, std::uint64_t seed) {
  constexpr int kSpins = 4;
  constexpr double kNormTau = 0.466;
  const int whh_orders = profile == "paper" ? 70 : 8;
  const SpinSystem sys =
      SpinSystem::with_couplings(sample_couplings(seed, kSpins, kDefaultCouplingSigmaHz));
  const Operator h = internal_hamiltonian(sys);
  const double tau = kNormTau / spectral_norm_hermitian(h);

  PresetRun run;
  run.config = {{"preset", "figA4"}, {"profile", profile}, {"n_spins", kSpins},
                {"coupling_sigma_hz", kDefaultCouplingSigmaHz}, {"norm_tau", kNormTau}, {"tau", tau},
                {"base_seed", seed}};
  run.table.columns = {"sequence", "order", "infidelity"};
  for (auto name : kBuiltinNames) {
    const int orders = name == "WHH" ? whh_orders : 8;
    const auto r = nth_order_fidelity(h, kSpins, builtin(name), tau, orders);
    run.table.rows.push_back({std::string(name), "plain", format_number(r.plain_infidelity)});
    for (int n = 0; n <= orders; ++n) {
      run.table.rows.push_back({std::string(name), std::to_string(n), format_number(r.infidelity[n])});
    }
  }
  return run;
}

}  // namespace

PresetRun run_preset(const std::string& name, const std::string& profile, int threads,
                     std::optional<std::uint64_t> base_seed) {
  if (std::find(kPresetNames.begin(), kPresetNames.end(), name) == kPresetNames.end()) {
    throw ConfigError({"unknown preset '" + name + "'"});
  }
  if (profile != "paper" && profile != "ci") throw ConfigError({"profile must be paper or ci"});
  if (name == "figA3") return magnus_terms_preset(profile);
  if (name == "figA4") return nth_order_preset(profile, base_seed.value_or(1));
  SweepConfig cfg = preset_config(name, profile);
  if (base_seed) cfg.base_seed = *base_seed;
  return {to_json(cfg), run_sweep(cfg, threads)};
}

std::string render_results(const ResultTable& table, const nlohmann::json& config, const std::string& format) {
  const std::string hash = hex64(config_hash(config));
  if (format == "json") {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
      nlohmann::json row = nlohmann::json::object();
      for (std::size_t c = 0; c < table.columns.size(); ++c) row[table.columns[c]] = r[c];
      rows.push_back(std::move(row));
    }
    const nlohmann::json doc = {{"config_hash", hash}, {"config", config}, {"columns", table.columns},
                                {"rows", rows}};
    return doc.dump(2) + "\n";
  }
  if (format != "csv") throw std::invalid_argument("format must be csv or json");
  std::ostringstream out;
  out << "# config_hash: " << hash << "\n";
  out << "# config: " << config.dump() << "\n";
  out << join(table.columns, ",") << "\n";
  for (const auto& r : table.rows) out << join(r, ",") << "\n";
  return out.str();
}

void emit_results(const ResultTable& table, const nlohmann::json& config, const std::string& format,
                  const std::string& path) {
  const std::string text = render_results(table, config, format);
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  file << text;
  if (!file) throw std::runtime_error("failed writing '" + path + "'");
}

namespace {

double slope_of(const std::vector<double>& lx, const std::vector<double>& ly) {
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  return sxy / sxx;
}

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor, std::size_t count) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size() && lx.size() < count; ++i) {
    if (y[i] > floor && x[i] > 0.0) {
      lx.push_back(std::log10(x[i]));
      ly.push_back(std::log10(y[i]));
    }
  }
  return slope_of(lx, ly);
}

double loglog_slope_tail(const std::vector<double>& x, const std::vector<double>& y, double floor,
                         std::size_t count) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = x.size(); i-- > 0 && lx.size() < count;) {
    if (y[i] > floor && x[i] > 0.0) {
      lx.push_back(std::log10(x[i]));
      ly.push_back(std::log10(y[i]));
    }
  }
  return slope_of(lx, ly);
}

std::vector<double> logspace(double lo_exp, double hi_exp, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(std::pow(10.0, n == 1 ? lo_exp : lo_exp + (hi_exp - lo_exp) * i / (n - 1)));
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return out;
}

}  // namespace spinweave
