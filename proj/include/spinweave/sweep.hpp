#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spinweave/control.hpp"

namespace spinweave {

enum class SweepVariable { tau, pulse_width, disorder_sigma, global_offset, rotation_error, phase_transient };

std::string variable_name(SweepVariable v);
SweepVariable parse_variable(const std::string& name);

/// Ensemble fidelity sweep. Times in seconds, frequencies in Hz.
struct SweepConfig {
  std::string preset;  ///< informational
  std::string profile;
  std::vector<std::string> sequences;
  int n_spins = 8;
  int n_coupling_sets = 16;
  double coupling_sigma_hz = kDefaultCouplingSigmaHz;
  // Fixed values of every parameter; the swept one is overridden by the grid.
  double tau = 4e-6;
  double pulse_width = 0.0;
  double disorder_sigma_hz = 0.0;
  double global_offset_hz = 0.0;
  double rotation_error = 0.0;
  double phase_transient = 0.0;
  SweepVariable variable = SweepVariable::tau;
  std::vector<double> grid;
  std::uint64_t base_seed = 1;
  std::string output;          ///< empty: stdout
  std::string format = "csv";  ///< csv | json
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Defaults, type and range checks. All problems are collected into one
/// ConfigError. A result document ({"config": ..., "rows": ...}) is accepted
/// and its embedded config is loaded.
SweepConfig validate_config(const nlohmann::json& doc);
nlohmann::json to_json(const SweepConfig& cfg);

/// FNV-1a 64 of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& config);
std::string hex64(std::uint64_t v);

/// A propagator failed a unitarity check.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolves a built-in name or parses sequence text.
PulseSequence resolve_sequence(const std::string& name_or_text);

/// Infidelity 1 - |Tr(U^{1/M})| / dim per ensemble member and grid value,
/// indexed [sample][grid].
std::vector<std::vector<double>> sequence_infidelities(const SweepConfig& cfg, const std::string& sequence,
                                                       int threads = 0);

/// Uniform text table; every numeric cell is formatted once on insertion.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::string format_number(double v);

/// Columns: sweep_param, value, sequence, mean_infidelity, stddev, n_samples.
ResultTable run_sweep(const SweepConfig& cfg, int threads = 0);

struct PresetRun {
  nlohmann::json config;
  ResultTable table;
};

inline const std::vector<std::string> kPresetNames = {"fig2a", "fig2b", "fig6a", "fig6b", "figA2",
                                                      "fig8a", "fig8b", "figA3", "figA4"};

/// Config for sweep-type presets (all but figA3 and figA4).
SweepConfig preset_config(const std::string& name, const std::string& profile);
PresetRun run_preset(const std::string& name, const std::string& profile, int threads = 0,
                     std::optional<std::uint64_t> base_seed = std::nullopt);

/// Writes csv (comment header with config hash and config) or json. An empty
/// path writes to stdout.
void emit_results(const ResultTable& table, const nlohmann::json& config, const std::string& format,
                  const std::string& path);
std::string render_results(const ResultTable& table, const nlohmann::json& config, const std::string& format);

/// Least-squares slope of log10 y vs log10 x over the first `count` points with
/// y above `floor`. Returns NaN when fewer than two points qualify.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double floor = 1e-13,
                    std::size_t count = 4);
/// Slope over the last `count` points with y above `floor`.
double loglog_slope_tail(const std::vector<double>& x, const std::vector<double>& y, double floor = 1e-13,
                         std::size_t count = 4);

std::vector<double> logspace(double lo_exp, double hi_exp, int n);
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace spinweave
