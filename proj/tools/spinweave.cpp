// spinweave command-line driver.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure,
// 1 anything else.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spinweave/aht.hpp"
#include "spinweave/control.hpp"
#include "spinweave/experiments.hpp"
#include "spinweave/sequence.hpp"
#include "spinweave/spin_system.hpp"
#include "spinweave/sweep.hpp"

using namespace spinweave;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read '" + path + "'"});
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A built-in name, a path to a sequence file, or inline sequence text.
PulseSequence load_sequence(const std::string& spec) {
  if (is_builtin(spec)) return builtin(spec);
  std::ifstream in(spec);
  if (in) {
    std::ostringstream s;
    s << in.rdbuf();
    return parse_sequence(s.str(), spec);
  }
  return parse_sequence(spec, "custom");
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
}

struct SystemOptions {
  int n_spins = 4;
  double sigma_hz = kDefaultCouplingSigmaHz;
  double coupling_hz = 0.0;  // uniform couplings when > 0
  double offset_hz = 0.0;
  double disorder_hz = 0.0;
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    app->add_option("--n-spins", n_spins, "Number of spins (1-10)")->capture_default_str();
    app->add_option("--sigma-hz", sigma_hz, "Gaussian coupling width (Hz)")->capture_default_str();
    app->add_option("--coupling-hz", coupling_hz, "Uniform coupling for every pair (Hz); overrides --sigma-hz");
    app->add_option("--offset-hz", offset_hz, "Global resonance offset (Hz)")->capture_default_str();
    app->add_option("--disorder-hz", disorder_hz, "Local disorder width sigma_h (Hz)")->capture_default_str();
    app->add_option("--seed", seed, "Base seed")->capture_default_str();
  }

  SpinSystem build() const {
    if (n_spins < 1 || n_spins > kMaxSpins) throw ConfigError({"n_spins must be in [1, 10]"});
    Eigen::MatrixXd d;
    if (coupling_hz > 0.0) {
      d = Eigen::MatrixXd::Constant(n_spins, n_spins, coupling_hz);
      d.diagonal().setZero();
    } else {
      d = sample_couplings(seed, n_spins, sigma_hz);
    }
    SpinSystem sys = SpinSystem::with_couplings(d);
    sys.global_offset_hz = offset_hz;
    sys.disorder_hz = sample_disorder(seed, n_spins, disorder_hz);
    sys.validate();
    return sys;
  }
};

struct ErrorOptions {
  double pulse_width = 0.0;
  double rotation_error = 0.0;
  double transient = 0.0;

  void add(CLI::App* app) {
    app->add_option("--pulse-width", pulse_width, "Pulse width t_w (s)")->capture_default_str();
    app->add_option("--rotation-error", rotation_error, "Fractional rotation error")->capture_default_str();
    app->add_option("--transient", transient, "Symmetric phase transient strength")->capture_default_str();
  }
  ErrorModel build() const { return {pulse_width, rotation_error, transient, transient}; }
};

int cmd_sweep(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& overrides,
              int threads) {
  json doc = json::object();
  if (!config_path.empty()) {
    try {
      doc = json::parse(read_file(config_path));
    } catch (const json::parse_error& e) {
      throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
    }
  }
  for (const auto& [key, value] : overrides) {
    if (value.empty()) continue;
    try {
      doc[key] = json::parse(value);
    } catch (const json::parse_error&) {
      doc[key] = value;
    }
  }
  const SweepConfig cfg = validate_config(doc);
  emit_results(run_sweep(cfg, threads), to_json(cfg), cfg.format, cfg.output);
  return 0;
}

int cmd_lint(const std::string& file) {
  const std::string text = read_file(file);
  const PulseSequence seq = parse_sequence(text, file);
  const int sign = validate_cyclic(seq);
  const FMatrix f = frame_matrix(seq);
  const RowSums sums = row_sum_check(f);
  std::cout << "sequence: " << render_sequence(seq) << "\n";
  std::cout << "pulses: " << seq.n_pulses() << "  windows: " << seq.cycle_windows() << "  cyclic: "
            << (sign > 0 ? "+I" : "-I") << "\n";
  std::cout << render_frame_matrix(f);
  std::cout << "row sums: X=" << sums.sums(0) << " Y=" << sums.sums(1) << " Z=" << sums.sums(2) << "\n";
  std::cout << "time suspension capable: " << (sums.time_suspension_capable() ? "yes" : "no") << "\n";
  return 0;
}

int cmd_aht_terms(const std::string& seq_spec, int orders, double tau, const SystemOptions& sys_opts) {
  const PulseSequence seq = load_sequence(seq_spec);
  const SpinSystem sys = sys_opts.build();
  const Operator h_dip = dipolar_hamiltonian(sys);
  const auto segments = toggling_segments(internal_hamiltonian(sys), sys.n_spins, seq, tau);
  const MagnusSeries series = magnus_series(segments, orders);
  const auto magnitudes = term_magnitudes(series, h_dip);
  const ConvergenceCheck conv = convergence_check(segments);
  for (int n = 0; n <= orders; ++n) {
    const double norm = frobenius_magnitude(series.terms[n]);
    const double trace = std::abs(series.terms[n].trace());
    json line = {{"order", n},
                 {"magnitude_dipolar_normalized", magnitudes[n]},
                 {"trace_residual", norm > 0.0 ? trace / norm : trace},
                 {"hermiticity_residual", series.hermiticity_residuals[n]}};
    std::cout << line.dump() << "\n";
  }
  json summary = {{"sequence", seq.name()},
                  {"tau", tau},
                  {"convergence_value", conv.value},
                  {"convergence_guaranteed", conv.guaranteed}};
  std::cerr << summary.dump() << "\n";
  return 0;
}

int cmd_autocorr(const std::string& seq_spec, double tau, const std::string& blocks_text, const std::string& model,
                 const SystemOptions& sys_opts, const ErrorOptions& err_opts, const std::string& output,
                 const std::string& fit_output) {
  const PulseSequence seq = load_sequence(seq_spec);
  const SpinSystem sys = sys_opts.build();
  const ErrorModel err = err_opts.build();
  const std::vector<int> blocks = parse_int_list(blocks_text);
  if (blocks.empty()) throw ConfigError({"--blocks must list at least one block count"});

  const DecayCurve cx = autocorrelation(sys, seq, err, tau, Axis::x, blocks);
  const DecayCurve cy = autocorrelation(sys, seq, err, tau, Axis::y, blocks);
  const DecayCurve cz = autocorrelation(sys, seq, err, tau, Axis::z, blocks);
  const DecayCurve avg = c_avg(cx, cy, cz);

  std::ostringstream csv;
  csv << "block,time,C_xx,C_yy,C_zz,C_avg,sign_conflict\n";
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const bool conflict =
        std::find(avg.sign_conflicts.begin(), avg.sign_conflicts.end(), k) != avg.sign_conflicts.end();
    csv << blocks[k] << "," << format_number(cx.times[k]) << "," << format_number(cx.values[k]) << ","
        << format_number(cy.values[k]) << "," << format_number(cz.values[k]) << "," << format_number(avg.values[k])
        << "," << (conflict ? 1 : 0) << "\n";
  }
  write_text(csv.str(), output);

  if (!fit_output.empty()) {
    DecayModel m;
    FitBounds bounds = FitBounds::tau_sweep();
    if (model == "auto") {
      m = is_time_suspension(seq.name()) ? DecayModel::stretched : DecayModel::oscillating_stretched;
    } else {
      m = parse_model(model);
    }
    if (m == DecayModel::oscillating_stretched) bounds = FitBounds::offset_sweep();
    const FitResult fit = fit_decay(avg, m, bounds);
    write_text(to_json(fit).dump(2) + "\n", fit_output);
  }
  return 0;
}

int cmd_mqc(int m_cycles, int phi_count, const std::string& window_kind, double window_time,
            const std::string& seq_spec, int cycles, double tau, const SystemOptions& sys_opts,
            const std::string& output, const std::string& signal_output) {
  const SpinSystem sys = sys_opts.build();
  if (phi_count <= 0) phi_count = default_phi_count(sys.n_spins);
  MqcWindow window;
  if (window_kind == "free") {
    window = MqcWindow::free(window_time);
  } else if (window_kind == "protected") {
    window = MqcWindow::protected_by(load_sequence(seq_spec), cycles, tau);
  } else if (window_kind != "none") {
    throw ConfigError({"--window must be none, free or protected"});
  }
  const MqcResult r = mqc_experiment(sys, dq_time(m_cycles), phi_count, window);

  std::ostringstream spec;
  spec << "order,intensity\n";
  for (std::size_t k = 0; k < r.spectrum.orders.size(); ++k) {
    spec << r.spectrum.orders[k] << "," << format_number(r.spectrum.intensities[k]) << "\n";
  }
  write_text(spec.str(), output);
  if (!signal_output.empty()) {
    std::ostringstream sig;
    sig << "phi,signal\n";
    for (std::size_t k = 0; k < r.phis.size(); ++k) {
      sig << format_number(r.phis[k]) << "," << format_number(r.signal[k]) << "\n";
    }
    write_text(sig.str(), signal_output);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spinweave: dipolar decoupling sequence simulator"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: SPINWEAVE_THREADS or all cores)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Ensemble fidelity sweep from a JSON config");
  std::string config_path;
  std::string o_spins, o_sets, o_seed, o_variable, o_grid, o_output, o_format, o_sequences;
  sweep->add_option("--config", config_path, "JSON config file (empty: defaults)");
  sweep->add_option("--n-spins", o_spins, "Override n_spins");
  sweep->add_option("--sets", o_sets, "Override n_coupling_sets");
  sweep->add_option("--seed", o_seed, "Override base_seed");
  sweep->add_option("--variable", o_variable, "Override sweep_variable");
  sweep->add_option("--grid", o_grid, "Override grid, comma separated");
  sweep->add_option("--output", o_output, "Output path (default stdout)");
  sweep->add_option("--format", o_format, "csv or json");
  sweep->add_option("--sequences", o_sequences, "Comma-separated built-in names");
  sweep->footer(
      "CSV columns: sweep_param,value,sequence,mean_infidelity,stddev,n_samples.\n"
      "Infidelity is 1 - |Tr(U_cycle^{1/M})| / 2^N averaged over coupling sets.");

  // seq lint
  auto* seq_cmd = app.add_subcommand("seq", "Pulse sequence tools");
  seq_cmd->require_subcommand(1);
  auto* lint = seq_cmd->add_subcommand("lint", "Parse, check cyclicity and print the frame matrix");
  std::string lint_file;
  lint->add_option("file", lint_file, "Sequence text file")->required();

  // aht terms
  auto* aht_cmd = app.add_subcommand("aht", "Average Hamiltonian tools");
  aht_cmd->require_subcommand(1);
  auto* terms = aht_cmd->add_subcommand("terms", "Magnus terms via Dyson/Burum, one JSON line per order");
  std::string terms_seq = "WHH";
  int terms_orders = 4;
  double terms_tau = 4e-6;
  SystemOptions terms_sys;
  terms_sys.coupling_hz = 420.0;
  terms_sys.offset_hz = 30.0;
  terms->add_option("--seq", terms_seq, "Built-in name, file or sequence text")->capture_default_str();
  terms->add_option("--orders", terms_orders, "Highest order")->capture_default_str();
  terms->add_option("--tau", terms_tau, "Delay unit tau (s)")->capture_default_str();
  terms_sys.add(terms);
  terms->footer("Fields: order, magnitude_dipolar_normalized, trace_residual, hermiticity_residual.");

  // exp autocorr / exp mqc
  auto* exp_cmd = app.add_subcommand("exp", "Simulated experiments");
  exp_cmd->require_subcommand(1);
  auto* autocorr = exp_cmd->add_subcommand("autocorr", "Autocorrelation decay under repeated cycles");
  std::string ac_seq = "CORY48", ac_blocks = "0,1,2,4,8,16,32,64", ac_model = "auto", ac_output, ac_fit;
  double ac_tau = 4e-6;
  SystemOptions ac_sys;
  ErrorOptions ac_err;
  autocorr->add_option("--seq", ac_seq, "Built-in name, file or sequence text")->capture_default_str();
  autocorr->add_option("--tau", ac_tau, "Delay unit tau (s)")->capture_default_str();
  autocorr->add_option("--blocks", ac_blocks, "Block counts N, comma separated")->capture_default_str();
  autocorr->add_option("--model", ac_model, "auto, stretched or oscillating_stretched")->capture_default_str();
  autocorr->add_option("--output", ac_output, "CSV path (default stdout)");
  autocorr->add_option("--fit-json", ac_fit, "Write the C_avg fit as JSON");
  ac_sys.add(autocorr);
  ac_err.add(autocorr);
  autocorr->footer("CSV columns: block,time,C_xx,C_yy,C_zz,C_avg,sign_conflict.");

  auto* mqc = exp_cmd->add_subcommand("mqc", "Multiple-quantum coherence experiment");
  int mqc_m = 3, mqc_phi = 0, mqc_cycles = 1;
  std::string mqc_window = "none", mqc_seq = "CORY48", mqc_output, mqc_signal;
  double mqc_time = 0.0, mqc_tau = 4e-6;
  SystemOptions mqc_sys;
  mqc->add_option("--m-cycles", mqc_m, "DQ cycles m (54.4 us each)")->capture_default_str();
  mqc->add_option("--phi-count", mqc_phi, "Phase steps (default: power of two >= 4 n_spins)");
  mqc->add_option("--window", mqc_window, "none, free or protected")->capture_default_str();
  mqc->add_option("--window-time", mqc_time, "Free window duration (s)");
  mqc->add_option("--seq", mqc_seq, "Protecting sequence")->capture_default_str();
  mqc->add_option("--cycles", mqc_cycles, "Protecting cycles")->capture_default_str();
  mqc->add_option("--tau", mqc_tau, "Protecting tau (s)")->capture_default_str();
  mqc->add_option("--output", mqc_output, "Spectrum CSV path (default stdout)");
  mqc->add_option("--signal-output", mqc_signal, "Signal CSV path");
  mqc_sys.add(mqc);
  mqc->footer("Spectrum columns: order,intensity (normalized by Tr(Z^2)). Signal columns: phi,signal.");

  // preset
  auto* preset = app.add_subcommand("preset", "Run a figure preset");
  std::string preset_name, profile = "ci", preset_output, preset_format = "csv";
  std::uint64_t preset_seed = 0;
  preset->add_option("name", preset_name, "fig2a fig2b fig6a fig6b figA2 fig8a fig8b figA3 figA4")->required();
  preset->add_option("--profile", profile, "paper or ci")->capture_default_str();
  preset->add_option("--output", preset_output, "Output path (default stdout)");
  preset->add_option("--format", preset_format, "csv or json")->capture_default_str();
  auto* seed_opt = preset->add_option("--seed", preset_seed, "Override base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sweep) {
      return cmd_sweep(config_path,
                       {{"n_spins", o_spins},
                        {"n_coupling_sets", o_sets},
                        {"base_seed", o_seed},
                        {"sweep_variable", o_variable.empty() ? "" : json(o_variable).dump()},
                        {"grid", o_grid.empty() ? "" : json(parse_double_list(o_grid)).dump()},
                        {"output", o_output.empty() ? "" : json(o_output).dump()},
                        {"format", o_format.empty() ? "" : json(o_format).dump()},
                        {"sequences", o_sequences.empty() ? "" : [&] {
                           std::vector<std::string> names;
                           std::stringstream ss(o_sequences);
                           std::string item;
                           while (std::getline(ss, item, ',')) names.push_back(item);
                           return json(names).dump();
                         }()}},
                       threads);
    }
    if (*lint) return cmd_lint(lint_file);
    if (*terms) return cmd_aht_terms(terms_seq, terms_orders, terms_tau, terms_sys);
    if (*autocorr) {
      return cmd_autocorr(ac_seq, ac_tau, ac_blocks, ac_model, ac_sys, ac_err, ac_output, ac_fit);
    }
    if (*mqc) {
      return cmd_mqc(mqc_m, mqc_phi, mqc_window, mqc_time, mqc_seq, mqc_cycles, mqc_tau, mqc_sys, mqc_output,
                     mqc_signal);
    }
    if (*preset) {
      std::optional<std::uint64_t> seed;
      if (seed_opt->count() > 0) seed = preset_seed;
      const PresetRun run = run_preset(preset_name, profile, threads, seed);
      emit_results(run.table, run.config, preset_format, preset_output);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& p : e.problems()) std::cerr << "  - " << p << "\n";
    return kExitConfig;
  } catch (const SequenceParseError& e) {
    std::cerr << "sequence error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NonCyclicError& e) {
    std::cerr << "sequence error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const OperatorError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const FitError& e) {
    std::cerr << "fit failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
