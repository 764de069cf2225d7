#ifndef OTPQKD_CLI_HPP
#define OTPQKD_CLI_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otpqkd/errors.hpp"
#include "otpqkd/keyrates.hpp"
#include "otpqkd/protocol.hpp"
#include "otpqkd/report_io.hpp"

namespace otpqkd::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kOutput = 3, kKeyMismatch = 4, kNoCrossing = 5 };

struct RatesOptions {
  std::string protocol = "six-state";
  std::vector<std::string> variants{"one-way", "proposed", "bstep-opt"};
  double p_start = 0.0;
  double p_end = 0.16;
  std::size_t steps = 161;
  std::string out;
  std::size_t max_bsteps = kDefaultMaxBSteps;
};

struct SimulateOptions {
  std::string protocol = "six-state";
  std::optional<double> p;
  std::optional<double> qx, qy, qz;
  std::size_t n = 10000;
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  std::string mode = "ideal";
  double test_fraction = 0.1;
  std::size_t bsteps = 0;
  std::size_t block_size = 24;
  double redundancy = 1.15;
  double slack = 4.0;
  unsigned threads = 0;
  std::string out;
  std::string format = "csv";
  std::string transcript;
};

struct CrossingsOptions {
  std::string protocol = "bb84";
  std::string variant = "one-way";
  double p_start = 0.0;
  double p_end = 0.5;
  std::size_t max_bsteps = kDefaultMaxBSteps;
  std::string out;
};

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline Variant parse_variant(const std::string& protocol, const std::string& name) {
  const bool six = protocol == "six-state";
  if (!six && protocol != "bb84") throw UsageError("unknown protocol '" + protocol + "'");
  if (name == "one-way") return six ? Variant::SixStateOneWay : Variant::BB84OneWay;
  if (name == "proposed") return six ? Variant::SixStateProposed : Variant::BB84Proposed;
  if (name == "bstep-opt") return six ? Variant::SixStateBStepOpt : Variant::BB84BStepOpt;
  throw UsageError("unknown variant '" + name + "' (expected one-way, proposed, bstep-opt)");
}

inline double max_param(const std::string& protocol) { return protocol == "six-state" ? 2.0 / 3.0 : 0.5; }

/// Opens `path` for writing or returns nullopt.
inline std::optional<std::ofstream> open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) return std::nullopt;
  return f;
}

inline int cmd_rates(const RatesOptions& opt, std::ostream& out, std::ostream& err) {
  std::vector<Variant> variants;
  try {
    for (const std::string& v : opt.variants) variants.push_back(parse_variant(opt.protocol, v));
    if (variants.empty()) throw UsageError("no variants selected");
    if (!(opt.p_start >= 0.0 && opt.p_start < opt.p_end && opt.p_end <= max_param(opt.protocol)) || opt.steps < 2) {
      throw UsageError("need 0 <= p-start < p-end <= " + format_number(max_param(opt.protocol)) + " and steps >= 2");
    }
  } catch (const UsageError& e) {
    err << "rates: " << e.what() << '\n';
    return kUsage;
  }

  std::vector<RateCurve> curves;
  for (Variant v : variants) curves.push_back(rate_curve(v, opt.p_start, opt.p_end, opt.steps, opt.max_bsteps));

  auto file = open_output(opt.out);
  if (!file) {
    err << "rates: cannot write '" << opt.out << "'\n";
    return kOutput;
  }
  *file << kCurveHeader << '\n';
  for (std::size_t i = 0; i < opt.steps; ++i) {
    for (const RateCurve& c : curves) *file << CurveRow::from(c[i]).to_csv() << '\n';
  }
  file->flush();
  if (!*file) {
    err << "rates: write to '" << opt.out << "' failed\n";
    return kOutput;
  }
  out << "wrote " << opt.steps * curves.size() << " rows to " << opt.out << '\n';
  return kOk;
}

inline SessionConfig session_config(const SimulateOptions& opt) {
  SessionConfig cfg;
  if (opt.protocol == "six-state") {
    cfg.protocol = Protocol::SixState;
  } else if (opt.protocol == "bb84") {
    cfg.protocol = Protocol::BB84;
  } else {
    throw UsageError("unknown protocol '" + opt.protocol + "'");
  }
  const bool explicit_q = opt.qx || opt.qy || opt.qz;
  if (opt.p && explicit_q) throw UsageError("--p and --qx/--qy/--qz are exclusive");
  try {
    if (opt.p) {
      cfg.channel = depolarizing(*opt.p);
    } else if (explicit_q) {
      const double x = opt.qx.value_or(0.0), y = opt.qy.value_or(0.0), z = opt.qz.value_or(0.0);
      cfg.channel = PauliRates::make(1.0 - x - y - z, x, y, z);
    } else {
      throw UsageError("a channel is required: --p or --qx/--qy/--qz");
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (opt.mode == "ideal") {
    cfg.mode = ReconciliationMode::IdealAccounting;
  } else if (opt.mode == "explicit") {
    cfg.mode = ReconciliationMode::ExplicitSmallBlock;
  } else {
    throw UsageError("unknown mode '" + opt.mode + "'");
  }
  cfg.n_signals = opt.n;
  cfg.test_fraction = opt.test_fraction;
  cfg.bstep_count = opt.bsteps;
  cfg.block_size_for_explicit = opt.block_size;
  cfg.redundancy_factor = opt.redundancy;
  cfg.slack = opt.slack;
  cfg.seed = opt.seed;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  SessionConfig cfg;
  try {
    cfg = session_config(opt);
    if (opt.trials == 0) throw UsageError("--trials must be >= 1");
    if (opt.format != "csv" && opt.format != "json-lines" && opt.format != "records") {
      throw UsageError("unknown format '" + opt.format + "'");
    }
  } catch (const UsageError& e) {
    err << "simulate: " << e.what() << '\n';
    return kUsage;
  }
  auto file = open_output(opt.out);
  if (!file) {
    err << "simulate: cannot write '" << opt.out << "'\n";
    return kOutput;
  }
  out << "seed=" << cfg.seed << '\n';

  const BatchResult result = batch({cfg}, opt.trials, opt.threads).front();
  const auto emit = [&](const Fields& f) {
    if (opt.format == "csv") {
      *file << csv_row(f) << '\n';
    } else if (opt.format == "json-lines") {
      *file << json_line(f) << '\n';
    } else {
      *file << record_line(f) << '\n';
    }
  };
  if (opt.format == "csv") *file << csv_header(report_fields("", SessionReport{})) << '\n';
  for (std::size_t i = 0; i < result.trials.size(); ++i) emit(report_fields(std::to_string(i), result.trials[i]));
  emit(aggregate_fields(result));
  file->flush();
  if (!*file) {
    err << "simulate: write to '" << opt.out << "' failed\n";
    return kOutput;
  }

  if (!opt.transcript.empty()) {
    auto log = open_output(opt.transcript);
    if (!log) {
      err << "simulate: cannot write '" << opt.transcript << "'\n";
      return kOutput;
    }
    for (std::size_t i = 0; i < opt.trials; ++i) {
      SessionConfig c = cfg;
      c.seed = trial_seed(cfg.seed, i);
      *log << "# trial " << i << " seed=" << c.seed << '\n' << run_session_traced(c).transcript.dump();
    }
  }

  std::size_t mismatches = 0;
  for (const SessionReport& r : result.trials) mismatches += r.keys_match ? 0 : 1;
  out << "trials=" << result.trials.size() << " mean_net_rate=" << format_number(result.mean_net_rate)
      << " stddev_net_rate=" << format_number(result.stddev_net_rate) << " key_mismatches=" << mismatches << '\n';
  return mismatches == 0 ? kOk : kKeyMismatch;
}

inline int cmd_crossings(const CrossingsOptions& opt, std::ostream& out, std::ostream& err) {
  Variant variant;
  try {
    variant = parse_variant(opt.protocol, opt.variant);
    if (!(opt.p_start >= 0.0 && opt.p_start < opt.p_end && opt.p_end <= max_param(opt.protocol))) {
      throw UsageError("need 0 <= p-start < p-end <= " + format_number(max_param(opt.protocol)));
    }
  } catch (const UsageError& e) {
    err << "crossings: " << e.what() << '\n';
    return kUsage;
  }
  const std::optional<double> crossing = rate_crossing(variant, opt.p_start, opt.p_end, opt.max_bsteps);
  if (!crossing) {
    err << "crossings: no sign change of " << to_string(variant) << " on [" << format_number(opt.p_start) << ", "
        << format_number(opt.p_end) << "]\n";
    return kNoCrossing;
  }
  std::ostringstream text;
  text << "variant,crossing_p_Z\n" << to_string(variant) << ',' << std::fixed << std::setprecision(6) << *crossing << '\n';
  out << text.str();
  if (!opt.out.empty()) {
    auto file = open_output(opt.out);
    if (!file) {
      err << "crossings: cannot write '" << opt.out << "'\n";
      return kOutput;
    }
    *file << text.str();
  }
  return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Secret-key rates and post-processing simulation for OTP-assisted QKD"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");

  RatesOptions rates;
  auto* rates_cmd = app.add_subcommand("rates", "Sweep analytic key rates and write a CSV curve");
  rates_cmd->add_option("--protocol", rates.protocol, "six-state or bb84")->capture_default_str();
  rates_cmd->add_option("--variants", rates.variants, "Comma list of one-way, proposed, bstep-opt")
      ->delimiter(',')
      ->capture_default_str();
  rates_cmd->add_option("--p-start", rates.p_start, "First bit-error rate p_Z")->capture_default_str();
  rates_cmd->add_option("--p-end", rates.p_end, "Last bit-error rate p_Z")->capture_default_str();
  rates_cmd->add_option("--steps", rates.steps, "Number of points")->capture_default_str();
  rates_cmd->add_option("--max-bsteps", rates.max_bsteps, "Largest B-step count considered")->capture_default_str();
  rates_cmd->add_option("--out", rates.out, "Output CSV path")->required();

  SimulateOptions sim;
  double p = 0.0, qx = 0.0, qy = 0.0, qz = 0.0;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo runs of the full post-processing protocol");
  sim_cmd->add_option("--protocol", sim.protocol, "six-state or bb84")->capture_default_str();
  auto* p_opt = sim_cmd->add_option("--p", p, "Depolarizing parameter (q_X = q_Y = q_Z = p)");
  auto* qx_opt = sim_cmd->add_option("--qx", qx, "Pauli X rate");
  auto* qy_opt = sim_cmd->add_option("--qy", qy, "Pauli Y rate");
  auto* qz_opt = sim_cmd->add_option("--qz", qz, "Pauli Z rate");
  sim_cmd->add_option("--n", sim.n, "Sifted signals per session (even)")->capture_default_str();
  sim_cmd->add_option("--trials", sim.trials, "Sessions to run")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
  sim_cmd->add_option("--mode", sim.mode, "ideal or explicit")->capture_default_str();
  sim_cmd->add_option("--test-fraction", sim.test_fraction, "Fraction of signals revealed for estimation")
      ->capture_default_str();
  sim_cmd->add_option("--bsteps", sim.bsteps, "B-steps instead of the OTP preprocessing (0 = OTP path)")
      ->capture_default_str();
  sim_cmd->add_option("--block-size", sim.block_size, "Blocks per decoded chunk in explicit mode")->capture_default_str();
  sim_cmd->add_option("--redundancy", sim.redundancy, "Parity redundancy factor")->capture_default_str();
  sim_cmd->add_option("--slack", sim.slack, "Extra parity bits per exchange")->capture_default_str();
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0 = all cores)")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Report path")->required();
  sim_cmd->add_option("--format", sim.format, "csv, json-lines or records")->capture_default_str();
  sim_cmd->add_option("--transcript", sim.transcript, "Write hex message logs of every trial here");

  CrossingsOptions cross;
  auto* cross_cmd = app.add_subcommand("crossings", "Locate the bit-error rate where a key rate reaches zero");
  cross_cmd->add_option("--protocol", cross.protocol, "six-state or bb84")->capture_default_str();
  cross_cmd->add_option("--variant", cross.variant, "one-way, proposed or bstep-opt")->capture_default_str();
  cross_cmd->add_option("--p-start", cross.p_start, "Scan start")->capture_default_str();
  cross_cmd->add_option("--p-end", cross.p_end, "Scan end")->capture_default_str();
  cross_cmd->add_option("--max-bsteps", cross.max_bsteps, "Largest B-step count considered")->capture_default_str();
  cross_cmd->add_option("--out", cross.out, "Also write the result here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (app.got_subcommand(rates_cmd)) return cmd_rates(rates, out, err);
    if (app.got_subcommand(cross_cmd)) return cmd_crossings(cross, out, err);
    if (*p_opt) sim.p = p;
    if (*qx_opt) sim.qx = qx;
    if (*qy_opt) sim.qy = qy;
    if (*qz_opt) sim.qz = qz;
    return cmd_simulate(sim, out, err);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace otpqkd::cli

#endif
