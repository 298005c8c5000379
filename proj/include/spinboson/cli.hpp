#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinboson/config.hpp"
#include "spinboson/errors.hpp"
#include "spinboson/hooks.hpp"
#include "spinboson/sweep.hpp"
#include "spinboson/verify.hpp"

namespace spinboson::cli {

enum ExitCode : int { kSuccess = 0, kVerifyFailed = 1, kConfigError = 2 };

enum class Level { quick, full };

/// Command-line overrides applied on top of the parsed configuration.
struct Options {
  std::optional<std::string> format;
  std::optional<std::string> out;
  Level level = Level::full;
  unsigned threads = 0;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Sink for command output: the configured path or `fallback`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      os_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw ConfigError("cannot open output path '" + path + "'");
    os_ = file_.get();
  }
  std::ostream& stream() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

inline std::string number(double v) { return spinboson::detail::format_number(v); }

inline void emit_pairs(std::ostream& os, OutputFormat fmt,
                       const std::vector<std::pair<std::string, nlohmann::ordered_json>>& pairs) {
  if (fmt == OutputFormat::json) {
    // dump() writes non-finite numbers as null
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [k, v] : pairs) o[k] = v;
    os << o.dump(2) << '\n';
    return;
  }
  os << "key,value\n";
  for (const auto& [k, v] : pairs) {
    os << k << ',';
    if (v.is_string())
      os << v.get<std::string>();
    else if (v.is_number_float())
      os << number(v.get<double>());
    else
      os << v.dump();
    os << '\n';
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands. Each returns an exit code; configuration problems surface as
// ConfigError and are mapped to exit 2 by dispatch().

inline int cmd_info(const RunConfig& cfg, std::ostream& out) {
  const DiscreteModel m = discretize(cfg.model, cfg.grid);
  const IrDiagnostics ir = ir_diagnostics(m);
  std::vector<std::pair<std::string, nlohmann::ordered_json>> rows = {
      {"dimension", cfg.model.dimension},
      {"eps", cfg.model.eps},
      {"coupling", std::string(to_string(cfg.model.coupling.family))},
      {"dispersion", std::string(to_string(cfg.model.dispersion.family))},
      {"grid_nodes", static_cast<int>(m.size())},
      {"grid_r_max", m.quad.r_max},
      {"grid_rule", std::string(to_string(m.quad.rule))},
      {"lambda_norm", lambda_norm(m)},
      {"lambda_over_sqrt_omega_norm", ir.ir_norm},
      {"lambda_over_sqrt_omega_divergent", ir.ir_divergent},
      {"lambda_over_omega_norm", ir.lambda_over_omega_norm},
      {"infrared_regular", ir.infrared_regular},
      {"small_alpha_threshold", ir.small_alpha_threshold},
  };
  detail::Sink sink(cfg.output.path, out);
  detail::emit_pairs(sink.stream(), cfg.output.format, rows);
  return kSuccess;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, unsigned threads = 0) {
  const std::vector<SweepRow> rows = run_sweep(cfg, threads);
  detail::Sink sink(cfg.output.path, out);
  if (cfg.output.format == OutputFormat::json)
    write_json(sink.stream(), rows);
  else
    write_csv(sink.stream(), rows);
  return kSuccess;
}

/// Smallest scanned alpha from which each regime condition holds for every
/// larger scanned alpha.
struct ThresholdReport {
  double root_minus = std::numeric_limits<double>::quiet_NaN();
  double positivity = std::numeric_limits<double>::quiet_NaN();
  double count = std::numeric_limits<double>::quiet_NaN();
  double scan_start = 0.0;
  double scan_factor = 0.0;
  double scan_cap = 0.0;
};

inline constexpr double kThresholdScanFactor = 1.1547819846894583;  // 10^(1/16)
inline constexpr double kThresholdScanCap = 1e5;

inline ThresholdReport scan_thresholds(const RunConfig& cfg) {
  const DiscreteModel base = discretize(cfg.model, cfg.grid);
  if (base.decoupled() || lambda_norm(base) == 0.0)
    throw ConfigError("threshold: the model is decoupled (zero coupling); there is no regime to locate");
  ThresholdReport rep;
  rep.scan_start = cfg.sweep.alpha_min > 0.0 ? cfg.sweep.alpha_min : 1e-2;
  rep.scan_factor = kThresholdScanFactor;
  rep.scan_cap = std::max(kThresholdScanCap, rep.scan_start);

  std::vector<double> alphas;
  for (double a = rep.scan_start; a <= rep.scan_cap * (1.0 + 1e-12); a *= rep.scan_factor) alphas.push_back(a);

  // Walk downward: each threshold is the last alpha before the first failure.
  bool holds[3] = {true, true, true};
  double* slots[3] = {&rep.root_minus, &rep.positivity, &rep.count};
  for (auto it = alphas.rbegin(); it != alphas.rend(); ++it) {
    if (!holds[0] && !holds[1] && !holds[2]) break;
    const double alpha = *it;
    const DiscreteModel m = base.with_alpha(alpha);
    bool ok[3] = {true, true, true};
    int total = 0;
    for (Sigma sigma : kBothBranches) {
      try {
        const BranchSummary s = summarize_branch(m, sigma, cfg.tolerances);
        if (sigma == Sigma::minus && !s.threshold.is_root()) ok[0] = false;
        if (!(s.margin >= -1e-8 * std::max(1.0, alpha))) ok[1] = false;
        if (s.count.flagged > 0) ok[2] = false;
        total += s.count.count;
      } catch (const NumericalError&) {
        ok[0] = ok[1] = ok[2] = false;
      } catch (const DomainError&) {
        ok[0] = ok[1] = ok[2] = false;
      }
    }
    if (total > 2) ok[2] = false;
    for (int k = 0; k < 3; ++k) {
      if (!holds[k]) continue;
      if (ok[k])
        *slots[k] = alpha;
      else
        holds[k] = false;
    }
  }
  return rep;
}

inline int cmd_threshold(const RunConfig& cfg, std::ostream& out) {
  const ThresholdReport r = scan_thresholds(cfg);
  auto value = [](double v) -> nlohmann::ordered_json {
    if (std::isnan(v)) return "not-found";
    return v;
  };
  const IrDiagnostics ir = ir_diagnostics(discretize(cfg.model, cfg.grid));
  std::vector<std::pair<std::string, nlohmann::ordered_json>> rows = {
      {"alpha_minus_root", value(r.root_minus)},
      {"alpha_positivity", value(r.positivity)},
      {"alpha_count_at_most_two", value(r.count)},
      {"predicted_minus_root", ir.small_alpha_threshold},
      {"scan_start", r.scan_start},
      {"scan_factor", r.scan_factor},
      {"scan_cap", r.scan_cap},
  };
  detail::Sink sink(cfg.output.path, out);
  detail::emit_pairs(sink.stream(), cfg.output.format, rows);
  return kSuccess;
}

inline int dispatch(const std::string& command, const std::string& config_text, const Options& opt, std::ostream& out,
             std::ostream& err);

/// Determinism, JSON round-trip and the 0/1/2 exit-code contract.
inline verify::CheckResult io_contract(const RunConfig& cfg) {
  verify::CheckResult res{"determinism-io"};
  verify::detail::Failures f;

  RunConfig stdout_cfg = cfg;
  stdout_cfg.output.path.clear();
  stdout_cfg.output.format = OutputFormat::csv;
  std::ostringstream first, second;
  cmd_sweep(stdout_cfg, first);
  cmd_sweep(stdout_cfg, second);
  if (first.str() != second.str()) f.add("sweep CSV differs between two runs");

  const std::vector<SweepRow> rows = run_sweep(stdout_cfg);
  std::ostringstream js;
  write_json(js, rows);
  if (!(parse_sweep_json(js.str()) == rows)) f.add("JSON round-trip changed the sweep table");

  struct Canned {
    const char* command;
    const char* text;
    Level level;
    int expected;
  };
  const Canned canned[] = {
      {"sweep", R"({"sweep":{"alpha_min":1,"alpha_max":100,"steps":3}})", Level::full, kSuccess},
      {"verify", R"({"tolerances":{"eig_tol":1e6}})", Level::quick, kVerifyFailed},
      {"sweep", R"({"model":{"eps":-1}})", Level::full, kConfigError},
  };
  for (const Canned& c : canned) {
    Options o;
    o.level = c.level;
    std::ostringstream sink, errs;
    const int code = dispatch(c.command, c.text, o, sink, errs);
    if (code != c.expected)
      f.add(std::string(c.command) + " " + c.text + " -> exit " + std::to_string(code) + ", expected " +
            std::to_string(c.expected));
  }
  res.passed = !f.any();
  res.detail = f.summary("identical reruns, exact JSON round-trip, exit codes 0/1/2");
  return res;
}

inline std::vector<verify::CheckResult> run_verification(const RunConfig& cfg, Level level) {
  const verify::Context ctx(cfg);
  if (level == Level::quick) return verify::run_quick(ctx);
  std::vector<verify::CheckResult> results = verify::run_full_numeric(ctx);
  results.push_back(verify::run_check("determinism-io", [&] { return io_contract(cfg); }));
  return results;
}

inline int cmd_verify(const RunConfig& cfg, Level level, std::ostream& out) {
  const std::vector<verify::CheckResult> results = run_verification(cfg, level);
  detail::Sink sink(cfg.output.path, out);
  std::ostream& os = sink.stream();
  bool all = true;
  if (cfg.output.format == OutputFormat::json) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : results) {
      all = all && r.passed;
      arr.push_back({{"name", r.name}, {"passed", r.passed}, {"seconds", r.seconds}, {"detail", r.detail}});
    }
    os << nlohmann::ordered_json{{"passed", all}, {"checks", arr}}.dump(2) << '\n';
  } else {
    for (const auto& r : results) {
      all = all && r.passed;
      os << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << std::fixed << std::setprecision(3) << r.seconds
         << " s) " << r.detail << '\n';
      os << std::defaultfloat;
    }
    os << (all ? "all checks passed" : "verification FAILED") << '\n';
  }
  return all ? kSuccess : kVerifyFailed;
}

/// Runs one command on configuration text, mapping every error to the exit-code contract.
inline int dispatch(const std::string& command, const std::string& config_text, const Options& opt,
                    std::ostream& out, std::ostream& err) {
  try {
    RunConfig cfg = parse_config(config_text);
    if (opt.format) cfg.output.format = parse_format(*opt.format);
    if (opt.out) cfg.output.path = *opt.out;
    if (command == "info") return cmd_info(cfg, out);
    if (command == "sweep") return cmd_sweep(cfg, out, opt.threads);
    if (command == "threshold") return cmd_threshold(cfg, out);
    if (command == "verify") return cmd_verify(cfg, opt.level, out);
    throw UsageError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    // verify handles its own failures; anything reaching here is a run
    // that could not be set up.
    err << "error: " << e.what() << '\n';
    return command == "verify" ? kVerifyFailed : kConfigError;
  }
}

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Essential spectrum and bound-state counts for the two-photon spin-boson model", "spinboson"};
  app.require_subcommand(1);
  std::string config_path;
  Options opt;
  std::string format, out_path, level = "full";
  bool tamper = false;

  for (const char* name : {"info", "sweep", "verify", "threshold"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file (defaults apply when omitted)");
    sub->add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", out_path, "output file (stdout when omitted)");
    if (std::string(name) == "verify")
      sub->add_option("--level", level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
    if (std::string(name) == "sweep") sub->add_option("--threads", opt.threads, "worker threads (0 = all cores)");
#if SPINBOSON_HAS_TEST_HOOKS
    sub->add_flag("--tamper-kernel", tamper)->group("");
#endif
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  if (!format.empty()) opt.format = format;
  if (!out_path.empty()) opt.out = out_path;
  opt.level = level == "quick" ? Level::quick : Level::full;
#if SPINBOSON_HAS_TEST_HOOKS
  hooks::tamper_kernel() = tamper;
#endif
  (void)tamper;

  std::string text;
  try {
    if (!config_path.empty()) text = detail::read_file(config_path);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }
  return dispatch(command, text, opt, out, err);
}

}  // namespace spinboson::cli
