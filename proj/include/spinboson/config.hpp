#pragma once

#include <cmath>
#include <complex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinboson/errors.hpp"
#include "spinboson/model.hpp"
#include "spinboson/quadrature.hpp"

namespace spinboson {

struct Tolerances {
  double root_tol = 1e-12;
  double eig_tol = 1e-9;
  double guard = 1e-8;
};

struct SweepSpec {
  double alpha_min = 0.1;
  double alpha_max = 1000.0;
  int steps = 21;
  bool log_spacing = true;
};

enum class OutputFormat { csv, json };

struct OutputSpec {
  OutputFormat format = OutputFormat::csv;
  std::string path;  // empty = stdout
};

/// Fully validated run configuration.
struct RunConfig {
  ModelSpec model;
  GridSpec grid;
  Tolerances tolerances;
  SweepSpec sweep;
  OutputSpec output;
};

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw ConfigError("output.format: expected 'csv' or 'json', got '" + s + "'");
}

namespace detail {

using nlohmann::json;

class ConfigReader {
 public:
  ConfigReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "configuration must be a JSON object" : path_ + " must be an object");
  }

  void allow(std::initializer_list<const char*> keys) {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!allowed.count(it.key())) throw ConfigError("unknown key '" + field(it.key()) + "'");
  }

  bool has(const char* key) const { return node_.contains(key); }
  const json& at(const char* key) const { return node_.at(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key) + " must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(field(key) + " must be finite");
  }

  void integer(const char* key, int& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key) + " must be an integer");
    out = v.get<int>();
  }

  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + " must be true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(field(key) + " must be a string");
    out = v.get<std::string>();
  }

 private:
  const json& node_;
  std::string path_;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

inline void read_coupling(const json& node, Coupling& c) {
  ConfigReader r(node, "model.coupling");
  r.allow({"family", "lambda_cutoff", "table"});
  std::string family = "sqrt-cutoff";
  r.string("family", family);
  if (family == "sqrt-cutoff")
    c.family = Coupling::Family::sqrt_cutoff;
  else if (family == "sqrt-gaussian")
    c.family = Coupling::Family::sqrt_gaussian;
  else if (family == "tabulated")
    c.family = Coupling::Family::tabulated;
  else if (family == "zero")
    c.family = Coupling::Family::zero;
  else
    throw ConfigError("model.coupling.family: unknown family '" + family + "'");
  r.number("lambda_cutoff", c.cutoff);
  require(c.cutoff > 0.0, "model.coupling.lambda_cutoff must be > 0");
  if (r.has("table")) {
    const json& t = r.at("table");
    require(t.is_array(), "model.coupling.table must be an array");
    c.table.clear();
    for (const json& e : t) {
      if (e.is_number()) {
        c.table.emplace_back(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        c.table.emplace_back(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ConfigError("model.coupling.table entries must be numbers or [re, im] pairs");
      }
    }
  }
  require(c.family != Coupling::Family::tabulated || !c.table.empty(),
          "model.coupling.table is required for the tabulated family");
}

inline void read_dispersion(const json& node, Dispersion& d) {
  ConfigReader r(node, "model.dispersion");
  r.allow({"family", "table"});
  std::string family = "abs-k";
  r.string("family", family);
  if (family == "abs-k")
    d.family = Dispersion::Family::abs_k;
  else if (family == "tabulated")
    d.family = Dispersion::Family::tabulated;
  else
    throw ConfigError("model.dispersion.family: unknown family '" + family + "'");
  if (r.has("table")) {
    const json& t = r.at("table");
    require(t.is_array(), "model.dispersion.table must be an array");
    d.table.clear();
    for (const json& e : t) {
      require(e.is_number(), "model.dispersion.table entries must be numbers");
      d.table.push_back(e.get<double>());
    }
  }
  require(d.family != Dispersion::Family::tabulated || !d.table.empty(),
          "model.dispersion.table is required for the tabulated family");
}

}  // namespace detail

/// Parses and validates a JSON configuration; every omitted key takes its
/// default. Throws ConfigError naming the offending field.
inline RunConfig parse_config(const std::string& text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text.empty() ? std::string("{}") : text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }

  RunConfig cfg;
  detail::ConfigReader top(root, "");
  top.allow({"model", "grid", "tolerances", "sweep", "output"});

  if (top.has("model")) {
    detail::ConfigReader r(top.at("model"), "model");
    r.allow({"eps", "dimension", "coupling", "dispersion"});
    r.number("eps", cfg.model.eps);
    detail::require(cfg.model.eps > 0.0, "model.eps must be > 0");
    r.integer("dimension", cfg.model.dimension);
    detail::require(cfg.model.dimension >= 1, "model.dimension must be >= 1");
    if (r.has("coupling")) detail::read_coupling(r.at("coupling"), cfg.model.coupling);
    if (r.has("dispersion")) detail::read_dispersion(r.at("dispersion"), cfg.model.dispersion);
  }

  if (top.has("grid")) {
    detail::ConfigReader r(top.at("grid"), "grid");
    r.allow({"n", "r_max", "rule"});
    r.integer("n", cfg.grid.n);
    detail::require(cfg.grid.n >= 1, "grid.n must be >= 1");
    r.number("r_max", cfg.grid.r_max);
    detail::require(cfg.grid.r_max > 0.0, "grid.r_max must be > 0");
    std::string rule = "gauss-legendre";
    r.string("rule", rule);
    try {
      cfg.grid.rule = parse_rule(rule);
    } catch (const ConfigError&) {
      throw ConfigError("grid.rule: unknown rule '" + rule + "'");
    }
  }

  if (top.has("tolerances")) {
    detail::ConfigReader r(top.at("tolerances"), "tolerances");
    r.allow({"root_tol", "eig_tol", "guard"});
    r.number("root_tol", cfg.tolerances.root_tol);
    r.number("eig_tol", cfg.tolerances.eig_tol);
    r.number("guard", cfg.tolerances.guard);
    detail::require(cfg.tolerances.root_tol > 0.0 && cfg.tolerances.root_tol < 1e-2,
                    "tolerances.root_tol must lie in (0, 1e-2)");
    detail::require(cfg.tolerances.eig_tol > 0.0, "tolerances.eig_tol must be > 0");
    detail::require(cfg.tolerances.guard > 0.0 && cfg.tolerances.guard < 1.0, "tolerances.guard must lie in (0, 1)");
  }

  if (top.has("sweep")) {
    detail::ConfigReader r(top.at("sweep"), "sweep");
    r.allow({"alpha_min", "alpha_max", "steps", "log_spacing"});
    r.number("alpha_min", cfg.sweep.alpha_min);
    r.number("alpha_max", cfg.sweep.alpha_max);
    r.integer("steps", cfg.sweep.steps);
    r.boolean("log_spacing", cfg.sweep.log_spacing);
  }
  detail::require(cfg.sweep.alpha_min >= 0.0, "sweep.alpha_min must be >= 0");
  detail::require(cfg.sweep.alpha_max >= cfg.sweep.alpha_min, "sweep.alpha_max must be >= sweep.alpha_min");
  detail::require(cfg.sweep.steps >= 1, "sweep.steps must be >= 1");
  detail::require(!cfg.sweep.log_spacing || cfg.sweep.alpha_min > 0.0,
                  "sweep.alpha_min must be > 0 when sweep.log_spacing is true");

  if (top.has("output")) {
    detail::ConfigReader r(top.at("output"), "output");
    r.allow({"format", "path"});
    std::string format = "csv";
    r.string("format", format);
    cfg.output.format = parse_format(format);
    r.string("path", cfg.output.path);
  }

  // Cross-field checks (cutoff vs r_max, table lengths, dispersion sign).
  try {
    discretize(cfg.model, cfg.grid);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return cfg;
}

/// Coupling values of the sweep, endpoints included.
inline std::vector<double> alpha_grid(const SweepSpec& s) {
  std::vector<double> out;
  if (s.steps == 1) return {s.alpha_min};
  out.reserve(static_cast<std::size_t>(s.steps));
  const double last = static_cast<double>(s.steps - 1);
  for (int k = 0; k < s.steps; ++k) {
    const double t = k / last;
    double a;
    if (s.log_spacing)
      a = std::exp(std::log(s.alpha_min) + t * (std::log(s.alpha_max) - std::log(s.alpha_min)));
    else
      a = s.alpha_min + t * (s.alpha_max - s.alpha_min);
    out.push_back(a);
  }
  out.front() = s.alpha_min;
  out.back() = s.alpha_max;
  return out;
}

}  // namespace spinboson
