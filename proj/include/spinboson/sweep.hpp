#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "spinboson/config.hpp"
#include "spinboson/essspec.hpp"
#include "spinboson/model.hpp"
#include "spinboson/pencil.hpp"

namespace spinboson {

/// One coupling value of a sweep. Column order is fixed by kSweepColumns.
struct SweepRow {
  double alpha = 0.0;
  double e_plus = 0.0;
  double e_minus = 0.0;
  double e_min = 0.0;
  std::string kind_minus;
  int count_plus = 0;
  int count_minus = 0;
  int total = 0;
  double margin_plus = 0.0;
  double margin_minus = 0.0;
  double mdet_plus = 0.0;
  double mdet_minus = 0.0;
  double slope_ratio = 0.0;
  std::string flags;
};

inline constexpr const char* kSweepColumns[] = {
    "alpha",        "e_plus",       "e_minus",   "e_min",     "kind_minus",  "count_plus", "count_minus",
    "total",        "margin_plus",  "margin_minus", "mdet_plus", "mdet_minus", "slope_ratio", "flags"};

inline constexpr const char* kSweepHeader =
    "alpha,e_plus,e_minus,e_min,kind_minus,count_plus,count_minus,total,margin_plus,margin_minus,mdet_plus,"
    "mdet_minus,slope_ratio,flags";

namespace detail {

inline bool same_number(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void add_flag(std::string& flags, const std::string& token) {
  std::string clean = token;
  std::replace_if(clean.begin(), clean.end(), [](char ch) { return ch == ',' || ch == '\n' || ch == '\r' || ch == ';'; }, ' ');
  if (!flags.empty()) flags += ';';
  flags += clean;
}

}  // namespace detail

inline bool operator==(const SweepRow& a, const SweepRow& b) {
  using detail::same_number;
  return same_number(a.alpha, b.alpha) && same_number(a.e_plus, b.e_plus) && same_number(a.e_minus, b.e_minus) &&
         same_number(a.e_min, b.e_min) && a.kind_minus == b.kind_minus && a.count_plus == b.count_plus &&
         a.count_minus == b.count_minus && a.total == b.total && same_number(a.margin_plus, b.margin_plus) &&
         same_number(a.margin_minus, b.margin_minus) && same_number(a.mdet_plus, b.mdet_plus) &&
         same_number(a.mdet_minus, b.mdet_minus) && same_number(a.slope_ratio, b.slope_ratio) && a.flags == b.flags;
}

/// Everything the sweep reports for one branch at one coupling.
struct BranchSummary {
  EssSpecResult threshold;
  double z = 0.0;
  CountReport count;
  double margin = 0.0;
  double mdet = 0.0;
};

inline BranchSummary summarize_branch(const DiscreteModel& m, Sigma sigma, const Tolerances& tol) {
  BranchSummary s;
  RootOptions ro;
  ro.root_tol = tol.root_tol;
  s.threshold = find_phi_root(m, sigma, ro);
  s.z = evaluation_point(s.threshold, m.eps(), tol.guard);
  const PencilAssembly p = assemble_r(m, sigma, s.z);
  s.count = count_negative_eigs(p.r, count_tolerance(p.r, tol.eig_tol));
  HermitianMatrix pos = -(m.alpha() * m.alpha()) * p.k2;
  pos.diagonal() += p.delta.cast<cplx>();
  s.margin = pos.rows() ? hermitian_eigenvalues(pos).front() : 0.0;
  s.mdet = rank_two_matrix(m, sigma, s.z).det();
  return s;
}

/// Computes one sweep row. Numerical failures land in `flags`; the row is
/// still returned.
inline SweepRow compute_row(const DiscreteModel& base, double alpha, const Tolerances& tol) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SweepRow row;
  row.alpha = alpha;
  row.e_plus = row.e_minus = row.e_min = nan;
  row.margin_plus = row.margin_minus = row.mdet_plus = row.mdet_minus = row.slope_ratio = nan;
  row.kind_minus = "error";
  row.count_plus = row.count_minus = row.total = -1;

  DiscreteModel m;
  try {
    m = base.with_alpha(alpha);
  } catch (const Error& e) {
    detail::add_flag(row.flags, std::string("error:") + e.what());
    return row;
  }

  bool ok[2] = {false, false};
  for (int k = 0; k < 2; ++k) {
    const Sigma sigma = kBothBranches[k];
    const char* tag = sigma == Sigma::plus ? "plus" : "minus";
    try {
      const BranchSummary s = summarize_branch(m, sigma, tol);
      ok[k] = true;
      if (sigma == Sigma::plus) {
        row.e_plus = s.threshold.value;
        row.count_plus = s.count.count;
        row.margin_plus = s.margin;
        row.mdet_plus = s.mdet;
      } else {
        row.e_minus = s.threshold.value;
        row.kind_minus = std::string(to_string(s.threshold.kind));
        row.count_minus = s.count.count;
        row.margin_minus = s.margin;
        row.mdet_minus = s.mdet;
        if (!s.threshold.is_root()) detail::add_flag(row.flags, "minus:convention-informational");
      }
      if (s.count.flagged > 0)
        detail::add_flag(row.flags, std::string(tag) + ":flagged=" + std::to_string(s.count.flagged));
    } catch (const Error& e) {
      detail::add_flag(row.flags, std::string("error-") + tag + ":" + e.what());
    }
  }
  if (ok[0] && ok[1]) {
    row.e_min = std::min(row.e_plus, row.e_minus);
    row.total = row.count_plus + row.count_minus;
  }
  const double norm = lambda_norm(m);
  if (alpha > 0.0 && norm > 0.0 && !std::isnan(row.e_min)) row.slope_ratio = (row.e_min / alpha) / (-norm);
  return row;
}

/// Rows in ascending grid order, computed in parallel.
inline std::vector<SweepRow> run_sweep(const RunConfig& cfg, unsigned threads = 0) {
  const DiscreteModel base = discretize(cfg.model, cfg.grid);
  const std::vector<double> alphas = alpha_grid(cfg.sweep);
  std::vector<SweepRow> rows(alphas.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(alphas.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < alphas.size(); i = next++) rows[i] = compute_row(base, alphas[i], cfg.tolerances);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

inline void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  using detail::format_number;
  os << kSweepHeader << '\n';
  for (const SweepRow& r : rows) {
    os << format_number(r.alpha) << ',' << format_number(r.e_plus) << ',' << format_number(r.e_minus) << ','
       << format_number(r.e_min) << ',' << r.kind_minus << ',' << r.count_plus << ',' << r.count_minus << ','
       << r.total << ',' << format_number(r.margin_plus) << ',' << format_number(r.margin_minus) << ','
       << format_number(r.mdet_plus) << ',' << format_number(r.mdet_minus) << ',' << format_number(r.slope_ratio)
       << ',' << r.flags << '\n';
  }
}

inline nlohmann::ordered_json to_json(const std::vector<SweepRow>& rows) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;  // JSON has no NaN / inf
  };
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const SweepRow& r : rows) {
    nlohmann::ordered_json o;
    o["alpha"] = num(r.alpha);
    o["e_plus"] = num(r.e_plus);
    o["e_minus"] = num(r.e_minus);
    o["e_min"] = num(r.e_min);
    o["kind_minus"] = r.kind_minus;
    o["count_plus"] = r.count_plus;
    o["count_minus"] = r.count_minus;
    o["total"] = r.total;
    o["margin_plus"] = num(r.margin_plus);
    o["margin_minus"] = num(r.margin_minus);
    o["mdet_plus"] = num(r.mdet_plus);
    o["mdet_minus"] = num(r.mdet_minus);
    o["slope_ratio"] = num(r.slope_ratio);
    o["flags"] = r.flags;
    arr.push_back(std::move(o));
  }
  return arr;
}

inline void write_json(std::ostream& os, const std::vector<SweepRow>& rows) {
  // max_digits10 output keeps doubles exact across a parse.
  os << to_json(rows).dump(2) << '\n';
}

/// Inverse of write_json. Non-finite numbers come back as NaN.
inline std::vector<SweepRow> parse_sweep_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("sweep JSON: ") + e.what());
  }
  if (!arr.is_array()) throw UsageError("sweep JSON must be an array of rows");
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  std::vector<SweepRow> rows;
  for (const auto& o : arr) {
    SweepRow r;
    try {
      r.alpha = num(o.at("alpha"));
      r.e_plus = num(o.at("e_plus"));
      r.e_minus = num(o.at("e_minus"));
      r.e_min = num(o.at("e_min"));
      r.kind_minus = o.at("kind_minus").get<std::string>();
      r.count_plus = o.at("count_plus").get<int>();
      r.count_minus = o.at("count_minus").get<int>();
      r.total = o.at("total").get<int>();
      r.margin_plus = num(o.at("margin_plus"));
      r.margin_minus = num(o.at("margin_minus"));
      r.mdet_plus = num(o.at("mdet_plus"));
      r.mdet_minus = num(o.at("mdet_minus"));
      r.slope_ratio = num(o.at("slope_ratio"));
      r.flags = o.at("flags").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("sweep JSON row: ") + e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace spinboson
