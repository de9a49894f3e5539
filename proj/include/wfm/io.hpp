#pragma once

// CSV and JSON serialization of fits, reports and pipeline results.
// Numbers are written in shortest round-trip form so reruns are byte-identical.

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "wfm/factor_count.hpp"
#include "wfm/panel.hpp"
#include "wfm/pc.hpp"
#include "wfm/replications.hpp"
#include "wfm/rolling.hpp"
#include "wfm/simulate.hpp"
#include "wfm/sparsity.hpp"

namespace wfm::io {

using json = nlohmann::ordered_json;

using csv::format_number;

inline json number(double v) {
  if (!std::isfinite(v)) return v > 0 ? json("inf") : v < 0 ? json("-inf") : json(nullptr);
  return v;
}

inline json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline json numbers(const Eigen::VectorXd& v) {
  return numbers(std::vector<double>(v.data(), v.data() + v.size()));
}

inline json matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// PC fit: factors (T x r), loadings (N x r), eigenvalues.

inline void write_factors_csv(std::ostream& out, const PcFit& fit, const std::vector<std::string>& time_ids) {
  out << "time";
  for (int k = 1; k <= fit.r; ++k) out << ",F" << k;
  out << '\n';
  for (Eigen::Index t = 0; t < fit.factors.rows(); ++t) {
    out << csv::quote_if_needed(time_ids[static_cast<std::size_t>(t)]);
    for (Eigen::Index k = 0; k < fit.factors.cols(); ++k) out << ',' << format_number(fit.factors(t, k));
    out << '\n';
  }
}

inline void write_loadings_csv(std::ostream& out, const Eigen::MatrixXd& loadings,
                               const std::vector<std::string>& series_ids) {
  out << "series";
  for (Eigen::Index k = 1; k <= loadings.cols(); ++k) out << ",L" << k;
  out << '\n';
  for (Eigen::Index i = 0; i < loadings.rows(); ++i) {
    out << csv::quote_if_needed(series_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < loadings.cols(); ++k) out << ',' << format_number(loadings(i, k));
    out << '\n';
  }
}

inline void write_eigenvalues_csv(std::ostream& out, const Eigen::VectorXd& eigvals) {
  out << "k,eigenvalue\n";
  for (Eigen::Index k = 0; k < eigvals.size(); ++k) out << k + 1 << ',' << format_number(eigvals(k)) << '\n';
}

// ---------------------------------------------------------------------------
// Sparse fit summary

inline json sparse_summary(const SparseFit& s, const StrengthEstimate& st) {
  json j;
  j["threshold"] = number(s.threshold);
  j["c_multiplier"] = number(s.c_multiplier);
  j["counts"] = s.counts;
  j["alpha_hat"] = numbers(st.alpha_hat);
  json labels = json::array();
  for (auto l : st.labels) labels.push_back(std::string(to_string(l)));
  j["labels"] = labels;
  return j;
}

// ---------------------------------------------------------------------------
// Factor counts

inline json count_diagnostics(const FactorCountResult& res) {
  json j;
  j["method"] = std::string(method_tag(res.method));
  j["r_hat"] = res.r_hat;
  j["rmax"] = res.rmax;
  json rows = json::array();
  for (const auto& d : res.diagnostics)
    rows.push_back({{"k", d.k}, {"statistic", number(d.statistic)}, {"criterion", number(d.criterion)}});
  j["diagnostics"] = rows;
  if (res.method == CountMethod::ed) {
    json its = json::array();
    for (const auto& it : res.iterations)
      its.push_back({{"j", it.j}, {"slope", number(it.slope)}, {"delta", number(it.delta)}, {"candidate", it.candidate}});
    j["iterations"] = its;
  }
  j["notes"] = res.notes;
  return j;
}

// ---------------------------------------------------------------------------
// Simulation config

inline std::string support_mode_name(SupportMode m) { return m == SupportMode::random ? "random" : "contiguous"; }

inline std::string preprocess_name(Preprocess p) {
  switch (p) {
    case Preprocess::none: return "none";
    case Preprocess::demean: return "demean";
    case Preprocess::standardize: return "standardize";
  }
  return "?";
}

inline Preprocess parse_preprocess(const std::string& s) {
  if (s == "none") return Preprocess::none;
  if (s == "demean") return Preprocess::demean;
  if (s == "standardize") return Preprocess::standardize;
  throw ParseError("preprocess must be 'none', 'demean' or 'standardize'");
}

/// Contiguous ranges are 1-based inclusive [first, last] pairs in JSON.
inline json to_json(const SimConfig& c) {
  json j;
  j["N"] = c.n;
  j["T"] = c.t;
  j["r"] = c.r;
  j["alpha"] = numbers(c.alpha);
  j["seed"] = c.seed;
  j["burn_in"] = c.burn_in;
  j["preprocess"] = preprocess_name(c.preprocess);
  j["support_mode"] = support_mode_name(c.support_mode);
  if (!c.contiguous_ranges.empty()) {
    json rs = json::array();
    for (const auto& r : c.contiguous_ranges) rs.push_back({r.first + 1, r.last + 1});
    j["contiguous_ranges"] = rs;
  }
  if (c.correlated_blocks) j["correlated_blocks"] = *c.correlated_blocks;
  return j;
}

inline SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  try {
    if (j.contains("N")) c.n = j.at("N").get<int>();
    if (j.contains("T")) c.t = j.at("T").get<int>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<std::vector<double>>();
    c.r = j.contains("r") ? j.at("r").get<int>() : static_cast<int>(c.alpha.size());
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("burn_in")) c.burn_in = j.at("burn_in").get<int>();
    if (j.contains("preprocess")) c.preprocess = parse_preprocess(j.at("preprocess").get<std::string>());
    if (j.contains("support_mode")) {
      const auto m = j.at("support_mode").get<std::string>();
      if (m == "random")
        c.support_mode = SupportMode::random;
      else if (m == "contiguous")
        c.support_mode = SupportMode::contiguous;
      else
        throw ParseError("support_mode must be 'random' or 'contiguous'");
    }
    if (j.contains("contiguous_ranges"))
      for (const auto& r : j.at("contiguous_ranges")) {
        const auto v = r.get<std::vector<int>>();
        if (v.size() != 2) throw ParseError("contiguous range must be [first, last]");
        c.contiguous_ranges.push_back({v[0] - 1, v[1] - 1});
      }
    if (j.contains("correlated_blocks")) c.correlated_blocks = j.at("correlated_blocks").get<int>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Metrics report

inline std::string task_name(Task t) {
  switch (t) {
    case Task::count_wz: return "wz";
    case Task::count_bn: return "bn";
    case Task::count_ed: return "ed";
    case Task::count_ah: return "ah";
    case Task::pc_true_r: return "pc";
  }
  return "?";
}

inline Task parse_task(const std::string& s) {
  for (Task t : all_tasks())
    if (task_name(t) == s) return t;
  throw Error("unknown task '" + s + "' (expected wz, bn, ed, ah or pc)");
}

inline json bias_rmse_json(const BiasRmse& b) { return {{"rmse", number(b.rmse)}, {"bias", number(b.bias)}}; }

inline json to_json(const MetricsAggregate& a) {
  json j;
  j["completed"] = a.completed;
  j["failed"] = a.failed;
  json rh = json::object();
  for (const auto& [m, b] : a.r_hat) rh[std::string(method_tag(m))] = bias_rmse_json(b);
  j["r_hat"] = rh;
  if (a.tr_f) {
    j["tr_f"] = number(*a.tr_f);
    j["tr_lambda"] = number(*a.tr_lambda);
    j["rmse_c"] = number(*a.rmse_c);
    j["fdr"] = numbers(a.fdr);
    j["power"] = numbers(a.power);
    j["fdr_pooled"] = number(*a.fdr_pooled);
    j["power_pooled"] = number(*a.power_pooled);
    json ah = json::array();
    for (const auto& b : a.alpha_hat) ah.push_back(bias_rmse_json(b));
    j["alpha_hat"] = ah;
    j["median_symm_diff"] = numbers(a.median_symm_diff);
    j["median_eigvals"] = numbers(a.median_eigvals);
    j["median_abs_q"] = matrix(a.median_abs_q);
  }
  return j;
}

inline json to_json(const ReplicationRecord& r) {
  json j;
  j["index"] = r.index;
  j["seed"] = r.seed;
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  json rh = json::object();
  for (const auto& [m, v] : r.r_hat) rh[std::string(method_tag(m))] = v;
  j["r_hat"] = rh;
  if (r.pc) {
    const PcRecord& p = *r.pc;
    j["tr_f"] = number(p.tr_f);
    j["tr_lambda"] = number(p.tr_lambda);
    j["rmse_c"] = number(p.rmse_c);
    j["fdp"] = numbers(p.fdp);
    j["power"] = numbers(p.power);
    j["fdp_pooled"] = number(p.fdp_pooled);
    j["power_pooled"] = number(p.power_pooled);
    j["alpha_hat"] = numbers(p.alpha_hat);
    j["symm_diff"] = numbers(p.symm_diff);
    j["eigvals"] = numbers(p.eigvals);
    j["q"] = matrix(p.q);
  }
  return j;
}

inline json to_json(const MetricsReport& rep) {
  json j;
  j["config"] = to_json(rep.config);
  json opt;
  opt["replications"] = rep.options.replications;
  json tasks = json::array();
  for (Task t : rep.options.tasks) tasks.push_back(task_name(t));
  opt["tasks"] = tasks;
  opt["rmax"] = rep.options.rmax;
  opt["c"] = number(rep.options.c_multiplier);
  j["options"] = opt;
  j["complete"] = rep.complete();
  j["aggregates"] = to_json(rep.aggregates);
  json per = json::array();
  for (const auto& r : rep.per_rep) per.push_back(to_json(r));
  j["per_rep"] = per;
  return j;
}

inline std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

/// Number of factors: N, T, RMSE per method, Bias per method.
inline void write_table_factor_count(std::ostream& out, const MetricsReport& rep) {
  const auto& a = rep.aggregates;
  out << "N,T";
  for (const auto& [m, b] : a.r_hat) out << ",RMSE_" << method_tag(m);
  for (const auto& [m, b] : a.r_hat) out << ",Bias_" << method_tag(m);
  out << '\n' << rep.config.n << ',' << rep.config.t;
  for (const auto& [m, b] : a.r_hat) out << ',' << format_number(b.rmse);
  for (const auto& [m, b] : a.r_hat) out << ',' << format_number(b.bias);
  out << '\n';
}

/// Estimation at the true r: TR^F, TR^Lambda, RMSE^C.
inline void write_table_estimation(std::ostream& out, const MetricsReport& rep) {
  const auto& a = rep.aggregates;
  out << "N,T,TR_F_PC,TR_Lambda_PC,RMSE_C_PC\n"
      << rep.config.n << ',' << rep.config.t << ',' << cell(a.tr_f) << ',' << cell(a.tr_lambda) << ','
      << cell(a.rmse_c) << '\n';
}

/// Support recovery: FDR_k, pooled FDR, Power_k, pooled Power.
inline void write_table_support(std::ostream& out, const MetricsReport& rep) {
  const auto& a = rep.aggregates;
  const int r = rep.config.r;
  out << "N,T";
  for (int k = 1; k <= r; ++k) out << ",FDR_" << k;
  out << ",FDR_bar";
  for (int k = 1; k <= r; ++k) out << ",Power_" << k;
  out << ",Power_bar\n" << rep.config.n << ',' << rep.config.t;
  for (std::size_t k = 0; k < a.fdr.size(); ++k) out << ',' << format_number(a.fdr[k]);
  if (a.fdr.empty()) out << std::string(static_cast<std::size_t>(r), ',');
  out << ',' << cell(a.fdr_pooled);
  for (std::size_t k = 0; k < a.power.size(); ++k) out << ',' << format_number(a.power[k]);
  if (a.power.empty()) out << std::string(static_cast<std::size_t>(r), ',');
  out << ',' << cell(a.power_pooled) << '\n';
}

/// Strength estimation: RMSE and Bias of alpha_hat_k.
inline void write_table_strength(std::ostream& out, const MetricsReport& rep) {
  const auto& a = rep.aggregates;
  const int r = rep.config.r;
  out << "N,T";
  for (int k = 1; k <= r; ++k) out << ",RMSE_alpha_" << k;
  for (int k = 1; k <= r; ++k) out << ",Bias_alpha_" << k;
  out << '\n' << rep.config.n << ',' << rep.config.t;
  if (a.alpha_hat.empty()) {
    out << std::string(static_cast<std::size_t>(2 * r), ',');
  } else {
    for (const auto& b : a.alpha_hat) out << ',' << format_number(b.rmse);
    for (const auto& b : a.alpha_hat) out << ',' << format_number(b.bias);
  }
  out << '\n';
}

// ---------------------------------------------------------------------------
// Pipeline outputs

/// One row per window endpoint: r_hat per method, then alpha_1..alpha_rmax
/// (empty cells past the window's r_hat).
inline void write_rolling_csv(std::ostream& out, const RollingResult& res, int rmax) {
  out << "endpoint";
  for (CountMethod m : res.methods) out << ",r_" << method_tag(m);
  for (int k = 1; k <= rmax; ++k) out << ",alpha_" << k;
  out << '\n';
  for (const auto& w : res.windows) {
    out << csv::quote_if_needed(w.endpoint);
    for (CountMethod m : res.methods) out << ',' << w.r_hat.at(m);
    for (int k = 0; k < rmax; ++k) {
      out << ',';
      if (k < static_cast<int>(w.strengths.size())) out << format_number(w.strengths[static_cast<std::size_t>(k)]);
    }
    out << '\n';
  }
}

/// Metadata lines start with '#'; then a header row and one row per series.
inline void write_heatmap_csv(std::ostream& out, const HeatmapExport& h) {
  out << "# period: " << h.first_period << " to " << h.last_period << '\n';
  out << "# threshold: " << format_number(h.threshold) << '\n';
  out << "# censor: " << format_number(kHeatmapCensor) << '\n';
  out << "series";
  for (const auto& c : h.column_labels) out << ',' << csv::quote_if_needed(c);
  out << '\n';
  for (Eigen::Index i = 0; i < h.values.rows(); ++i) {
    out << csv::quote_if_needed(h.row_labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < h.values.cols(); ++k) out << ',' << format_number(h.values(i, k));
    out << '\n';
  }
}

}  // namespace wfm::io
