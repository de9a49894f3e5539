#pragma once

// Rolling-window and subperiod analysis of an observed macro panel.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "wfm/error.hpp"
#include "wfm/factor_count.hpp"
#include "wfm/panel.hpp"
#include "wfm/pc.hpp"
#include "wfm/sparsity.hpp"

namespace wfm {

inline constexpr int kDefaultWindow = 120;
inline constexpr double kHeatmapCensor = 3.0;

struct WindowRecord {
  std::string endpoint;
  std::map<CountMethod, int> r_hat;
  std::vector<double> strengths;  // alpha_hat at r_hat(WZ), sorted nonincreasing
  std::vector<std::string> notes;
};

struct RollingResult {
  int window_length = kDefaultWindow;
  std::vector<CountMethod> methods;
  std::vector<WindowRecord> windows;
};

struct RollingOptions {
  int window = kDefaultWindow;
  std::vector<CountMethod> methods{CountMethod::wz_svt, CountMethod::bn_icp1, CountMethod::ed};
  int rmax = kDefaultRmax;
  double c_multiplier = 1.0;
  int workers = 1;
};

namespace detail {

/// Standardizes a window, dropping series that are constant inside it.
inline Panel standardize_window(const Panel& w, std::vector<std::string>& notes) {
  const RowMoments m = row_moments(w.values);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < w.n(); ++i) {
    const double level = std::max(1.0, std::abs(m.mean(i)));
    if (m.sd(i) > 1e-14 * level)
      keep.push_back(i);
    else
      notes.push_back("constant series dropped: " + w.series_ids[static_cast<std::size_t>(i)]);
  }
  if (static_cast<Eigen::Index>(keep.size()) == w.n()) return standardize(w);
  if (keep.empty()) throw DomainError("every series is constant in the window ending " + w.time_ids.back());
  Panel sub;
  sub.values.resize(static_cast<Eigen::Index>(keep.size()), w.t());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    sub.values.row(static_cast<Eigen::Index>(j)) = w.values.row(keep[j]);
    sub.series_ids.push_back(w.series_ids[static_cast<std::size_t>(keep[j])]);
  }
  if (w.group_ids) {
    sub.group_ids.emplace();
    for (Eigen::Index i : keep) sub.group_ids->push_back((*w.group_ids)[static_cast<std::size_t>(i)]);
  }
  sub.time_ids = w.time_ids;
  return standardize(sub);
}

}  // namespace detail

/// Estimates one window: factor counts for each requested method, then
/// screening and strengths at the WZ count.
inline WindowRecord analyze_window(const Panel& window, const RollingOptions& opt) {
  WindowRecord rec;
  rec.endpoint = window.time_ids.back();
  const Panel std_panel = detail::standardize_window(window, rec.notes);
  const PcDecomposition pc(std_panel);
  for (CountMethod m : opt.methods) rec.r_hat[m] = select_r(pc, m, opt.rmax).r_hat;
  const int r_wz = rec.r_hat.count(CountMethod::wz_svt) ? rec.r_hat[CountMethod::wz_svt]
                                                        : select_r_svt(pc, opt.rmax).r_hat;
  if (r_wz == 0) {
    rec.notes.emplace_back("no factor above the eigenvalue threshold");
    return rec;
  }
  const PcFit fit = pc.fit(r_wz);
  const SparseFit sparse = screen(fit, threshold_value(pc.n(), pc.t(), opt.c_multiplier), opt.c_multiplier);
  rec.strengths = strengths(sparse, pc.n()).alpha_hat;
  std::sort(rec.strengths.begin(), rec.strengths.end(), std::greater<>());
  for (std::size_t k = 0; k < sparse.counts.size(); ++k)
    if (sparse.counts[k] == 0) rec.notes.push_back("reduced factor: PC " + std::to_string(k + 1));
  return rec;
}

/// One window per endpoint t = window..T, step 1.
inline RollingResult rolling_analysis(const Panel& panel, const RollingOptions& opt = {}) {
  if (opt.window < 2) throw DomainError("rolling: window must be at least 2");
  if (opt.window > panel.t())
    throw DomainError("rolling: window " + std::to_string(opt.window) + " exceeds sample length " +
                      std::to_string(panel.t()));
  if (opt.workers < 1) throw DomainError("rolling: workers must be positive");
  panel.validate();

  RollingResult out;
  out.window_length = opt.window;
  out.methods = opt.methods;
  const int count = static_cast<int>(panel.t()) - opt.window + 1;
  out.windows.resize(static_cast<std::size_t>(count));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int w = next.fetch_add(1); w < count; w = next.fetch_add(1))
      out.windows[static_cast<std::size_t>(w)] = analyze_window(panel.time_slice(w, opt.window), opt);
  };
  const int nthreads = std::min(opt.workers, count);
  if (nthreads == 1) {
    work();
  } else {
    // Exceptions must not escape a worker thread.
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));
    {
      std::vector<std::jthread> pool;
      for (int t = 0; t < nthreads; ++t)
        pool.emplace_back([&, t] {
          try {
            work();
          } catch (...) {
            errors[static_cast<std::size_t>(t)] = std::current_exception();
            next.store(count);
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return out;
}

struct HeatmapExport {
  Eigen::MatrixXd values;  // N x r, min(|lambda_hat|, 3)
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  std::vector<double> alpha_hat;
  std::vector<int> strength_rank;  // 1 = strongest
  std::string first_period;
  std::string last_period;
  double threshold = 0.0;
};

/// min(|lambda|, cap) entrywise.
inline Eigen::MatrixXd censored_abs(const Eigen::MatrixXd& lambda, double cap = kHeatmapCensor) {
  return lambda.cwiseAbs().cwiseMin(cap);
}

inline std::string heatmap_row_label(const Panel& p, std::size_t i) {
  if (p.group_ids) return "#" + std::to_string((*p.group_ids)[i]) + " " + p.series_ids[i];
  return p.series_ids[i];
}

/// Censored |lambda_hat| over the periods [from, to] (inclusive time labels).
/// The number of factors is the WZ count unless `r` is given.
inline HeatmapExport subperiod_heatmap(const Panel& panel, const std::string& from, const std::string& to,
                                       int rmax = kDefaultRmax, double c_multiplier = 1.0,
                                       std::optional<int> r = std::nullopt) {
  const auto find = [&](const std::string& label) {
    const auto it = std::find(panel.time_ids.begin(), panel.time_ids.end(), label);
    if (it == panel.time_ids.end()) throw DomainError("heatmap: period '" + label + "' not in panel");
    return static_cast<Eigen::Index>(it - panel.time_ids.begin());
  };
  const Eigen::Index first = find(from);
  const Eigen::Index last = find(to);
  if (last < first) throw DomainError("heatmap: period range is reversed");

  std::vector<std::string> notes;
  const Panel sub = detail::standardize_window(panel.time_slice(first, last - first + 1), notes);
  const PcDecomposition pc(sub);
  const int k = r ? *r : select_r_svt(pc, rmax).r_hat;

  HeatmapExport h;
  h.first_period = from;
  h.last_period = to;
  h.threshold = threshold_value(pc.n(), pc.t(), c_multiplier);
  for (std::size_t i = 0; i < sub.series_ids.size(); ++i) h.row_labels.push_back(heatmap_row_label(sub, i));
  if (k == 0) {
    h.values.resize(sub.n(), 0);
    return h;
  }
  const PcFit fit = pc.fit(k);
  const SparseFit sparse = screen(fit, h.threshold, c_multiplier);
  h.alpha_hat = strengths(sparse, pc.n()).alpha_hat;
  h.values = censored_abs(sparse.lambda_hat);

  // Rank 1 = strongest; ties keep PC order.
  std::vector<int> order(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) order[static_cast<std::size_t>(j)] = j;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return h.alpha_hat[static_cast<std::size_t>(a)] > h.alpha_hat[static_cast<std::size_t>(b)];
  });
  h.strength_rank.assign(static_cast<std::size_t>(k), 0);
  for (int pos = 0; pos < k; ++pos) h.strength_rank[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos + 1;
  for (int j = 0; j < k; ++j) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "PC%d rank %d (%.3f)", j + 1, h.strength_rank[static_cast<std::size_t>(j)],
                  h.alpha_hat[static_cast<std::size_t>(j)]);
    h.column_labels.emplace_back(buf);
  }
  return h;
}

}  // namespace wfm
