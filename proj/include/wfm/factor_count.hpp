#pragma once

// Selecting the number of factors: singular-value thresholding (WZ) plus the
// Bai-Ng IC_p1, Onatski ED and Ahn-Horenstein eigenvalue-ratio baselines.
// Every selector accepts a shared PcDecomposition so one eigendecomposition
// serves all four.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wfm/error.hpp"
#include "wfm/pc.hpp"

namespace wfm {

enum class CountMethod { wz_svt, bn_icp1, ed, ah };

inline constexpr CountMethod kAllCountMethods[] = {CountMethod::wz_svt, CountMethod::bn_icp1,
                                                   CountMethod::ed, CountMethod::ah};

inline std::string_view method_tag(CountMethod m) noexcept {
  switch (m) {
    case CountMethod::wz_svt: return "wz";
    case CountMethod::bn_icp1: return "bn";
    case CountMethod::ed: return "ed";
    case CountMethod::ah: return "ah";
  }
  return "?";
}

inline CountMethod parse_method(std::string_view tag) {
  for (CountMethod m : kAllCountMethods)
    if (method_tag(m) == tag) return m;
  throw Error("unknown factor-count method '" + std::string(tag) + "' (expected wz, bn, ed or ah)");
}

inline constexpr int kDefaultRmax = 8;

/// One row of selector output: the per-k statistic and the threshold or
/// criterion it is judged by.
struct CountDiagnostic {
  int k = 0;
  double statistic = 0.0;
  double criterion = 0.0;
};

struct EdIteration {
  int j = 0;           // first eigenvalue index of the regression window (1-based)
  double slope = 0.0;  // OLS slope on the (j-1)^{2/3} grid
  double delta = 0.0;  // 2|slope|
  int candidate = 0;
};

struct FactorCountResult {
  CountMethod method = CountMethod::wz_svt;
  int r_hat = 0;
  int rmax = 0;
  std::vector<CountDiagnostic> diagnostics;
  std::vector<EdIteration> iterations;  // ED only
  std::vector<std::string> notes;
};

namespace detail {

inline void check_rmax(const PcDecomposition& pc, int rmax, int extra, std::string_view who) {
  if (rmax < 1) throw DomainError(std::string(who) + ": rmax must be positive");
  if (rmax + extra > pc.max_rank())
    throw DomainError(std::string(who) + ": rmax = " + std::to_string(rmax) + " needs min(N,T) >= " +
                      std::to_string(rmax + extra) + ", panel has " + std::to_string(pc.max_rank()));
}

// Eigenvalues below this fraction of the total are treated as exact zeros.
inline constexpr double kRankTolerance = 1e-12;

inline int numerical_rank(const Eigen::VectorXd& eigvals) {
  const double total = eigvals.cwiseMax(0.0).sum();
  if (total <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < eigvals.size(); ++i)
    if (eigvals(i) > kRankTolerance * total) ++rank;
  return rank;
}

inline bool negligible_residual(double v, const PcDecomposition& pc) {
  return v <= kRankTolerance * pc.mean_sq_resid(0);
}

}  // namespace detail

/// r = max{k <= rmax : V_k >= sigma^2 N^{-1/2} (ln ln N)^{1/2}}, zero if none.
inline FactorCountResult select_r_svt(const PcDecomposition& pc, int rmax = kDefaultRmax) {
  detail::check_rmax(pc, rmax, 0, "select_r_svt");
  if (pc.n() < 16) throw DomainError("select_r_svt: N must be at least 16 so that ln ln N > 0");
  FactorCountResult res;
  res.method = CountMethod::wz_svt;
  res.rmax = rmax;

  const double n = static_cast<double>(pc.n());
  const double s2 = sigma_hat(pc, rmax);
  const double thr = s2 * std::sqrt(std::log(std::log(n))) / std::sqrt(n);
  const Eigen::VectorXd& v = pc.eigenvalues();
  for (int k = 1; k <= rmax; ++k) res.diagnostics.push_back({k, v(k - 1), thr});

  if (detail::negligible_residual(s2, pc)) {
    res.r_hat = std::min(detail::numerical_rank(v), rmax);
    res.notes.emplace_back("noise variance estimate is zero; returned numerical rank capped at rmax");
    return res;
  }
  for (int k = rmax; k >= 1; --k) {
    if (v(k - 1) >= thr) {
      res.r_hat = k;
      break;
    }
  }
  return res;
}

/// Bai-Ng IC_p1 minimized over k = 1..rmax.
inline FactorCountResult select_r_icp1(const PcDecomposition& pc, int rmax = kDefaultRmax) {
  detail::check_rmax(pc, rmax, 0, "select_r_icp1");
  FactorCountResult res;
  res.method = CountMethod::bn_icp1;
  res.rmax = rmax;

  const double n = static_cast<double>(pc.n());
  const double t = static_cast<double>(pc.t());
  const double penalty = (n + t) / (n * t) * std::log(n * t / (n + t));
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= rmax; ++k) {
    const double v = pc.mean_sq_resid(k);
    if (detail::negligible_residual(v, pc)) {
      res.diagnostics.push_back({k, v, -std::numeric_limits<double>::infinity()});
      if (res.notes.empty()) {
        res.r_hat = k;
        res.notes.emplace_back("rank-deficient: residual variance vanishes at k = " + std::to_string(k));
      }
      continue;
    }
    const double ic = std::log(v) + k * penalty;
    res.diagnostics.push_back({k, v, ic});
    if (res.notes.empty() && ic < best) {
      best = ic;
      res.r_hat = k;
    }
  }
  return res;
}

/// Onatski's edge-distribution estimator on the eigenvalues of XX'/T.
inline FactorCountResult select_r_ed(const PcDecomposition& pc, int rmax = kDefaultRmax) {
  detail::check_rmax(pc, rmax, 5, "select_r_ed");
  FactorCountResult res;
  res.method = CountMethod::ed;
  res.rmax = rmax;

  // Nonzero eigenvalues of XX'/T are N times those of X'X/(NT).
  const double n = static_cast<double>(pc.n());
  const Eigen::VectorXd gamma = n * pc.eigenvalues().head(rmax + 5);
  auto g = [&](int j) { return gamma(j - 1); };  // 1-based

  constexpr int kWindow = 5;
  constexpr int kMaxIterations = 10;
  auto candidate_for = [&](double delta) {
    int r = 0;
    for (int k = 1; k <= rmax; ++k)
      if (g(k) - g(k + 1) >= delta) r = k;
    return r;
  };

  int j = rmax + 1;
  std::optional<int> previous;
  bool converged = false;
  for (int it = 0; it < kMaxIterations; ++it) {
    Eigen::VectorXd y(kWindow), x(kWindow);
    for (int m = 0; m < kWindow; ++m) {
      y(m) = g(j + m);
      x(m) = std::pow(static_cast<double>(j - 1 + m), 2.0 / 3.0);
    }
    const double xm = x.mean();
    const double ym = y.mean();
    const double slope = ((x.array() - xm) * (y.array() - ym)).sum() / (x.array() - xm).square().sum();
    const double delta = 2.0 * std::abs(slope);
    const int cand = candidate_for(delta);
    res.iterations.push_back({j, slope, delta, cand});
    res.r_hat = cand;
    if (previous && *previous == cand) {
      converged = true;
      break;
    }
    previous = cand;
    j = cand + 1;
  }
  if (!converged) res.notes.emplace_back("max-iterations: no fixed point after 10 iterations");

  const double delta = res.iterations.back().delta;
  for (int k = 1; k <= rmax; ++k) res.diagnostics.push_back({k, g(k) - g(k + 1), delta});
  return res;
}

/// Ahn-Horenstein eigenvalue ratio mu_k / mu_{k+1}, maximized over k = 1..rmax.
inline FactorCountResult select_r_ah(const PcDecomposition& pc, int rmax = kDefaultRmax) {
  detail::check_rmax(pc, rmax, 1, "select_r_ah");
  FactorCountResult res;
  res.method = CountMethod::ah;
  res.rmax = rmax;

  const Eigen::VectorXd& mu = pc.eigenvalues();
  const double zero = detail::kRankTolerance * mu.cwiseMax(0.0).sum();
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= rmax; ++k) {
    const double num = mu(k - 1);
    const double den = mu(k);
    const double ratio = den > zero ? num / den : std::numeric_limits<double>::infinity();
    res.diagnostics.push_back({k, ratio, num});
    if (ratio > best) {
      best = ratio;
      res.r_hat = k;
    }
  }
  return res;
}

inline FactorCountResult select_r(const PcDecomposition& pc, CountMethod method, int rmax = kDefaultRmax) {
  switch (method) {
    case CountMethod::wz_svt: return select_r_svt(pc, rmax);
    case CountMethod::bn_icp1: return select_r_icp1(pc, rmax);
    case CountMethod::ed: return select_r_ed(pc, rmax);
    case CountMethod::ah: return select_r_ah(pc, rmax);
  }
  throw Error("unknown factor-count method");
}

inline FactorCountResult select_r_svt(const Panel& p, int rmax = kDefaultRmax) {
  return select_r_svt(PcDecomposition(p), rmax);
}
inline FactorCountResult select_r_icp1(const Panel& p, int rmax = kDefaultRmax) {
  return select_r_icp1(PcDecomposition(p), rmax);
}
inline FactorCountResult select_r_ed(const Panel& p, int rmax = kDefaultRmax) {
  return select_r_ed(PcDecomposition(p), rmax);
}
inline FactorCountResult select_r_ah(const Panel& p, int rmax = kDefaultRmax) {
  return select_r_ah(PcDecomposition(p), rmax);
}

}  // namespace wfm
