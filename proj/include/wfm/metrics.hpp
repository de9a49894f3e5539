#pragma once

// Evaluation statistics against simulated truth.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <vector>

#include "wfm/error.hpp"
#include "wfm/sparsity.hpp"

namespace wfm {

/// Tr(A0' P_A A0) / Tr(A0' A0) with P_A the projection onto span(A).
/// Used for both factors (TR^F) and loadings (TR^Lambda).
inline double trace_stat(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate) {
  if (truth.rows() != estimate.rows()) throw Error("trace_stat: row counts differ");
  const Eigen::MatrixXd gram = estimate.transpose() * estimate;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const double cond_floor = 1e-12 * std::max(gram.diagonal().maxCoeff(), 1e-300);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= cond_floor)
    throw Error("trace_stat: estimate'estimate is singular");
  const Eigen::MatrixXd cross = estimate.transpose() * truth;  // k x r
  const double num = (cross.transpose() * ldlt.solve(cross)).trace();
  const double den = truth.squaredNorm();
  if (den <= 0.0) throw Error("trace_stat: truth is zero");
  return num / den;
}

inline double trace_stat_f(const Eigen::MatrixXd& f0, const Eigen::MatrixXd& f_tilde) {
  return trace_stat(f0, f_tilde);
}

inline double trace_stat_lambda(const Eigen::MatrixXd& lambda0, const Eigen::MatrixXd& lambda_tilde) {
  return trace_stat(lambda0, lambda_tilde);
}

inline double rmse_c(const Eigen::MatrixXd& c0, const Eigen::MatrixXd& c_tilde) {
  if (c0.rows() != c_tilde.rows() || c0.cols() != c_tilde.cols()) throw Error("rmse_c: shapes differ");
  return std::sqrt((c_tilde - c0).squaredNorm() / static_cast<double>(c0.size()));
}

struct SupportAccuracy {
  double fdp = 0.0;    // |S^c n S_hat| / (|S_hat| v 1)
  double power = 0.0;  // |S n S_hat| / (|S| v 1)
};

inline std::size_t intersection_size(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out.size();
}

inline SupportAccuracy fdr_power(const IndexSet& true_support, const IndexSet& est_support) {
  const auto hits = static_cast<double>(intersection_size(true_support, est_support));
  const auto est = static_cast<double>(est_support.size());
  const auto tru = static_cast<double>(true_support.size());
  return {(est - hits) / std::max(est, 1.0), hits / std::max(tru, 1.0)};
}

/// Pools the (unit, factor) entries of every factor before forming the ratios.
inline SupportAccuracy fdr_power_pooled(const std::vector<IndexSet>& true_supports,
                                        const std::vector<IndexSet>& est_supports) {
  if (true_supports.size() != est_supports.size()) throw Error("fdr_power_pooled: factor counts differ");
  double hits = 0.0, est = 0.0, tru = 0.0;
  for (std::size_t k = 0; k < true_supports.size(); ++k) {
    hits += static_cast<double>(intersection_size(true_supports[k], est_supports[k]));
    est += static_cast<double>(est_supports[k].size());
    tru += static_cast<double>(true_supports[k].size());
  }
  return {(est - hits) / std::max(est, 1.0), hits / std::max(tru, 1.0)};
}

struct RotationSummary {
  Eigen::MatrixXd q;       // F_tilde' F0 / T
  Eigen::MatrixXd scaled;  // |Q_lk| N^{alpha_k - alpha_l} below the diagonal, 0 elsewhere
};

inline RotationSummary rotation_q(const Eigen::MatrixXd& f_tilde, const Eigen::MatrixXd& f0,
                                  const std::vector<double>& alpha = {}, Eigen::Index n = 0) {
  if (f_tilde.rows() != f0.rows() || f_tilde.cols() != f0.cols()) throw Error("rotation_q: shapes differ");
  RotationSummary s;
  s.q = f_tilde.transpose() * f0 / static_cast<double>(f0.rows());
  s.scaled = Eigen::MatrixXd::Zero(s.q.rows(), s.q.cols());
  if (!alpha.empty() && n > 0) {
    if (static_cast<Eigen::Index>(alpha.size()) != s.q.cols()) throw Error("rotation_q: alpha length differs");
    const double nn = static_cast<double>(n);
    for (Eigen::Index l = 0; l < s.q.rows(); ++l)
      for (Eigen::Index k = 0; k < l; ++k)
        s.scaled(l, k) = std::abs(s.q(l, k)) *
                         std::pow(nn, alpha[static_cast<std::size_t>(k)] - alpha[static_cast<std::size_t>(l)]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Summary helpers used by the replication aggregator.

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Median; the average of the two middle values for even sizes.
inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

struct BiasRmse {
  double bias = 0.0;
  double rmse = 0.0;
};

inline BiasRmse bias_rmse(const std::vector<double>& estimates, double truth) {
  if (estimates.empty()) return {std::nan(""), std::nan("")};
  double b = 0.0, s = 0.0;
  for (double e : estimates) {
    b += e - truth;
    s += (e - truth) * (e - truth);
  }
  const double n = static_cast<double>(estimates.size());
  return {b / n, std::sqrt(s / n)};
}

}  // namespace wfm
