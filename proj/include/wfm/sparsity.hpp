#pragma once

// Hard-threshold screening of PC loadings and factor-strength estimation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "wfm/error.hpp"
#include "wfm/pc.hpp"

namespace wfm {

/// Sorted, duplicate-free unit indices (0-based).
using IndexSet = std::vector<int>;

struct SparseFit {
  Eigen::MatrixXd lambda_hat;  // N x r, zero where |loading| <= threshold
  std::vector<IndexSet> supports;
  std::vector<int> counts;
  double threshold = 0.0;
  double c_multiplier = 1.0;
};

enum class StrengthLabel { strong, indeterminate, weak, reduced };

inline std::string_view to_string(StrengthLabel l) noexcept {
  switch (l) {
    case StrengthLabel::strong: return "strong";
    case StrengthLabel::indeterminate: return "indeterminate";
    case StrengthLabel::weak: return "weak";
    case StrengthLabel::reduced: return "reduced";
  }
  return "?";
}

struct StrengthEstimate {
  std::vector<double> alpha_hat;
  std::vector<StrengthLabel> labels;
};

inline constexpr double kStrongStrength = 0.95;
inline constexpr double kWeakStrength = 0.90;

/// c / sqrt(ln(NT)).
inline double threshold_value(double n, double t, double c = 1.0) {
  if (!(c > 0.0)) throw DomainError("threshold multiplier must be positive");
  if (!(n > 0.0 && t > 0.0)) throw DomainError("threshold: N and T must be positive");
  const double nt = n * t;
  if (nt <= 2.0) throw DomainError("threshold: N*T must exceed 2");
  return c / std::sqrt(std::log(nt));
}

inline SparseFit screen(const Eigen::MatrixXd& loadings, double threshold, double c_multiplier = 1.0) {
  if (!(threshold > 0.0)) throw DomainError("screen: threshold must be positive");
  SparseFit s;
  s.threshold = threshold;
  s.c_multiplier = c_multiplier;
  s.lambda_hat = Eigen::MatrixXd::Zero(loadings.rows(), loadings.cols());
  s.supports.resize(static_cast<std::size_t>(loadings.cols()));
  s.counts.assign(static_cast<std::size_t>(loadings.cols()), 0);
  for (Eigen::Index k = 0; k < loadings.cols(); ++k) {
    auto& support = s.supports[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < loadings.rows(); ++i) {
      if (std::abs(loadings(i, k)) > threshold) {
        s.lambda_hat(i, k) = loadings(i, k);
        support.push_back(static_cast<int>(i));
      }
    }
    s.counts[static_cast<std::size_t>(k)] = static_cast<int>(support.size());
  }
  return s;
}

inline SparseFit screen(const PcFit& fit, double threshold, double c_multiplier = 1.0) {
  return screen(fit.loadings, threshold, c_multiplier);
}

inline StrengthLabel classify_strength(double alpha_hat, int count) noexcept {
  if (count == 0) return StrengthLabel::reduced;
  if (alpha_hat >= kStrongStrength) return StrengthLabel::strong;
  if (alpha_hat < kWeakStrength) return StrengthLabel::weak;
  return StrengthLabel::indeterminate;
}

/// alpha_k = ln(D_k)/ln(N), with alpha = 0 when fewer than two loadings survive.
inline StrengthEstimate strengths(const SparseFit& sparse, Eigen::Index n) {
  if (n < 2) throw DomainError("strengths: N must be at least 2");
  StrengthEstimate est;
  const double log_n = std::log(static_cast<double>(n));
  for (int count : sparse.counts) {
    const double a = count >= 2 ? std::log(static_cast<double>(count)) / log_n : 0.0;
    est.alpha_hat.push_back(a);
    est.labels.push_back(classify_strength(a, count));
  }
  return est;
}

inline IndexSet symmetric_difference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// |L0 xor L| / N^alpha.
inline double symm_diff_ratio(const IndexSet& true_support, const IndexSet& est_support, double alpha,
                              Eigen::Index n) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("symm_diff_ratio: alpha must lie in (0, 1]");
  if (n < 1) throw DomainError("symm_diff_ratio: N must be positive");
  return static_cast<double>(symmetric_difference(true_support, est_support).size()) /
         std::pow(static_cast<double>(n), alpha);
}

}  // namespace wfm
