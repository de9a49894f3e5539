#pragma once

// Principal-component estimation of an approximate factor model.
//
// Factors are sqrt(T) times the leading eigenvectors of the T x T matrix
// X'X/(NT); loadings are XF/T. The T x T form is used even when N < T so that
// F'F/T = I_r holds for every panel shape.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "wfm/error.hpp"
#include "wfm/panel.hpp"

namespace wfm {

/// Full symmetric eigendecomposition, eigenvalues nonincreasing.
struct SymEig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns are unit eigenvectors
};

/// Flips v so its largest-magnitude entry (lowest index on ties) is positive.
inline void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  if (v.size() == 0) return;
  Eigen::Index arg = 0;
  double best = std::abs(v(0));
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > best) {
      best = std::abs(v(i));
      arg = i;
    }
  }
  if (v(arg) < 0.0) v = -v;
}

inline SymEig eig_sym_desc(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error("eig_sym_desc: matrix is not square");
  if (!m.allFinite()) throw Error("eig_sym_desc: non-finite entry");
  const double scale = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
    throw Error("eig_sym_desc: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("eig_sym_desc: solver did not converge");

  const Eigen::Index n = m.rows();
  SymEig out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < n; ++j) normalize_sign(out.vectors.col(j));
  return out;
}

/// X'X/(NT), symmetrized.
inline Eigen::MatrixXd gram(const Eigen::MatrixXd& x) {
  const double nt = static_cast<double>(x.rows()) * static_cast<double>(x.cols());
  if (nt <= 0) throw Error("gram: empty panel");
  Eigen::MatrixXd g(x.cols(), x.cols());
  g.setZero();
  g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  g = g.selfadjointView<Eigen::Lower>();
  g /= nt;
  return 0.5 * (g + g.transpose());
}

inline Eigen::MatrixXd gram(const Panel& panel) { return gram(panel.values); }

/// Result of a principal-component fit with r factors.
struct PcFit {
  int r = 0;
  Eigen::MatrixXd factors;   // T x r, F'F/T = I
  Eigen::MatrixXd loadings;  // N x r, XF/T
  Eigen::VectorXd eigvals;   // r leading eigenvalues of X'X/(NT)
  Eigen::MatrixXd common;    // N x T, loadings * factors'
  Eigen::MatrixXd resid;     // N x T, X - common
  std::vector<std::string> notes;
};

/// One eigendecomposition of X'X/(NT) shared by every fit on the same panel.
class PcDecomposition {
 public:
  explicit PcDecomposition(Eigen::MatrixXd x, bool standardized = true)
      : x_(std::make_shared<const Eigen::MatrixXd>(std::move(x))), standardized_(standardized) {
    if (x_->rows() == 0 || x_->cols() == 0) throw Error("pc: empty panel");
    if (!x_->allFinite()) throw Error("pc: non-finite value in panel");
    eig_ = eig_sym_desc(gram(*x_));
  }

  explicit PcDecomposition(const Panel& panel) : PcDecomposition(panel.values, panel.standardized) {}

  Eigen::Index n() const noexcept { return x_->rows(); }
  Eigen::Index t() const noexcept { return x_->cols(); }
  const Eigen::MatrixXd& data() const noexcept { return *x_; }
  const SymEig& eig() const noexcept { return eig_; }

  /// All T eigenvalues of X'X/(NT), nonincreasing.
  const Eigen::VectorXd& eigenvalues() const noexcept { return eig_.values; }

  int max_rank() const noexcept { return static_cast<int>(std::min(n(), t())); }

  Eigen::MatrixXd factors(int r) const {
    check_rank(r);
    return std::sqrt(static_cast<double>(t())) * eig_.vectors.leftCols(r);
  }

  PcFit fit(int r) const {
    check_rank(r);
    PcFit f;
    f.r = r;
    f.factors = factors(r);
    f.loadings = (*x_) * f.factors / static_cast<double>(t());
    f.eigvals = eig_.values.head(r);
    f.common = f.loadings * f.factors.transpose();
    f.resid = (*x_) - f.common;
    if (!standardized_) f.notes.emplace_back("input panel is not standardized");
    return f;
  }

  /// (1/NT) * sum of squared residuals of the k-factor fit; k = 0 gives the
  /// mean square of X.
  double mean_sq_resid(int k) const {
    if (k == 0) return x_->squaredNorm() / (static_cast<double>(n()) * static_cast<double>(t()));
    check_rank(k);
    const Eigen::MatrixXd f = factors(k);
    const Eigen::MatrixXd lambda = (*x_) * f / static_cast<double>(t());
    return ((*x_) - lambda * f.transpose()).squaredNorm() /
           (static_cast<double>(n()) * static_cast<double>(t()));
  }

 private:
  void check_rank(int r) const {
    if (r < 1 || r > max_rank())
      throw DomainError("number of factors " + std::to_string(r) + " outside 1.." +
                        std::to_string(max_rank()));
  }

  std::shared_ptr<const Eigen::MatrixXd> x_;
  bool standardized_;
  SymEig eig_;
};

inline PcFit pc_fit(const Panel& panel, int r) { return PcDecomposition(panel).fit(r); }

/// Mean squared residual of the rmax-factor fit, the noise-variance estimate
/// used by the eigenvalue threshold rule.
inline double sigma_hat(const PcDecomposition& pc, int rmax) { return pc.mean_sq_resid(rmax); }

inline double sigma_hat(const Panel& panel, int rmax) { return sigma_hat(PcDecomposition(panel), rmax); }

}  // namespace wfm
