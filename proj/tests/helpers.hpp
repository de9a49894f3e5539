#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "oracles/jacobi.hpp"

namespace testutil {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

inline Eigen::MatrixXd random_symmetric(Eigen::Index n, std::uint64_t seed) {
  const Eigen::MatrixXd a = random_matrix(n, n, seed);
  return 0.5 * (a + a.transpose());
}

inline oracle::Dense to_dense(const Eigen::MatrixXd& m) {
  oracle::Dense d(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return d;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const oracle::Dense& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      m = std::max(m, std::abs(a(i, j) - b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
  return m;
}

/// Low-rank panel Lambda F' with N(0,1) entries, plus optional jitter.
inline Eigen::MatrixXd low_rank(Eigen::Index n, Eigen::Index t, Eigen::Index r, std::uint64_t seed,
                                double jitter = 0.0) {
  Eigen::MatrixXd x = random_matrix(n, r, seed) * random_matrix(t, r, seed + 1).transpose();
  if (jitter > 0.0) x += jitter * random_matrix(n, t, seed + 2);
  return x;
}

}  // namespace testutil
