#pragma once

// Sparse weak-factor data-generating process:
//   X_it = lambda_i' F_t + e_it
//   F_1t = 0.5 F_1,t-1 + u_1t,  F_kt = (-0.8)^k F_1t + u_kt  (k >= 2)
// Factor k loads on floor(N^alpha_k) randomly chosen units with N(0,1)
// loadings. Errors are unit-variance t(5) draws mixed through a block-diagonal
// covariance with 4 x 4 blocks, floor(N^0.3) of which are Toeplitz 0.5^|m-n|.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wfm/error.hpp"
#include "wfm/panel.hpp"
#include "wfm/sparsity.hpp"

namespace wfm {

// ---------------------------------------------------------------------------
// Seeds

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent stream seed for child `index` of `master`. Depends only on the
/// pair, so replication i never sees replication j's stream.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Configuration

enum class SupportMode { random, contiguous };

/// Inclusive 0-based index range.
struct IndexRange {
  int first = 0;
  int last = 0;
  int size() const noexcept { return last - first + 1; }
};

inline constexpr int kDefaultBurnIn = 100;

/// floor(N^alpha), guarded against pow() landing just below an integer.
inline int support_size(Eigen::Index n, double alpha) {
  return static_cast<int>(std::floor(std::pow(static_cast<double>(n), alpha) + 1e-9));
}

/// What is done to each simulated series before estimation.
enum class Preprocess { none, demean, standardize };

struct SimConfig {
  int n = 200;
  int t = 200;
  int r = 3;
  std::vector<double> alpha{0.9, 0.75, 0.6};
  std::uint64_t seed = 1;
  int burn_in = kDefaultBurnIn;
  SupportMode support_mode = SupportMode::random;
  std::vector<IndexRange> contiguous_ranges;

  /// Replaces the floor(N^0.3) correlated-block count (test hook).
  std::optional<int> correlated_blocks;
  /// Drops the idiosyncratic errors entirely (test hook).
  bool zero_noise = false;
  Preprocess preprocess = Preprocess::standardize;

  void validate() const {
    if (n < 4) throw DomainError("simulation: N must be at least 4");
    if (t < 2) throw DomainError("simulation: T must be at least 2");
    if (r < 1) throw DomainError("simulation: r must be positive");
    if (static_cast<int>(alpha.size()) != r)
      throw DomainError("simulation: alpha has " + std::to_string(alpha.size()) + " entries for r = " +
                        std::to_string(r));
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      if (!(alpha[k] > 0.5 && alpha[k] <= 1.0)) throw DomainError("simulation: alpha must lie in (0.5, 1]");
      if (k > 0 && alpha[k] > alpha[k - 1]) throw DomainError("simulation: alpha must be nonincreasing");
      if (support_size(n, alpha[k]) < 1) throw DomainError("simulation: empty loading support");
    }
    if (burn_in < 50) throw DomainError("simulation: burn_in must be at least 50");
    const bool ranges = !contiguous_ranges.empty();
    if (ranges != (support_mode == SupportMode::contiguous))
      throw DomainError("simulation: contiguous ranges are required exactly in contiguous support mode");
    if (correlated_blocks && *correlated_blocks < 0)
      throw DomainError("simulation: correlated block count must be nonnegative");
  }
};

// ---------------------------------------------------------------------------
// Generators

/// T x r factor matrix. Factor 1 is a stationary AR(1) started from its
/// stationary law N(0, 4/3) and run through burn_in discarded steps.
inline Eigen::MatrixXd gen_factors(int t, int r, std::uint64_t seed, int burn_in = kDefaultBurnIn) {
  if (t < 1 || r < 1) throw DomainError("gen_factors: T and r must be positive");
  if (burn_in < 50) throw DomainError("gen_factors: burn_in must be at least 50");
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  constexpr double kPhi = 0.5;
  double f1 = z(rng) * std::sqrt(1.0 / (1.0 - kPhi * kPhi));
  for (int b = 0; b < burn_in; ++b) f1 = kPhi * f1 + z(rng);

  Eigen::MatrixXd f(t, r);
  for (int s = 0; s < t; ++s) {
    f1 = kPhi * f1 + z(rng);
    f(s, 0) = f1;
    for (int k = 2; k <= r; ++k) f(s, k - 1) = std::pow(-0.8, k) * f1 + z(rng);
  }
  return f;
}

struct LoadingDraw {
  Eigen::MatrixXd lambda;          // N x r
  std::vector<IndexSet> supports;  // sorted
};

inline LoadingDraw gen_loadings(int n, const std::vector<double>& alpha, std::uint64_t seed,
                                SupportMode mode = SupportMode::random,
                                const std::vector<IndexRange>& ranges = {}) {
  const auto r = static_cast<int>(alpha.size());
  if (mode == SupportMode::contiguous && static_cast<int>(ranges.size()) != r)
    throw DomainError("gen_loadings: need one contiguous range per factor");
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  LoadingDraw out;
  out.lambda = Eigen::MatrixXd::Zero(n, r);
  out.supports.resize(static_cast<std::size_t>(r));
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int k = 0; k < r; ++k) {
    const int size = support_size(n, alpha[static_cast<std::size_t>(k)]);
    IndexSet& support = out.supports[static_cast<std::size_t>(k)];
    if (mode == SupportMode::contiguous) {
      const IndexRange& range = ranges[static_cast<std::size_t>(k)];
      if (range.first < 0 || range.last >= n || range.size() != size)
        throw DomainError("gen_loadings: range for factor " + std::to_string(k + 1) + " has " +
                          std::to_string(range.size()) + " units, expected floor(N^alpha) = " +
                          std::to_string(size));
      support.resize(static_cast<std::size_t>(size));
      std::iota(support.begin(), support.end(), range.first);
    } else {
      // Partial Fisher-Yates: the first `size` slots are a uniform subset.
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < size; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
      }
      support.assign(pool.begin(), pool.begin() + size);
      std::sort(support.begin(), support.end());
    }
    for (int i : support) out.lambda(i, k) = z(rng);
  }
  return out;
}

/// Block-diagonal covariance stored block by block.
struct BlockCovariance {
  std::vector<Eigen::MatrixXd> blocks;

  Eigen::Index dim() const {
    Eigen::Index d = 0;
    for (const auto& b : blocks) d += b.rows();
    return d;
  }

  Eigen::MatrixXd dense() const {
    const Eigen::Index d = dim();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
      m.block(at, at, b.rows(), b.cols()) = b;
      at += b.rows();
    }
    return m;
  }
};

struct ErrorDraw {
  Eigen::MatrixXd e;  // N x T
  BlockCovariance sigma;
};

inline constexpr int kErrorBlock = 4;
inline constexpr double kErrorDof = 5.0;

inline int default_correlated_blocks(int n) { return support_size(n, 0.3); }

/// N x T errors with covariance sigma. A trailing block of N mod 4 units is
/// an identity block and never correlated.
inline ErrorDraw gen_errors(int n, int t, std::uint64_t seed, std::optional<int> correlated_blocks = std::nullopt) {
  if (n < kErrorBlock) throw DomainError("gen_errors: N must be at least 4");
  Rng rng(seed);
  const int full = n / kErrorBlock;
  const int tail = n % kErrorBlock;
  const int ncorr = std::min(full, correlated_blocks.value_or(default_correlated_blocks(n)));

  std::vector<int> order(static_cast<std::size_t>(full));
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < ncorr; ++i) {
    std::uniform_int_distribution<int> pick(i, full - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<bool> correlated(static_cast<std::size_t>(full), false);
  for (int i = 0; i < ncorr; ++i) correlated[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  Eigen::MatrixXd toeplitz(kErrorBlock, kErrorBlock);
  for (int a = 0; a < kErrorBlock; ++a)
    for (int b = 0; b < kErrorBlock; ++b) toeplitz(a, b) = std::pow(0.5, std::abs(a - b));
  const Eigen::MatrixXd chol = toeplitz.llt().matrixL();

  ErrorDraw out;
  for (int b = 0; b < full; ++b)
    out.sigma.blocks.push_back(correlated[static_cast<std::size_t>(b)]
                                   ? toeplitz
                                   : Eigen::MatrixXd::Identity(kErrorBlock, kErrorBlock));
  if (tail > 0) out.sigma.blocks.push_back(Eigen::MatrixXd::Identity(tail, tail));

  std::student_t_distribution<double> student(kErrorDof);
  const double unit = std::sqrt((kErrorDof - 2.0) / kErrorDof);
  out.e.resize(n, t);
  for (int s = 0; s < t; ++s)
    for (int i = 0; i < n; ++i) out.e(i, s) = unit * student(rng);
  for (int b = 0; b < full; ++b)
    if (correlated[static_cast<std::size_t>(b)])
      out.e.middleRows(b * kErrorBlock, kErrorBlock) = chol * out.e.middleRows(b * kErrorBlock, kErrorBlock);
  return out;
}

// ---------------------------------------------------------------------------
// Panel assembly

struct SimTruth {
  Eigen::MatrixXd f0;       // T x r
  Eigen::MatrixXd lambda0;  // N x r
  std::vector<IndexSet> supports0;
  Eigen::MatrixXd c0;  // N x T, lambda0 * f0'
  BlockCovariance sigma_e;
  Eigen::VectorXd location;  // subtracted from each raw series
  Eigen::VectorXd scale;     // each centred series was divided by this
  bool centred = false;

  /// Truth in the units of the estimation panel, so that
  /// panel = common_std() + transformed errors.
  Eigen::MatrixXd loadings_std() const { return lambda0.array().colwise() / scale.array(); }
  Eigen::MatrixXd factors_std() const {
    if (!centred) return f0;
    return f0.rowwise() - f0.colwise().mean();
  }
  Eigen::MatrixXd common_std() const { return loadings_std() * factors_std().transpose(); }
};

struct SimulatedPanel {
  Panel panel;
  SimTruth truth;
};

enum class SimStream : std::uint64_t { factors = 1, loadings = 2, errors = 3 };

inline SimulatedPanel simulate_panel(const SimConfig& cfg) {
  cfg.validate();
  SimulatedPanel out;
  SimTruth& tr = out.truth;
  tr.f0 = gen_factors(cfg.t, cfg.r, derive_seed(cfg.seed, static_cast<std::uint64_t>(SimStream::factors)),
                      cfg.burn_in);
  LoadingDraw ld = gen_loadings(cfg.n, cfg.alpha,
                                derive_seed(cfg.seed, static_cast<std::uint64_t>(SimStream::loadings)),
                                cfg.support_mode, cfg.contiguous_ranges);
  tr.lambda0 = std::move(ld.lambda);
  tr.supports0 = std::move(ld.supports);
  tr.c0 = tr.lambda0 * tr.f0.transpose();

  Eigen::MatrixXd x = tr.c0;
  if (cfg.zero_noise) {
    tr.sigma_e.blocks.assign(1, Eigen::MatrixXd::Identity(cfg.n, cfg.n));
  } else {
    ErrorDraw err = gen_errors(cfg.n, cfg.t, derive_seed(cfg.seed, static_cast<std::uint64_t>(SimStream::errors)),
                               cfg.correlated_blocks);
    x += err.e;
    tr.sigma_e = std::move(err.sigma);
  }

  tr.location = Eigen::VectorXd::Zero(cfg.n);
  tr.scale = Eigen::VectorXd::Ones(cfg.n);
  tr.centred = cfg.preprocess != Preprocess::none;
  switch (cfg.preprocess) {
    case Preprocess::none:
      out.panel = Panel::from_matrix(std::move(x));
      break;
    case Preprocess::demean:
      tr.location = x.rowwise().mean();
      x.colwise() -= tr.location;
      out.panel = Panel::from_matrix(std::move(x));
      break;
    case Preprocess::standardize: {
      const RowMoments m = row_moments(x);
      tr.location = m.mean;
      tr.scale = m.sd;
      out.panel = standardize(Panel::from_matrix(std::move(x)));
      break;
    }
  }
  return out;
}

}  // namespace wfm
