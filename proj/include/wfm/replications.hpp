#pragma once

// Seeded Monte Carlo batches over the simulated DGP. Replication i draws from
// derive_seed(config.seed, i) and its record is stored at slot i, so the
// report does not depend on the number of worker threads.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "wfm/factor_count.hpp"
#include "wfm/metrics.hpp"
#include "wfm/pc.hpp"
#include "wfm/simulate.hpp"
#include "wfm/sparsity.hpp"

namespace wfm {

enum class Task { count_wz, count_bn, count_ed, count_ah, pc_true_r };

inline std::set<Task> all_tasks() {
  return {Task::count_wz, Task::count_bn, Task::count_ed, Task::count_ah, Task::pc_true_r};
}

inline std::optional<CountMethod> count_method_of(Task t) {
  switch (t) {
    case Task::count_wz: return CountMethod::wz_svt;
    case Task::count_bn: return CountMethod::bn_icp1;
    case Task::count_ed: return CountMethod::ed;
    case Task::count_ah: return CountMethod::ah;
    case Task::pc_true_r: return std::nullopt;
  }
  return std::nullopt;
}

struct ReplicationOptions {
  int replications = 1;
  std::set<Task> tasks = all_tasks();
  int rmax = kDefaultRmax;
  double c_multiplier = 1.0;
  int workers = 1;
};

/// Estimates at the true number of factors, compared in the units of the estimation panel.
struct PcRecord {
  double tr_f = 0.0;
  double tr_lambda = 0.0;
  double rmse_c = 0.0;
  std::vector<double> fdp;    // per factor, PC column k paired with true factor k
  std::vector<double> power;
  double fdp_pooled = 0.0;
  double power_pooled = 0.0;
  std::vector<double> alpha_hat;
  std::vector<double> symm_diff;  // |L0_k xor L_k| / N^alpha_k
  std::vector<double> eigvals;
  Eigen::MatrixXd q;
};

struct ReplicationRecord {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::map<CountMethod, int> r_hat;
  std::optional<PcRecord> pc;
};

struct MetricsAggregate {
  int completed = 0;
  int failed = 0;
  std::map<CountMethod, BiasRmse> r_hat;
  std::optional<double> tr_f, tr_lambda, rmse_c;
  std::vector<double> fdr, power;  // per factor
  std::optional<double> fdr_pooled, power_pooled;
  std::vector<BiasRmse> alpha_hat;
  std::vector<double> median_symm_diff;
  std::vector<double> median_eigvals;
  Eigen::MatrixXd median_abs_q;
};

struct MetricsReport {
  SimConfig config;
  ReplicationOptions options;
  std::vector<ReplicationRecord> per_rep;
  MetricsAggregate aggregates;

  bool complete() const noexcept { return aggregates.failed == 0; }
};

/// Runs the requested estimators on one simulated panel.
inline ReplicationRecord run_replication(const SimConfig& base, int index, const ReplicationOptions& opt) {
  ReplicationRecord rec;
  rec.index = index;
  rec.seed = derive_seed(base.seed, static_cast<std::uint64_t>(index));
  try {
    SimConfig cfg = base;
    cfg.seed = rec.seed;
    const SimulatedPanel sim = simulate_panel(cfg);
    const PcDecomposition pc(sim.panel);

    for (Task task : opt.tasks)
      if (auto m = count_method_of(task)) rec.r_hat[*m] = select_r(pc, *m, opt.rmax).r_hat;

    if (opt.tasks.count(Task::pc_true_r)) {
      const SimTruth& truth = sim.truth;
      const PcFit fit = pc.fit(cfg.r);
      PcRecord p;
      const Eigen::MatrixXd f0 = truth.factors_std();
      p.tr_f = trace_stat_f(f0, fit.factors);
      p.tr_lambda = trace_stat_lambda(truth.loadings_std(), fit.loadings);
      p.rmse_c = rmse_c(truth.common_std(), fit.common);

      const SparseFit sparse = screen(fit, threshold_value(cfg.n, cfg.t, opt.c_multiplier), opt.c_multiplier);
      const StrengthEstimate st = strengths(sparse, cfg.n);
      p.alpha_hat = st.alpha_hat;
      for (int k = 0; k < cfg.r; ++k) {
        const auto& s0 = truth.supports0[static_cast<std::size_t>(k)];
        const auto& s1 = sparse.supports[static_cast<std::size_t>(k)];
        const SupportAccuracy acc = fdr_power(s0, s1);
        p.fdp.push_back(acc.fdp);
        p.power.push_back(acc.power);
        p.symm_diff.push_back(symm_diff_ratio(s0, s1, cfg.alpha[static_cast<std::size_t>(k)], cfg.n));
      }
      const SupportAccuracy pooled = fdr_power_pooled(truth.supports0, sparse.supports);
      p.fdp_pooled = pooled.fdp;
      p.power_pooled = pooled.power;
      p.eigvals.assign(fit.eigvals.data(), fit.eigvals.data() + fit.eigvals.size());
      p.q = rotation_q(fit.factors, f0).q;
      rec.pc = std::move(p);
    }
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.r_hat.clear();
    rec.pc.reset();
  }
  return rec;
}

/// Folds per-replication records into summary statistics. Failed records are
/// counted and skipped.
inline MetricsAggregate aggregate(const SimConfig& cfg, const ReplicationOptions& opt,
                                  const std::vector<ReplicationRecord>& recs) {
  MetricsAggregate agg;
  std::map<CountMethod, std::vector<double>> rhat;
  std::vector<double> trf, trl, rc, fdrp, powp;
  const auto r = static_cast<std::size_t>(cfg.r);
  std::vector<std::vector<double>> fdr(r), pw(r), ah(r), sd(r), ev(r);
  std::vector<std::vector<double>> qabs(r * r);
  bool any_pc = false;
  for (const auto& rec : recs) {
    if (!rec.ok) {
      ++agg.failed;
      continue;
    }
    ++agg.completed;
    for (const auto& [m, v] : rec.r_hat) rhat[m].push_back(v);
    if (!rec.pc) continue;
    any_pc = true;
    const PcRecord& p = *rec.pc;
    trf.push_back(p.tr_f);
    trl.push_back(p.tr_lambda);
    rc.push_back(p.rmse_c);
    fdrp.push_back(p.fdp_pooled);
    powp.push_back(p.power_pooled);
    for (std::size_t k = 0; k < r; ++k) {
      fdr[k].push_back(p.fdp[k]);
      pw[k].push_back(p.power[k]);
      ah[k].push_back(p.alpha_hat[k]);
      sd[k].push_back(p.symm_diff[k]);
      ev[k].push_back(p.eigvals[k]);
      for (std::size_t j = 0; j < r; ++j)
        qabs[k * r + j].push_back(std::abs(p.q(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j))));
    }
  }
  for (Task t : opt.tasks)
    if (auto m = count_method_of(t)) agg.r_hat[*m] = bias_rmse(rhat[*m], static_cast<double>(cfg.r));
  if (any_pc) {
    agg.tr_f = mean_of(trf);
    agg.tr_lambda = mean_of(trl);
    agg.rmse_c = mean_of(rc);
    agg.fdr_pooled = mean_of(fdrp);
    agg.power_pooled = mean_of(powp);
    agg.median_abs_q.resize(cfg.r, cfg.r);
    for (std::size_t k = 0; k < r; ++k) {
      agg.fdr.push_back(mean_of(fdr[k]));
      agg.power.push_back(mean_of(pw[k]));
      agg.alpha_hat.push_back(bias_rmse(ah[k], cfg.alpha[k]));
      agg.median_symm_diff.push_back(median_of(sd[k]));
      agg.median_eigvals.push_back(median_of(ev[k]));
      for (std::size_t j = 0; j < r; ++j)
        agg.median_abs_q(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = median_of(qabs[k * r + j]);
    }
  }
  return agg;
}

/// Runs `opt.replications` seeded replications on up to `opt.workers` threads.
inline MetricsReport run_replications(const SimConfig& cfg, const ReplicationOptions& opt) {
  cfg.validate();
  if (opt.replications < 1) throw DomainError("run_replications: need at least one replication");
  if (opt.workers < 1) throw DomainError("run_replications: workers must be positive");

  MetricsReport report;
  report.config = cfg;
  report.options = opt;
  report.per_rep.resize(static_cast<std::size_t>(opt.replications));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next.fetch_add(1); i < opt.replications; i = next.fetch_add(1))
      report.per_rep[static_cast<std::size_t>(i)] = run_replication(cfg, i, opt);
  };
  const int nthreads = std::min(opt.workers, opt.replications);
  if (nthreads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(work);
  }
  report.aggregates = aggregate(cfg, opt, report.per_rep);
  return report;
}

}  // namespace wfm
