#include <gtest/gtest.h>

#include "wfm/io.hpp"
#include "wfm/replications.hpp"

using namespace wfm;

namespace {

SimConfig small_config() {
  SimConfig cfg;
  cfg.n = 60;
  cfg.t = 50;
  cfg.seed = 1234;
  return cfg;
}

}  // namespace

TEST(Replications, SingleReplicationAggregatesEqualRecord) {
  ReplicationOptions opt;
  opt.replications = 1;
  const MetricsReport rep = run_replications(small_config(), opt);
  ASSERT_EQ(rep.per_rep.size(), 1u);
  const ReplicationRecord& r = rep.per_rep[0];
  ASSERT_TRUE(r.ok);
  ASSERT_TRUE(r.pc);
  const MetricsAggregate& a = rep.aggregates;
  EXPECT_EQ(*a.tr_f, r.pc->tr_f);
  EXPECT_EQ(*a.tr_lambda, r.pc->tr_lambda);
  EXPECT_EQ(*a.rmse_c, r.pc->rmse_c);
  EXPECT_EQ(a.fdr, r.pc->fdp);
  EXPECT_EQ(a.power, r.pc->power);
  for (const auto& [m, v] : r.r_hat) {
    EXPECT_EQ(a.r_hat.at(m).bias, v - 3.0);
    EXPECT_EQ(a.r_hat.at(m).rmse, std::abs(v - 3.0));
  }
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.alpha_hat[k].bias, r.pc->alpha_hat[k] - small_config().alpha[k]);
  EXPECT_TRUE(rep.complete());
}

TEST(Replications, IndependentOfWorkerCount) {
  ReplicationOptions opt;
  opt.replications = 12;
  opt.workers = 1;
  const MetricsReport a = run_replications(small_config(), opt);
  opt.workers = 8;
  const MetricsReport b = run_replications(small_config(), opt);
  EXPECT_EQ(io::to_json(a).dump(), io::to_json(b).dump());
}

TEST(Replications, ReplicationStreamsAreIndependent) {
  // Replication i's record does not depend on how many replications run.
  ReplicationOptions opt;
  opt.replications = 3;
  const MetricsReport a = run_replications(small_config(), opt);
  opt.replications = 7;
  const MetricsReport b = run_replications(small_config(), opt);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_EQ(io::to_json(a.per_rep[i]).dump(), io::to_json(b.per_rep[i]).dump());
  EXPECT_EQ(a.per_rep[1].seed, derive_seed(small_config().seed, 1));
}

TEST(Replications, AggregatesAreFunctionsOfRecords) {
  ReplicationOptions opt;
  opt.replications = 9;
  const SimConfig cfg = small_config();
  const MetricsReport rep = run_replications(cfg, opt);
  const MetricsAggregate again = aggregate(cfg, opt, rep.per_rep);
  EXPECT_EQ(io::to_json(again).dump(), io::to_json(rep.aggregates).dump());
  double s = 0.0;
  for (const auto& r : rep.per_rep) {
    s += r.pc->tr_f;
    for (double f : r.pc->fdp) {
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
    }
    EXPECT_GE(r.pc->tr_f, 0.0);
    EXPECT_LE(r.pc->tr_f, 1.0 + 1e-12);
    EXPECT_LE(r.pc->tr_lambda, 1.0 + 1e-12);
  }
  EXPECT_NEAR(*rep.aggregates.tr_f, s / 9.0, 1e-15);
}

TEST(Replications, FailuresAreRecordedNotFatal) {
  // rmax beyond min(N,T) - 5 makes ED fail in every replication.
  SimConfig cfg = small_config();
  cfg.n = 20;
  cfg.t = 12;
  ReplicationOptions opt;
  opt.replications = 3;
  opt.rmax = 8;
  const MetricsReport rep = run_replications(cfg, opt);
  EXPECT_EQ(rep.aggregates.failed, 3);
  EXPECT_FALSE(rep.complete());
  EXPECT_FALSE(rep.per_rep[0].ok);
  EXPECT_NE(rep.per_rep[0].error.find("select_r_ed"), std::string::npos);
  opt.tasks = {Task::count_wz, Task::count_bn, Task::pc_true_r};
  EXPECT_TRUE(run_replications(cfg, opt).complete());
}

TEST(Replications, TaskSubsets) {
  ReplicationOptions opt;
  opt.replications = 2;
  opt.tasks = {Task::count_bn};
  const MetricsReport rep = run_replications(small_config(), opt);
  EXPECT_FALSE(rep.aggregates.tr_f);
  EXPECT_EQ(rep.aggregates.r_hat.size(), 1u);
  EXPECT_FALSE(rep.per_rep[0].pc);
  EXPECT_THROW(run_replications(small_config(), ReplicationOptions{.replications = 0}), DomainError);
}

// Reference factor-count accuracy on the default design, 500 replications.
TEST(DefaultDesign, FactorCountsAtTwoHundred) {
  SimConfig cfg;
  cfg.seed = 42;
  ReplicationOptions opt;
  opt.replications = 500;
  opt.tasks = {Task::count_wz, Task::count_bn, Task::count_ed, Task::count_ah};
  const auto& a = run_replications(cfg, opt).aggregates;
  const BiasRmse wz = a.r_hat.at(CountMethod::wz_svt);
  EXPECT_LE(wz.rmse, 0.25);
  EXPECT_LE(std::abs(wz.bias), 0.06);
  EXPECT_NEAR(a.r_hat.at(CountMethod::bn_icp1).bias, -0.046, 0.05);
  EXPECT_NEAR(a.r_hat.at(CountMethod::ed).bias, 0.063, 0.07);
  EXPECT_NEAR(a.r_hat.at(CountMethod::ah).bias, -2.0, 0.2);
}
