#include <gtest/gtest.h>

#include "pcdsm/errors.hpp"
#include "pcdsm/kkt.hpp"
#include "pcdsm/optimize.hpp"
#include "support/instances.hpp"

namespace pcdsm {
namespace {

using testing::worked_example;

TEST(KktCheck, SolverOutputVerifies) {
  for (double alpha : {0.0, 0.2, 0.5, 1.0}) {
    const Solution s = optimize(worked_example(4, 2, alpha));
    const KktReport r = kkt::check(s, worked_example(4, 2, alpha), 1e-5);
    EXPECT_TRUE(r.verdict) << "alpha " << alpha;
    EXPECT_TRUE(r.duals_present);
    EXPECT_EQ(r.tolerance, 1e-5);
  }
}

TEST(KktCheck, IdentityWithZeroMultipliersFails) {
  const Instance in = worked_example(4, 2, 0.5);
  Solution s;
  s.output_kw = in.load.demand_kw;
  s.targets_kw = period_means(in.load.demand_kw, in.tariff);
  Multipliers d;
  d.no_deficit.assign(4, 0.0);
  d.no_overflow.assign(4, 0.0);
  d.charge_peak.assign(4, 0.0);
  d.discharge_peak.assign(4, 0.0);
  d.output_nonneg.assign(4, 0.0);
  d.target_nonneg.assign(2, 0.0);
  s.duals = d;
  const KktReport r = kkt::check(s, in, 1e-5);
  EXPECT_FALSE(r.verdict);
  EXPECT_GT(r.stationarity_y, 1e-5);
  EXPECT_LE(r.primal_infeasibility, 1e-12);
}

TEST(KktCheck, NoCapacityIdentityVerifies) {
  const Instance in = worked_example(0, 2, 0.5);
  const Solution s = optimize(in);
  EXPECT_EQ(s.output_kw, in.load.demand_kw);
  EXPECT_TRUE(kkt::check(s, in).verdict);
}

TEST(KktCheck, MissingDualsReportsPrimalOnly) {
  const Instance in = worked_example(4, 2, 0.2);
  Solution s = optimize(in);
  s.duals.reset();
  const KktReport r = kkt::check(s, in);
  EXPECT_FALSE(r.duals_present);
  EXPECT_FALSE(r.verdict);
  EXPECT_LE(r.primal_infeasibility, 1e-8);
}

TEST(KktCheck, WrongSizesThrow) {
  const Instance in = worked_example();
  Solution s = optimize(in);
  s.output_kw.pop_back();
  EXPECT_THROW(kkt::check(s, in), DimensionMismatch);
  s = optimize(in);
  s.duals->charge_peak.pop_back();
  EXPECT_THROW(kkt::check(s, in), DimensionMismatch);
}

TEST(KktCheck, InfeasiblePointFails) {
  const Instance in = worked_example(4, 2, 0.2);
  Solution s = optimize(in);
  s.output_kw[1] += 1.0;  // overfills the battery and breaks the energy balance
  const KktReport r = kkt::check(s, in);
  EXPECT_FALSE(r.verdict);
  EXPECT_NEAR(r.primal_infeasibility, 1.0, 1e-8);
}

TEST(KktCheck, ReportsComplementarityPerFamily) {
  const Instance sell = worked_example(4, 2, 0.5, true);
  const KktReport r = optimize(sell).kkt;
  EXPECT_EQ(r.complementarity.count(ConstraintKind::OutputNonneg), 0u);
  EXPECT_EQ(r.complementarity.count(ConstraintKind::NoOverflow), 1u);
  const KktReport plain = optimize(worked_example()).kkt;
  EXPECT_EQ(plain.complementarity.size(), 6u);
}

TEST(KktCheck, PerturbationIsRejected) {
  testing::InstanceGenerator gen(41);
  for (int k = 0; k < 40; ++k) {
    const Instance in = gen.instance({.max_slots = 30});
    const Solution s = optimize(in);
    ASSERT_TRUE(s.kkt.verdict);
    const std::size_t t = gen.index(0, in.n_slots() - 1);
    for (double sign : {-1.0, 1.0}) {
      Solution p = s;
      p.output_kw[t] += sign * 100 * kkt::kDefaultTolerance;
      const bool verdict = kkt::check(p, in).verdict;
      const double obj = in.alpha * privacy(p.output_kw, p.targets_kw, in.tariff) +
                         (1 - in.alpha) * cost(p.output_kw, in.tariff, in.load.slot_hours);
      EXPECT_TRUE(!verdict || obj > s.objective) << "instance " << k;
    }
  }
}

TEST(RecoverTargets, Examples) {
  const Instance in = worked_example(4, 2, 0.5);
  const std::vector<double> y = {3, 6, 0, 3};
  EXPECT_EQ(kkt::recover_targets(y, in), (std::vector<double>{4.5, 1.5}));

  Instance one;
  one.load.demand_kw = {1, 1, 1, 1};
  one.tariff = Tariff::flat(4, 1.0);
  one.selling = true;
  const std::vector<double> sold = {-2, -2, 4, 4};
  EXPECT_EQ(kkt::recover_targets(sold, one), (std::vector<double>{1.0}));

  one.selling = false;
  const std::vector<double> negative = {-1, -1, -1, -1};
  EXPECT_EQ(kkt::recover_targets(negative, one), (std::vector<double>{0.0}));
}

TEST(RecoverTargets, ConstantModeSharesOneValue) {
  Instance in = worked_example(4, 2, 0.5);
  in.target_mode = TargetMode::Constant;
  const std::vector<double> y = {3, 6, 0, 3};
  EXPECT_EQ(kkt::recover_targets(y, in), (std::vector<double>{3.0, 3.0}));
}

TEST(RecoverTargets, ReproducesSolverTargets) {
  testing::InstanceGenerator gen(42);
  for (int k = 0; k < 60; ++k) {
    Instance in = gen.instance({.max_slots = 30});
    in.alpha = gen.uniform(0.05, 1.0);
    const Solution s = optimize(in);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    const auto w = kkt::recover_targets(s.output_kw, in, &*s.duals);
    for (std::size_t i = 0; i < w.size(); ++i) {
      EXPECT_NEAR(w[i], s.targets_kw[i], 1e-6) << "instance " << k;
    }
  }
}

TEST(Waterfill, WorkedExampleBindingConstraints) {
  const Instance in = worked_example(4, 2, 0.2);
  const Solution s = optimize(in);
  const auto view = kkt::waterfill_view(s, in);
  ASSERT_EQ(view.size(), 4u);
  EXPECT_EQ(view[0].t, 1u);
  EXPECT_TRUE(view[0].active_tags.count(ConstraintKind::ChargePeak));
  EXPECT_TRUE(view[1].active_tags.count(ConstraintKind::ChargePeak));
  EXPECT_TRUE(view[1].active_tags.count(ConstraintKind::NoOverflow));
  EXPECT_TRUE(view[2].active_tags.count(ConstraintKind::OutputNonneg));
  EXPECT_TRUE(view[3].active_tags.count(ConstraintKind::DischargePeak));
  EXPECT_TRUE(view[3].active_tags.count(ConstraintKind::NoDeficit));
  // Y + (1 - alpha) C delta / (2 alpha) with C = 3 in slot 4
  EXPECT_NEAR(view[3].water_level, 3 + 0.8 * 3 / 0.4, 1e-8);
}

TEST(Waterfill, UnconstrainedIsFlat) {
  Instance in;
  in.load.demand_kw = {0.0, 0.5, 1.0, 2.5, 3.0};
  in.tariff = Tariff::flat(5, 10.0);
  in.battery = {100, 100, 100};
  in.alpha = 1.0;
  in.selling = true;
  const Solution s = optimize(in);
  const auto view = kkt::waterfill_view(s, in);
  for (const auto& slot : view) {
    EXPECT_NEAR(slot.water_level, view[0].water_level, 1e-8);
    EXPECT_NEAR(slot.output_kw, 1.4, 1e-8);
  }
}

TEST(Waterfill, FreeNeighboursShareLevel) {
  testing::InstanceGenerator gen(43);
  int pairs = 0;
  for (int k = 0; k < 60; ++k) {
    Instance in = gen.instance({.min_slots = 5, .max_slots = 40});
    in.alpha = gen.uniform(0.1, 1.0);
    const Solution s = optimize(in);
    const auto view = kkt::waterfill_view(s, in);
    for (std::size_t t = 0; t + 1 < view.size(); ++t) {
      if (view[t].period != view[t + 1].period) continue;
      if (!view[t].active_tags.empty() || !view[t + 1].active_tags.empty()) continue;
      EXPECT_NEAR(view[t].water_level, view[t + 1].water_level, 1e-5)
          << "instance " << k << " slot " << t + 1;
      ++pairs;
    }
  }
  EXPECT_GT(pairs, 50);
}

TEST(Waterfill, RequiresPositiveWeight) {
  const Instance in = worked_example(4, 2, 0.0);
  EXPECT_THROW(kkt::waterfill_view(optimize(in), in), ValidationError);
}

}  // namespace
}  // namespace pcdsm
