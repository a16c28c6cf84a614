#include <gtest/gtest.h>

#include "pcdsm/errors.hpp"
#include "pcdsm/optimize.hpp"
#include "pcdsm/oracle.hpp"
#include "pcdsm/qp.hpp"
#include "pcdsm/solver.hpp"
#include "support/instances.hpp"

namespace pcdsm {
namespace {

using testing::worked_example;

std::vector<double> outputs(const qp::QpForm& f, const solver::SolveResult& r) {
  return qp::decode(f.layout, r.z).output_kw;
}

void expect_near(const std::vector<double>& got, const std::vector<double>& want,
                 double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got[i], want[i], tol) << "entry " << i;
  }
}

TEST(Solver, WorkedExampleLowWeightChargesAtPeakThenDrains) {
  // alpha = 0.2: charge at the charging peak in slots 1-2 (battery full
  // after slot 2), draw nothing in slot 3, discharge at peak in slot 4.
  const Instance in = worked_example(4, 2, 0.2);
  const qp::QpForm f = qp::build(in);
  const auto r = solver::solve(f);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  const auto d = qp::decode(f.layout, r.z);
  expect_near(d.output_kw, {3, 6, 0, 3}, 1e-8);
  expect_near(d.target_vars, {4.5, 1.5}, 1e-8);
}

TEST(Solver, WorkedExampleMatchesOracle) {
  for (double alpha : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    const Instance in = worked_example(4, 2, alpha);
    const auto r = solver::solve(qp::build(in));
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    const auto o = oracle::brute_force(in, {.step = 0.25});
    const double obj = qp::objective_at(qp::build(in), r.z);
    EXPECT_LE(obj, o.objective + 1e-9) << "alpha " << alpha;
    EXPECT_GE(obj, o.objective - o.bound - 1e-9) << "alpha " << alpha;
  }
}

TEST(Solver, WorkedExampleEvenWeight) {
  // Moving energy from slot 2 to slot 3 changes the objective at rate
  // 2(1 - alpha)/N - 6 alpha/N < 0 for alpha = 0.5, so the two slots meet
  // in the middle: Y = [3, 4, 2, 3], W = [3.5, 2.5].
  const Instance in = worked_example(4, 2, 0.5);
  const qp::QpForm f = qp::build(in);
  const auto r = solver::solve(f);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  const auto o = oracle::brute_force(in, {.step = 0.5});
  expect_near(outputs(f, r), o.output_kw, 1e-8);
  expect_near(outputs(f, r), {3, 4, 2, 3}, 1e-8);
}

TEST(Solver, NoCapacityForcesIdentity) {
  for (double alpha : {0.0, 0.5, 1.0}) {
    const Instance in = worked_example(0, 2, alpha);
    const qp::QpForm f = qp::build(in);
    const auto r = solver::solve(f);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    expect_near(outputs(f, r), in.load.demand_kw, 1e-8);
  }
}

TEST(Solver, LargerBatteryLowersObjective) {
  const Instance small = worked_example(4, 2, 0.5);
  const Instance large = worked_example(8, 4, 0.5);
  const auto rs = solver::solve(qp::build(small));
  const auto rl = solver::solve(qp::build(large));
  ASSERT_EQ(rs.status, SolveStatus::Optimal);
  ASSERT_EQ(rl.status, SolveStatus::Optimal);
  const double os = qp::objective_at(qp::build(small), rs.z);
  const double ol = qp::objective_at(qp::build(large), rl.z);
  const auto oracle_large = oracle::brute_force(large, {.step = 0.25});
  EXPECT_LT(ol, os);
  EXPECT_NEAR(ol, oracle_large.objective, 1e-8);
}

TEST(Solver, OptimalResultsMeetTheirResiduals) {
  testing::InstanceGenerator gen(31);
  const solver::SolverSettings s;
  for (int k = 0; k < 40; ++k) {
    const Instance in = gen.instance({.max_slots = 30});
    const qp::QpForm f = qp::build(in);
    const auto r = solver::solve(f, s);
    ASSERT_EQ(r.status, SolveStatus::Optimal) << "instance " << k;
    const auto res = solver::residuals(f, r.z, r.duals);
    EXPECT_LE(res.primal, s.eps_abs);
    EXPECT_LE(res.complementarity, s.eps_abs);
    EXPECT_LE(res.dual_sign, s.eps_abs);
    EXPECT_LE(res.dual, s.eps_abs + s.eps_rel * res.dual_scale);
    EXPECT_DOUBLE_EQ(res.primal, r.primal_residual);
  }
}

TEST(Solver, NoWorseThanIdentitySchedule) {
  testing::InstanceGenerator gen(32);
  for (int k = 0; k < 40; ++k) {
    Instance in = gen.instance({.max_slots = 30});
    in.selling = false;
    const qp::QpForm f = qp::build(in);
    const auto r = solver::solve(f);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    std::vector<double> w(in.n_targets());
    const auto& x = in.load.demand_kw;
    if (in.target_mode == TargetMode::Constant) {
      double s = 0;
      for (double v : x) s += v;
      w[0] = s / static_cast<double>(x.size());
    } else {
      w = period_means(x, in.tariff);
    }
    const double reference = qp::objective_at(f, qp::encode(f.layout, x, w));
    EXPECT_LE(qp::objective_at(f, r.z), reference + 1e-6);
  }
}

TEST(Solver, TradeoffIsMonotoneInWeight) {
  testing::InstanceGenerator gen(33);
  for (int k = 0; k < 10; ++k) {
    Instance in = gen.instance({.min_slots = 6, .max_slots = 24});
    in.target_mode = TargetMode::PiecewisePerPeriod;
    double last_p = 1e300;
    double last_c = -1e300;
    for (int a = 0; a <= 10; ++a) {
      in.alpha = a / 10.0;
      const Solution s = optimize(in);
      ASSERT_EQ(s.status, SolveStatus::Optimal);
      if (a > 0) {
        EXPECT_LE(s.privacy, last_p + 1e-6) << "instance " << k << " alpha " << in.alpha;
      }
      EXPECT_GE(s.cost, last_c - 1e-6) << "instance " << k << " alpha " << in.alpha;
      last_p = s.privacy;
      last_c = s.cost;
    }
  }
}

TEST(Solver, Deterministic) {
  testing::InstanceGenerator gen(34);
  const Instance in = gen.instance({.min_slots = 40, .max_slots = 50});
  const qp::QpForm f = qp::build(in);
  const auto a = solver::solve(f);
  const auto b = solver::solve(f);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_TRUE((a.z.array() == b.z.array()).all());
  EXPECT_TRUE((a.duals.array() == b.duals.array()).all());
}

TEST(Solver, DetectsInfeasibleProgram) {
  qp::QpForm f;
  f.layout = {1, 0};
  f.quadratic.resize(1, 1);
  f.linear = Eigen::VectorXd::Ones(1);
  f.constraints.push_back({{{0, 1.0}}, qp::Relation::LE, -1.0, ConstraintKind::ChargePeak, 0});
  f.constraints.push_back({{{0, -1.0}}, qp::Relation::LE, 0.0, ConstraintKind::OutputNonneg, 0});
  const auto r = solver::solve(f);
  EXPECT_EQ(r.status, SolveStatus::Infeasible);
}

TEST(Solver, IterationLimit) {
  const qp::QpForm f = qp::build(worked_example());
  solver::SolverSettings s;
  s.max_iter = 1;
  s.polish = false;
  const auto r = solver::solve(f, s);
  EXPECT_EQ(r.status, SolveStatus::MaxIterations);
  EXPECT_EQ(r.z.size(), 6);
}

TEST(Solver, RejectsBadSettings) {
  const qp::QpForm f = qp::build(worked_example());
  solver::SolverSettings s;
  s.rho = 0;
  EXPECT_THROW(solver::solve(f, s), ValidationError);
  s = {};
  s.eps_abs = -1;
  EXPECT_THROW(solver::solve(f, s), ValidationError);
}

TEST(Solver, WarmStartReachesSameOptimum) {
  testing::InstanceGenerator gen(35);
  Instance in = gen.instance({.min_slots = 30, .max_slots = 50});
  in.alpha = 0.3;
  const auto first = solver::solve(qp::build(in));
  in.alpha = 0.4;
  const qp::QpForm f = qp::build(in);
  const solver::WarmStart warm{first.z, first.duals};
  const auto cold = solver::solve(f);
  const auto hot = solver::solve(f, {}, &warm);
  ASSERT_EQ(hot.status, SolveStatus::Optimal);
  EXPECT_NEAR(qp::objective_at(f, hot.z), qp::objective_at(f, cold.z), 1e-6);
}

TEST(Polish, RecoversExactVertex) {
  const Instance in = worked_example(4, 2, 0.2);
  const qp::QpForm f = qp::build(in);
  solver::SolverSettings s;
  s.polish = false;
  const auto raw = solver::solve(f, s);
  const auto polished = solver::polish(raw, f, s);
  EXPECT_TRUE(polished.polish == solver::PolishStatus::Applied ||
              polished.polish == solver::PolishStatus::Skipped);
  expect_near(outputs(f, polished), {3, 6, 0, 3}, 1e-8);
  EXPECT_LE(polished.primal_residual, std::max(raw.primal_residual, 1e-10));
  EXPECT_LE(polished.dual_residual, std::max(raw.dual_residual, 1e-10));
}

TEST(Polish, IdempotentAtOptimum) {
  const qp::QpForm f = qp::build(worked_example(8, 4, 0.5));
  const auto r = solver::solve(f);
  const auto again = solver::polish(r, f);
  EXPECT_TRUE(again.polish == solver::PolishStatus::Skipped ||
              again.polish == solver::PolishStatus::Applied);
  for (Eigen::Index i = 0; i < r.z.size(); ++i) {
    EXPECT_NEAR(again.z[i], r.z[i], 1e-10);
  }
}

TEST(Polish, MismatchedInputIsReturnedUnchanged) {
  const qp::QpForm f = qp::build(worked_example());
  solver::SolveResult bogus;
  bogus.z = Eigen::VectorXd::Zero(3);
  const auto out = solver::polish(bogus, f);
  EXPECT_EQ(out.polish, solver::PolishStatus::SingularSystem);
  EXPECT_EQ(out.z.size(), 3);
}

}  // namespace
}  // namespace pcdsm
