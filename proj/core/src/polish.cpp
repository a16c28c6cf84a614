#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <vector>

#include "admm.hpp"
#include "pcdsm/solver.hpp"

namespace pcdsm::solver {

namespace detail {

namespace {

constexpr double kExactResidual = 1e-12;
constexpr double kAcceptFloor = 1e-10;
constexpr double kActiveSlackFactor = 10.0;
// multipliers of the wrong sign below this size are rounding noise
constexpr double kSignTol = 1e-10;

enum class Side { Lower, Upper, Both };

struct ActiveRow {
  Eigen::Index row;
  double target;
  Side side;
};

std::vector<ActiveRow> identify_active(const ScaledProblem& sp,
                                       const Eigen::VectorXd& z,
                                       const Eigen::VectorXd& y,
                                       double eps_abs) {
  std::vector<ActiveRow> out;
  for (Eigen::Index i = 0; i < sp.m(); ++i) {
    const double lo = sp.l[i];
    const double hi = sp.u[i];
    if (std::isfinite(lo) && std::isfinite(hi) &&
        hi - lo <= 1e-10 * std::max(1.0, std::abs(lo))) {
      out.push_back({i, 0.5 * (lo + hi), Side::Both});
      continue;
    }
    // slack tolerance in scaled units
    const double tol = kActiveSlackFactor * eps_abs * sp.E[i];
    const double slack_lo = std::isfinite(lo) ? z[i] - lo : kInf;
    const double slack_hi = std::isfinite(hi) ? hi - z[i] : kInf;
    bool lower = slack_lo < -y[i] || slack_lo < tol;
    bool upper = slack_hi < y[i] || slack_hi < tol;
    if (lower && upper) {
      if (y[i] < 0) {
        upper = false;
      } else if (y[i] > 0) {
        lower = false;
      } else if (slack_lo <= slack_hi) {
        upper = false;
      } else {
        lower = false;
      }
    }
    if (lower) out.push_back({i, lo, Side::Lower});
    if (upper) out.push_back({i, hi, Side::Upper});
  }
  return out;
}

}  // namespace

namespace {

enum class ReducedSolve { Ok, Singular };

// Solves the active-set KKT system [P, A'; A, 0] [x; y] = [-q; b] by
// iterative refinement on the proximal system
//   [P + dI, A'; A, -dI] = [dx0 - q; b - dy0],
// which keeps directions the active set leaves free at the ADMM iterate.
ReducedSolve solve_reduced(const ScaledProblem& sp,
                           const std::vector<ActiveRow>& active,
                           const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                           const SolverSettings& s, Eigen::VectorXd& sol) {
  const Eigen::Index n = sp.n();
  const auto n_act = static_cast<Eigen::Index>(active.size());
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index k = 0; k < n_act; ++k) {
    const auto row = static_cast<int>(active[static_cast<std::size_t>(k)].row);
    for (Eigen::SparseMatrix<double>::InnerIterator it(sp.At, row); it; ++it) {
      trips.emplace_back(k, it.row(), it.value());
    }
  }
  Eigen::SparseMatrix<double> A_act(n_act, n);
  A_act.setFromTriplets(trips.begin(), trips.end());
  A_act.makeCompressed();
  const Eigen::SparseMatrix<double> At_act = A_act.transpose();

  const Eigen::SparseMatrix<double> K = assemble_kkt(
      sp.P, s.polish_delta, A_act,
      Eigen::VectorXd::Constant(n_act, s.polish_delta));
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt(K);
  if (ldlt.info() != Eigen::Success) return ReducedSolve::Singular;

  Eigen::VectorXd rhs(n + n_act);
  rhs.head(n) = -sp.q;
  Eigen::VectorXd start(n + n_act);
  start.head(n) = x0;
  for (Eigen::Index k = 0; k < n_act; ++k) {
    const auto& a = active[static_cast<std::size_t>(k)];
    rhs[n + k] = a.target;
    start[n + k] = y0[a.row];
  }
  auto residual = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(n + n_act);
    r.head(n) = rhs.head(n) - sp.P * v.head(n) - At_act * v.tail(n_act);
    r.tail(n_act) = rhs.tail(n_act) - A_act * v.head(n);
    return r;
  };
  sol = start + ldlt.solve(residual(start));
  const double rhs_norm = 1.0 + rhs.lpNorm<Eigen::Infinity>();
  Eigen::VectorXd r = residual(sol);
  for (int it = 0; it < s.polish_refine_iter; ++it) {
    if (r.lpNorm<Eigen::Infinity>() <= 1e-14 * rhs_norm) break;
    sol += ldlt.solve(r);
    r = residual(sol);
  }
  if (!sol.allFinite() || r.lpNorm<Eigen::Infinity>() > 1e-6 * rhs_norm) {
    return ReducedSolve::Singular;
  }
  return ReducedSolve::Ok;
}

}  // namespace

PolishOutcome polish_scaled(const ScaledProblem& sp, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                            const SolverSettings& s) {
  PolishOutcome out;
  const Eigen::Index n = sp.n();
  auto active = identify_active(sp, z, y, s.eps_abs);

  // Degenerate active sets admit multipliers of either sign; rows whose
  // multiplier comes out wrong are released and the system is re-solved.
  Eigen::VectorXd sol;
  for (;;) {
    if (solve_reduced(sp, active, x, y, s, sol) != ReducedSolve::Ok) {
      out.status = PolishStatus::SingularSystem;
      return out;
    }
    std::vector<ActiveRow> keep;
    keep.reserve(active.size());
    for (std::size_t k = 0; k < active.size(); ++k) {
      const auto& a = active[k];
      const double yk = sp.E[a.row] * sol[n + static_cast<Eigen::Index>(k)] / sp.c;
      const bool wrong = (a.side == Side::Lower && yk > kSignTol) ||
                         (a.side == Side::Upper && yk < -kSignTol);
      if (!wrong) keep.push_back(a);
    }
    if (keep.size() == active.size()) break;
    active = std::move(keep);
  }

  out.x = sol.head(n);
  out.y = Eigen::VectorXd::Zero(sp.m());
  for (std::size_t k = 0; k < active.size(); ++k) {
    const double yk = sol[n + static_cast<Eigen::Index>(k)];
    const bool wrong = (active[k].side == Side::Lower && yk > 0.0) ||
                       (active[k].side == Side::Upper && yk < 0.0);
    out.y[active[k].row] = wrong ? 0.0 : yk;
  }
  out.status = PolishStatus::Applied;
  return out;
}

PolishStatus try_polish(const ScaledProblem& sp, Eigen::VectorXd& x,
                        const Eigen::VectorXd& z, Eigen::VectorXd& y,
                        MergedResiduals& res, const SolverSettings& s) {
  if (res.primal <= kExactResidual && res.dual <= kExactResidual &&
      res.complementarity <= kExactResidual) {
    return PolishStatus::Skipped;
  }
  const PolishOutcome p = polish_scaled(sp, x, z, y, s);
  if (p.status != PolishStatus::Applied) return p.status;
  const MergedResiduals r = sp.residuals(p.x, p.y);
  if (r.primal <= std::max(res.primal, kAcceptFloor) &&
      r.dual <= std::max(res.dual, kAcceptFloor) &&
      r.complementarity <= std::max(res.complementarity, kAcceptFloor)) {
    x = p.x;
    y = p.y;
    res = r;
    return PolishStatus::Applied;
  }
  return PolishStatus::Rejected;
}

}  // namespace detail

SolveResult polish(const SolveResult& result, const qp::QpForm& qp,
                   const SolverSettings& s) {
  const detail::ScaledProblem sp(qp, s.scaling_iterations);
  if (sp.pre.infeasible() || result.z.size() != qp.n_vars() ||
      result.duals.size() != static_cast<Eigen::Index>(qp.constraints.size())) {
    SolveResult out = result;
    out.polish = PolishStatus::SingularSystem;
    return out;
  }
  Eigen::VectorXd x = sp.scale_x(sp.pre.lift_primal(result.z));
  Eigen::VectorXd y =
      sp.scale_y(sp.pre.lift_duals(sp.pre.merged_from_original(result.duals)));
  const Eigen::VectorXd z = (sp.A * x).cwiseMax(sp.l).cwiseMin(sp.u);
  detail::MergedResiduals res = sp.residuals(x, y);
  const PolishStatus status = detail::try_polish(sp, x, z, y, res, s);
  if (status != PolishStatus::Applied) {
    SolveResult out = result;
    out.polish = status;
    return out;
  }
  SolveResult out = result;
  out.z = sp.unscale_x(x).head(sp.pre.n_orig());
  out.duals = sp.pre.original_duals(sp.pre.merged_duals(sp.unscale_y(y)));
  const Residuals r = residuals(qp, out.z, out.duals);
  out.primal_residual = r.primal;
  out.dual_residual = r.dual;
  out.complementarity = r.complementarity;
  out.polish = PolishStatus::Applied;
  if (detail::converged(res, s)) out.status = SolveStatus::Optimal;
  return out;
}

}  // namespace pcdsm::solver
