#include "pcdsm/solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <vector>

#include "admm.hpp"
#include "pcdsm/errors.hpp"

namespace pcdsm::solver {

namespace detail {

namespace {

constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
// Equality rows (chain links, total energy) keep a fixed stiff penalty; tying
// it to the adaptive rho lets link errors accumulate along the chains.
constexpr double kRhoEq = 1e4;
constexpr double kRhoUpdateRatio = 5.0;

double limit_scaling(double v) {
  if (v < kMinScaling) return 1.0;
  return std::min(v, kMaxScaling);
}

Eigen::VectorXd col_inf_norms(const Eigen::SparseMatrix<double>& M) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(M.cols());
  for (int j = 0; j < M.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, j); it; ++it) {
      out[j] = std::max(out[j], std::abs(it.value()));
    }
  }
  return out;
}

Eigen::VectorXd row_inf_norms(const Eigen::SparseMatrix<double>& M) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(M.rows());
  for (int j = 0; j < M.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, j); it; ++it) {
      out[it.row()] = std::max(out[it.row()], std::abs(it.value()));
    }
  }
  return out;
}

bool is_equality_row(double lo, double hi) {
  return hi - lo <= 1e-10 * std::max(1.0, std::abs(lo));
}

}  // namespace

ScaledProblem::ScaledProblem(const qp::QpForm& qp, int scaling_iterations)
    : pre(qp), P(pre.P()), q(pre.q()), A(pre.A()), l(pre.l()), u(pre.u()) {
  D = Eigen::VectorXd::Ones(P.rows());
  E = Eigen::VectorXd::Ones(A.rows());
  for (int it = 0; it < scaling_iterations; ++it) {
    const Eigen::VectorXd pc = col_inf_norms(P);
    const Eigen::VectorXd ac = col_inf_norms(A);
    const Eigen::VectorXd ar = row_inf_norms(A);
    Eigen::VectorXd dd(P.rows());
    for (Eigen::Index j = 0; j < dd.size(); ++j) {
      dd[j] = 1.0 / std::sqrt(limit_scaling(std::max(pc[j], ac[j])));
    }
    Eigen::VectorXd de(A.rows());
    for (Eigen::Index i = 0; i < de.size(); ++i) {
      de[i] = 1.0 / std::sqrt(limit_scaling(ar[i]));
    }
    P = dd.asDiagonal() * P * dd.asDiagonal();
    A = de.asDiagonal() * A * dd.asDiagonal();
    q = q.cwiseProduct(dd);
    D = D.cwiseProduct(dd);
    E = E.cwiseProduct(de);

    const Eigen::VectorXd pn = col_inf_norms(P);
    const double mean_p = pn.size() > 0 ? pn.mean() : 0.0;
    const double cost_norm =
        limit_scaling(std::max(mean_p, q.lpNorm<Eigen::Infinity>()));
    const double gamma = 1.0 / cost_norm;
    P *= gamma;
    q *= gamma;
    c *= gamma;
  }
  P.makeCompressed();
  A.makeCompressed();
  At = A.transpose();
  At.makeCompressed();
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    if (std::isfinite(l[i])) l[i] *= E[i];
    if (std::isfinite(u[i])) u[i] *= E[i];
  }
}

MergedResiduals ScaledProblem::residuals(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& y) const {
  const Eigen::VectorXd z = unscale_x(x).head(pre.n_orig());
  return pre.residuals(z, pre.merged_duals(unscale_y(y)));
}

bool converged(const MergedResiduals& r, const SolverSettings& s) {
  return r.primal <= s.eps_abs &&
         r.dual <= s.eps_abs + s.eps_rel * r.dual_scale &&
         r.complementarity <= s.eps_abs;
}

Eigen::SparseMatrix<double> assemble_kkt(const Eigen::SparseMatrix<double>& P,
                                         double sigma,
                                         const Eigen::SparseMatrix<double>& A,
                                         const Eigen::VectorXd& d) {
  const Eigen::Index n = P.rows();
  const Eigen::Index m = A.rows();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(P.nonZeros() + A.nonZeros() + n + m));
  for (int j = 0; j < P.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(P, j); it; ++it) {
      if (it.row() >= it.col()) trips.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) trips.emplace_back(j, j, sigma);
  for (int j = 0; j < A.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it) {
      trips.emplace_back(n + it.row(), it.col(), it.value());
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -d[i]);
  Eigen::SparseMatrix<double> K(n + m, n + m);
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
  return K;
}

}  // namespace detail

std::string to_string(PolishStatus status) {
  switch (status) {
    case PolishStatus::NotAttempted: return "not_attempted";
    case PolishStatus::Applied: return "applied";
    case PolishStatus::Rejected: return "rejected";
    case PolishStatus::SingularSystem: return "singular_system";
    case PolishStatus::Skipped: return "skipped";
  }
  return "unknown";
}

namespace {

void check_settings(const SolverSettings& s) {
  if (!(s.rho > 0 && s.sigma > 0 && s.eps_abs > 0 && s.eps_rel >= 0 &&
        s.eps_infeasible > 0 && s.relaxation > 0 && s.relaxation < 2 &&
        s.max_iter > 0 && s.check_interval > 0 &&
        s.adaptive_rho_interval > 0 && s.polish_interval >= 0 &&
        s.polish_delta > 0)) {
    throw ValidationError("solver settings out of range");
  }
}

// Farkas-type certificate: A'dy ~ 0 while u'dy+ + l'dy- < 0.
bool certifies_infeasibility(const detail::ScaledProblem& sp,
                             const Eigen::VectorXd& dy, double eps) {
  const Eigen::VectorXd dy_u = sp.E.cwiseProduct(dy);
  const double norm = dy_u.lpNorm<Eigen::Infinity>();
  if (!(norm > 1e-30)) return false;
  const Eigen::VectorXd atdy = (sp.At * dy).cwiseQuotient(sp.D);
  if (atdy.lpNorm<Eigen::Infinity>() > eps * norm) return false;
  double support = 0.0;
  for (Eigen::Index i = 0; i < dy.size(); ++i) {
    if (dy[i] > 0) {
      if (!std::isfinite(sp.u[i])) {
        if (dy_u[i] > eps * norm) return false;
        continue;
      }
      support += sp.u[i] * dy[i];
    } else if (dy[i] < 0) {
      if (!std::isfinite(sp.l[i])) {
        if (-dy_u[i] > eps * norm) return false;
        continue;
      }
      support += sp.l[i] * dy[i];
    }
  }
  return support < -eps * norm;
}

SolveResult finish(const qp::QpForm& qp, const detail::ScaledProblem& sp,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  SolveResult out;
  out.z = sp.unscale_x(x).head(sp.pre.n_orig());
  out.duals = sp.pre.original_duals(sp.pre.merged_duals(sp.unscale_y(y)));
  const auto r = residuals(qp, out.z, out.duals);
  out.primal_residual = r.primal;
  out.dual_residual = r.dual;
  out.complementarity = r.complementarity;
  return out;
}

}  // namespace

Residuals residuals(const qp::QpForm& qp, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& duals) {
  if (z.size() != qp.n_vars() ||
      duals.size() != static_cast<Eigen::Index>(qp.constraints.size())) {
    throw DimensionMismatch("residuals: z or duals have the wrong size");
  }
  Residuals r;
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(qp.n_vars());
  for (std::size_t k = 0; k < qp.constraints.size(); ++k) {
    const auto& row = qp.constraints[k];
    const double lam = duals[static_cast<Eigen::Index>(k)];
    const double act = qp::row_activity(row, z);
    const double gap = act - row.rhs;
    if (row.relation == qp::Relation::EQ) {
      r.primal = std::max(r.primal, std::abs(gap));
    } else {
      r.primal = std::max(r.primal, std::max(0.0, gap));
      r.complementarity = std::max(r.complementarity, std::abs(lam * gap));
      r.dual_sign = std::max(r.dual_sign, -lam);
    }
    if (lam != 0.0) {
      for (const auto& e : row.coeffs) aty[e.col] += lam * e.value;
    }
  }
  const Eigen::VectorXd qz = qp.quadratic * z;
  r.dual = (qz + qp.linear + aty).lpNorm<Eigen::Infinity>();
  r.dual_scale = std::max({qz.lpNorm<Eigen::Infinity>(),
                           aty.lpNorm<Eigen::Infinity>(),
                           qp.linear.lpNorm<Eigen::Infinity>()});
  return r;
}

SolveResult solve(const qp::QpForm& qp, const SolverSettings& s,
                  const WarmStart* warm) {
  check_settings(s);
  const detail::ScaledProblem sp(qp, s.scaling_iterations);
  const Eigen::Index n = sp.n();
  const Eigen::Index m = sp.m();

  if (sp.pre.infeasible()) {
    SolveResult out = finish(qp, sp, Eigen::VectorXd::Zero(n),
                             Eigen::VectorXd::Zero(m));
    out.status = SolveStatus::Infeasible;
    return out;
  }

  double rho = s.rho;
  Eigen::VectorXd rho_vec(m);
  auto fill_rho = [&] {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!std::isfinite(sp.l[i]) && !std::isfinite(sp.u[i])) {
        rho_vec[i] = detail::kRhoMin;
      } else if (detail::is_equality_row(sp.l[i], sp.u[i])) {
        rho_vec[i] = detail::kRhoEq;
      } else {
        rho_vec[i] = rho;
      }
    }
  };
  fill_rho();

  Eigen::SparseMatrix<double> K =
      detail::assemble_kkt(sp.P, s.sigma, sp.A, rho_vec.cwiseInverse());
  std::vector<double*> rho_diag(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    rho_diag[static_cast<std::size_t>(i)] =
        K.valuePtr() + K.outerIndexPtr()[n + i];
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
  ldlt.analyzePattern(K);
  ldlt.factorize(K);
  if (ldlt.info() != Eigen::Success) {
    throw Error("KKT factorisation failed");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  if (warm != nullptr && warm->z.size() == qp.n_vars() &&
      warm->duals.size() == static_cast<Eigen::Index>(qp.constraints.size())) {
    x = sp.scale_x(sp.pre.lift_primal(warm->z));
    y = sp.scale_y(sp.pre.lift_duals(sp.pre.merged_from_original(warm->duals)));
    z = (sp.A * x).cwiseMax(sp.l).cwiseMin(sp.u);
  }

  Eigen::VectorXd rhs(n + m);
  Eigen::VectorXd sol(n + m);
  Eigen::VectorXd y_prev(m);
  detail::MergedResiduals res;
  bool done = false;
  bool infeasible = false;
  PolishStatus polish_status = PolishStatus::NotAttempted;
  int iter = 0;
  const double a = s.relaxation;

  while (iter < s.max_iter) {
    ++iter;
    y_prev = y;
    rhs.head(n) = s.sigma * x - sp.q;
    rhs.tail(m) = z - y.cwiseQuotient(rho_vec);
    sol = ldlt.solve(rhs);
    const Eigen::VectorXd z_tilde =
        z + (sol.tail(m) - y).cwiseQuotient(rho_vec);
    x = a * sol.head(n) + (1.0 - a) * x;
    const Eigen::VectorXd w = a * z_tilde + (1.0 - a) * z;
    const Eigen::VectorXd z_new =
        (w + y.cwiseQuotient(rho_vec)).cwiseMax(sp.l).cwiseMin(sp.u);
    y += rho_vec.cwiseProduct(w - z_new);
    z = z_new;

    if (iter % s.check_interval == 0 || iter == s.max_iter) {
      res = sp.residuals(x, y);
      if (detail::converged(res, s)) {
        done = true;
        break;
      }
      if (certifies_infeasibility(sp, y - y_prev, s.eps_infeasible)) {
        infeasible = true;
        break;
      }
      if (s.polish && s.polish_interval > 0 && iter % s.polish_interval == 0) {
        Eigen::VectorXd xp = x;
        Eigen::VectorXd yp = y;
        detail::MergedResiduals rp = res;
        const PolishStatus st = detail::try_polish(sp, xp, z, yp, rp, s);
        if (st == PolishStatus::Applied && detail::converged(rp, s)) {
          x = std::move(xp);
          y = std::move(yp);
          res = rp;
          polish_status = st;
          done = true;
          break;
        }
      }
    }

    if (s.adaptive_rho && iter % s.adaptive_rho_interval == 0) {
      const Eigen::VectorXd ax = sp.A * x;
      const Eigen::VectorXd px = sp.P * x;
      const Eigen::VectorXd aty = sp.At * y;
      const double prim = (ax - z).lpNorm<Eigen::Infinity>();
      const double prim_n = std::max(ax.lpNorm<Eigen::Infinity>(),
                                     z.lpNorm<Eigen::Infinity>());
      const double dual = (px + sp.q + aty).lpNorm<Eigen::Infinity>();
      const double dual_n = std::max({px.lpNorm<Eigen::Infinity>(),
                                      aty.lpNorm<Eigen::Infinity>(),
                                      sp.q.lpNorm<Eigen::Infinity>()});
      const double ratio = (prim / (prim_n + 1e-30)) /
                           (dual / (dual_n + 1e-30) + 1e-30);
      const double rho_new = std::clamp(rho * std::sqrt(ratio), detail::kRhoMin, detail::kRhoMax);
      if (rho_new > detail::kRhoUpdateRatio * rho || rho_new < rho / detail::kRhoUpdateRatio) {
        rho = rho_new;
        fill_rho();
        for (Eigen::Index i = 0; i < m; ++i) {
          *rho_diag[static_cast<std::size_t>(i)] = -1.0 / rho_vec[i];
        }
        ldlt.factorize(K);
        if (ldlt.info() != Eigen::Success) {
          throw Error("KKT refactorisation failed");
        }
      }
    }
  }

  if (!infeasible && s.polish && polish_status == PolishStatus::NotAttempted) {
    if (!done) res = sp.residuals(x, y);
    polish_status = detail::try_polish(sp, x, z, y, res, s);
    done = detail::converged(res, s);
  }

  SolveResult out = finish(qp, sp, x, y);
  out.iterations = iter;
  out.polish = polish_status;
  out.final_rho = rho;
  out.status = infeasible ? SolveStatus::Infeasible
               : done     ? SolveStatus::Optimal
                          : SolveStatus::MaxIterations;
  return out;
}

}  // namespace pcdsm::solver
