#pragma once

// Internals shared by the ADMM loop and the polishing step.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pcdsm/solver.hpp"
#include "presolve.hpp"

namespace pcdsm::solver::detail {

/// Ruiz-equilibrated lifted problem:
///   P~ = c D P D,  q~ = c D q,  A~ = E A D,  l~ = E l,  u~ = E u.
struct ScaledProblem {
  ScaledProblem(const qp::QpForm& qp, int scaling_iterations);

  Presolved pre;
  Eigen::SparseMatrix<double> P;
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;
  Eigen::SparseMatrix<double> At;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
  Eigen::VectorXd D;
  Eigen::VectorXd E;
  double c = 1.0;

  Eigen::Index n() const { return P.rows(); }
  Eigen::Index m() const { return A.rows(); }

  Eigen::VectorXd unscale_x(const Eigen::VectorXd& x) const {
    return D.cwiseProduct(x);
  }
  Eigen::VectorXd unscale_y(const Eigen::VectorXd& y) const {
    return E.cwiseProduct(y) / c;
  }
  Eigen::VectorXd scale_x(const Eigen::VectorXd& x) const {
    return x.cwiseQuotient(D);
  }
  Eigen::VectorXd scale_y(const Eigen::VectorXd& y) const {
    return c * y.cwiseQuotient(E);
  }

  /// Merged-problem residuals (original units) of a scaled iterate.
  MergedResiduals residuals(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y) const;
};

bool converged(const MergedResiduals& r, const SolverSettings& s);

/// Lower-triangular quasi-definite KKT matrix
///   [ P + sigma I     .    ]
///   [     A       -diag(d)].
Eigen::SparseMatrix<double> assemble_kkt(const Eigen::SparseMatrix<double>& P,
                                         double sigma,
                                         const Eigen::SparseMatrix<double>& A,
                                         const Eigen::VectorXd& d);

struct PolishOutcome {
  PolishStatus status = PolishStatus::NotAttempted;
  Eigen::VectorXd x;  // scaled
  Eigen::VectorXd y;  // scaled
};

/// Active-set polish in the scaled lifted space. `z` is the ADMM slack
/// iterate (projected A x).
PolishOutcome polish_scaled(const ScaledProblem& sp, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                            const SolverSettings& settings);

/// Runs polish_scaled and keeps the polished iterate when it does not make
/// any residual worse. Updates x, y and the residuals in place.
PolishStatus try_polish(const ScaledProblem& sp, Eigen::VectorXd& x,
                        const Eigen::VectorXd& z, Eigen::VectorXd& y,
                        MergedResiduals& res, const SolverSettings& settings);

}  // namespace pcdsm::solver::detail
