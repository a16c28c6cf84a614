#pragma once

// Operator-splitting (ADMM) solver for the programs produced by qp::build.
//
// The iteration follows the usual splitting of
//   min 1/2 x'Px + q'x  s.t.  l <= Ax <= u
// into an equality-constrained QP solved with a cached sparse LDL'
// factorisation and a projection onto the box [l, u]. Rows are Ruiz
// equilibrated before iterating, the penalty adapts every
// `adaptive_rho_interval` iterations, and a final polish re-solves the
// identified active set exactly. All reported quantities refer to the
// unscaled QpForm.

#include <Eigen/Core>
#include <optional>

#include "pcdsm/model.hpp"
#include "pcdsm/qp.hpp"

namespace pcdsm::solver {

struct SolverSettings {
  double rho = 0.1;
  double sigma = 1e-6;
  double relaxation = 1.6;
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_infeasible = 1e-5;
  int max_iter = 100000;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  int check_interval = 5;
  int scaling_iterations = 10;
  bool polish = true;
  /// Also try polishing every this many iterations (0: only at the end).
  int polish_interval = 100;
  double polish_delta = 1e-7;
  int polish_refine_iter = 25;
};

enum class PolishStatus {
  NotAttempted,
  Applied,
  Rejected,        // polished point did not improve the residuals
  SingularSystem,  // reduced KKT system could not be solved
  Skipped,         // input already exact
};

std::string to_string(PolishStatus status);

/// Primal/dual iterate in QpForm coordinates used to warm-start a solve.
struct WarmStart {
  Eigen::VectorXd z;
  Eigen::VectorXd duals;
};

struct SolveResult {
  Eigen::VectorXd z;
  /// One multiplier per QpForm row; >= 0 for LE rows at an optimum.
  Eigen::VectorXd duals;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  /// Largest row violation of z.
  double primal_residual = 0.0;
  /// ||Qz + q + A'duals||_inf
  double dual_residual = 0.0;
  /// max_k |duals_k * slack_k| over LE rows
  double complementarity = 0.0;
  PolishStatus polish = PolishStatus::NotAttempted;
  double final_rho = 0.0;
};

SolveResult solve(const qp::QpForm& qp, const SolverSettings& settings = {},
                  const WarmStart* warm = nullptr);

/// Re-solves the KKT system restricted to the active set of `result`. The
/// polished point replaces the input only if it does not increase either
/// residual; otherwise `result` is returned with `polish` set to the reason.
SolveResult polish(const SolveResult& result, const qp::QpForm& qp,
                   const SolverSettings& settings = {});

/// Residuals of an arbitrary (z, duals) pair against the unscaled program.
struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double dual_sign = 0.0;
  double dual_scale = 0.0;
};

Residuals residuals(const qp::QpForm& qp, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& duals);

}  // namespace pcdsm::solver
