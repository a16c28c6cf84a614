#pragma once

// End-to-end solve of one instance: assemble, run the solver, decode and
// certify.

#include "pcdsm/kkt.hpp"
#include "pcdsm/model.hpp"
#include "pcdsm/qp.hpp"
#include "pcdsm/solver.hpp"

namespace pcdsm {

struct OptimizeOptions {
  solver::SolverSettings solver;
  double kkt_tolerance = kkt::kDefaultTolerance;
};

/// Solves `instance` (validated first, throws ValidationError). When
/// `final_iterate` is given it receives the raw solver iterate, suitable as
/// the warm start of a neighbouring instance with the same layout.
Solution optimize(const Instance& instance, const OptimizeOptions& options = {},
                  const solver::WarmStart* warm = nullptr,
                  solver::WarmStart* final_iterate = nullptr);

/// Splits one multiplier per QpForm row into the tagged families.
Multipliers multipliers_from(const qp::QpForm& qp, const Eigen::VectorXd& duals);

}  // namespace pcdsm
