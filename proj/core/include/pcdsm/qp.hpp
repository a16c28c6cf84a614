#pragma once

// Standard-form quadratic program for one scheduling instance:
//
//   minimize    1/2 z' Q z + q' z
//   subject to  a_k' z <= b_k   (LE rows)
//               a_k' z  = b_k   (EQ rows)
//
// over z = [Y_1 .. Y_N, W_1 .. W_K] where K is the number of target
// variables (M, or 1 for a constant target). Every row carries the
// constraint family it encodes so that multipliers can be reported by tag.

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstddef>
#include <span>
#include <vector>

#include "pcdsm/model.hpp"

namespace pcdsm::qp {

struct SparseEntry {
  Eigen::Index col;
  double value;
};

enum class Relation { LE, EQ };

struct ConstraintRow {
  std::vector<SparseEntry> coeffs;
  Relation relation = Relation::LE;
  double rhs = 0.0;
  ConstraintKind tag = ConstraintKind::NoDeficit;
  /// Slot (0-based) for per-slot families, target variable for
  /// TargetNonneg, 0 for TotalEnergy.
  std::size_t index = 0;
};

struct VarLayout {
  std::size_t n_slots = 0;
  std::size_t n_targets = 0;

  Eigen::Index y(std::size_t t) const { return static_cast<Eigen::Index>(t); }
  Eigen::Index w(std::size_t j) const {
    return static_cast<Eigen::Index>(n_slots + j);
  }
  Eigen::Index n_vars() const {
    return static_cast<Eigen::Index>(n_slots + n_targets);
  }
};

struct QpForm {
  /// Symmetric positive semidefinite, both triangles stored.
  Eigen::SparseMatrix<double> quadratic;
  Eigen::VectorXd linear;
  std::vector<ConstraintRow> constraints;
  VarLayout layout;

  Eigen::Index n_vars() const { return layout.n_vars(); }
};

/// Assembles the program for a validated instance. Rows are grouped by
/// family in the order NoDeficit, NoOverflow, ChargePeak, DischargePeak,
/// OutputNonneg, TargetNonneg, TotalEnergy; the two non-negativity families
/// are omitted when selling is allowed.
QpForm build(const Instance& instance);

/// 1/2 z'Qz + q'z. Throws DimensionMismatch on a wrong-sized z.
double objective_at(const QpForm& qp, const Eigen::VectorXd& z);

Eigen::VectorXd encode(const VarLayout& layout,
                       std::span<const double> output_kw,
                       std::span<const double> target_vars);

struct Decoded {
  std::vector<double> output_kw;
  std::vector<double> target_vars;
};

Decoded decode(const VarLayout& layout, const Eigen::VectorXd& z);

/// a_k' z
double row_activity(const ConstraintRow& row, const Eigen::VectorXd& z);

/// Amount by which z violates the row (0 when satisfied).
double row_violation(const ConstraintRow& row, const Eigen::VectorXd& z);

/// Largest row violation over the whole program.
double max_violation(const QpForm& qp, const Eigen::VectorXd& z);

/// Gradient of the objective plus A' lambda, one multiplier per row.
Eigen::VectorXd lagrangian_gradient(const QpForm& qp, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& duals);

}  // namespace pcdsm::qp
