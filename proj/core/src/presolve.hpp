#pragma once

// Internal reformulation used by the ADMM solver.
//
// 1. Parallel rows (equal coefficients after dividing by the first one) are
//    merged into one interval row lo <= a'z <= hi. Each bound remembers the
//    original row and scale it came from so multipliers map back exactly.
// 2. Merged rows whose support nests (a_k = a_p + d_k with sparse d_k, as
//    for cumulative sums) are lifted into auxiliary variables
//    s_k = s_p + d_k'z. The interval then bounds s_k, which keeps the lifted
//    constraint matrix O(nnz(d)) instead of O(N^2).

#include <Eigen/Core>
#include <cmath>
#include <Eigen/SparseCore>
#include <limits>
#include <vector>

#include "pcdsm/qp.hpp"

namespace pcdsm::solver::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct BoundSource {
  int row = -1;        // original row index
  double scale = 0.0;  // a_original = scale * a_merged
};

struct MergedRow {
  std::vector<qp::SparseEntry> coeffs;
  double lo = -kInf;
  double hi = kInf;
  BoundSource lo_src;
  BoundSource hi_src;
  /// Scale used to express violations in original row units.
  double lo_weight() const { return lo_src.row >= 0 ? std::abs(lo_src.scale) : 1.0; }
  double hi_weight() const { return hi_src.row >= 0 ? std::abs(hi_src.scale) : 1.0; }
};

struct ChainLink {
  std::size_t merged = 0;
  int parent = -1;
  int child = -1;
  std::vector<qp::SparseEntry> delta;  // a_k - a_parent, or a_k for a root
  Eigen::Index aux_col = 0;
  Eigen::Index bound_row = 0;
  Eigen::Index link_row = 0;
};

struct MergedResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double primal_scale = 0.0;
  double dual_scale = 0.0;
};

class Presolved {
 public:
  explicit Presolved(const qp::QpForm& qp);

  bool infeasible() const { return infeasible_; }
  Eigen::Index n_orig() const { return n_orig_; }
  Eigen::Index n_lifted() const { return n_lifted_; }
  Eigen::Index m_lifted() const { return l_.size(); }
  std::size_t n_merged() const { return merged_.size(); }
  const std::vector<MergedRow>& merged() const { return merged_; }

  const Eigen::SparseMatrix<double>& P() const { return P_; }
  const Eigen::VectorXd& q() const { return q_; }
  const Eigen::SparseMatrix<double>& A() const { return A_; }
  const Eigen::VectorXd& l() const { return l_; }
  const Eigen::VectorXd& u() const { return u_; }
  const Eigen::SparseMatrix<double>& Q() const { return Q_; }
  const Eigen::VectorXd& q_orig() const { return q_orig_; }

  /// a_r'z for every merged row.
  Eigen::VectorXd merged_activity(const Eigen::VectorXd& z) const;
  /// sum_r y_r a_r
  Eigen::VectorXd merged_transpose(const Eigen::VectorXd& y_merged) const;

  /// [z; s] with s consistent with z.
  Eigen::VectorXd lift_primal(const Eigen::VectorXd& z) const;
  /// Lifted multipliers that satisfy the auxiliary stationarity exactly.
  Eigen::VectorXd lift_duals(const Eigen::VectorXd& y_merged) const;
  Eigen::VectorXd merged_duals(const Eigen::VectorXd& y_lifted) const;

  Eigen::VectorXd original_duals(const Eigen::VectorXd& y_merged) const;
  Eigen::VectorXd merged_from_original(const Eigen::VectorXd& duals) const;

  /// Residuals of the merged problem in original row units.
  MergedResiduals residuals(const Eigen::VectorXd& z,
                            const Eigen::VectorXd& y_merged) const;

 private:
  void merge_rows(const qp::QpForm& qp);
  void lift();

  Eigen::Index n_orig_ = 0;
  Eigen::Index n_lifted_ = 0;
  bool infeasible_ = false;
  std::vector<MergedRow> merged_;
  std::vector<std::size_t> orig_to_merged_;
  std::vector<double> orig_scale_;
  std::vector<Eigen::Index> merged_to_lifted_row_;
  std::vector<int> merged_link_;
  std::vector<ChainLink> links_;
  Eigen::SparseMatrix<double> Q_;
  Eigen::VectorXd q_orig_;
  Eigen::SparseMatrix<double> P_;
  Eigen::VectorXd q_;
  Eigen::SparseMatrix<double> A_;
  Eigen::VectorXd l_;
  Eigen::VectorXd u_;
};

}  // namespace pcdsm::solver::detail
