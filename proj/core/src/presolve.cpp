#include "presolve.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <unordered_map>

namespace pcdsm::solver::detail {

namespace {

using Entries = std::vector<qp::SparseEntry>;

// Chains are only worth it for rows that touch several variables.
constexpr std::size_t kMinChainNnz = 3;

std::size_t hash_entries(const Entries& e) {
  std::size_t h = e.size();
  auto mix = [&h](std::uint64_t v) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) +
         (h >> 2);
  };
  for (const auto& x : e) {
    mix(static_cast<std::uint64_t>(x.col));
    mix(std::bit_cast<std::uint64_t>(x.value));
  }
  return h;
}

bool same_entries(const Entries& a, const Entries& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].col != b[i].col || a[i].value != b[i].value) return false;
  }
  return true;
}

// Entries of `big` that are not in `small`, or nullopt when `small` is not
// an exact sub-row of `big`.
std::optional<Entries> difference_if_nested(const Entries& small,
                                            const Entries& big) {
  if (small.size() >= big.size()) return std::nullopt;
  Entries diff;
  diff.reserve(big.size() - small.size());
  std::size_t i = 0;
  for (const auto& e : big) {
    if (i < small.size() && small[i].col == e.col) {
      if (small[i].value != e.value) return std::nullopt;
      ++i;
    } else if (i < small.size() && small[i].col < e.col) {
      return std::nullopt;
    } else {
      diff.push_back(e);
    }
  }
  if (i != small.size()) return std::nullopt;
  return diff;
}

struct Accumulator {
  double lo = -kInf;
  double hi = kInf;
  BoundSource lo_src;
  BoundSource hi_src;
  bool has_eq = false;
  double eq = 0.0;
  BoundSource eq_src;
};

}  // namespace

Presolved::Presolved(const qp::QpForm& qp)
    : n_orig_(qp.n_vars()), Q_(qp.quadratic), q_orig_(qp.linear) {
  merge_rows(qp);
  lift();
}

void Presolved::merge_rows(const qp::QpForm& qp) {
  const std::size_t m = qp.constraints.size();
  orig_to_merged_.assign(m, 0);
  orig_scale_.assign(m, 0.0);

  std::unordered_multimap<std::size_t, std::size_t> index;
  std::vector<Accumulator> acc;

  for (std::size_t k = 0; k < m; ++k) {
    const auto& row = qp.constraints[k];
    Entries e;
    e.reserve(row.coeffs.size());
    for (const auto& c : row.coeffs) {
      if (c.value != 0.0) e.push_back(c);
    }
    std::sort(e.begin(), e.end(),
              [](const auto& a, const auto& b) { return a.col < b.col; });
    if (e.empty()) {
      // 0 <= rhs (LE) or 0 == rhs (EQ); nothing to optimise over.
      const bool ok = row.relation == qp::Relation::EQ
                          ? std::abs(row.rhs) <= 1e-9
                          : row.rhs >= -1e-9;
      if (!ok) infeasible_ = true;
      orig_to_merged_[k] = static_cast<std::size_t>(-1);
      continue;
    }
    const double s = e.front().value;
    for (auto& c : e) c.value /= s;
    const double b = row.rhs / s;

    const std::size_t h = hash_entries(e);
    std::size_t r = merged_.size();
    auto [first, last] = index.equal_range(h);
    for (auto it = first; it != last; ++it) {
      if (same_entries(merged_[it->second].coeffs, e)) {
        r = it->second;
        break;
      }
    }
    if (r == merged_.size()) {
      MergedRow mr;
      mr.coeffs = std::move(e);
      merged_.push_back(std::move(mr));
      acc.emplace_back();
      index.emplace(h, r);
    }
    orig_to_merged_[k] = r;
    orig_scale_[k] = s;

    auto& a = acc[r];
    const BoundSource src{static_cast<int>(k), s};
    if (row.relation == qp::Relation::EQ) {
      if (!a.has_eq) {
        a.has_eq = true;
        a.eq = b;
        a.eq_src = src;
      } else if (std::abs(a.eq - b) > 1e-9 * std::max(1.0, std::abs(b))) {
        infeasible_ = true;
      }
    } else if (s > 0.0) {
      if (b < a.hi) {
        a.hi = b;
        a.hi_src = src;
      }
    } else if (b > a.lo) {
      a.lo = b;
      a.lo_src = src;
    }
  }

  for (std::size_t r = 0; r < merged_.size(); ++r) {
    auto& a = acc[r];
    auto& mr = merged_[r];
    if (a.has_eq) {
      const double tol = 1e-9 * std::max(1.0, std::abs(a.eq));
      if (a.eq < a.lo - tol || a.eq > a.hi + tol) infeasible_ = true;
      mr.lo = mr.hi = a.eq;
      mr.lo_src = mr.hi_src = a.eq_src;
      continue;
    }
    mr.lo = a.lo;
    mr.hi = a.hi;
    mr.lo_src = a.lo_src;
    mr.hi_src = a.hi_src;
    if (mr.lo > mr.hi) {
      const double tol = 1e-9 * std::max(1.0, std::abs(mr.hi));
      if (mr.lo - mr.hi > tol) {
        infeasible_ = true;
      } else {
        mr.lo = mr.hi = 0.5 * (mr.lo + mr.hi);
      }
    }
  }
}

void Presolved::lift() {
  const std::size_t nm = merged_.size();
  merged_link_.assign(nm, -1);

  std::vector<std::size_t> order;
  for (std::size_t r = 0; r < nm; ++r) {
    if (merged_[r].coeffs.size() >= kMinChainNnz) order.push_back(r);
  }
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return merged_[a].coeffs.size() < merged_[b].coeffs.size();
  });

  int last = -1;
  for (std::size_t r : order) {
    ChainLink link;
    link.merged = r;
    const auto& coeffs = merged_[r].coeffs;
    if (last >= 0) {
      const auto& prev = merged_[links_[last].merged].coeffs;
      auto diff = difference_if_nested(prev, coeffs);
      if (diff && diff->size() <= coeffs.size() / 2) {
        link.parent = last;
        link.delta = std::move(*diff);
      }
    }
    if (link.parent < 0) link.delta = coeffs;
    const int id = static_cast<int>(links_.size());
    if (link.parent >= 0) links_[link.parent].child = id;
    links_.push_back(std::move(link));
    merged_link_[r] = id;
    last = id;
  }

  // Lifted layout: columns [z, s], rows [plain merged rows, (bound, link) per
  // chain link].
  n_lifted_ = n_orig_ + static_cast<Eigen::Index>(links_.size());
  merged_to_lifted_row_.assign(nm, 0);
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> lo, hi;
  Eigen::Index row = 0;
  for (std::size_t r = 0; r < nm; ++r) {
    if (merged_link_[r] >= 0) continue;
    for (const auto& c : merged_[r].coeffs) trips.emplace_back(row, c.col, c.value);
    lo.push_back(merged_[r].lo);
    hi.push_back(merged_[r].hi);
    merged_to_lifted_row_[r] = row++;
  }
  for (std::size_t k = 0; k < links_.size(); ++k) {
    auto& link = links_[k];
    link.aux_col = n_orig_ + static_cast<Eigen::Index>(k);
    link.bound_row = row++;
    trips.emplace_back(link.bound_row, link.aux_col, 1.0);
    lo.push_back(merged_[link.merged].lo);
    hi.push_back(merged_[link.merged].hi);
    merged_to_lifted_row_[link.merged] = link.bound_row;

    link.link_row = row++;
    trips.emplace_back(link.link_row, link.aux_col, 1.0);
    if (link.parent >= 0) {
      trips.emplace_back(link.link_row, links_[link.parent].aux_col, -1.0);
    }
    for (const auto& c : link.delta) {
      trips.emplace_back(link.link_row, c.col, -c.value);
    }
    lo.push_back(0.0);
    hi.push_back(0.0);
  }
  A_.resize(row, n_lifted_);
  A_.setFromTriplets(trips.begin(), trips.end());
  A_.makeCompressed();
  l_ = Eigen::Map<Eigen::VectorXd>(lo.data(), row);
  u_ = Eigen::Map<Eigen::VectorXd>(hi.data(), row);

  std::vector<Eigen::Triplet<double>> ptrips;
  for (int j = 0; j < Q_.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(Q_, j); it; ++it) {
      ptrips.emplace_back(it.row(), it.col(), it.value());
    }
  }
  P_.resize(n_lifted_, n_lifted_);
  P_.setFromTriplets(ptrips.begin(), ptrips.end());
  P_.makeCompressed();
  q_ = Eigen::VectorXd::Zero(n_lifted_);
  q_.head(n_orig_) = q_orig_;
}

Eigen::VectorXd Presolved::merged_activity(const Eigen::VectorXd& z) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(merged_.size()));
  std::vector<double> chain(links_.size());
  for (std::size_t k = 0; k < links_.size(); ++k) {
    double s = links_[k].parent >= 0 ? chain[links_[k].parent] : 0.0;
    for (const auto& c : links_[k].delta) s += c.value * z[c.col];
    chain[k] = s;
  }
  for (std::size_t r = 0; r < merged_.size(); ++r) {
    const int link = merged_link_[r];
    if (link >= 0) {
      v[static_cast<Eigen::Index>(r)] = chain[link];
    } else {
      double s = 0.0;
      for (const auto& c : merged_[r].coeffs) s += c.value * z[c.col];
      v[static_cast<Eigen::Index>(r)] = s;
    }
  }
  return v;
}

Eigen::VectorXd Presolved::merged_transpose(
    const Eigen::VectorXd& y_merged) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_orig_);
  for (std::size_t r = 0; r < merged_.size(); ++r) {
    if (merged_link_[r] >= 0) continue;
    const double y = y_merged[static_cast<Eigen::Index>(r)];
    if (y == 0.0) continue;
    for (const auto& c : merged_[r].coeffs) g[c.col] += y * c.value;
  }
  std::vector<double> tail(links_.size(), 0.0);
  for (std::size_t k = links_.size(); k-- > 0;) {
    const auto& link = links_[k];
    tail[k] = y_merged[static_cast<Eigen::Index>(link.merged)] +
              (link.child >= 0 ? tail[link.child] : 0.0);
    if (tail[k] == 0.0) continue;
    for (const auto& c : link.delta) g[c.col] += tail[k] * c.value;
  }
  return g;
}

Eigen::VectorXd Presolved::lift_primal(const Eigen::VectorXd& z) const {
  Eigen::VectorXd x(n_lifted_);
  x.head(n_orig_) = z;
  for (std::size_t k = 0; k < links_.size(); ++k) {
    double s = links_[k].parent >= 0 ? x[links_[links_[k].parent].aux_col] : 0.0;
    for (const auto& c : links_[k].delta) s += c.value * z[c.col];
    x[links_[k].aux_col] = s;
  }
  return x;
}

Eigen::VectorXd Presolved::lift_duals(const Eigen::VectorXd& y_merged) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m_lifted());
  for (std::size_t r = 0; r < merged_.size(); ++r) {
    y[merged_to_lifted_row_[r]] = y_merged[static_cast<Eigen::Index>(r)];
  }
  std::vector<double> tail(links_.size(), 0.0);
  for (std::size_t k = links_.size(); k-- > 0;) {
    const auto& link = links_[k];
    tail[k] = y_merged[static_cast<Eigen::Index>(link.merged)] +
              (link.child >= 0 ? tail[link.child] : 0.0);
    y[link.link_row] = -tail[k];
  }
  return y;
}

Eigen::VectorXd Presolved::merged_duals(const Eigen::VectorXd& y_lifted) const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(merged_.size()));
  for (std::size_t r = 0; r < merged_.size(); ++r) {
    y[static_cast<Eigen::Index>(r)] = y_lifted[merged_to_lifted_row_[r]];
  }
  return y;
}

Eigen::VectorXd Presolved::original_duals(
    const Eigen::VectorXd& y_merged) const {
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(orig_to_merged_.size()));
  for (std::size_t r = 0; r < merged_.size(); ++r) {
    const double y = y_merged[static_cast<Eigen::Index>(r)];
    const auto& mr = merged_[r];
    if (y > 0.0 && mr.hi_src.row >= 0) {
      lam[mr.hi_src.row] += y / mr.hi_src.scale;
    } else if (y < 0.0 && mr.lo_src.row >= 0) {
      lam[mr.lo_src.row] += y / mr.lo_src.scale;
    }
  }
  return lam;
}

Eigen::VectorXd Presolved::merged_from_original(
    const Eigen::VectorXd& duals) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(merged_.size()));
  for (std::size_t k = 0; k < orig_to_merged_.size(); ++k) {
    const std::size_t r = orig_to_merged_[k];
    if (r == static_cast<std::size_t>(-1)) continue;
    y[static_cast<Eigen::Index>(r)] +=
        duals[static_cast<Eigen::Index>(k)] * orig_scale_[k];
  }
  return y;
}

MergedResiduals Presolved::residuals(const Eigen::VectorXd& z,
                                     const Eigen::VectorXd& y_merged) const {
  MergedResiduals res;
  const Eigen::VectorXd v = merged_activity(z);
  for (std::size_t r = 0; r < merged_.size(); ++r) {
    const auto& mr = merged_[r];
    const double vr = v[static_cast<Eigen::Index>(r)];
    const double yr = y_merged[static_cast<Eigen::Index>(r)];
    const double w = std::max(mr.lo_weight(), mr.hi_weight());
    res.primal_scale = std::max(res.primal_scale, std::abs(vr) * w);
    if (vr < mr.lo) res.primal = std::max(res.primal, (mr.lo - vr) * mr.lo_weight());
    if (vr > mr.hi) res.primal = std::max(res.primal, (vr - mr.hi) * mr.hi_weight());
    double comp = 0.0;
    if (yr > 0.0) {
      comp = std::isfinite(mr.hi) ? yr * std::abs(mr.hi - vr) : yr;
    } else if (yr < 0.0) {
      comp = std::isfinite(mr.lo) ? -yr * std::abs(vr - mr.lo) : -yr;
    }
    res.complementarity = std::max(res.complementarity, comp);
  }
  const Eigen::VectorXd qz = Q_ * z;
  const Eigen::VectorXd aty = merged_transpose(y_merged);
  res.dual = (qz + q_orig_ + aty).lpNorm<Eigen::Infinity>();
  res.dual_scale = std::max({qz.lpNorm<Eigen::Infinity>(),
                             aty.lpNorm<Eigen::Infinity>(),
                             q_orig_.lpNorm<Eigen::Infinity>()});
  return res;
}

}  // namespace pcdsm::solver::detail
