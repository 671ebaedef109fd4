#pragma once

#include <Eigen/Dense>

#include "bmiopt/errors.hpp"

namespace bmiopt {

/// Pareto dominance for minimization: u dominates v when u is nowhere worse
/// and strictly better in at least one component.  Equal vectors do not
/// dominate each other.
inline bool dominates(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) throw StructuralError("dominates: length mismatch");
  bool strictly_better = false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] > v[i]) return false;
    if (u[i] < v[i]) strictly_better = true;
  }
  return strictly_better;
}

}  // namespace bmiopt
