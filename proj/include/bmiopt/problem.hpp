#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "bmiopt/affine.hpp"
#include "bmiopt/errors.hpp"
#include "bmiopt/evp.hpp"
#include "bmiopt/layout.hpp"

namespace bmiopt {

/// A design problem over a tuned outer vector alpha:
///   minimize F(alpha)  subject to the constraint slice at alpha admitting an
///   inner point with every block negative definite.
///
/// The inner certificate route is one of:
///  - lmi_assembler: alpha -> affine constraint slice, whose minimal level
///    lambda*(alpha) is computed by solve_evp;
///  - direct_feasibility: alpha -> lambda*(alpha) in closed form (used when
///    there is no inner variable, e.g. stability margins).
/// Exactly one of the two must be set.
struct BmiProblem {
  std::string name;
  VariableLayout layout;
  int objective_arity = 0;  ///< N; 0 for pure feasibility problems
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> objective;
  std::function<AffineMatrixFunction(const Eigen::VectorXd&)> lmi_assembler;
  std::function<double(const Eigen::VectorXd&)> direct_feasibility;

  void validate() const {
    layout.validate();
    if (objective_arity < 0) throw StructuralError("problem: negative objective arity");
    if (objective_arity > 0 && !objective)
      throw StructuralError("problem: objective required when arity > 0");
    const bool has_lmi = static_cast<bool>(lmi_assembler);
    const bool has_direct = static_cast<bool>(direct_feasibility);
    if (has_lmi == has_direct)
      throw StructuralError(
          "problem: exactly one of lmi_assembler / direct_feasibility must be set");
  }
};

/// One evaluated point: the augmented vector [F(alpha); max(0, lambda*)] and
/// the raw certificate level for archival.
struct Evaluation {
  Eigen::VectorXd f_tilde;
  double lambda_star = 0.0;

  bool feasible() const { return lambda_star < 0.0; }
};

/// The unconstrained vector objective equivalent to the constrained design
/// problem: a point is feasible exactly when the appended component is zero,
/// and minimizers of the original problem are recovered from the vector
/// minimizers with zero last component.
inline Evaluation augmented_objective(const BmiProblem& problem, const Eigen::VectorXd& alpha,
                                      const EvpOptions& evp_opts = {}) {
  if (alpha.size() != problem.layout.dimension())
    throw StructuralError("augmented_objective: alpha length does not match layout");

  double lambda_star;
  if (problem.direct_feasibility) {
    lambda_star = problem.direct_feasibility(alpha);
  } else {
    lambda_star = solve_evp(problem.lmi_assembler(alpha), evp_opts).lambda_star;
  }

  Eigen::VectorXd F;
  if (problem.objective_arity > 0) {
    F = problem.objective(alpha);
    if (F.size() != problem.objective_arity)
      throw StructuralError("augmented_objective: objective output length != arity");
  } else {
    F = Eigen::VectorXd(0);
  }

  Evaluation ev;
  ev.lambda_star = lambda_star;
  ev.f_tilde.resize(F.size() + 1);
  ev.f_tilde.head(F.size()) = F;
  ev.f_tilde[F.size()] = std::max(0.0, lambda_star);
  return ev;
}

}  // namespace bmiopt
