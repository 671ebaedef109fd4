#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bmiopt/affine.hpp"
#include "bmiopt/control.hpp"
#include "bmiopt/errors.hpp"
#include "bmiopt/layout.hpp"
#include "bmiopt/problem.hpp"

namespace bmiopt {

/// Shared knobs for the ready-made problem constructors.
struct CatalogOptions {
  double gain_bound = 50.0;  ///< +/- box applied to gain entries by default
  double sigma_min = 20.0;   ///< pole box real extent: sigma in [-sigma_min, 0]
  double omega_max = 20.0;   ///< pole box imaginary extent: |omega| < omega_max
  bool use_pole_box = true;  ///< seed gain blocks from pole vectors when shapes allow
  std::vector<double> subspace_scales{1.0, 0.5, 0.1};
};

/// Objective level assigned to closed loops that are not asymptotically stable
/// in the norm-design problems.  The feasibility channel then carries this
/// level plus the stability margin, so ranking still discriminates between
/// unstable candidates without evaluating the (undefined) norm.
inline constexpr double kInstabilityPenalty = 1e5;

// ---------------------------------------------------------------------------
// Parameter-range maximization for a two-vertex linear time-varying system.
// ---------------------------------------------------------------------------

/// Finds the largest vertex perturbation `range` for which a pair of coupled
/// quadratic certificates P1, P2 (each squeezed between 0 and I) proves
/// stability of the whole convex hull of
///   A1 = [[0, 1], [-2, -1]],   A2(range) = [[0, 1], [-2 - range, -1]].
/// Outer vector: (range, delta1, delta2) with range in [0, 10] and the
/// blending weights delta_i in [0, 1]; objective is -range (minimized).
inline BmiProblem make_lpvs(const CatalogOptions& opts = {}) {
  BmiProblem problem;
  problem.name = "lpvs";
  problem.layout.scalars = {{"range", 0.0, 10.0}, {"delta1", 0.0, 1.0}, {"delta2", 0.0, 1.0}};
  problem.layout.subspace_scales = opts.subspace_scales;
  problem.objective_arity = 1;
  problem.objective = [](const Eigen::VectorXd& alpha) {
    return Eigen::VectorXd::Constant(1, -alpha[0]);
  };
  problem.lmi_assembler = [](const Eigen::VectorXd& alpha) {
    const double range = alpha[0];
    const double d1 = alpha[1];
    const double d2 = alpha[2];
    Eigen::MatrixXd A1(2, 2), A2(2, 2);
    A1 << 0.0, 1.0, -2.0, -1.0;
    A2 << 0.0, 1.0, -2.0 - range, -1.0;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);

    AffineBuilder b;
    const int p1 = b.add_symmetric_var("P1", 2);
    const int p2 = b.add_symmetric_var("P2", 2);

    // (1 - delta2) * (P2 A1, *) + delta2 * (P2 - P1) < 0
    int blk = b.add_block(2);
    b.add_sym_ar(blk, p2, (1.0 - d2) * A1);
    b.add_sym_scaled(blk, p2, d2);
    b.add_sym_scaled(blk, p1, -d2);

    // (1 - delta1) * (P1 A2, *) - delta1 * (P2 - P1) < 0
    blk = b.add_block(2);
    b.add_sym_ar(blk, p1, (1.0 - d1) * A2);
    b.add_sym_scaled(blk, p2, -d1);
    b.add_sym_scaled(blk, p1, d1);

    // vertex certificates: (P1 A1, *) < 0 and (P2 A2, *) < 0
    blk = b.add_block(2);
    b.add_sym_ar(blk, p1, A1);
    blk = b.add_block(2);
    b.add_sym_ar(blk, p2, A2);

    // 0 < Pi < I, expressed as -Pi < 0 and Pi - I < 0
    blk = b.add_block(2);
    b.add_sym_scaled(blk, p1, -1.0);
    blk = b.add_block(2);
    b.add_sym_scaled(blk, p1, 1.0);
    b.add_constant(blk, -I);
    blk = b.add_block(2);
    b.add_sym_scaled(blk, p2, -1.0);
    blk = b.add_block(2);
    b.add_sym_scaled(blk, p2, 1.0);
    b.add_constant(blk, -I);
    return b.build();
  };
  problem.validate();
  return problem;
}

// ---------------------------------------------------------------------------
// Stability test of a two-mode blended system under a norm-bounded
// state-dependent disturbance.
// ---------------------------------------------------------------------------

/// Data for make_stability_test: exactly two vertex matrices and the
/// disturbance gain mu (the disturbance satisfies |p|^2 <= mu^2 |x|^2).
struct StabilityTestData {
  std::vector<Eigen::MatrixXd> A;  ///< exactly two square vertices, same order
  double mu = 0.1;
  double tau_bound = 10.0;  ///< upper bound of the coupling multipliers
};

/// Pure feasibility test: find coupling multipliers tau (outer) and a pair of
/// quadratic certificates P1, P2 (inner) with, for each vertex l and mode i,
///   A_l' P_i + P_i A_l + mu^2 I - tau_{l,i} (P_j - P_i) < 0,  j = other mode,
/// together with P_i > 0.  Outer vector: (tau112, tau121, tau212, tau221).
inline BmiProblem make_stability_test(const StabilityTestData& data,
                                      const CatalogOptions& opts = {}) {
  if (data.A.size() != 2) throw StructuralError("stability_test: need exactly two vertices");
  const Eigen::Index n = data.A[0].rows();
  for (const auto& A : data.A)
    if (A.rows() != n || A.cols() != n)
      throw StructuralError("stability_test: vertices must be square and equally sized");

  BmiProblem problem;
  problem.name = "stability_test";
  problem.layout.scalars = {{"tau112", 0.0, data.tau_bound},
                            {"tau121", 0.0, data.tau_bound},
                            {"tau212", 0.0, data.tau_bound},
                            {"tau221", 0.0, data.tau_bound}};
  problem.layout.subspace_scales = opts.subspace_scales;
  problem.objective_arity = 0;

  const std::vector<Eigen::MatrixXd> A = data.A;
  const double mu = data.mu;
  problem.lmi_assembler = [A, n, mu](const Eigen::VectorXd& alpha) {
    const Eigen::MatrixXd muI =
        mu * mu * Eigen::MatrixXd::Identity(n, n);
    AffineBuilder b;
    const int p[2] = {b.add_symmetric_var("P1", static_cast<int>(n)),
                      b.add_symmetric_var("P2", static_cast<int>(n))};
    for (int l = 0; l < 2; ++l) {
      for (int i = 0; i < 2; ++i) {
        const double tau = alpha[2 * l + i];
        const int j = 1 - i;
        const int blk = b.add_block(static_cast<int>(n));
        b.add_sym_ar(blk, p[i], A[static_cast<std::size_t>(l)]);
        b.add_constant(blk, muI);
        b.add_sym_scaled(blk, p[j], -tau);
        b.add_sym_scaled(blk, p[i], tau);
      }
    }
    for (int i = 0; i < 2; ++i) {
      const int blk = b.add_block(static_cast<int>(n));
      b.add_sym_scaled(blk, p[i], -1.0);
    }
    return b.build();
  };
  problem.validate();
  return problem;
}

// ---------------------------------------------------------------------------
// State-feedback stabilization of a two-mode blended system whose input is
// corrupted by a norm-bounded disturbance.
// ---------------------------------------------------------------------------

/// Data for make_perturbed_stabilization: two vertex pairs (A_l, B_l), the
/// disturbance gain mu, and the entry boxes of the multipliers and gains.
struct PerturbedStabilizationData {
  std::vector<Eigen::MatrixXd> A;  ///< exactly two square vertices
  std::vector<Eigen::MatrixXd> B;  ///< matching input matrices
  double mu = 1e-3;
  double tau_bound = 10.0;
  double gain_bound = 10.0;
};

/// Find per-mode state-feedback gains F1, F2 and coupling multipliers tau
/// (outer) plus certificates P1, P2 (inner) such that for each vertex l and
/// mode i the augmented block
///   [ (P_i (A_l + B_l F_i), *) + mu^2 I - tau (P_j - P_i)    *      *   ]
///   [                  P_i                                  -I      0   ]
///   [                mu F_i                                  0     -I   ]
/// is negative definite, together with P_i > 0.
inline BmiProblem make_perturbed_stabilization(const PerturbedStabilizationData& data,
                                               const CatalogOptions& opts = {}) {
  if (data.A.size() != 2 || data.B.size() != 2)
    throw StructuralError("perturbed_stabilization: need exactly two (A, B) vertices");
  const Eigen::Index n = data.A[0].rows();
  const Eigen::Index nu = data.B[0].cols();
  for (const auto& A : data.A)
    if (A.rows() != n || A.cols() != n)
      throw StructuralError("perturbed_stabilization: vertices must be square, equal order");
  for (const auto& B : data.B)
    if (B.rows() != n || B.cols() != nu)
      throw StructuralError("perturbed_stabilization: input matrices must share one shape");

  BmiProblem problem;
  problem.name = "perturbed_stabilization";
  problem.layout.scalars = {{"tau112", 0.0, data.tau_bound},
                            {"tau121", 0.0, data.tau_bound},
                            {"tau212", 0.0, data.tau_bound},
                            {"tau221", 0.0, data.tau_bound}};
  problem.layout.gain_blocks = {{"F1", static_cast<int>(nu), static_cast<int>(n),
                                 -data.gain_bound, data.gain_bound},
                                {"F2", static_cast<int>(nu), static_cast<int>(n),
                                 -data.gain_bound, data.gain_bound}};
  problem.layout.subspace_scales = opts.subspace_scales;
  problem.objective_arity = 0;

  const std::vector<Eigen::MatrixXd> A = data.A;
  const std::vector<Eigen::MatrixXd> B = data.B;
  const double mu = data.mu;
  const VariableLayout layout = problem.layout;
  problem.lmi_assembler = [A, B, n, nu, mu, layout](const Eigen::VectorXd& alpha) {
    const StructuredValues sv = unpack(layout, alpha);
    const Eigen::MatrixXd In = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd Inu = Eigen::MatrixXd::Identity(nu, nu);
    const int m = static_cast<int>(2 * n + nu);

    AffineBuilder b;
    const int p[2] = {b.add_symmetric_var("P1", static_cast<int>(n)),
                      b.add_symmetric_var("P2", static_cast<int>(n))};
    for (int l = 0; l < 2; ++l) {
      for (int i = 0; i < 2; ++i) {
        const double tau = sv.scalars[static_cast<std::size_t>(2 * l + i)];
        const int j = 1 - i;
        const Eigen::MatrixXd& F = sv.gains[static_cast<std::size_t>(i)];
        const int blk = b.add_block(m);
        b.add_sym_ar(blk, p[i],
                     A[static_cast<std::size_t>(l)] + B[static_cast<std::size_t>(l)] * F);
        b.add_constant(blk, mu * mu * In);
        b.add_sym_scaled(blk, p[j], -tau);
        b.add_sym_scaled(blk, p[i], tau);
        b.add_sym_offdiag(blk, p[i], In, static_cast<int>(n), 0);
        b.add_constant_pair(blk, mu * F, static_cast<int>(2 * n), 0);
        b.add_constant(blk, -In, static_cast<int>(n));
        b.add_constant(blk, -Inu, static_cast<int>(2 * n));
      }
    }
    for (int i = 0; i < 2; ++i) {
      const int blk = b.add_block(static_cast<int>(n));
      b.add_sym_scaled(blk, p[i], -1.0);
    }
    return b.build();
  };
  problem.validate();
  return problem;
}

// ---------------------------------------------------------------------------
// Simultaneous stabilization of several plants by one state-feedback gain,
// maximizing the smallest guaranteed decay rate.
// ---------------------------------------------------------------------------

/// Data for make_simultaneous_stabilization: one (A_i, B_i) pair per plant.
struct SimultaneousStabilizationData {
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::MatrixXd> B;
  double rate_bound = 5.0;  ///< upper bound of each decay-rate variable
};

/// Find one gain F and per-plant decay rates (outer) plus certificates P_i
/// (inner) with (P_i (A_i + B_i F), *) + 2 rate_i P_i < 0 and P_i > 0.
/// Objective: -min_i rate_i (minimized), so a positive optimum of the
/// original max-min program shows up as a negative objective value.
inline BmiProblem make_simultaneous_stabilization(const SimultaneousStabilizationData& data,
                                                  const CatalogOptions& opts = {}) {
  const std::size_t k = data.A.size();
  if (k == 0 || data.B.size() != k)
    throw StructuralError("simultaneous_stabilization: need matching (A, B) lists");
  const Eigen::Index n = data.A[0].rows();
  const Eigen::Index nu = data.B[0].cols();
  for (const auto& A : data.A)
    if (A.rows() != n || A.cols() != n)
      throw StructuralError("simultaneous_stabilization: plants must be square, equal order");
  for (const auto& B : data.B)
    if (B.rows() != n || B.cols() != nu)
      throw StructuralError("simultaneous_stabilization: input matrices must share one shape");

  BmiProblem problem;
  problem.name = "simultaneous_stabilization";
  for (std::size_t i = 0; i < k; ++i)
    problem.layout.scalars.push_back({"rate" + std::to_string(i + 1), 0.0, data.rate_bound});
  problem.layout.gain_blocks = {{"F", static_cast<int>(nu), static_cast<int>(n),
                                 -opts.gain_bound, opts.gain_bound}};
  problem.layout.subspace_scales = opts.subspace_scales;
  problem.objective_arity = 1;

  const VariableLayout layout = problem.layout;
  problem.objective = [k](const Eigen::VectorXd& alpha) {
    double worst = alpha[0];
    for (std::size_t i = 1; i < k; ++i) worst = std::min(worst, alpha[static_cast<int>(i)]);
    return Eigen::VectorXd::Constant(1, -worst);
  };
  const std::vector<Eigen::MatrixXd> A = data.A;
  const std::vector<Eigen::MatrixXd> B = data.B;
  problem.lmi_assembler = [A, B, k, n, layout](const Eigen::VectorXd& alpha) {
    const StructuredValues sv = unpack(layout, alpha);
    const Eigen::MatrixXd& F = sv.gains[0];
    AffineBuilder b;
    std::vector<int> p;
    for (std::size_t i = 0; i < k; ++i)
      p.push_back(b.add_symmetric_var("P" + std::to_string(i + 1), static_cast<int>(n)));
    for (std::size_t i = 0; i < k; ++i) {
      const int blk = b.add_block(static_cast<int>(n));
      b.add_sym_ar(blk, p[i], A[i] + B[i] * F);
      b.add_sym_scaled(blk, p[i], 2.0 * sv.scalars[i]);
    }
    for (std::size_t i = 0; i < k; ++i) {
      const int blk = b.add_block(static_cast<int>(n));
      b.add_sym_scaled(blk, p[i], -1.0);
    }
    return b.build();
  };
  problem.validate();
  return problem;
}

// ---------------------------------------------------------------------------
// Observer-based disturbance-attenuating control of a multi-model plant.
// ---------------------------------------------------------------------------

/// Data for make_observer_design: per model i, the dynamics A_i, control
/// input B2_i, performance output C1_i, and measured output C2_i; shared
/// disturbance input B1 and attenuation level gamma.
struct ObserverDesignData {
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::MatrixXd> B2;
  std::vector<Eigen::MatrixXd> C1;
  std::vector<Eigen::MatrixXd> C2;
  Eigen::MatrixXd B1;
  double gamma = 1.0;
  double gain_bound = 50.0;  ///< entry box of the state-feedback gains
};

/// Find per-model state-feedback gains F_i (outer) and certificates P1, P2
/// plus scaled observer gains G_i (inner) such that for every model the
/// standard separation-structured disturbance-attenuation block
///   [ (P1 A_i - P1 B2_i F_i, *)        *                  *        *  ]
///   [ (P1 B2_i F_i)'           (P2 A_i - G_i C2_i, *)     *        *  ]
///   [ (P1 B1)'                 (P2 B1)'               -gamma^2 I   *  ]
///   [ C1_i                     0                          0       -I  ]
/// is negative definite with P1, P2 > 0.  The physical observer gains are
/// L_i = P2^{-1} G_i (see recover_observer_gains); because the G_i carry no
/// definiteness requirement, their entries enter the inner vector one by one.
inline BmiProblem make_observer_design(const ObserverDesignData& data,
                                       const CatalogOptions& opts = {}) {
  const std::size_t k = data.A.size();
  if (k == 0 || data.B2.size() != k || data.C1.size() != k || data.C2.size() != k)
    throw StructuralError("observer_design: need matching A, B2, C1, C2 lists");
  const Eigen::Index n = data.A[0].rows();
  for (const auto& A : data.A)
    if (A.rows() != n || A.cols() != n)
      throw StructuralError("observer_design: models must be square, equal order");
  if (data.B1.rows() != n) throw StructuralError("observer_design: B1 row count mismatch");
  for (std::size_t i = 0; i < k; ++i) {
    if (data.B2[i].rows() != n)
      throw StructuralError("observer_design: B2 row count mismatch");
    if (data.C1[i].cols() != n)
      throw StructuralError("observer_design: C1 column count mismatch");
    if (data.C2[i].cols() != n)
      throw StructuralError("observer_design: C2 column count mismatch");
  }

  BmiProblem problem;
  problem.name = "observer_design";
  for (std::size_t i = 0; i < k; ++i)
    problem.layout.gain_blocks.push_back({"F" + std::to_string(i + 1),
                                          static_cast<int>(data.B2[i].cols()),
                                          static_cast<int>(n), -data.gain_bound,
                                          data.gain_bound});
  problem.layout.subspace_scales = opts.subspace_scales;
  problem.objective_arity = 0;

  const ObserverDesignData d = data;
  const VariableLayout layout = problem.layout;
  problem.lmi_assembler = [d, k, n, layout](const Eigen::VectorXd& alpha) {
    const StructuredValues sv = unpack(layout, alpha);
    const Eigen::Index nw = d.B1.cols();
    AffineBuilder b;
    const int p1 = b.add_symmetric_var("P1", static_cast<int>(n));
    const int p2 = b.add_symmetric_var("P2", static_cast<int>(n));
    // One scalar inner slot per entry of each G_i (rectangular, sign-free).
    std::vector<std::vector<int>> g(k);
    for (std::size_t i = 0; i < k; ++i) {
      const Eigen::Index pc = d.C2[i].rows();
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < pc; ++c)
          g[i].push_back(b.add_scalar_var("G" + std::to_string(i + 1) + "_" +
                                          std::to_string(r) + "_" + std::to_string(c)));
    }

    for (std::size_t i = 0; i < k; ++i) {
      const Eigen::MatrixXd& F = sv.gains[i];
      const Eigen::Index pz = d.C1[i].rows();
      const Eigen::Index pc = d.C2[i].rows();
      const int blk = b.add_block(static_cast<int>(2 * n + nw + pz));
      const Eigen::MatrixXd BF = d.B2[i] * F;
      b.add_sym_ar(blk, p1, d.A[i] - BF, 0);
      b.add_sym_offdiag(blk, p1, BF, 0, static_cast<int>(n));
      b.add_sym_ar(blk, p2, d.A[i], static_cast<int>(n));
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < pc; ++c) {
          Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
          M.row(r) = d.C2[i].row(c);
          const Eigen::MatrixXd S = -(M + M.transpose());
          b.add_scalar_coeff(blk, g[i][static_cast<std::size_t>(r * pc + c)], S,
                             static_cast<int>(n));
        }
      }
      b.add_sym_offdiag(blk, p1, d.B1, 0, static_cast<int>(2 * n));
      b.add_sym_offdiag(blk, p2, d.B1, static_cast<int>(n), static_cast<int>(2 * n));
      b.add_constant(blk, -(d.gamma * d.gamma) * Eigen::MatrixXd::Identity(nw, nw),
                     static_cast<int>(2 * n));
      b.add_constant_pair(blk, d.C1[i], static_cast<int>(2 * n + nw), 0);
      b.add_constant(blk, -Eigen::MatrixXd::Identity(pz, pz), static_cast<int>(2 * n + nw));
    }
    int blk = b.add_block(static_cast<int>(n));
    b.add_sym_scaled(blk, p1, -1.0);
    blk = b.add_block(static_cast<int>(n));
    b.add_sym_scaled(blk, p2, -1.0);
    return b.build();
  };
  problem.validate();
  return problem;
}

/// Rebuilds the physical observer gains L_i = P2^{-1} G_i from a converged
/// inner point of the observer-design constraint slice.
inline std::vector<Eigen::MatrixXd> recover_observer_gains(const AffineMatrixFunction& amf,
                                                           const Eigen::VectorXd& x,
                                                           const ObserverDesignData& data) {
  const Eigen::MatrixXd P2 = amf.internal_value(x, "P2");
  const Eigen::LLT<Eigen::MatrixXd> llt(P2);
  if (llt.info() != Eigen::Success)
    throw DomainError("recover_observer_gains: certificate P2 is not positive definite");
  std::vector<Eigen::MatrixXd> L;
  for (std::size_t i = 0; i < data.A.size(); ++i) {
    const Eigen::Index n = data.A[i].rows();
    const Eigen::Index pc = data.C2[i].rows();
    Eigen::MatrixXd G(n, pc);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < pc; ++c)
        G(r, c) = amf.internal_value(x, "G" + std::to_string(i + 1) + "_" +
                                            std::to_string(r) + "_" + std::to_string(c))(0, 0);
    L.push_back(llt.solve(G));
  }
  return L;
}

// ---------------------------------------------------------------------------
// Static output-feedback designs over a standard plant.
// ---------------------------------------------------------------------------

namespace detail {

/// Layout shared by the plant-based designs: one gain block B.cols x C.rows,
/// optionally seeded through the closed-loop pole channel.
inline VariableLayout output_feedback_layout(const PlantModel& plant,
                                             const CatalogOptions& opts) {
  VariableLayout layout;
  layout.gain_blocks = {{"F", static_cast<int>(plant.inputs()),
                         static_cast<int>(plant.measurements()), -opts.gain_bound,
                         opts.gain_bound}};
  layout.subspace_scales = opts.subspace_scales;
  if (opts.use_pole_box) {
    PoleChannel pc;
    pc.A = plant.A;
    pc.B = plant.B;
    pc.C = plant.C;
    pc.sigma_min = opts.sigma_min;
    pc.omega_max = opts.omega_max;
    layout.pole_channel = pc;
  }
  return layout;
}

/// Norm minimization over stabilizing static output feedback: the objective
/// is norm_fn on the closed loop when it is stable and kInstabilityPenalty
/// otherwise; the feasibility level is the stability margin, lifted by the
/// same penalty for unstable loops so that their ranking stays informative.
inline BmiProblem make_norm_design(const PlantModel& plant, std::string id,
                                   std::function<double(const ClosedLoop&)> norm_fn,
                                   const CatalogOptions& opts) {
  plant.validate();
  BmiProblem problem;
  problem.name = std::move(id);
  problem.layout = output_feedback_layout(plant, opts);
  problem.objective_arity = 1;
  const VariableLayout layout = problem.layout;
  problem.objective = [plant, layout, norm_fn](const Eigen::VectorXd& alpha) {
    const ClosedLoop cl = closed_loop(plant, unpack(layout, alpha).gains[0]);
    if (spectral_abscissa(cl.A) >= 0.0)
      return Eigen::VectorXd::Constant(1, kInstabilityPenalty);
    return Eigen::VectorXd::Constant(1, norm_fn(cl));
  };
  problem.direct_feasibility = [plant, layout](const Eigen::VectorXd& alpha) {
    const Eigen::MatrixXd F = unpack(layout, alpha).gains[0];
    const double margin = spectral_abscissa(plant.A + plant.B * F * plant.C);
    return margin >= 0.0 ? kInstabilityPenalty + margin : margin;
  };
  problem.validate();
  return problem;
}

}  // namespace detail

/// Stability-margin minimization: choose a static output-feedback gain F so
/// that the rightmost closed-loop eigenvalue real part is as small as
/// possible.  No inner variable is involved; the margin itself serves as the
/// feasibility level, so "feasible" coincides with "stabilizing".
inline BmiProblem make_spectral_abscissa(const PlantModel& plant,
                                         const CatalogOptions& opts = {}) {
  plant.validate();
  BmiProblem problem;
  problem.name = "spectral_abscissa";
  problem.layout = detail::output_feedback_layout(plant, opts);
  problem.objective_arity = 1;
  const VariableLayout layout = problem.layout;
  const auto margin = [plant, layout](const Eigen::VectorXd& alpha) {
    const Eigen::MatrixXd F = unpack(layout, alpha).gains[0];
    return spectral_abscissa(plant.A + plant.B * F * plant.C);
  };
  problem.objective = [margin](const Eigen::VectorXd& alpha) {
    return Eigen::VectorXd::Constant(1, margin(alpha));
  };
  problem.direct_feasibility = margin;
  problem.validate();
  return problem;
}

/// Quadratic-norm minimization over stabilizing static output feedback.  The
/// disturbance feedthrough is forced to zero (the norm is undefined
/// otherwise), matching the usual strictly-proper design convention.
inline BmiProblem make_h2_design(const PlantModel& plant, const CatalogOptions& opts = {}) {
  PlantModel p = plant;
  p.validate();
  p.D11.setZero();
  return detail::make_norm_design(
      p, "h2", [](const ClosedLoop& cl) { return h2_norm(cl); }, opts);
}

/// Peak-gain minimization over stabilizing static output feedback.
inline BmiProblem make_hinf_design(const PlantModel& plant, const CatalogOptions& opts = {}) {
  PlantModel p = plant;
  p.validate();
  return detail::make_norm_design(
      p, "hinf", [](const ClosedLoop& cl) { return hinf_norm(cl); }, opts);
}

// ---------------------------------------------------------------------------
// Vector-objective designs.
// ---------------------------------------------------------------------------

/// Two-objective output-feedback design trading guaranteed decay rate against
/// gain sparsity: minimize [-beta, sum_ij |F_ij|] subject to the decay
/// certificate (P (A + B F C), *) + 2 beta P < 0, P > 0.  Outer vector:
/// (beta, F) with beta in [0, 1.5].
inline BmiProblem make_sparse_gain_mop(const PlantModel& plant,
                                       const CatalogOptions& opts = {}) {
  plant.validate();
  BmiProblem problem;
  problem.name = "mop_sparse";
  problem.layout = detail::output_feedback_layout(plant, opts);
  problem.layout.scalars.insert(problem.layout.scalars.begin(), {"beta", 0.0, 1.5});
  problem.objective_arity = 2;
  const VariableLayout layout = problem.layout;
  problem.objective = [layout](const Eigen::VectorXd& alpha) {
    const StructuredValues sv = unpack(layout, alpha);
    Eigen::VectorXd f(2);
    f[0] = -sv.scalars[0];
    f[1] = sv.gains[0].cwiseAbs().sum();
    return f;
  };
  const PlantModel p = plant;
  problem.lmi_assembler = [p, layout](const Eigen::VectorXd& alpha) {
    const StructuredValues sv = unpack(layout, alpha);
    const double beta = sv.scalars[0];
    const Eigen::MatrixXd Acl = p.A + p.B * sv.gains[0] * p.C;
    AffineBuilder b;
    const int pv = b.add_symmetric_var("P", static_cast<int>(p.states()));
    int blk = b.add_block(static_cast<int>(p.states()));
    b.add_sym_ar(blk, pv, Acl);
    b.add_sym_scaled(blk, pv, 2.0 * beta);
    blk = b.add_block(static_cast<int>(p.states()));
    b.add_sym_scaled(blk, pv, -1.0);
    return b.build();
  };
  problem.validate();
  return problem;
}

/// Two-objective output-feedback design bounding the energy and peak gains of
/// two performance channels at once: minimize [eta, gamma] subject to
///   [ (P1 A_F, *) + Cz1_F' Cz1_F   P1 B1 ]
///   [ *                         -gamma^2 I ] < 0,
///   [ (P2 A_F, *)   P2 B1 ]
///   [ *                -I ] < 0,
///   [ P2     *  ]
///   [ Cz2_F  Z  ] > 0,   P1, P2 > 0,   trace(Z) <= eta^2,
/// where A_F = A + B F C and Czi_F = Czi + F C.  The trace cap enters the
/// constraint slice as a 1x1 block, so the certificate level covers it too.
/// Outer vector: (eta, gamma, F) with eta in [0, 2] and gamma in [1, 5].
inline BmiProblem make_mixed_norm_mop(const PlantModel& plant, const Eigen::MatrixXd& Cz1,
                                      const Eigen::MatrixXd& Cz2,
                                      const CatalogOptions& opts = {}) {
  plant.validate();
  const Eigen::Index n = plant.states();
  const Eigen::Index nu = plant.inputs();
  if (Cz1.rows() != nu || Cz1.cols() != n)
    throw StructuralError("mixed_norm_mop: first channel matrix must be inputs x states");
  if (Cz2.rows() != nu || Cz2.cols() != n)
    throw StructuralError("mixed_norm_mop: second channel matrix must be inputs x states");

  BmiProblem problem;
  problem.name = "mop_mixed";
  problem.layout = detail::output_feedback_layout(plant, opts);
  problem.layout.scalars = {{"eta", 0.0, 2.0}, {"gamma", 1.0, 5.0}};
  problem.objective_arity = 2;
  const VariableLayout layout = problem.layout;
  problem.objective = [](const Eigen::VectorXd& alpha) {
    Eigen::VectorXd f(2);
    f[0] = alpha[0];
    f[1] = alpha[1];
    return f;
  };
  const PlantModel p = plant;
  problem.lmi_assembler = [p, Cz1, Cz2, n, nu, layout](const Eigen::VectorXd& alpha) {
    const StructuredValues sv = unpack(layout, alpha);
    const double eta = sv.scalars[0];
    const double gamma = sv.scalars[1];
    const Eigen::MatrixXd& F = sv.gains[0];
    const Eigen::MatrixXd Acl = p.A + p.B * F * p.C;
    const Eigen::MatrixXd Cz1F = Cz1 + F * p.C;
    const Eigen::MatrixXd Cz2F = Cz2 + F * p.C;
    const Eigen::Index nw = p.disturbances();

    AffineBuilder b;
    const int p1 = b.add_symmetric_var("P1", static_cast<int>(n));
    const int p2 = b.add_symmetric_var("P2", static_cast<int>(n));
    const int z = b.add_symmetric_var("Z", static_cast<int>(nu));

    int blk = b.add_block(static_cast<int>(n + nw));
    b.add_sym_ar(blk, p1, Acl, 0);
    b.add_constant(blk, Cz1F.transpose() * Cz1F, 0);
    b.add_sym_offdiag(blk, p1, p.B1, 0, static_cast<int>(n));
    b.add_constant(blk, -(gamma * gamma) * Eigen::MatrixXd::Identity(nw, nw),
                   static_cast<int>(n));

    blk = b.add_block(static_cast<int>(n + nw));
    b.add_sym_ar(blk, p2, Acl, 0);
    b.add_sym_offdiag(blk, p2, p.B1, 0, static_cast<int>(n));
    b.add_constant(blk, -Eigen::MatrixXd::Identity(nw, nw), static_cast<int>(n));

    blk = b.add_block(static_cast<int>(n + nu));
    b.add_sym_scaled(blk, p2, -1.0, 0);
    b.add_constant_pair(blk, -Cz2F, static_cast<int>(n), 0);
    b.add_sym_scaled(blk, z, -1.0, static_cast<int>(n));

    blk = b.add_block(static_cast<int>(n));
    b.add_sym_scaled(blk, p1, -1.0);
    blk = b.add_block(static_cast<int>(n));
    b.add_sym_scaled(blk, p2, -1.0);

    blk = b.add_block(1);
    b.add_trace_coeff(blk, z, 1.0);
    b.add_constant(blk, Eigen::MatrixXd::Constant(1, 1, -eta * eta));
    return b.build();
  };
  problem.validate();
  return problem;
}

/// Convenience overload using the performance output C1 for both channels.
inline BmiProblem make_mixed_norm_mop(const PlantModel& plant,
                                      const CatalogOptions& opts = {}) {
  return make_mixed_norm_mop(plant, plant.C1, plant.C1, opts);
}

}  // namespace bmiopt
