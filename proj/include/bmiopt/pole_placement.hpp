#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include "bmiopt/errors.hpp"
#include "bmiopt/layout.hpp"
#include "bmiopt/random.hpp"

namespace bmiopt {

/// Minimize h(q) = 1/2 || eig(A + B F(q) C) - targets ||^2 over the gain
/// entries q (row-major F).  targets must be conjugate-closed.
struct PolePlacementTask {
  Eigen::MatrixXd A, B, C;
  Eigen::VectorXcd targets;
  Eigen::VectorXd q0;

  int gain_rows() const { return static_cast<int>(B.cols()); }
  int gain_cols() const { return static_cast<int>(C.rows()); }

  Eigen::MatrixXd gain_from(const Eigen::VectorXd& q) const {
    Eigen::MatrixXd F(gain_rows(), gain_cols());
    int k = 0;
    for (int i = 0; i < F.rows(); ++i)
      for (int j = 0; j < F.cols(); ++j) F(i, j) = q[k++];
    return F;
  }

  Eigen::MatrixXd closed_matrix(const Eigen::VectorXd& q) const {
    return A + B * gain_from(q) * C;
  }

  void validate() const {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || n == 0) throw StructuralError("pole task: A must be square");
    if (B.rows() != n) throw StructuralError("pole task: B row mismatch");
    if (C.cols() != n) throw StructuralError("pole task: C col mismatch");
    if (targets.size() != n)
      throw StructuralError("pole task: need exactly one target per state");
    if (q0.size() != gain_rows() * gain_cols())
      throw StructuralError("pole task: q0 length mismatch");
    require_conjugate_closed(targets);
  }

  static void require_conjugate_closed(const Eigen::VectorXcd& t) {
    std::vector<bool> used(t.size(), false);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      if (used[i] || std::abs(t[i].imag()) == 0.0) continue;
      const std::complex<double> want = std::conj(t[i]);
      const double tol = 1e-9 * (1.0 + std::abs(t[i]));
      bool found = false;
      for (Eigen::Index j = 0; j < t.size(); ++j) {
        if (j == i || used[j]) continue;
        if (std::abs(t[j] - want) <= tol) {
          used[i] = used[j] = true;
          found = true;
          break;
        }
      }
      if (!found)
        throw StructuralError("pole task: target set is not conjugate-closed");
    }
  }
};

struct TrustRegionParams {
  double radius_max = 10.0;
  double radius0 = 1.0;
  double eta = 1e-4;        ///< acceptance threshold on the reduction ratio
  int max_iterations = 300;
  double residual_tol = 1e-10;
};

/// Minimum-cost matching between eigenvalues and targets on squared moduli:
/// returns a[i] = index of the eigenvalue paired with target i.  Cost ties are
/// broken toward pairings whose imaginary parts agree in sign, so conjugate
/// pairs map onto conjugate targets.
inline std::vector<int> assign_targets(const Eigen::VectorXcd& eigs,
                                       const Eigen::VectorXcd& targets) {
  const int n = static_cast<int>(targets.size());
  if (eigs.size() != n) throw StructuralError("assign_targets: size mismatch");
  if (n == 0) return {};
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost(i, j) = std::norm(eigs[j] - targets[i]);

  // Shortest augmenting path assignment with row/column potentials.
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> a(n);
  for (int j = 1; j <= n; ++j) a[match[j] - 1] = j - 1;

  // Cost-neutral swaps toward sign-consistent imaginary parts.
  auto sign3 = [](double x) { return (x > 0.0) - (x < 0.0); };
  auto consistency = [&](int ti, int ej) {
    return sign3(targets[ti].imag()) == sign3(eigs[ej].imag()) ? 1 : 0;
  };
  const double scale = 1.0 + cost.maxCoeff();
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < n; ++i)
      for (int k = i + 1; k < n; ++k) {
        const double keep = cost(i, a[i]) + cost(k, a[k]);
        const double swap = cost(i, a[k]) + cost(k, a[i]);
        if (std::abs(keep - swap) > 1e-12 * scale) continue;
        if (consistency(i, a[k]) + consistency(k, a[i]) >
            consistency(i, a[i]) + consistency(k, a[k]))
          std::swap(a[i], a[k]);
      }
  }
  return a;
}

/// Eigenvalues of A(q) together with their first derivatives with respect to
/// the gain entries: J(i, m) = d lambda_i / d q_m, rows in the eigensolver's
/// natural order.  Fails when eigenvalues collide or the eigenvector basis is
/// too ill-conditioned for the diagonal perturbation formula.
struct EigDerivatives {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd jacobian;  // n x (gain_rows*gain_cols)
};

inline EigDerivatives eig_jacobian(const PolePlacementTask& task, const Eigen::VectorXd& q) {
  const int n = static_cast<int>(task.A.rows());
  Eigen::EigenSolver<Eigen::MatrixXd> es(task.closed_matrix(q));
  if (es.info() != Eigen::Success)
    throw SolverError("eig_jacobian: eigensolver failed to converge");
  const Eigen::VectorXcd lam = es.eigenvalues();
  const Eigen::MatrixXcd Xe = es.eigenvectors();

  const double lam_scale = 1.0 + lam.cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(lam[i] - lam[j]) < 1e-9 * lam_scale)
        throw DerivativeUnavailable("eig_jacobian: repeated eigenvalue");

  const auto svd = Xe.jacobiSvd();
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > 1e8)
    throw DerivativeUnavailable("eig_jacobian: eigenvector basis is ill-conditioned");

  // d lambda_i / d q_(r,c) = [Xe^-1 (B e_r e_c^T C) Xe]_ii
  //                        = (Xe^-1 B)(i, r) * (C Xe)(c, i).
  const Eigen::MatrixXcd L = Xe.partialPivLu().solve(task.B.cast<std::complex<double>>());
  const Eigen::MatrixXcd R = task.C.cast<std::complex<double>>() * Xe;
  const int nu = task.gain_rows(), ny = task.gain_cols();
  Eigen::MatrixXcd J(n, nu * ny);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < nu; ++r)
      for (int c = 0; c < ny; ++c) J(i, r * ny + c) = L(i, r) * R(c, i);
  return {lam, J};
}

/// Gradient and Gauss-Newton curvature of h at an assigned residual:
/// g_m = Re sum_i conj(res_i) J(i,m),  H = Re(J^H J).
inline void gradient_and_hessian(const Eigen::VectorXcd& residual,
                                 const Eigen::MatrixXcd& jacobian_assigned,
                                 Eigen::VectorXd& g, Eigen::MatrixXd& H) {
  g = (jacobian_assigned.adjoint() * residual).real();
  H = (jacobian_assigned.adjoint() * jacobian_assigned).real();
  H = 0.5 * (H + H.transpose()).eval();
}

/// Minimizer of the local model  m(p) = g.p + p.H p  over ||p|| <= radius
/// (note the model carries the curvature term unhalved).  The stationarity
/// system is (2H + nu I) p = -g with nu >= 0 zero unless the bound is active.
inline Eigen::VectorXd tr_subproblem(const Eigen::VectorXd& g, const Eigen::MatrixXd& H,
                                     double radius) {
  const int n = static_cast<int>(g.size());
  if (radius <= 0.0) throw StructuralError("tr_subproblem: radius must be positive");
  if (g.cwiseAbs().maxCoeff() == 0.0) return Eigen::VectorXd::Zero(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(2.0 * H);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);  // H is PSD by construction
  const Eigen::VectorXd gh = es.eigenvectors().transpose() * g;

  auto step_norm = [&](double nu) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = lam[i] + nu;
      if (d > 0.0) s += (gh[i] / d) * (gh[i] / d);
      // d == 0 with gh[i] == 0: direction unconstrained and unused.
    }
    return std::sqrt(s);
  };
  auto build = [&](double nu) {
    Eigen::VectorXd ph(n);
    for (int i = 0; i < n; ++i) {
      const double d = lam[i] + nu;
      ph[i] = (d > 0.0) ? -gh[i] / d : 0.0;
    }
    return Eigen::VectorXd(es.eigenvectors() * ph);
  };

  // Interior solution: the model is convex, so nu = 0 wins whenever the
  // unconstrained minimizer fits (a zero-curvature direction with gradient
  // would make the norm blow up, handled by the boundary branch below).
  bool interior_defined = true;
  for (int i = 0; i < n; ++i)
    if (lam[i] <= 0.0 && std::abs(gh[i]) > 1e-14 * g.norm()) interior_defined = false;
  if (interior_defined && step_norm(0.0) <= radius) return build(0.0);

  double nu_hi = std::max(1.0, 2.0 * g.norm() / radius);
  while (step_norm(nu_hi) > radius) nu_hi *= 2.0;
  double nu_lo = 0.0;
  for (int it = 0; it < 200 && (nu_hi - nu_lo) > 1e-15 * (1.0 + nu_hi); ++it) {
    const double mid = 0.5 * (nu_lo + nu_hi);
    if (step_norm(mid) > radius)
      nu_lo = mid;
    else
      nu_hi = mid;
  }
  return build(nu_hi);
}

struct TrIterate {
  int k = 0;
  double h = 0.0;
  double radius = 0.0;
  double ratio = 0.0;
  bool accepted = false;
};

struct PolePlacementResult {
  Eigen::VectorXd q;
  double residual = std::numeric_limits<double>::infinity();  ///< final h
  int iterations = 0;
  bool derivative_failed = false;  ///< derivatives vanished mid-run
  std::vector<TrIterate> trace;
};

/// Trust-region damped least-squares descent on h.  The target assignment is
/// refreshed every iteration before the residual is formed.  Stops when h
/// reaches residual_tol, the iteration budget runs out, or 20 consecutive
/// steps were rejected.  A derivative failure at the starting point is thrown
/// back to the caller (which typically resamples the start).
inline PolePlacementResult levenberg_marquardt(const PolePlacementTask& task,
                                               const TrustRegionParams& params = {}) {
  task.validate();
  const int n = static_cast<int>(task.A.rows());

  auto residual_at = [&](const Eigen::VectorXd& q) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(task.closed_matrix(q),
                                           /*computeEigenvectors=*/false);
    const Eigen::VectorXcd lam = es.eigenvalues();
    const auto a = assign_targets(lam, task.targets);
    Eigen::VectorXcd r(n);
    for (int i = 0; i < n; ++i) r[i] = lam[a[i]] - task.targets[i];
    return r;
  };
  auto half_sqnorm = [](const Eigen::VectorXcd& r) { return 0.5 * r.squaredNorm(); };

  PolePlacementResult out;
  out.q = task.q0;
  double radius = params.radius0;
  Eigen::VectorXcd res = residual_at(out.q);
  double h = half_sqnorm(res);
  int consecutive_rejects = 0;
  bool any_accept = false;

  for (int k = 0; k < params.max_iterations; ++k) {
    if (h <= params.residual_tol) break;
    out.iterations = k + 1;

    EigDerivatives ed;
    try {
      ed = eig_jacobian(task, out.q);
    } catch (const DerivativeUnavailable&) {
      if (!any_accept) throw;  // failure at the starting point
      out.derivative_failed = true;
      break;
    }
    const auto a = assign_targets(ed.eigenvalues, task.targets);
    Eigen::VectorXcd r(n);
    Eigen::MatrixXcd J(n, ed.jacobian.cols());
    for (int i = 0; i < n; ++i) {
      r[i] = ed.eigenvalues[a[i]] - task.targets[i];
      J.row(i) = ed.jacobian.row(a[i]);
    }
    h = half_sqnorm(r);
    if (h <= params.residual_tol) break;

    Eigen::VectorXd g;
    Eigen::MatrixXd H;
    gradient_and_hessian(r, J, g, H);
    const Eigen::VectorXd p = tr_subproblem(g, H, radius);
    const double predicted = -(g.dot(p) + p.dot(H * p));

    TrIterate rec;
    rec.k = k;
    rec.h = h;
    rec.radius = radius;

    if (predicted <= 1e-16) {
      // Degenerate model decrease: shrink and count as a rejection.
      radius *= 0.25;
      rec.ratio = 0.0;
      out.trace.push_back(rec);
      if (++consecutive_rejects >= 20) break;
      continue;
    }

    const Eigen::VectorXd q_new = out.q + p;
    const double h_new = half_sqnorm(residual_at(q_new));
    const double ratio = (h - h_new) / predicted;
    rec.ratio = ratio;

    if (ratio < 0.25) {
      radius *= 0.25;
    } else if (ratio > 0.75 && p.norm() >= (1.0 - 1e-10) * radius) {
      radius = std::min(2.0 * radius, params.radius_max);
    }

    if (ratio > params.eta) {
      out.q = q_new;
      h = h_new;
      consecutive_rejects = 0;
      any_accept = true;
      rec.accepted = true;
    } else {
      rec.accepted = false;
      if (++consecutive_rejects >= 20) {
        out.trace.push_back(rec);
        break;
      }
    }
    out.trace.push_back(rec);
  }

  out.residual = h;
  return out;
}

/// Draws random starts inside the entry box and runs the descent until one
/// start reaches residual 1e-8; returns the recovered gain, or nothing.
inline std::optional<Eigen::MatrixXd> recover_gain(const PoleChannel& channel,
                                                   const Eigen::VectorXcd& targets,
                                                   double entry_lower, double entry_upper,
                                                   int attempts, SplitMix& rng,
                                                   const TrustRegionParams& params = {}) {
  PolePlacementTask task;
  task.A = channel.A;
  task.B = channel.B;
  task.C = channel.C;
  task.targets = targets;
  const int nq = task.gain_rows() * task.gain_cols();
  for (int attempt = 0; attempt < attempts; ++attempt) {
    task.q0 = Eigen::VectorXd::NullaryExpr(
        nq, [&](Eigen::Index) { return rng.uniform(entry_lower, entry_upper); });
    try {
      const PolePlacementResult res = levenberg_marquardt(task, params);
      if (res.residual <= 1e-8) return task.gain_from(res.q);
    } catch (const DerivativeUnavailable&) {
      continue;  // resample the start
    }
  }
  return std::nullopt;
}

}  // namespace bmiopt
