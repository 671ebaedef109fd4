#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "bmiopt/affine.hpp"
#include "bmiopt/errors.hpp"

namespace bmiopt {

struct EvpOptions {
  double tolerance = 1e-7;       ///< relative feasibility / gap tolerance
  int max_iterations = 200;
  /// The solve stops with status kEarlyExitFeasible as soon as the certified
  /// level max_b lambda_max(block(x)) drops to this value: a search loop only
  /// needs the sign.  Set to -inf to always run to convergence.
  double lambda_stop = -1e-3;
  /// Level below which the problem is declared unbounded from below.
  double unbounded_level = -1e6;
};

struct EvpResult {
  enum Status { kConverged, kEarlyExitFeasible, kUnboundedBelow, kMaxIterations };
  double lambda_star = 0.0;  ///< certified: max_b lambda_max(block(x_star))
  Eigen::VectorXd x_star;
  Status status = kMaxIterations;
  int iterations = 0;
  double duality_gap = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double fdot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.array() * b.array()).sum();
}

/// Largest step in [0, 1] keeping X + t*dX positive definite, with safety
/// fraction tau strictly inside the cone.
inline double max_step(const Eigen::LLT<Eigen::MatrixXd>& lltX, const Eigen::MatrixXd& dX,
                       double tau) {
  const Eigen::MatrixXd Linv_dX =
      lltX.matrixL().solve(Eigen::MatrixXd(lltX.matrixL().solve(dX).transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (Linv_dX + Linv_dX.transpose()), Eigen::EigenvaluesOnly);
  const double nu = es.eigenvalues().minCoeff();
  if (nu >= 0.0) return 1.0;
  return std::min(1.0, -tau / nu);
}

}  // namespace detail

/// Smallest level lambda with every block of `amf` below lambda*I, solved by a
/// primal-dual path-following interior point method with a predictor-corrector
/// step.  The level variable is eliminated against an exactly feasible dual
/// start, and the reported optimum is re-certified from the returned inner
/// point through a plain eigenvalue computation.
inline EvpResult solve_evp(const AffineMatrixFunction& amf_in, const EvpOptions& opts = {}) {
  AffineMatrixFunction amf = amf_in;
  amf.canonicalize();

  const int m_full = amf.internal_dim;

  // With no inner variable the level is just the worst block eigenvalue.
  if (m_full == 0) {
    EvpResult r;
    r.x_star = Eigen::VectorXd::Zero(0);
    r.lambda_star = amf.max_eigenvalue(r.x_star);
    r.status = EvpResult::kConverged;
    r.duality_gap = 0.0;
    return r;
  }

  // Compact away inner slots that no block references; they stay at zero.
  std::vector<int> active;
  {
    std::vector<bool> seen(m_full, false);
    for (const auto& b : amf.blocks)
      for (const auto& t : b.terms) seen[t.index] = true;
    for (int j = 0; j < m_full; ++j)
      if (seen[j]) active.push_back(j);
  }
  const int ma = static_cast<int>(active.size());
  const int p = ma + 1;  // compacted slots plus the level variable
  std::vector<int> slot_of(m_full, -1);
  for (int k = 0; k < ma; ++k) slot_of[active[k]] = k;

  const std::size_t nb = amf.blocks.size();
  int n_tot = 0;
  for (const auto& b : amf.blocks) n_tot += b.order();

  // Per-block constraint matrices in dual form: S_b = C_b - sum_j y_j A_jb.
  struct BlockData {
    Eigen::MatrixXd C;
    std::vector<std::pair<int, Eigen::MatrixXd>> terms;  // (compact index, A_jb)
    int n;
  };
  std::vector<BlockData> bd(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& blk = amf.blocks[b];
    bd[b].n = blk.order();
    bd[b].C = -blk.constant;
    for (const auto& t : blk.terms) bd[b].terms.push_back({slot_of[t.index], t.coeff});
    bd[b].terms.push_back({p - 1, -Eigen::MatrixXd::Identity(bd[b].n, bd[b].n)});
  }

  Eigen::VectorXd b_vec = Eigen::VectorXd::Zero(p);
  b_vec[p - 1] = -1.0;

  auto expand = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m_full);
    for (int k = 0; k < ma; ++k) x[active[k]] = y[k];
    return x;
  };

  // Exactly dual-feasible start: x = 0, level above the worst eigenvalue.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p);
  y[p - 1] = amf.max_eigenvalue(Eigen::VectorXd::Zero(m_full)) + 1.0;

  std::vector<Eigen::MatrixXd> Z(nb), S(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    Z[b] = Eigen::MatrixXd::Identity(bd[b].n, bd[b].n) / static_cast<double>(n_tot);
    S[b] = bd[b].C;
    for (const auto& [j, A] : bd[b].terms) S[b] -= y[j] * A;
    // y was chosen so that S = (level)*I - block(0) has least eigenvalue 1.
  }

  EvpResult best;
  best.x_star = expand(y);
  best.lambda_star = amf.max_eigenvalue(best.x_star);
  best.status = EvpResult::kMaxIterations;

  const double tau = 0.95;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    best.iterations = it;

    std::vector<Eigen::LLT<Eigen::MatrixXd>> lltS(nb), lltZ(nb);
    std::vector<Eigen::MatrixXd> Sinv(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      lltS[b].compute(S[b]);
      lltZ[b].compute(Z[b]);
      if (lltS[b].info() != Eigen::Success || lltZ[b].info() != Eigen::Success) {
        std::ostringstream os;
        os << "evp: cone iterate lost definiteness at iteration " << it
           << " (level=" << y[p - 1] << ")";
        throw SolverError(os.str());
      }
      Sinv[b] = lltS[b].solve(Eigen::MatrixXd::Identity(bd[b].n, bd[b].n));
    }

    // Residuals.
    Eigen::VectorXd r_p = b_vec;
    for (std::size_t b = 0; b < nb; ++b)
      for (const auto& [j, A] : bd[b].terms) r_p[j] -= detail::fdot(A, Z[b]);
    std::vector<Eigen::MatrixXd> R_d(nb);
    double dinf = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      R_d[b] = bd[b].C - S[b];
      for (const auto& [j, A] : bd[b].terms) R_d[b] -= y[j] * A;
      dinf = std::max(dinf, R_d[b].norm() / (1.0 + bd[b].C.norm()));
    }
    double mu = 0.0;
    for (std::size_t b = 0; b < nb; ++b) mu += detail::fdot(Z[b], S[b]);
    mu /= n_tot;

    double pobj = 0.0;
    for (std::size_t b = 0; b < nb; ++b) pobj += detail::fdot(bd[b].C, Z[b]);
    const double dobj = b_vec.dot(y);
    const double gap = std::abs(pobj - dobj);
    const double pinf = r_p.norm() / (1.0 + b_vec.norm());

    // Certified level at the current outer iterate.
    const Eigen::VectorXd x_now = expand(y);
    const double lam_ub = amf.max_eigenvalue(x_now);
    if (lam_ub < best.lambda_star) {
      best.lambda_star = lam_ub;
      best.x_star = x_now;
    }

    if (lam_ub <= opts.lambda_stop) {
      best.lambda_star = lam_ub;
      best.x_star = x_now;
      best.status = EvpResult::kEarlyExitFeasible;
      best.duality_gap = gap;
      return best;
    }
    if (y[p - 1] < opts.unbounded_level || lam_ub < opts.unbounded_level) {
      best.lambda_star = std::min(lam_ub, y[p - 1]);
      best.x_star = x_now;
      best.status = EvpResult::kUnboundedBelow;
      best.duality_gap = gap;
      return best;
    }
    if (pinf <= opts.tolerance && dinf <= opts.tolerance &&
        gap <= opts.tolerance * (1.0 + std::abs(dobj))) {
      best.lambda_star = lam_ub;
      best.x_star = x_now;
      best.status = EvpResult::kConverged;
      best.duality_gap = gap;
      return best;
    }

    // Schur complement M_jk = sum_b <A_jb, Z_b A_kb Sinv_b>.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t b = 0; b < nb; ++b) {
      for (const auto& [k, Ak] : bd[b].terms) {
        const Eigen::MatrixXd W = Z[b] * Ak * Sinv[b];
        for (const auto& [j, Aj] : bd[b].terms) M(j, k) += detail::fdot(Aj, W);
      }
    }
    M = 0.5 * (M + M.transpose()).eval();

    Eigen::LLT<Eigen::MatrixXd> lltM;
    double reg = 0.0;
    for (int attempt = 0;; ++attempt) {
      Eigen::MatrixXd Mreg = M;
      if (reg > 0.0) Mreg.diagonal().array() += reg * (1.0 + M.diagonal().maxCoeff());
      lltM.compute(Mreg);
      if (lltM.info() == Eigen::Success) break;
      if (attempt >= 6) {
        std::ostringstream os;
        os << "evp: normal matrix not positive definite after regularization "
           << "(iteration " << it << ", level=" << y[p - 1] << ", mu=" << mu << ")";
        throw SolverError(os.str());
      }
      reg = (reg == 0.0) ? 1e-14 : reg * 100.0;
    }

    // One backsolve of the Newton system for a given complementarity target R.
    auto solve_direction = [&](const std::vector<Eigen::MatrixXd>& R, Eigen::VectorXd& dy,
                               std::vector<Eigen::MatrixXd>& dZ,
                               std::vector<Eigen::MatrixXd>& dS) {
      Eigen::VectorXd rhs = r_p;
      for (std::size_t b = 0; b < nb; ++b) {
        const Eigen::MatrixXd G = (R[b] - Z[b] * R_d[b]) * Sinv[b];
        for (const auto& [j, A] : bd[b].terms) rhs[j] -= detail::fdot(A, G);
      }
      dy = lltM.solve(rhs);
      dZ.resize(nb);
      dS.resize(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        dS[b] = R_d[b];
        for (const auto& [j, A] : bd[b].terms) dS[b] -= dy[j] * A;
        Eigen::MatrixXd dz = (R[b] - Z[b] * dS[b]) * Sinv[b];
        dZ[b] = 0.5 * (dz + dz.transpose());
      }
    };

    // Predictor: pure Newton step toward complementarity zero.
    std::vector<Eigen::MatrixXd> R(nb);
    for (std::size_t b = 0; b < nb; ++b) R[b] = -Z[b] * S[b];
    Eigen::VectorXd dy_a;
    std::vector<Eigen::MatrixXd> dZ_a, dS_a;
    solve_direction(R, dy_a, dZ_a, dS_a);

    double ap = 1.0, ad = 1.0;
    for (std::size_t b = 0; b < nb; ++b) {
      ap = std::min(ap, detail::max_step(lltZ[b], dZ_a[b], tau));
      ad = std::min(ad, detail::max_step(lltS[b], dS_a[b], tau));
    }
    double mu_aff = 0.0;
    for (std::size_t b = 0; b < nb; ++b)
      mu_aff += detail::fdot(Z[b] + ap * dZ_a[b], S[b] + ad * dS_a[b]);
    mu_aff /= n_tot;
    double sigma = std::pow(mu_aff / mu, 3);
    sigma = std::clamp(sigma, 1e-8, 1.0);

    // Corrector with centering and the second-order cross term.
    for (std::size_t b = 0; b < nb; ++b)
      R[b] = sigma * mu * Eigen::MatrixXd::Identity(bd[b].n, bd[b].n) - Z[b] * S[b] -
             dZ_a[b] * dS_a[b];
    Eigen::VectorXd dy;
    std::vector<Eigen::MatrixXd> dZ, dS;
    solve_direction(R, dy, dZ, dS);

    ap = 1.0;
    ad = 1.0;
    for (std::size_t b = 0; b < nb; ++b) {
      ap = std::min(ap, detail::max_step(lltZ[b], dZ[b], tau));
      ad = std::min(ad, detail::max_step(lltS[b], dS[b], tau));
    }

    for (std::size_t b = 0; b < nb; ++b) {
      Z[b] += ap * dZ[b];
      Z[b] = 0.5 * (Z[b] + Z[b].transpose()).eval();
      S[b] += ad * dS[b];
      S[b] = 0.5 * (S[b] + S[b].transpose()).eval();
    }
    y += ad * dy;
  }

  return best;  // status kMaxIterations with the best certified point seen
}

}  // namespace bmiopt
