// Tests for closed-loop assembly, the Lyapunov solver, and the three
// closed-loop evaluators (stability margin, quadratic norm, peak gain).
//
// Oracles: textbook closed forms for first-order loops, direct residual
// checks for the Lyapunov equation, full-line quadrature for the quadratic
// norm, and dense frequency sweeps for the peak gain.

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "bmiopt/control.hpp"
#include "bmiopt/errors.hpp"
#include "bmiopt/random.hpp"

namespace {

using bmiopt::ClosedLoop;
using bmiopt::closed_loop;
using bmiopt::h2_norm;
using bmiopt::hinf_norm;
using bmiopt::lyapunov_solve;
using bmiopt::PlantModel;
using bmiopt::spectral_abscissa;
using bmiopt::SplitMix;

Eigen::MatrixXd random_mat(int r, int c, SplitMix& rng) {
  Eigen::MatrixXd M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = rng.uniform(-1.0, 1.0);
  return M;
}

// Random Hurwitz matrix: shift a random matrix left of its own abscissa.
Eigen::MatrixXd random_stable(int n, SplitMix& rng) {
  Eigen::MatrixXd A = random_mat(n, n, rng);
  A -= (spectral_abscissa(A) + 0.5) * Eigen::MatrixXd::Identity(n, n);
  return A;
}

Eigen::MatrixXcd transfer(const ClosedLoop& cl, double omega) {
  const int n = static_cast<int>(cl.A.rows());
  const Eigen::MatrixXcd M =
      std::complex<double>(0.0, omega) * Eigen::MatrixXcd::Identity(n, n) -
      cl.A.cast<std::complex<double>>();
  Eigen::MatrixXcd G = cl.C.cast<std::complex<double>>() *
                       M.partialPivLu().solve(cl.B1.cast<std::complex<double>>());
  if (cl.D11.size() > 0) G += cl.D11.cast<std::complex<double>>();
  return G;
}

// Quadratic norm by Simpson quadrature over the whole line, omega = tan(t).
// The transformed integrand extends continuously to t = +-pi/2.
double h2_by_quadrature(const ClosedLoop& cl) {
  const int N = 4096;  // Simpson intervals (even)
  const double a = -M_PI / 2.0, b = M_PI / 2.0;
  const double hstep = (b - a) / N;
  const double tail = (cl.C * cl.B1).squaredNorm();
  auto f = [&](int k) {
    if (k == 0 || k == N) return tail;
    const double t = a + k * hstep;
    const double w = std::tan(t);
    const double sec2 = 1.0 + w * w;
    return transfer(cl, w).squaredNorm() * sec2;
  };
  double s = f(0) + f(N);
  for (int k = 1; k < N; ++k) s += f(k) * (k % 2 ? 4.0 : 2.0);
  return std::sqrt(s * hstep / 3.0 / (2.0 * M_PI));
}

double sigma_max(const Eigen::MatrixXcd& G) {
  return G.size() == 0 ? 0.0 : G.jacobiSvd().singularValues().coeff(0);
}

// Peak gain by a multi-resolution frequency sweep: a wide log grid plus two
// refinement passes around the best point seen.
double hinf_by_grid(const ClosedLoop& cl) {
  std::vector<double> omegas{0.0};
  for (int k = 0; k <= 4000; ++k) omegas.push_back(std::pow(10.0, -3.0 + 6.0 * k / 4000.0));
  double best = 0.0, at = 0.0;
  for (double w : omegas) {
    const double s = sigma_max(transfer(cl, w));
    if (s > best) {
      best = s;
      at = w;
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    const double lo = (pass == 0) ? at * 0.5 : at - (at * 0.01 + 1e-4);
    const double hi = (pass == 0) ? at * 2.0 + 1e-3 : at + (at * 0.01 + 1e-4);
    for (int k = 0; k <= 4000; ++k) {
      const double w = lo + (hi - lo) * k / 4000.0;
      if (w < 0.0) continue;
      const double s = sigma_max(transfer(cl, w));
      if (s > best) {
        best = s;
        at = w;
      }
    }
  }
  return best;
}

// First-order lag w -> z with unit gain: A=-1, B1=1, C=1.
ClosedLoop first_order_lag() {
  ClosedLoop cl;
  cl.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
  cl.B1 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  cl.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
  cl.D11 = Eigen::MatrixXd::Zero(1, 1);
  return cl;
}

ClosedLoop random_loop(int n, int nw, int nz, SplitMix& rng) {
  ClosedLoop cl;
  cl.A = random_stable(n, rng);
  cl.B1 = random_mat(n, nw, rng);
  cl.C = random_mat(nz, n, rng);
  cl.D11 = Eigen::MatrixXd::Zero(nz, nw);
  return cl;
}

}  // namespace

TEST(ClosedLoopAssembly, CombinesPlantAndGain) {
  SplitMix rng(SplitMix::derive(630, 1));
  PlantModel p;
  p.A = random_mat(3, 3, rng);
  p.B1 = random_mat(3, 2, rng);
  p.B = random_mat(3, 2, rng);
  p.C1 = random_mat(1, 3, rng);
  p.C = random_mat(2, 3, rng);
  p.D11 = Eigen::MatrixXd::Zero(1, 2);
  p.D12 = random_mat(1, 2, rng);
  p.validate();
  const Eigen::MatrixXd F = random_mat(2, 2, rng);
  const ClosedLoop cl = closed_loop(p, F);
  EXPECT_TRUE(cl.A.isApprox(p.A + p.B * F * p.C, 1e-14));
  EXPECT_TRUE(cl.C.isApprox(p.C1 + p.D12 * F * p.C, 1e-14));
  EXPECT_TRUE(cl.B1.isApprox(p.B1));
  EXPECT_TRUE(cl.D11.isApprox(p.D11));
}

TEST(StabilityMargin, ExactOnTriangularAndRotationBlocks) {
  Eigen::MatrixXd T(3, 3);
  T << -4, 1, 2, 0, -0.5, 7, 0, 0, -9;
  EXPECT_DOUBLE_EQ(spectral_abscissa(T), -0.5);
  Eigen::MatrixXd R(2, 2);
  R << 0.25, 5, -5, 0.25;  // eigenvalues 0.25 +- 5i
  EXPECT_NEAR(spectral_abscissa(R), 0.25, 1e-12);
  EXPECT_THROW(spectral_abscissa(Eigen::MatrixXd::Zero(2, 3)), bmiopt::StructuralError);
}

TEST(Lyapunov, ResidualVanishesAndResultIsSymmetric) {
  SplitMix rng(SplitMix::derive(630, 2));
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(4));
    const Eigen::MatrixXd A = random_stable(n, rng);
    Eigen::MatrixXd W = random_mat(n, n, rng);
    W = (W + W.transpose()).eval();
    const Eigen::MatrixXd Q = lyapunov_solve(A, W);
    EXPECT_TRUE(Q.isApprox(Q.transpose(), 1e-12));
    const double resid = (A * Q + Q * A.transpose() + W).norm();
    EXPECT_LE(resid, 1e-9 * (1.0 + W.norm()));
  }
}

TEST(Lyapunov, RejectsBadInputs) {
  Eigen::MatrixXd stable(1, 1), unstable(1, 1);
  stable << -1.0;
  unstable << 0.5;
  const Eigen::MatrixXd W = Eigen::MatrixXd::Identity(1, 1);
  EXPECT_THROW(lyapunov_solve(unstable, W), bmiopt::DomainError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 2, 3, 4;
  EXPECT_THROW(lyapunov_solve(-Eigen::MatrixXd::Identity(2, 2), asym),
               bmiopt::StructuralError);
  EXPECT_THROW(lyapunov_solve(stable, Eigen::MatrixXd::Identity(2, 2)),
               bmiopt::StructuralError);
  // Marginally stable (abscissa exactly zero) is out of scope too.
  Eigen::MatrixXd rot(2, 2);
  rot << 0, 1, -1, 0;
  EXPECT_THROW(lyapunov_solve(rot, Eigen::MatrixXd::Identity(2, 2)), bmiopt::DomainError);
}

TEST(QuadraticNorm, FirstOrderLagClosedForm) {
  // For G(s) = 1/(s+1) the quadratic norm is exactly 1/sqrt(2).
  EXPECT_NEAR(h2_norm(first_order_lag()), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(QuadraticNorm, MatchesQuadratureOnRandomLoops) {
  SplitMix rng(SplitMix::derive(630, 3));
  for (int trial = 0; trial < 5; ++trial) {
    const ClosedLoop cl = random_loop(5, 2, 2, rng);
    const double exact = h2_norm(cl);
    const double quad = h2_by_quadrature(cl);
    EXPECT_LE(std::abs(exact - quad), 1e-3 * (1.0 + exact)) << "trial " << trial;
  }
}

TEST(QuadraticNorm, ObservabilityFormAgrees) {
  // trace(C Q C^T) with A Q + Q A^T + B1 B1^T = 0 must equal
  // trace(B1^T P B1) with A^T P + P A + C^T C = 0.
  SplitMix rng(SplitMix::derive(630, 4));
  const ClosedLoop cl = random_loop(4, 3, 2, rng);
  const double direct = h2_norm(cl);
  const Eigen::MatrixXd P = lyapunov_solve(cl.A.transpose(), cl.C.transpose() * cl.C);
  const double dual = std::sqrt((cl.B1.transpose() * P * cl.B1).trace());
  EXPECT_NEAR(direct, dual, 1e-10 * (1.0 + direct));
}

TEST(QuadraticNorm, SentinelsAndDomainChecks) {
  ClosedLoop cl = first_order_lag();
  cl.A(0, 0) = 0.25;  // unstable
  EXPECT_TRUE(std::isinf(h2_norm(cl)));
  cl = first_order_lag();
  cl.D11(0, 0) = 0.5;
  EXPECT_THROW(h2_norm(cl), bmiopt::DomainError);
  // No disturbance input at all: the norm is zero.
  cl = first_order_lag();
  cl.B1 = Eigen::MatrixXd::Zero(1, 0);
  cl.D11 = Eigen::MatrixXd::Zero(1, 0);
  EXPECT_DOUBLE_EQ(h2_norm(cl), 0.0);
}

TEST(PeakGain, FirstOrderLagClosedForm) {
  // max over omega of |1/(1+j omega)| = 1, attained at omega = 0.
  EXPECT_NEAR(hinf_norm(first_order_lag(), 1e-10), 1.0, 1e-9);
}

TEST(PeakGain, KnownResonantPeak) {
  // G(s) = 1/(s^2 + 2 zeta s + 1):  peak = 1/(2 zeta sqrt(1-zeta^2)).
  const double zeta = 0.2;
  ClosedLoop cl;
  cl.A.resize(2, 2);
  cl.A << 0, 1, -1, -2 * zeta;
  cl.B1.resize(2, 1);
  cl.B1 << 0, 1;
  cl.C.resize(1, 2);
  cl.C << 1, 0;
  cl.D11 = Eigen::MatrixXd::Zero(1, 1);
  const double expected = 1.0 / (2.0 * zeta * std::sqrt(1.0 - zeta * zeta));
  EXPECT_NEAR(hinf_norm(cl, 1e-10), expected, 1e-8 * expected);
}

TEST(PeakGain, MatchesFrequencySweepOnRandomLoops) {
  SplitMix rng(SplitMix::derive(630, 5));
  for (int trial = 0; trial < 5; ++trial) {
    const ClosedLoop cl = random_loop(5, 2, 2, rng);
    const double reported = hinf_norm(cl);
    const double grid = hinf_by_grid(cl);
    // The sweep can only undershoot the true peak; the two must still agree.
    EXPECT_GE(reported, grid * (1.0 - 1e-5)) << "trial " << trial;
    EXPECT_LE(std::abs(reported - grid), 1e-4 * (1.0 + grid)) << "trial " << trial;
  }
}

TEST(PeakGain, SentinelsAndStaticPaths) {
  ClosedLoop cl = first_order_lag();
  cl.A(0, 0) = 1.0;
  EXPECT_TRUE(std::isinf(hinf_norm(cl)));
  // Purely static path: the norm is the feedthrough gain.
  cl = first_order_lag();
  cl.C = Eigen::MatrixXd::Zero(1, 1);
  cl.D11 = Eigen::MatrixXd::Constant(1, 1, 2.0);
  EXPECT_DOUBLE_EQ(hinf_norm(cl), 2.0);
  // Feedthrough also floors the norm when a dynamic path exists.
  cl = first_order_lag();
  cl.D11 = Eigen::MatrixXd::Constant(1, 1, 3.0);
  const double v = hinf_norm(cl, 1e-9);
  EXPECT_GE(v, 3.0 - 1e-7);
  EXPECT_LE(v, 4.0 + 1e-7);  // |3 + 1/(1+j w)| peaks at 4 at omega = 0
  EXPECT_NEAR(v, 4.0, 1e-6);
}

TEST(PlantChecks, ValidateCatchesShapeMismatches) {
  PlantModel p;
  p.A = Eigen::MatrixXd::Zero(2, 2);
  p.B = Eigen::MatrixXd::Zero(2, 1);
  p.C = Eigen::MatrixXd::Identity(2, 2);
  p.B1 = Eigen::MatrixXd::Zero(2, 0);
  p.C1 = Eigen::MatrixXd::Zero(0, 2);
  p.D11 = Eigen::MatrixXd::Zero(0, 0);
  p.D12 = Eigen::MatrixXd::Zero(0, 1);
  EXPECT_NO_THROW(p.validate());
  PlantModel bad = p;
  bad.B = Eigen::MatrixXd::Zero(3, 1);
  EXPECT_THROW(bad.validate(), bmiopt::StructuralError);
  bad = p;
  bad.D12 = Eigen::MatrixXd::Zero(1, 1);
  EXPECT_THROW(bad.validate(), bmiopt::StructuralError);
  bad = p;
  bad.C = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(bad.validate(), bmiopt::StructuralError);
}
