// Tests for the hybrid immune search: fresh-point generation, proliferation,
// the crowding score, the three-stage population update, and the full loop.
//
// Oracles: hand-worked crowding examples, constructed populations with known
// correct survivor sets, and algebraic invariants (stage ordering, size
// bounds, determinism under equal seeds).

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "bmiopt/control.hpp"
#include "bmiopt/immune.hpp"
#include "bmiopt/problem.hpp"
#include "bmiopt/random.hpp"

namespace {

using bmiopt::AlgoParams;
using bmiopt::Archive;
using bmiopt::ArchiveEntry;
using bmiopt::BmiProblem;
using bmiopt::crowding_values;
using bmiopt::density_reduce;
using bmiopt::GenerationRecord;
using bmiopt::generate_point;
using bmiopt::hypermutate;
using bmiopt::run_search;
using bmiopt::SplitMix;
using bmiopt::update_population;

// Entry with a marker id in alpha[0]; f_tilde = [f..., max(0, lambda)].
ArchiveEntry make_entry(double id, const std::vector<double>& f, double lambda) {
  ArchiveEntry e;
  e.alpha = Eigen::VectorXd::Constant(1, id);
  e.f_tilde.resize(static_cast<Eigen::Index>(f.size()) + 1);
  for (std::size_t i = 0; i < f.size(); ++i) e.f_tilde[static_cast<Eigen::Index>(i)] = f[i];
  e.f_tilde[static_cast<Eigen::Index>(f.size())] = std::max(0.0, lambda);
  e.lambda_star = lambda;
  return e;
}

std::set<double> ids(const std::vector<ArchiveEntry>& entries) {
  std::set<double> s;
  for (const auto& e : entries) s.insert(e.alpha[0]);
  return s;
}

// Scalar toy task: minimize alpha subject to 1 - alpha < 0 (optimum 1).
BmiProblem toy_problem() {
  BmiProblem p;
  p.name = "toy";
  p.layout.scalars.push_back({"alpha", 0.0, 3.0});
  p.objective_arity = 1;
  p.objective = [](const Eigen::VectorXd& a) {
    return Eigen::VectorXd::Constant(1, a[0]);
  };
  p.direct_feasibility = [](const Eigen::VectorXd& a) { return 1.0 - a[0]; };
  return p;
}

}  // namespace

TEST(Crowding, HandWorkedScalarExample) {
  // Values {0, 0.4, 0.5, 1}: extremes score the objective count (1), the
  // interior points score their normalized neighbour gaps 0.5 and 0.6.
  std::vector<Eigen::VectorXd> rows;
  for (double v : {0.0, 0.4, 0.5, 1.0}) rows.push_back(Eigen::VectorXd::Constant(1, v));
  const std::vector<double> av = crowding_values(rows);
  EXPECT_DOUBLE_EQ(av[0], 1.0);
  EXPECT_DOUBLE_EQ(av[1], 0.5);
  EXPECT_DOUBLE_EQ(av[2], 0.6);
  EXPECT_DOUBLE_EQ(av[3], 1.0);
}

TEST(Crowding, CollapsedObjectiveScoresFullCount) {
  std::vector<Eigen::VectorXd> rows;
  for (double v : {0.0, 1.0, 2.0}) {
    Eigen::VectorXd r(2);
    r << v, 7.0;  // second objective carries no information
    rows.push_back(r);
  }
  const std::vector<double> av = crowding_values(rows);
  // Every row gets +2 from the collapsed objective; the interior row gets
  // its gap 2/2 = 1 from the live one, the extremes get +2.
  EXPECT_DOUBLE_EQ(av[0], 4.0);
  EXPECT_DOUBLE_EQ(av[1], 3.0);
  EXPECT_DOUBLE_EQ(av[2], 4.0);
}

TEST(Crowding, DuplicatedValuesAreTreatedByStrictNeighbours) {
  // Two rows share the value 0.5; their neighbours are 0 and 1, so both get
  // the same interior score (1 - 0)/(1 - 0) = 1.
  std::vector<Eigen::VectorXd> rows;
  for (double v : {0.0, 0.5, 0.5, 1.0}) rows.push_back(Eigen::VectorXd::Constant(1, v));
  const std::vector<double> av = crowding_values(rows);
  EXPECT_DOUBLE_EQ(av[1], 1.0);
  EXPECT_DOUBLE_EQ(av[2], 1.0);
}

TEST(Crowding, RejectsDegenerateInput) {
  std::vector<Eigen::VectorXd> one{Eigen::VectorXd::Constant(1, 0.0)};
  EXPECT_THROW(crowding_values(one), bmiopt::StructuralError);
  std::vector<Eigen::VectorXd> ragged{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(2)};
  EXPECT_THROW(crowding_values(ragged), bmiopt::StructuralError);
}

TEST(Density, RemovesTheMostCrowdedInteriorPointFirst) {
  std::vector<ArchiveEntry> entries;
  entries.push_back(make_entry(0, {0.0}, -1.0));
  entries.push_back(make_entry(1, {0.4}, -1.0));
  entries.push_back(make_entry(2, {0.5}, -1.0));
  entries.push_back(make_entry(3, {1.0}, -1.0));
  SplitMix rng(7);
  density_reduce(entries, 3, 1, rng);
  EXPECT_EQ(ids(entries), (std::set<double>{0, 2, 3}));  // 0.4 had the least room
}

TEST(Density, ExtremePointsOfAMonotoneFrontSurvive) {
  SplitMix seq(SplitMix::derive(701, 1));
  for (int trial = 0; trial < 50; ++trial) {
    // Strictly monotone 2-D front: f1 increasing, f2 decreasing, distinct.
    const int n = 6;
    std::vector<ArchiveEntry> entries;
    double f1 = 0.0, f2 = 10.0;
    for (int i = 0; i < n; ++i) {
      f1 += seq.uniform(0.1, 1.0);
      f2 -= seq.uniform(0.1, 1.0);
      entries.push_back(make_entry(i, {f1, f2}, -1.0));
    }
    SplitMix rng(SplitMix::derive(701, 2, trial));
    density_reduce(entries, 3, 2, rng);
    const auto kept = ids(entries);
    EXPECT_TRUE(kept.count(0)) << "low-f1 endpoint lost in trial " << trial;
    EXPECT_TRUE(kept.count(n - 1)) << "low-f2 endpoint lost in trial " << trial;
    EXPECT_EQ(entries.size(), 3u);
  }
}

TEST(Update, InfeasibleLeaveWorstFirstThenDominatedFeasibleFollow) {
  std::vector<ArchiveEntry> merged;
  merged.push_back(make_entry(0, {0.0}, -2.0));
  merged.push_back(make_entry(1, {9.0}, 3.0));
  merged.push_back(make_entry(2, {9.0}, 5.0));
  merged.push_back(make_entry(3, {1.0}, -1.0));
  SplitMix rng(1);
  const auto out = update_population(merged, 2, 1, rng);
  // The two infeasible points go first (worst level first, down to n_nom);
  // then point 3, dominated by point 0 on the objective, leaves as well —
  // the population shrinks below n_nom so the next wave concentrates.
  EXPECT_EQ(ids(out), (std::set<double>{0}));
}

TEST(Update, PaddingInfeasibleSurviveInWorstLevelOrder) {
  std::vector<ArchiveEntry> merged;
  merged.push_back(make_entry(0, {0.0}, -2.0));
  merged.push_back(make_entry(1, {1.0}, 4.0));
  merged.push_back(make_entry(2, {2.0}, 2.0));
  merged.push_back(make_entry(3, {3.0}, 9.0));
  SplitMix rng(1);
  const auto out = update_population(merged, 3, 1, rng);
  // One removal needed: the worst certificate level (9) goes first.
  EXPECT_EQ(ids(out), (std::set<double>{0, 1, 2}));
}

TEST(Update, DominatedFeasiblePointsLeaveBeforeTheFrontIsThinned) {
  std::vector<ArchiveEntry> merged;
  merged.push_back(make_entry(0, {0.0, 3.0}, -1.0));  // front
  merged.push_back(make_entry(1, {1.0, 2.0}, -1.0));  // front
  merged.push_back(make_entry(2, {2.0, 1.0}, -1.0));  // front
  merged.push_back(make_entry(3, {1.5, 2.5}, -1.0));  // dominated by 1
  merged.push_back(make_entry(4, {2.5, 3.5}, -1.0));  // dominated by 0,1,3
  SplitMix rng(1);
  const auto out = update_population(merged, 3, 2, rng);
  EXPECT_EQ(ids(out), (std::set<double>{0, 1, 2}));
}

TEST(Update, RandomizedInvariants) {
  for (int trial = 0; trial < 300; ++trial) {
    SplitMix gen(SplitMix::derive(702, trial));
    const int arity = 1 + static_cast<int>(gen.uniform_index(2));
    const int n = 2 + static_cast<int>(gen.uniform_index(30));
    const int n_nom = 1 + static_cast<int>(gen.uniform_index(12));
    std::vector<ArchiveEntry> merged;
    int feas_in = 0;
    for (int i = 0; i < n; ++i) {
      std::vector<double> f;
      for (int j = 0; j < arity; ++j) f.push_back(gen.uniform(0.0, 10.0));
      const double lambda = gen.coin() ? gen.uniform(-3.0, -0.1) : gen.uniform(0.1, 3.0);
      feas_in += lambda < 0.0 ? 1 : 0;
      merged.push_back(make_entry(i, f, lambda));
    }
    SplitMix rng(SplitMix::derive(702, trial, 1));
    const auto out = update_population(merged, n_nom, arity, rng);

    // Exact size law: infeasible leave worst-first only down to n_nom, every
    // dominated feasible point leaves, and the spacing stage caps the rest.
    const int inf_in = n - feas_in;
    const int inf_kept = inf_in - std::min(inf_in, std::max(0, n - n_nom));
    std::set<double> front_ids;
    for (int i = 0; i < n; ++i) {
      if (!merged[i].feasible()) continue;
      bool dom = false;
      for (int j = 0; j < n && !dom; ++j)
        dom = j != i && merged[j].feasible() &&
              bmiopt::dominates(merged[j].f_tilde.head(arity),
                                merged[i].f_tilde.head(arity));
      if (!dom) front_ids.insert(merged[i].alpha[0]);
    }
    const int expected =
        std::min(n_nom, inf_kept + static_cast<int>(front_ids.size()));
    ASSERT_EQ(static_cast<int>(out.size()), expected) << "trial " << trial;
    // Survivors are genuine input points.
    const auto in_ids = ids(merged);
    for (const auto& e : out) ASSERT_TRUE(in_ids.count(e.alpha[0]));
    ASSERT_EQ(ids(out).size(), out.size()) << "duplicate survivor";

    int feas_out = 0;
    double worst_kept = -std::numeric_limits<double>::infinity();
    for (const auto& e : out) {
      if (e.feasible())
        ++feas_out;
      else
        worst_kept = std::max(worst_kept, e.lambda_star);
    }
    // No feasible survivor is dominated by another feasible survivor.
    for (const auto& e : out) {
      if (!e.feasible()) continue;
      for (const auto& o : out)
        ASSERT_FALSE(o.feasible() && &o != &e &&
                     bmiopt::dominates(o.f_tilde.head(arity), e.f_tilde.head(arity)))
            << "trial " << trial;
    }
    // When the spacing stage did not act, the feasible survivors are exactly
    // the nondominated feasible inputs.
    if (inf_kept + static_cast<int>(front_ids.size()) <= n_nom) {
      std::set<double> feas_kept;
      for (const auto& e : out)
        if (e.feasible()) feas_kept.insert(e.alpha[0]);
      ASSERT_EQ(feas_kept, front_ids) << "trial " << trial;
    }
    if (feas_out < static_cast<int>(out.size())) {
      // Some infeasible survived: every dropped infeasible was at least as bad.
      const auto kept = ids(out);
      for (const auto& e : merged)
        if (!e.feasible() && !kept.count(e.alpha[0]))
          ASSERT_GE(e.lambda_star, worst_kept - 1e-15) << "trial " << trial;
    }
    // If enough feasible points existed, the survivors are all feasible.
    if (feas_in >= n_nom) ASSERT_EQ(feas_out, static_cast<int>(out.size()));
  }
}

TEST(Generation, FreshPointsRespectTheScaledBoxes) {
  BmiProblem p = toy_problem();
  p.layout.scalars[0] = {"alpha", -2.0, 3.0};
  p.layout.gain_blocks.push_back({"F", 1, 2, -5.0, 5.0});
  p.objective = [](const Eigen::VectorXd& a) {
    return Eigen::VectorXd::Constant(1, a[0]);
  };
  AlgoParams params;
  for (int i = 0; i < 200; ++i) {
    SplitMix rng(SplitMix::derive(703, i));
    const Eigen::VectorXd a = generate_point(p, params, rng);
    ASSERT_EQ(a.size(), 3);
    EXPECT_GE(a[0], -2.0 - 1e-12);
    EXPECT_LE(a[0], 3.0 + 1e-12);
    for (int e = 1; e < 3; ++e) {
      EXPECT_GE(a[e], -5.0 - 1e-12);
      EXPECT_LE(a[e], 5.0 + 1e-12);
    }
  }
}

TEST(Generation, PoleChannelSeedsAStabilizingGainBlock) {
  BmiProblem p;
  p.name = "chan";
  p.layout.gain_blocks.push_back({"F", 2, 2, -50.0, 50.0});
  bmiopt::PoleChannel ch;
  ch.A.resize(2, 2);
  ch.A << 0, 1, 0, 0;
  ch.B = Eigen::MatrixXd::Identity(2, 2);
  ch.C = Eigen::MatrixXd::Identity(2, 2);
  p.layout.pole_channel = ch;
  p.objective_arity = 1;
  p.objective = [](const Eigen::VectorXd& a) {
    return Eigen::VectorXd::Constant(1, a[0]);
  };
  p.direct_feasibility = [](const Eigen::VectorXd&) { return -1.0; };
  AlgoParams params;
  int stabilized = 0;
  for (int i = 0; i < 10; ++i) {
    SplitMix rng(SplitMix::derive(704, i));
    const Eigen::VectorXd a = generate_point(p, params, rng);
    Eigen::MatrixXd F(2, 2);
    F << a[0], a[1], a[2], a[3];
    const double margin = bmiopt::spectral_abscissa(ch.A + ch.B * F * ch.C);
    if (margin < 1e-3) ++stabilized;
  }
  // The pole-box channel should succeed for essentially every draw here.
  EXPECT_GE(stabilized, 9);
}

TEST(Proliferation, ChildCountAndShapeFollowTheBudget) {
  const BmiProblem p = toy_problem();
  AlgoParams params;
  params.n_max = 10;
  Archive archive;
  for (int i = 0; i < 3; ++i) {
    ArchiveEntry e = make_entry(0.5 + i, {0.5 + i}, -0.5);
    archive.entries.push_back(e);
  }
  const auto children = hypermutate(archive, p, params, 1);
  ASSERT_EQ(children.size(), 9u);  // floor(10 / 3) = 3 per parent
  for (const auto& c : children) ASSERT_EQ(c.size(), 1);
  // Children are not all identical (both blend modes actually mix).
  bool varied = false;
  for (const auto& c : children) varied = varied || std::abs(c[0] - children[0][0]) > 1e-12;
  EXPECT_TRUE(varied);
  Archive empty;
  EXPECT_THROW(hypermutate(empty, p, params, 1), bmiopt::StructuralError);
}

TEST(Search, ToyProblemConvergesToTheConstrainedOptimum) {
  const BmiProblem p = toy_problem();
  AlgoParams params;
  params.n_nom = 8;
  params.n_max = 32;
  params.t_max = 12;
  params.rng_seed = 5;
  std::vector<GenerationRecord> records;
  const Archive result =
      run_search(p, params, [&](const GenerationRecord& r) { records.push_back(r); });

  // All loop-time archives respect the size bound; the final front of this
  // single-objective task is one point just above the constrained optimum.
  ASSERT_EQ(records.size(), static_cast<std::size_t>(params.t_max) + 1);
  for (const auto& r : records) {
    EXPECT_GE(r.archive_size, 1);
    EXPECT_LE(r.archive_size, params.n_nom);
  }
  ASSERT_EQ(result.entries.size(), 1u);
  EXPECT_GE(result.entries[0].alpha[0], 1.0);
  EXPECT_LE(result.entries[0].alpha[0], 1.2);
  EXPECT_DOUBLE_EQ(result.entries[0].f_tilde[1], 0.0);
  EXPECT_LT(result.entries[0].lambda_star, 0.0);
}

TEST(Search, EqualSeedsGiveIdenticalResultsDifferentSeedsDiverge) {
  const BmiProblem p = toy_problem();
  AlgoParams params;
  params.n_nom = 6;
  params.n_max = 24;
  params.t_max = 6;
  params.rng_seed = 11;
  const Archive a = run_search(p, params);
  const Archive b = run_search(p, params);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    ASSERT_EQ(a.entries[i].alpha.size(), b.entries[i].alpha.size());
    for (Eigen::Index j = 0; j < a.entries[i].alpha.size(); ++j)
      EXPECT_EQ(a.entries[i].alpha[j], b.entries[i].alpha[j]) << "entry " << i;
  }
  params.rng_seed = 12;
  const Archive c = run_search(p, params);
  bool same = c.entries.size() == a.entries.size();
  if (same && !a.entries.empty())
    same = a.entries[0].alpha[0] == c.entries[0].alpha[0];
  EXPECT_FALSE(same);
}

TEST(Search, PureFeasibilityStopsAtTheFirstCertificate) {
  BmiProblem p;
  p.name = "feas";
  p.layout.scalars.push_back({"t", -1.0, 1.0});
  p.objective_arity = 0;
  p.direct_feasibility = [](const Eigen::VectorXd&) { return -0.5; };
  AlgoParams params;
  params.n_nom = 5;
  params.n_max = 20;
  params.t_max = 10;
  std::vector<GenerationRecord> records;
  const Archive result =
      run_search(p, params, [&](const GenerationRecord& r) { records.push_back(r); });
  // Everything is feasible at initialization: no generation loop runs.
  EXPECT_EQ(records.size(), 1u);
  EXPECT_EQ(result.entries.size(), 5u);
  for (const auto& e : result.entries) EXPECT_DOUBLE_EQ(e.f_tilde[0], 0.0);
}

TEST(Search, HopelessProblemReturnsAnEmptyCertifiedFront) {
  BmiProblem p = toy_problem();
  p.direct_feasibility = [](const Eigen::VectorXd&) { return 0.7; };
  AlgoParams params;
  params.n_nom = 4;
  params.n_max = 8;
  params.t_max = 3;
  const Archive result = run_search(p, params);
  EXPECT_TRUE(result.entries.empty());
}

TEST(Search, InnerSolverBreakdownsAreContained) {
  BmiProblem p = toy_problem();
  p.direct_feasibility = [](const Eigen::VectorXd& a) {
    if (a[0] < 1.0) throw bmiopt::SolverError("synthetic breakdown");
    return 1.0 - a[0];
  };
  AlgoParams params;
  params.n_nom = 6;
  params.n_max = 24;
  params.t_max = 8;
  params.rng_seed = 3;
  const Archive result = run_search(p, params);
  ASSERT_FALSE(result.entries.empty());
  for (const auto& e : result.entries) {
    EXPECT_GE(e.alpha[0], 1.0);
    EXPECT_LT(e.lambda_star, 0.0);
  }
}

TEST(PoleDraws, TargetsStayInTheScaledBoxAndAreConjugateClosed) {
  bmiopt::PoleChannel ch;
  ch.A = Eigen::MatrixXd::Zero(3, 3);
  ch.B = Eigen::MatrixXd::Identity(3, 3);
  ch.C = Eigen::MatrixXd::Identity(3, 3);
  ch.sigma_min = 20.0;
  ch.omega_max = 15.0;
  for (int trial = 0; trial < 200; ++trial) {
    SplitMix rng(SplitMix::derive(705, trial));
    const double kappa = (trial % 2) ? 1.0 : 0.1;
    const Eigen::VectorXcd t = bmiopt::detail::draw_pole_vector(ch, kappa, rng);
    ASSERT_EQ(t.size(), 3);
    EXPECT_NO_THROW(bmiopt::PolePlacementTask::require_conjugate_closed(t));
    for (int i = 0; i < 3; ++i) {
      EXPECT_LE(t[i].real(), 0.0);
      EXPECT_GE(t[i].real(), -kappa * ch.sigma_min - 1e-12);
      EXPECT_LE(std::abs(t[i].imag()), kappa * ch.omega_max + 1e-12);
    }
  }
}
