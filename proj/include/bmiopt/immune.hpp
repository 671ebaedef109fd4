#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "bmiopt/dominance.hpp"
#include "bmiopt/errors.hpp"
#include "bmiopt/pole_placement.hpp"
#include "bmiopt/problem.hpp"
#include "bmiopt/random.hpp"

namespace bmiopt {

struct AlgoParams {
  int n_nom = 40;    ///< nominal archive size
  int n_max = 160;   ///< offspring budget per generation
  int t_max = 20;    ///< generations (vector objectives typically use 300)
  std::uint64_t rng_seed = 1;
  EvpOptions evp;    ///< inner certificate options (early exit on by default)
  TrustRegionParams tr;
  int pole_draws = 20;       ///< pole vectors tried before pointwise fallback
  int recover_attempts = 3;  ///< descent starts per pole vector

  void validate() const {
    if (n_nom <= 0 || n_nom > n_max)
      throw StructuralError("params: need 0 < n_nom <= n_max");
    if (t_max < 1) throw StructuralError("params: t_max must be at least 1");
  }
};

struct ArchiveEntry {
  Eigen::VectorXd alpha;
  Eigen::VectorXd f_tilde;
  double lambda_star = 0.0;

  bool feasible() const { return lambda_star < 0.0; }
};

struct Archive {
  std::vector<ArchiveEntry> entries;
  int generation = 0;
};

struct GenerationRecord {
  int t_c = 0;
  int archive_size = 0;
  int feasible_count = 0;
  Eigen::VectorXd best_f;  ///< componentwise minimum of the augmented vectors
};
using ProgressSink = std::function<void(const GenerationRecord&)>;

namespace detail {

constexpr std::uint64_t kUpdateSalt = 1ull << 40;

inline Eigen::VectorXcd draw_pole_vector(const PoleChannel& channel, double kappa,
                                         SplitMix& rng) {
  const int n = static_cast<int>(channel.A.rows());
  Eigen::VectorXcd t(n);
  int k = 0;
  while (k < n) {
    const double sigma = rng.uniform(-kappa * channel.sigma_min, 0.0);
    if (n - k >= 2 && rng.coin()) {
      const double omega = rng.uniform(0.0, kappa * channel.omega_max);
      t[k++] = {sigma, omega};
      t[k++] = {sigma, -omega};
    } else {
      t[k++] = {sigma, 0.0};
    }
  }
  return t;
}

}  // namespace detail

/// Draws one fresh outer point: a box scale kappa is picked uniformly from
/// layout.subspace_scales, scalars and gain entries are drawn uniformly from
/// the kappa-scaled boxes, and when a pole channel is present the matching
/// gain block is instead recovered from a pole vector drawn in the
/// kappa-scaled pole box (falling back to the pointwise draw when no pole
/// vector can be realized).
inline Eigen::VectorXd generate_point(const BmiProblem& problem, const AlgoParams& params,
                                      SplitMix& rng) {
  const VariableLayout& layout = problem.layout;
  const double kappa =
      layout.subspace_scales[rng.uniform_index(layout.subspace_scales.size())];

  Eigen::VectorXd alpha(layout.dimension());
  int k = 0;
  for (const auto& s : layout.scalars)
    alpha[k++] = rng.uniform(kappa * s.lower, kappa * s.upper);
  for (const auto& g : layout.gain_blocks)
    for (int e = 0; e < g.rows * g.cols; ++e)
      alpha[k++] = rng.uniform(kappa * g.entry_lower, kappa * g.entry_upper);

  if (layout.pole_channel) {
    const int blk = layout.channel_gain_block();
    const auto& spec = layout.gain_blocks[blk];
    for (int draw = 0; draw < params.pole_draws; ++draw) {
      const Eigen::VectorXcd targets =
          detail::draw_pole_vector(*layout.pole_channel, kappa, rng);
      const auto F = recover_gain(*layout.pole_channel, targets, spec.entry_lower,
                                  spec.entry_upper, params.recover_attempts, rng,
                                  params.tr);
      if (F) {
        int off = layout.gain_offset(static_cast<std::size_t>(blk));
        for (int i = 0; i < spec.rows; ++i)
          for (int j = 0; j < spec.cols; ++j) alpha[off++] = (*F)(i, j);
        break;
      }
    }
  }
  return alpha;
}

/// Proliferation: every archive point spawns R = floor(n_max / |A|) children.
/// Each child either blends the parent with a freshly generated point using
/// one uniform weight, or mixes the two coordinate-wise by fair coin flips.
inline std::vector<Eigen::VectorXd> hypermutate(const Archive& archive,
                                                const BmiProblem& problem,
                                                const AlgoParams& params, int t_c) {
  if (archive.entries.empty())
    throw StructuralError("hypermutate: archive must not be empty");
  const int R = params.n_max / static_cast<int>(archive.entries.size());
  std::vector<Eigen::VectorXd> offspring;
  offspring.reserve(static_cast<std::size_t>(R) * archive.entries.size());
  for (std::size_t i = 0; i < archive.entries.size(); ++i) {
    const Eigen::VectorXd& parent = archive.entries[i].alpha;
    for (int j = 0; j < R; ++j) {
      SplitMix rng(SplitMix::derive(params.rng_seed, static_cast<std::uint64_t>(t_c),
                                    static_cast<std::uint64_t>(i),
                                    static_cast<std::uint64_t>(j) + 1));
      const Eigen::VectorXd fresh = generate_point(problem, params, rng);
      Eigen::VectorXd child(parent.size());
      if (rng.uniform() > 0.5) {
        const double L = rng.uniform_open();
        child = L * parent + (1.0 - L) * fresh;
      } else {
        for (Eigen::Index e = 0; e < parent.size(); ++e)
          child[e] = rng.coin() ? parent[e] : fresh[e];
      }
      offspring.push_back(std::move(child));
    }
  }
  return offspring;
}

/// Spacing scores: for each row and each objective, the normalized gap
/// between the nearest strictly-larger and strictly-smaller values.  Rows
/// extreme in some objective (or objectives with a collapsed range) score the
/// full objective count there, which shields the boundary of the front.
inline std::vector<double> crowding_values(const std::vector<Eigen::VectorXd>& rows) {
  if (rows.size() < 2) throw StructuralError("crowding_values: need at least 2 rows");
  const Eigen::Index N = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != N) throw StructuralError("crowding_values: ragged rows");

  std::vector<double> av(rows.size(), 0.0);
  for (Eigen::Index j = 0; j < N; ++j) {
    double fmin = rows[0][j], fmax = rows[0][j];
    for (const auto& r : rows) {
      fmin = std::min(fmin, r[j]);
      fmax = std::max(fmax, r[j]);
    }
    const double denom = fmax - fmin;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double v = rows[i][j];
      double above = std::numeric_limits<double>::infinity();
      double below = -std::numeric_limits<double>::infinity();
      bool has_above = false, has_below = false;
      for (const auto& r : rows) {
        if (r[j] > v) {
          above = std::min(above, r[j]);
          has_above = true;
        } else if (r[j] < v) {
          below = std::max(below, r[j]);
          has_below = true;
        }
      }
      if (!has_above || !has_below || denom == 0.0)
        av[i] += static_cast<double>(N);
      else
        av[i] += (above - below) / denom;
    }
  }
  return av;
}

/// Removes the most crowded points one at a time (recomputing the scores
/// after every removal) until `target` remain.  With no objective components
/// the removals are uniform draws.
inline void density_reduce(std::vector<ArchiveEntry>& entries, int target, int arity,
                           SplitMix& rng) {
  while (static_cast<int>(entries.size()) > target) {
    if (arity == 0) {
      entries.erase(entries.begin() +
                    static_cast<std::ptrdiff_t>(rng.uniform_index(entries.size())));
      continue;
    }
    std::vector<Eigen::VectorXd> rows;
    rows.reserve(entries.size());
    for (const auto& e : entries) rows.push_back(e.f_tilde.head(arity));
    const std::vector<double> av = crowding_values(rows);
    const double least = *std::min_element(av.begin(), av.end());
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < av.size(); ++i)
      if (av[i] == least) candidates.push_back(i);
    const std::size_t pick = candidates[rng.uniform_index(candidates.size())];
    entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(pick));
  }
}

/// Three-stage reduction of a merged population, in strict stage order:
///  1. while the population exceeds n_nom and holds infeasible points, the
///     one with the worst certificate level leaves (infeasible points are
///     never annihilated below n_nom);
///  2. every feasible point dominated by another feasible point (dominance on
///     the plain objective components only) leaves, drawn uniformly one at a
///     time until none remains — the population may shrink below n_nom here,
///     which is what concentrates the next proliferation wave on the front
///     (the clone count per survivor grows as the population shrinks);
///  3. spacing-based thinning trims a front still larger than n_nom.
inline std::vector<ArchiveEntry> update_population(std::vector<ArchiveEntry> entries,
                                                   int n_nom, int arity, SplitMix& rng) {
  // Stage 1: infeasible, worst level first, one at a time.
  while (static_cast<int>(entries.size()) > n_nom) {
    int worst = -1;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].feasible()) continue;
      if (worst < 0 || entries[i].lambda_star > entries[worst].lambda_star)
        worst = static_cast<int>(i);
    }
    if (worst < 0) break;
    entries.erase(entries.begin() + worst);
  }

  // Stage 2: dominated feasible points, removed to fixpoint.  The surviving
  // set does not depend on the removal order (dominance is transitive, so a
  // dominated point stays dominated by some never-removed front member), but
  // the draws keep the removal sequence unbiased.
  for (;;) {
    std::vector<std::size_t> dominated;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (!entries[i].feasible()) continue;
      for (std::size_t j = 0; j < entries.size(); ++j) {
        if (i == j || !entries[j].feasible()) continue;
        if (dominates(entries[j].f_tilde.head(arity), entries[i].f_tilde.head(arity))) {
          dominated.push_back(i);
          break;
        }
      }
    }
    if (dominated.empty()) break;
    const std::size_t pick = dominated[rng.uniform_index(dominated.size())];
    entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(pick));
  }

  // Stage 3: spacing.
  density_reduce(entries, n_nom, arity, rng);
  return entries;
}

/// Full search: seeded initialization, proliferate/evaluate/reduce loop with
/// the pure-feasibility early exit, and the final cleanup that keeps only the
/// certified nondominated points.  Inner solver breakdowns during evaluation
/// mark the point infeasible at level +1e6 instead of aborting the run.
inline Archive run_search(const BmiProblem& problem, const AlgoParams& params,
                          const ProgressSink& sink = {}) {
  problem.validate();
  params.validate();
  const int N = problem.objective_arity;

  auto evaluate = [&](const Eigen::VectorXd& alpha) {
    ArchiveEntry e;
    e.alpha = alpha;
    try {
      const Evaluation ev = augmented_objective(problem, alpha, params.evp);
      e.f_tilde = ev.f_tilde;
      e.lambda_star = ev.lambda_star;
    } catch (const SolverError&) {
      e.lambda_star = 1e6;
      Eigen::VectorXd F = Eigen::VectorXd::Zero(N);
      if (N > 0) {
        try {
          F = problem.objective(alpha);
        } catch (const SolverError&) {
          // keep zeros; the feasibility level already marks the point as junk
        }
      }
      e.f_tilde.resize(N + 1);
      e.f_tilde.head(N) = F;
      e.f_tilde[N] = e.lambda_star;
    }
    return e;
  };

  auto emit = [&](const Archive& a) {
    if (!sink) return;
    GenerationRecord rec;
    rec.t_c = a.generation;
    rec.archive_size = static_cast<int>(a.entries.size());
    for (const auto& e : a.entries) rec.feasible_count += e.feasible() ? 1 : 0;
    if (!a.entries.empty()) {
      rec.best_f = a.entries.front().f_tilde;
      for (const auto& e : a.entries) rec.best_f = rec.best_f.cwiseMin(e.f_tilde);
    }
    sink(rec);
  };

  Archive archive;
  archive.generation = 0;
  for (int i = 0; i < params.n_nom; ++i) {
    SplitMix rng(SplitMix::derive(params.rng_seed, 0, static_cast<std::uint64_t>(i), 0));
    archive.entries.push_back(evaluate(generate_point(problem, params, rng)));
  }

  // The loop starts from the nondominated subset of the seeded population
  // (dominance on the full augmented vector, so the feasibility level takes
  // part).  Clone counts are inversely proportional to the archive size, so
  // this concentrates the whole first wave of offspring on the early elite.
  {
    std::vector<ArchiveEntry> seed_front;
    for (std::size_t i = 0; i < archive.entries.size(); ++i) {
      bool dom = false;
      for (std::size_t j = 0; j < archive.entries.size() && !dom; ++j)
        dom = (j != i) &&
              dominates(archive.entries[j].f_tilde, archive.entries[i].f_tilde);
      if (!dom) seed_front.push_back(archive.entries[i]);
    }
    archive.entries = std::move(seed_front);
  }
  emit(archive);

  for (int t_c = 1; t_c <= params.t_max; ++t_c) {
    if (N == 0) {
      bool found = false;
      for (const auto& e : archive.entries) found = found || e.f_tilde[N] == 0.0;
      if (found) break;  // pure feasibility: certificate reached, stop early
    }

    const std::vector<Eigen::VectorXd> offspring_alpha =
        hypermutate(archive, problem, params, t_c);
    std::vector<ArchiveEntry> merged = archive.entries;
    merged.reserve(merged.size() + offspring_alpha.size());
    for (const auto& a : offspring_alpha) merged.push_back(evaluate(a));

    SplitMix urng(SplitMix::derive(params.rng_seed, static_cast<std::uint64_t>(t_c),
                                   detail::kUpdateSalt, 0));
    archive.entries = update_population(std::move(merged), params.n_nom, N, urng);
    archive.generation = t_c;
    emit(archive);
  }

  // Final cleanup: drop uncertified points, collapse exact duplicates (clone
  // copies of one design are one solution, not several), then drop dominated
  // points.
  std::vector<ArchiveEntry> kept;
  for (const auto& e : archive.entries) {
    if (e.f_tilde[N] != 0.0) continue;
    bool seen = false;
    for (const auto& k : kept) seen = seen || k.alpha == e.alpha;
    if (!seen) kept.push_back(e);
  }
  std::vector<ArchiveEntry> front;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    bool dom = false;
    for (std::size_t j = 0; j < kept.size() && !dom; ++j)
      dom = (j != i) && dominates(kept[j].f_tilde, kept[i].f_tilde);
    if (!dom) front.push_back(kept[i]);
  }
  archive.entries = std::move(front);
  return archive;
}

}  // namespace bmiopt
