#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "statsel/det_equiv.hpp"

namespace statsel {

struct WaterfillResult {
  RVector power;             // lambda*
  double water_level = 0.0;  // 1 / mu
  bool degenerate = false;   // every gain was zero; power spread uniformly
};

/// lambda_m = max(w - 1/xi_m, 0) with sum_m lambda_m = budget. Zero gains get
/// zero power unless all gains are zero, in which case the budget is split
/// uniformly and the result is flagged degenerate.
WaterfillResult waterfill(const RVector& gains, double budget);

/// B = sigma^-2 sum_k U_Rk diag(Omega_k psi_k) U_Rk^H over all users.
CMatrix build_B_joint(const ChannelStats& stats, const std::vector<RVector>& psi, double noise_power);

/// (G^-1 + b b^H)^-1 computed as G - g g^H with g = G b / sqrt(1 + b^H G b).
CMatrix rank1_update(const CMatrix& g, const CVector& b);

struct GreedyResult {
  SelectionVector selection;
  std::vector<int> order;          // antennas in the order they were picked
  std::vector<double> increments;  // objective gain of each pick
  double objective = 0.0;          // sum of increments
};

/// Greedy maximisation of log det(I + Delta B Delta^H) over size-L subsets,
/// one row of B^{1/2} per step. Increments within a relative 1e-12 of the
/// best count as ties; the lowest antenna index wins.
GreedyResult greedy_search(const CMatrix& b, int size);

inline SelectionVector greedy_select(const CMatrix& b, int size) {
  return greedy_search(b, size).selection;
}

/// log det(I + Delta B Delta^H) for a given subset, evaluated directly.
double selection_objective(const CMatrix& b, const SelectionVector& s);

struct DesignResult {
  Decoding decoding = Decoding::joint;
  SelectionVector selection;
  PowerAllocation power;     // eigen-powers; filled for joint decoding
  CovarianceSet covariances; // always filled
  double de_rate = 0.0;      // nats, at the returned design
  int ao_iterations = 0;
  std::vector<double> rate_trace;  // entry 0 is the initial point
  bool converged = false;
  bool fp_failed = false;
};

struct AoOptions {
  SolverControls controls;
  /// Starting subset; a seeded random subset when empty.
  std::optional<SelectionVector> initial_selection;
  std::uint64_t init_seed = 0;
};

/// Options taken from stats.config: its solver controls and rng_seed.
AoOptions default_ao_options(const ChannelStats& stats);

/// Alternates fixed point -> water-filling -> greedy selection until the
/// relative change of the DE objective is at most ao_tol. A step that lowers
/// the objective is retried with the previous subset; if that also fails the
/// loop stops at the current point, so rate_trace is non-decreasing.
DesignResult ao_optimize_joint(const ChannelStats& stats, const AoOptions& options);
DesignResult ao_optimize_joint(const ChannelStats& stats);

}  // namespace statsel
