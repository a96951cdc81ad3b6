#pragma once

#include <vector>

#include "statsel/opt_joint.hpp"

namespace statsel {

/// f+ - f- with f+ = K log det(I + XiHat Q) and
/// f- = sum_j log det(I + XiBar_j Q). Throws InvariantError if Q is not PSD.
double mm_objective(const CMatrix& q, const CMatrix& xi_hat, const std::vector<CMatrix>& xi_bars,
                    int num_users);

/// Gradient of f- at q_ref:
/// sum_j XiBar_j^{1/2} (I + XiBar_j^{1/2} Q_ref XiBar_j^{1/2})^-1 XiBar_j^{1/2}.
CMatrix mm_linearize(const CMatrix& q_ref, const std::vector<CMatrix>& xi_bars);

struct RelaxedSolution {
  CMatrix q;
  double objective = 0.0;   // K log det(I + XiHat Q) - Re tr(Delta Q)
  double multiplier = 0.0;  // mu on the trace constraint
};

/// Eigen-power form of the relaxed problem: maximise
/// sum_m K ln(1 + xi_m q_m) - delta_m q_m over q >= 0, sum q <= budget.
/// Closed form q_m = max(K / (mu + delta_m) - 1/xi_m, 0), mu by bisection.
RVector solve_relaxed_powers(const RVector& xi_hat, const RVector& delta, double budget, int num_users,
                             double* multiplier = nullptr);

/// Matrix form. XiHat and Delta must commute (share an eigenbasis); the
/// problem is solved in that basis. Throws InvariantError otherwise.
RelaxedSolution solve_relaxed(const CMatrix& xi_hat, const CMatrix& delta, double budget, int num_users);

struct MMState {
  CMatrix q;
  std::vector<double> objective_trace;  // entry 0 is the starting point
  int iterations = 0;
  bool converged = false;
};

/// Majorization-maximization on user k's covariance with the auxiliary
/// variables in `fp` held fixed. Q_init must be feasible and diagonal in the
/// U_Tk basis; every iterate then stays in that basis.
MMState mm_update_Q(const ChannelStats& stats, int k, const FixedPointIndep& fp, double budget,
                    const CMatrix& q_init, double tol, int max_iter);

struct IndepGreedyResult {
  GreedyResult greedy;
  double objective = 0.0;  // f2 of the returned subset, from the increments
};

/// Greedy maximisation of
///   f2(s) = K log det(I + Delta BHat Delta^H) - sum_k log det(I + Delta BBar_k Delta^H)
/// keeping one rank-one-updated inverse per matrix. Exactly L antennas are
/// always chosen, even when every increment is negative.
IndepGreedyResult greedy_select_indep(const CMatrix& b_hat, const std::vector<CMatrix>& b_bars, int size,
                                      int num_users);

/// f2 of a given subset, evaluated directly.
double selection_objective_indep(const CMatrix& b_hat, const std::vector<CMatrix>& b_bars,
                                 const SelectionVector& s, int num_users);

/// BHat and BBar_k at a solved independent-decoding fixed point.
CMatrix build_B_hat(const ChannelStats& stats, const FixedPointIndep& fp, double noise_power);
std::vector<CMatrix> build_B_bars(const ChannelStats& stats, const FixedPointIndep& fp, double noise_power);

/// Alternates fixed point -> per-user MM covariance update -> greedy
/// selection, with the same ascent safeguard as ao_optimize_joint.
DesignResult ao_optimize_indep(const ChannelStats& stats, const AoOptions& options);
DesignResult ao_optimize_indep(const ChannelStats& stats);

}  // namespace statsel
