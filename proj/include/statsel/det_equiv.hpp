#pragma once

#include <vector>

#include "statsel/rate_eval.hpp"
#include "statsel/scenario.hpp"

namespace statsel {

/// Eigen-powers Lambda_k of Q_k = U_Tk diag(lambda_k) U_Tk^H.
struct PowerAllocation {
  std::vector<RVector> per_user;
};

/// Converts to covariances in the transmit eigenbases of `stats`.
CovarianceSet to_covariances(const ChannelStats& stats, const PowerAllocation& power);

/// Uniform p_k / N_k on every eigenmode.
PowerAllocation uniform_power(const SystemConfig& config);

/// Converged auxiliary variables of one deterministic-equivalent system
///
///   gamma_{k,n} = sigma^-2 u_{k,n}^H (I + R)^-1 u_{k,n}
///   psi_{k,m}   = [Qt_k (I + diag(xi_k) Qt_k)^-1]_{m,m},  xi_k = Omega_k^T gamma_k
///   R           = sigma^-2 sum_k Delta U_Rk diag(Omega_k psi_k) U_Rk^H Delta^H
///
/// over a subset of users, where u_{k,n} is column n of Delta U_Rk and Qt_k is
/// the covariance expressed in the U_Tk basis. Users outside the subset have
/// empty vectors. With a diagonal Qt_k = Lambda_k, psi reduces to
/// lambda / (1 + lambda xi).
struct DeFixedPoint {
  std::vector<int> users;
  std::vector<RVector> gamma;
  std::vector<RVector> psi;
  std::vector<RVector> xi;
  CMatrix R;  // N x N, zero outside the selected rows/columns
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool damped = false;
  std::vector<double> residual_trace;
};

using FixedPointJoint = DeFixedPoint;

/// Hatted system (all users) plus one system per excluded user k, which
/// carries gamma_bar_{k,k'}, psi_bar_{k,k'} at index k'.
struct FixedPointIndep {
  DeFixedPoint hat;
  std::vector<DeFixedPoint> excluding;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

FixedPointJoint solve_fp_joint(const ChannelStats& stats, const PowerAllocation& power,
                               const SelectionVector& s, double noise_power, double tol,
                               int max_iter);

/// Deterministic equivalent of the joint-decoding sum-rate in nats:
/// sum_k log det(I + Xi_k Lambda_k) + log det(I + R) - sum_k gamma_k^T Omega_k psi_k.
/// Throws ConvergenceError if fp did not converge.
double de_rate_joint(const ChannelStats& stats, const PowerAllocation& power,
                     const SelectionVector& s, double noise_power, const FixedPointJoint& fp);

FixedPointIndep solve_fp_indep(const ChannelStats& stats, const CovarianceSet& q,
                               const SelectionVector& s, double noise_power, double tol,
                               int max_iter);

/// Deterministic equivalent of the independent-decoding sum-rate in nats,
/// K R0 - sum_k R_(k) where R_(k) is the system without user k.
double de_rate_indep(const ChannelStats& stats, const CovarianceSet& q, const SelectionVector& s,
                     double noise_power, const FixedPointIndep& fp);

/// Xi = U_Tk diag(xi) U_Tk^H.
CMatrix xi_matrix(const ChannelStats& stats, int k, const RVector& xi);

/// B = sigma^-2 sum_{k in users} U_Rk diag(Omega_k psi_k) U_Rk^H (N x N, unmasked).
CMatrix build_selection_matrix(const ChannelStats& stats, const std::vector<int>& users,
                               const std::vector<RVector>& psi, double noise_power);

/// General solver behind solve_fp_joint/solve_fp_indep. `tx_covariances`
/// holds Qt_k = U_Tk^H Q_k U_Tk for every user; only `users` are active.
DeFixedPoint solve_de_system(const ChannelStats& stats, const std::vector<CMatrix>& tx_covariances,
                             const std::vector<int>& users, const SelectionVector& s,
                             double noise_power, double tol, int max_iter);

/// DE value of log E det(I + sum_{k in users} ...) at a converged fixed point.
double de_system_rate(const ChannelStats& stats, const std::vector<CMatrix>& tx_covariances,
                      const DeFixedPoint& fp, double noise_power);

}  // namespace statsel
