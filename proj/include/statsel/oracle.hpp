#pragma once

// Brute-force and closed-form references. Nothing in here calls into the
// optimisation or deterministic-equivalent code it is used to check.

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "statsel/types.hpp"

namespace statsel::oracle {

struct OracleReport {
  std::string name;
  std::string instance;
  double reference = 0.0;
  double candidate = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool relative = true;  // which error the tolerance applies to
  bool pass = false;
};

/// Fills the error fields and the pass flag.
OracleReport make_report(std::string name, std::string instance, double reference, double candidate,
                         double tolerance, bool relative);

/// Reports whose candidate satisfies a one-sided bound (reference <= candidate + slack).
OracleReport make_bound_report(std::string name, std::string instance, double bound, double candidate);

std::string report_table_header();
std::string format_report_row(const OracleReport& r);

using SubsetObjective = std::function<double(std::span<const int>)>;

struct ExhaustiveResult {
  std::vector<int> subset;  // ascending
  double value = 0.0;
};

/// Global optimum over all size-L subsets of [0, N), visited in
/// lexicographic order; the first subset wins ties. Throws
/// std::invalid_argument when C(N, L) > 1e6.
ExhaustiveResult exhaustive_select(const SubsetObjective& objective, int n, int size);

/// log det(I + B_S) for the principal submatrix on `subset`, via eigenvalues.
double subset_logdet(const CMatrix& b, std::span<const int> subset);

/// Exact scalar fixed point (gamma, psi) for N = N_k = K = L = 1 with
/// U_R = U_T = 1: gamma = 1 / (sigma^2 + a), psi = a / omega, where
/// a^2 + sigma^2 a - omega lambda sigma^2 = 0.
std::pair<double, double> scalar_fp_reference(double noise_power, double omega, double lambda);

/// Projected gradient ascent over {Q >= 0, tr Q <= p} for
/// K log det(I + XiHat Q) - Re tr(Delta Q).
CMatrix pg_solve_relaxed(const CMatrix& xi_hat, const CMatrix& delta, double budget, int num_users, double tol);

/// K log det(I + XiHat Q) - Re tr(Delta Q) through eigenvalues.
double relaxed_objective(const CMatrix& xi_hat, const CMatrix& delta, const CMatrix& q, int num_users);

/// Exponential integral E1(x), x > 0: series below 1, continued fraction above.
double expint_e1(double x);

/// E ln(1 + |h|^2 p beta / sigma^2) for |h|^2 ~ Exp(1):
/// exp(1/snr) E1(1/snr).
double exact_siso_rate(double power, double gain, double noise_power);

/// log det of a Hermitian PD matrix via its eigenvalues.
double logdet_eig(const CMatrix& a);

/// Dense inverse via LU.
CMatrix dense_inverse(const CMatrix& a);

}  // namespace statsel::oracle
