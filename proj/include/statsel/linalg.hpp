#pragma once

#include "statsel/types.hpp"

namespace statsel::linalg {

/// log det of a Hermitian positive-definite matrix via Cholesky. On failure
/// the argument is symmetrized and retried once before throwing
/// std::domain_error.
double logdet_hpd(const CMatrix& a);

/// log det(I + A Q) for Hermitian PSD A and Q, evaluated as
/// log det(I + A^{1/2} Q A^{1/2}).
double logdet_i_plus_product(const CMatrix& a, const CMatrix& q);

/// Principal square root of a Hermitian PSD matrix; eigenvalues below zero
/// (round-off) are clipped before the root.
CMatrix hermitian_sqrt(const CMatrix& a);

/// Inverse of a Hermitian positive-definite matrix.
CMatrix inverse_hpd(const CMatrix& a);

bool is_hermitian(const CMatrix& a, double tol);

/// Smallest eigenvalue of the Hermitian part of a.
double min_eigenvalue(const CMatrix& a);

/// Throws InvariantError unless a is square, Hermitian to `herm_tol`
/// (relative to its norm, absolute floor 1e-12) and has no eigenvalue below
/// -psd_tol.
void require_hermitian_psd(const CMatrix& a, const char* what,
                           double herm_tol = 1e-12, double psd_tol = 1e-10);

/// Unit-norm DFT matrix F[r, c] = exp(-2 pi i r c / n) / sqrt(n).
CMatrix dft_matrix(int n);

/// || U^H U - I ||_F
double unitarity_error(const CMatrix& u);

/// U diag(d) U^H
CMatrix congruence_diag(const CMatrix& u, const RVector& d);

}  // namespace statsel::linalg
