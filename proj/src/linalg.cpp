#include "statsel/linalg.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace statsel::linalg {

namespace {

bool try_logdet(const CMatrix& a, double& out) {
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  const auto& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = l(i, i).real();
    if (!(d > 0.0)) return false;
    acc += std::log(d);
  }
  out = 2.0 * acc;
  return true;
}

}  // namespace

double logdet_hpd(const CMatrix& a) {
  double out = 0.0;
  if (try_logdet(a, out)) return out;
  const CMatrix sym = 0.5 * (a + a.adjoint());
  if (try_logdet(sym, out)) return out;
  throw std::domain_error("logdet_hpd: matrix is not positive definite");
}

double logdet_i_plus_product(const CMatrix& a, const CMatrix& q) {
  const CMatrix root = hermitian_sqrt(a);
  const CMatrix m = CMatrix::Identity(a.rows(), a.cols()) + root * q * root;
  return logdet_hpd(m);
}

CMatrix hermitian_sqrt(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (a + a.adjoint()));
  const RVector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return congruence_diag(eig.eigenvectors(), root);
}

CMatrix inverse_hpd(const CMatrix& a) {
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) {
    llt.compute(0.5 * (a + a.adjoint()));
    if (llt.info() != Eigen::Success) {
      throw std::domain_error("inverse_hpd: matrix is not positive definite");
    }
  }
  return llt.solve(CMatrix::Identity(a.rows(), a.cols()));
}

bool is_hermitian(const CMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.norm());
  return (a - a.adjoint()).norm() <= tol * scale;
}

double min_eigenvalue(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

void require_hermitian_psd(const CMatrix& a, const char* what, double herm_tol, double psd_tol) {
  if (a.rows() != a.cols()) {
    throw InvariantError(std::string(what) + ": matrix is not square");
  }
  if (!is_hermitian(a, herm_tol)) {
    throw InvariantError(std::string(what) + ": matrix is not Hermitian");
  }
  const double floor = -psd_tol * std::max(1.0, a.norm());
  if (min_eigenvalue(a) < floor) {
    throw InvariantError(std::string(what) + ": matrix is not positive semidefinite");
  }
}

CMatrix dft_matrix(int n) {
  CMatrix f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      // Reduce the phase index mod n first so large products stay exact.
      const long long idx = (static_cast<long long>(r) * c) % n;
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(idx) / n;
      f(r, c) = cdouble(std::cos(phase) * scale, std::sin(phase) * scale);
    }
  }
  return f;
}

double unitarity_error(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols())).norm();
}

CMatrix congruence_diag(const CMatrix& u, const RVector& d) {
  return u * d.cast<cdouble>().asDiagonal() * u.adjoint();
}

}  // namespace statsel::linalg
