#include "statsel/det_equiv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "statsel/linalg.hpp"

namespace statsel {

namespace {

constexpr double kResidualFloor = 1e-12;
constexpr int kStallSweepsBeforeDamping = 5;

bool is_diagonal(const CMatrix& m) {
  const CMatrix off = m - CMatrix(m.diagonal().asDiagonal());
  return off.norm() <= 1e-14 * std::max(m.norm(), 1e-300);
}

double max_relative_change(const std::vector<RVector>& now, const std::vector<RVector>& before,
                           const std::vector<int>& users) {
  double worst = 0.0;
  for (int k : users) {
    const auto& a = now[static_cast<std::size_t>(k)];
    const auto& b = before[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double denom = std::max(std::fabs(b(i)), kResidualFloor);
      worst = std::max(worst, std::fabs(a(i) - b(i)) / denom);
    }
  }
  return worst;
}

// One Jacobi sweep's worth of machinery for a fixed (users, selection).
class DeSystem {
 public:
  DeSystem(const ChannelStats& stats, const std::vector<CMatrix>& tx_cov, const std::vector<int>& users,
           const SelectionVector& s, double noise_power)
      : stats_(stats), users_(users), noise_(noise_power), rows_(s.indices()) {
    const auto k_all = stats.users.size();
    selected_basis_.resize(k_all);
    cov_root_.resize(k_all);
    cov_diag_.resize(k_all);
    diagonal_.assign(k_all, true);
    for (int k : users_) {
      const auto uk = static_cast<std::size_t>(k);
      selected_basis_[uk] = stats.users[uk].rx_basis(rows_, Eigen::all);
      const CMatrix& qt = tx_cov[uk];
      cov_diag_[uk] = qt.diagonal().real().cwiseMax(0.0);
      diagonal_[uk] = is_diagonal(qt);
      if (!diagonal_[uk]) cov_root_[uk] = linalg::hermitian_sqrt(qt);
    }
  }

  std::vector<RVector> initial_psi() const {
    std::vector<RVector> psi(stats_.users.size());
    for (int k : users_) psi[static_cast<std::size_t>(k)] = cov_diag_[static_cast<std::size_t>(k)];
    return psi;
  }

  // L x L block of R on the selected rows.
  CMatrix selected_r(const std::vector<RVector>& psi) const {
    const auto l = static_cast<Eigen::Index>(rows_.size());
    CMatrix r = CMatrix::Zero(l, l);
    for (int k : users_) {
      const auto uk = static_cast<std::size_t>(k);
      const RVector weights = stats_.users[uk].coupling_power * psi[uk] / noise_;
      const CMatrix& w = selected_basis_[uk];
      r += w * weights.cast<cdouble>().asDiagonal() * w.adjoint();
    }
    return 0.5 * (r + r.adjoint());
  }

  std::vector<RVector> gamma_from(const std::vector<RVector>& psi) const {
    const CMatrix r = selected_r(psi);
    const CMatrix inv = linalg::inverse_hpd(CMatrix::Identity(r.rows(), r.cols()) + r);
    std::vector<RVector> gamma(stats_.users.size());
    for (int k : users_) {
      const auto uk = static_cast<std::size_t>(k);
      const CMatrix& w = selected_basis_[uk];
      const CMatrix y = inv * w;
      // Diagonal of W^H (I + R)^-1 W, one quadratic form per column.
      const RVector quad = (w.conjugate().cwiseProduct(y)).colwise().sum().real().transpose();
      gamma[uk] = (quad / noise_).cwiseMax(0.0);
    }
    return gamma;
  }

  RVector xi_of(int k, const RVector& gamma) const {
    return stats_.users[static_cast<std::size_t>(k)].coupling_power.transpose() * gamma;
  }

  std::vector<RVector> psi_from(const std::vector<RVector>& gamma) const {
    std::vector<RVector> psi(stats_.users.size());
    for (int k : users_) {
      const auto uk = static_cast<std::size_t>(k);
      const RVector xi = xi_of(k, gamma[uk]);
      if (diagonal_[uk]) {
        const RVector& lam = cov_diag_[uk];
        psi[uk] = lam.array() / (1.0 + lam.array() * xi.array());
      } else {
        // Q^{1/2} (I + Q^{1/2} Xi Q^{1/2})^-1 Q^{1/2} keeps the result Hermitian PSD.
        const CMatrix& root = cov_root_[uk];
        const CMatrix inner = CMatrix::Identity(root.rows(), root.cols()) +
                              root * xi.cast<cdouble>().asDiagonal() * root;
        const CMatrix m = root * linalg::inverse_hpd(inner) * root;
        psi[uk] = m.diagonal().real().cwiseMax(0.0);
      }
    }
    return psi;
  }

  CMatrix embed(const CMatrix& selected) const {
    const Eigen::Index n = stats_.config.num_antennas;
    CMatrix full = CMatrix::Zero(n, n);
    for (std::size_t a = 0; a < rows_.size(); ++a) {
      for (std::size_t b = 0; b < rows_.size(); ++b) {
        full(rows_[a], rows_[b]) = selected(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
    return full;
  }

 private:
  const ChannelStats& stats_;
  std::vector<int> users_;
  double noise_;
  std::vector<int> rows_;
  std::vector<CMatrix> selected_basis_;
  std::vector<CMatrix> cov_root_;
  std::vector<RVector> cov_diag_;
  std::vector<bool> diagonal_;
};

std::vector<CMatrix> tx_frame(const ChannelStats& stats, const CovarianceSet& q) {
  validate_covariances(q, stats.config.user_antennas, {});
  std::vector<CMatrix> out;
  for (std::size_t k = 0; k < q.per_user.size(); ++k) {
    const CMatrix& u = stats.users[k].tx_basis;
    CMatrix qt = u.adjoint() * q.per_user[k] * u;
    out.push_back(0.5 * (qt + qt.adjoint()));
  }
  return out;
}

std::vector<CMatrix> tx_frame(const ChannelStats& stats, const PowerAllocation& power) {
  if (power.per_user.size() != stats.users.size()) {
    throw InvariantError("power allocation: user count mismatch");
  }
  std::vector<CMatrix> out;
  for (std::size_t k = 0; k < power.per_user.size(); ++k) {
    const RVector& lam = power.per_user[k];
    if (lam.size() != stats.users[k].tx_basis.rows()) {
      throw InvariantError("power allocation: dimension mismatch for user " + std::to_string(k));
    }
    if ((lam.array() < 0.0).any()) throw InvariantError("power allocation: negative eigen-power");
    out.push_back(lam.cast<cdouble>().asDiagonal());
  }
  return out;
}

void check_selection(const ChannelStats& stats, const SelectionVector& s) {
  if (s.num_antennas() != stats.config.num_antennas) {
    throw InvariantError("selection length does not match N");
  }
}

std::vector<int> all_users(const ChannelStats& stats) {
  std::vector<int> u(stats.users.size());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = static_cast<int>(k);
  return u;
}

}  // namespace

CovarianceSet to_covariances(const ChannelStats& stats, const PowerAllocation& power) {
  CovarianceSet q;
  for (std::size_t k = 0; k < power.per_user.size(); ++k) {
    CMatrix m = linalg::congruence_diag(stats.users[k].tx_basis, power.per_user[k]);
    q.per_user.push_back(0.5 * (m + m.adjoint()));
  }
  return q;
}

PowerAllocation uniform_power(const SystemConfig& config) {
  PowerAllocation p;
  for (int k = 0; k < config.num_users(); ++k) {
    const int nk = config.user_antennas[static_cast<std::size_t>(k)];
    p.per_user.push_back(RVector::Constant(nk, config.power_budgets[static_cast<std::size_t>(k)] / nk));
  }
  return p;
}

DeFixedPoint solve_de_system(const ChannelStats& stats, const std::vector<CMatrix>& tx_covariances,
                             const std::vector<int>& users, const SelectionVector& s,
                             double noise_power, double tol, int max_iter) {
  if (!(tol > 0.0) || max_iter < 1) throw std::invalid_argument("fixed point: invalid controls");
  check_selection(stats, s);
  DeFixedPoint fp;
  fp.users = users;
  const auto k_all = stats.users.size();
  fp.gamma.assign(k_all, RVector());
  fp.psi.assign(k_all, RVector());
  fp.xi.assign(k_all, RVector());
  const Eigen::Index n = stats.config.num_antennas;
  if (users.empty()) {
    fp.R = CMatrix::Zero(n, n);
    fp.converged = true;
    return fp;
  }

  const DeSystem sys(stats, tx_covariances, users, s, noise_power);
  std::vector<RVector> psi = sys.initial_psi();
  std::vector<RVector> gamma = sys.gamma_from(psi);

  double previous = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 1; it <= max_iter; ++it) {
    std::vector<RVector> gamma_new = sys.gamma_from(psi);
    std::vector<RVector> psi_new = sys.psi_from(gamma_new);
    if (fp.damped) {
      for (int k : users) {
        const auto uk = static_cast<std::size_t>(k);
        gamma_new[uk] = 0.5 * (gamma_new[uk] + gamma[uk]);
        psi_new[uk] = 0.5 * (psi_new[uk] + psi[uk]);
      }
    }
    const double residual = std::max(max_relative_change(gamma_new, gamma, users),
                                     max_relative_change(psi_new, psi, users));
    gamma = std::move(gamma_new);
    psi = std::move(psi_new);
    fp.iterations = it;
    fp.residual = residual;
    fp.residual_trace.push_back(residual);
    if (residual <= tol) {
      fp.converged = true;
      break;
    }
    stalled = residual >= previous ? stalled + 1 : 0;
    if (stalled >= kStallSweepsBeforeDamping) fp.damped = true;
    previous = residual;
  }

  for (int k : users) {
    const auto uk = static_cast<std::size_t>(k);
    fp.xi[uk] = sys.xi_of(k, gamma[uk]);
  }
  fp.gamma = std::move(gamma);
  fp.psi = std::move(psi);
  fp.R = sys.embed(sys.selected_r(fp.psi));
  return fp;
}

double de_system_rate(const ChannelStats& stats, const std::vector<CMatrix>& tx_covariances,
                      const DeFixedPoint& fp, double noise_power) {
  (void)noise_power;  // already folded into R and gamma
  if (!fp.converged) throw ConvergenceError("deterministic equivalent: fixed point did not converge");
  double rate = 0.0;
  for (int k : fp.users) {
    const auto uk = static_cast<std::size_t>(k);
    const CMatrix& qt = tx_covariances[uk];
    const RVector& xi = fp.xi[uk];
    if (is_diagonal(qt)) {
      const RVector lam = qt.diagonal().real().cwiseMax(0.0);
      for (Eigen::Index m = 0; m < lam.size(); ++m) rate += std::log1p(xi(m) * lam(m));
    } else {
      const RVector root = xi.cwiseMax(0.0).cwiseSqrt();
      const CMatrix d = root.cast<cdouble>().asDiagonal();
      rate += linalg::logdet_hpd(CMatrix::Identity(qt.rows(), qt.cols()) + d * qt * d);
    }
    rate -= fp.gamma[uk].dot(stats.users[uk].coupling_power * fp.psi[uk]);
  }
  const CMatrix& r = fp.R;
  rate += linalg::logdet_hpd(CMatrix::Identity(r.rows(), r.cols()) + r);
  return rate;
}

FixedPointJoint solve_fp_joint(const ChannelStats& stats, const PowerAllocation& power,
                               const SelectionVector& s, double noise_power, double tol,
                               int max_iter) {
  return solve_de_system(stats, tx_frame(stats, power), all_users(stats), s, noise_power, tol, max_iter);
}

double de_rate_joint(const ChannelStats& stats, const PowerAllocation& power,
                     const SelectionVector& s, double noise_power, const FixedPointJoint& fp) {
  check_selection(stats, s);
  return std::max(0.0, de_system_rate(stats, tx_frame(stats, power), fp, noise_power));
}

FixedPointIndep solve_fp_indep(const ChannelStats& stats, const CovarianceSet& q,
                               const SelectionVector& s, double noise_power, double tol,
                               int max_iter) {
  const auto frame = tx_frame(stats, q);
  const auto users = all_users(stats);
  FixedPointIndep fp;
  fp.hat = solve_de_system(stats, frame, users, s, noise_power, tol, max_iter);
  fp.iterations = fp.hat.iterations;
  fp.residual = fp.hat.residual;
  fp.converged = fp.hat.converged;
  for (int k : users) {
    std::vector<int> others;
    for (int j : users) {
      if (j != k) others.push_back(j);
    }
    fp.excluding.push_back(solve_de_system(stats, frame, others, s, noise_power, tol, max_iter));
    const auto& bar = fp.excluding.back();
    fp.iterations = std::max(fp.iterations, bar.iterations);
    fp.residual = std::max(fp.residual, bar.residual);
    fp.converged = fp.converged && bar.converged;
  }
  return fp;
}

double de_rate_indep(const ChannelStats& stats, const CovarianceSet& q, const SelectionVector& s,
                     double noise_power, const FixedPointIndep& fp) {
  check_selection(stats, s);
  if (!fp.converged) throw ConvergenceError("deterministic equivalent: fixed point did not converge");
  const auto frame = tx_frame(stats, q);
  const double k_users = static_cast<double>(stats.users.size());
  double rate = k_users * de_system_rate(stats, frame, fp.hat, noise_power);
  for (const auto& bar : fp.excluding) rate -= de_system_rate(stats, frame, bar, noise_power);
  return rate;
}

CMatrix xi_matrix(const ChannelStats& stats, int k, const RVector& xi) {
  CMatrix m = linalg::congruence_diag(stats.users[static_cast<std::size_t>(k)].tx_basis, xi);
  return 0.5 * (m + m.adjoint());
}

CMatrix build_selection_matrix(const ChannelStats& stats, const std::vector<int>& users,
                               const std::vector<RVector>& psi, double noise_power) {
  const Eigen::Index n = stats.config.num_antennas;
  CMatrix b = CMatrix::Zero(n, n);
  for (int k : users) {
    const auto uk = static_cast<std::size_t>(k);
    if ((psi[uk].array() < 0.0).any()) throw InvariantError("selection matrix: negative psi");
    const RVector weights = stats.users[uk].coupling_power * psi[uk] / noise_power;
    b += linalg::congruence_diag(stats.users[uk].rx_basis, weights);
  }
  return 0.5 * (b + b.adjoint());
}

}  // namespace statsel
