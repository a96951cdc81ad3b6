#pragma once

#include <cmath>
#include <vector>

#include "statsel/rng.hpp"
#include "statsel/scenario.hpp"

namespace testing_support {

using namespace statsel;

inline CMatrix gaussian(CounterRng& rng, int rows, int cols) {
  CMatrix a(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) a(r, c) = rng.complex_normal();
  return a;
}

inline CMatrix random_psd(CounterRng& rng, int n, int rank) {
  const CMatrix a = gaussian(rng, n, rank);
  return a * a.adjoint();
}

inline CMatrix random_unitary(CounterRng& rng, int n) {
  Eigen::HouseholderQR<CMatrix> qr(gaussian(rng, n, n));
  return qr.householderQ() * CMatrix::Identity(n, n);
}

/// Covariance with trace `budget` and random eigenvectors.
inline CMatrix random_covariance(CounterRng& rng, int n, double budget) {
  const CMatrix m = random_psd(rng, n, n);
  return m * (budget / m.trace().real());
}

inline SystemConfig small_config(int n, int l, std::vector<int> nk, double noise = 1.0, double p = 1.0) {
  SystemConfig c;
  c.num_antennas = n;
  c.num_rf_chains = l;
  const auto k = nk.size();
  c.user_antennas = std::move(nk);
  c.noise_power = noise;
  c.power_budgets.assign(k, p);
  c.path_gains.assign(k, 1.0);
  return c;
}

/// Identity eigenbases and all-ones coupling (i.i.d. Rayleigh).
inline ChannelStats iid_stats(const SystemConfig& c) {
  ChannelStats st;
  st.config = c;
  for (int nk : c.user_antennas) {
    UserStats u;
    u.rx_basis = CMatrix::Identity(c.num_antennas, c.num_antennas);
    u.tx_basis = CMatrix::Identity(nk, nk);
    u.coupling_amplitude = RMatrix::Ones(c.num_antennas, nk);
    u.coupling_power = RMatrix::Ones(c.num_antennas, nk);
    st.users.push_back(u);
  }
  return st;
}

/// Direct log det via eigenvalues of a Hermitian PD matrix.
inline double logdet_ref(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  return es.eigenvalues().array().log().sum();
}

}  // namespace testing_support
