#include "statsel/rate_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <string>
#include <thread>

#include "statsel/linalg.hpp"
#include "statsel/rng.hpp"

namespace statsel {

SelectionVector SelectionVector::from_indices(int num_antennas, std::vector<int> indices) {
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw InvariantError("selection: duplicate antenna index");
  }
  for (int n : indices) {
    if (n < 0 || n >= num_antennas) throw InvariantError("selection: antenna index out of range");
  }
  SelectionVector s;
  s.num_antennas_ = num_antennas;
  s.indices_ = std::move(indices);
  return s;
}

SelectionVector SelectionVector::from_mask(const std::vector<int>& mask) {
  std::vector<int> idx;
  for (std::size_t n = 0; n < mask.size(); ++n) {
    if (mask[n] != 0 && mask[n] != 1) throw InvariantError("selection: mask entries must be 0 or 1");
    if (mask[n] == 1) idx.push_back(static_cast<int>(n));
  }
  return from_indices(static_cast<int>(mask.size()), std::move(idx));
}

std::vector<int> SelectionVector::mask() const {
  std::vector<int> m(static_cast<std::size_t>(num_antennas_), 0);
  for (int n : indices_) m[static_cast<std::size_t>(n)] = 1;
  return m;
}

bool SelectionVector::contains(int n) const {
  return std::binary_search(indices_.begin(), indices_.end(), n);
}

SelectionVector random_selection(int num_antennas, int size, std::uint64_t seed) {
  if (size < 0 || size > num_antennas) throw InvariantError("random_selection: size out of range");
  std::vector<int> pool(static_cast<std::size_t>(num_antennas));
  std::iota(pool.begin(), pool.end(), 0);
  CounterRng rng(seed);
  // Partial Fisher-Yates.
  for (int i = 0; i < size; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(num_antennas - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(size));
  return SelectionVector::from_indices(num_antennas, std::move(pool));
}

void validate_covariances(const CovarianceSet& q, const std::vector<int>& user_antennas,
                          const std::vector<double>& budgets) {
  if (q.per_user.size() != user_antennas.size()) {
    throw InvariantError("covariances: user count mismatch");
  }
  for (std::size_t k = 0; k < q.per_user.size(); ++k) {
    const auto& m = q.per_user[k];
    const std::string what = "covariance of user " + std::to_string(k);
    if (m.rows() != user_antennas[k] || m.cols() != user_antennas[k]) {
      throw InvariantError(what + ": dimension mismatch");
    }
    if ((m - m.adjoint()).norm() > 1e-12 * std::max(1.0, m.norm())) {
      throw InvariantError(what + ": not Hermitian");
    }
    if (m.size() > 0 && linalg::min_eigenvalue(m) < -1e-10) {
      throw InvariantError(what + ": not positive semidefinite");
    }
    if (!budgets.empty() && m.trace().real() > budgets[k] + 1e-9) {
      throw InvariantError(what + ": trace exceeds power budget");
    }
  }
}

CovarianceSet isotropic_covariances(const SystemConfig& config) {
  CovarianceSet q;
  for (int k = 0; k < config.num_users(); ++k) {
    const int nk = config.user_antennas[static_cast<std::size_t>(k)];
    q.per_user.push_back(CMatrix::Identity(nk, nk) * (config.power_budgets[static_cast<std::size_t>(k)] / nk));
  }
  return q;
}

namespace {

void check_sample(const ChannelSample& sample, const CovarianceSet& q) {
  if (sample.channels.size() != q.per_user.size()) {
    throw InvariantError("rate: sample and covariance user counts differ");
  }
  for (std::size_t k = 0; k < q.per_user.size(); ++k) {
    if (sample.channels[k].cols() != q.per_user[k].rows()) {
      throw InvariantError("rate: channel and covariance dimensions differ");
    }
  }
}

void check_psd(const CovarianceSet& q) {
  std::vector<int> dims;
  for (const auto& m : q.per_user) dims.push_back(static_cast<int>(m.rows()));
  validate_covariances(q, dims, {});
}

// sigma^-2 G Q G^H for the already row-selected channel G.
CMatrix received_term(const CMatrix& g, const CMatrix& q, double noise_power) {
  CMatrix e = g * q * g.adjoint() / noise_power;
  return 0.5 * (e + e.adjoint());
}

// Per-realization rates from row-selected channels; `excluded` < 0 keeps all.
double rate_from_rows(const std::vector<CMatrix>& rows, const CovarianceSet& q, double noise_power,
                      int excluded) {
  const Eigen::Index l = rows.empty() ? 0 : rows.front().rows();
  CMatrix m = CMatrix::Identity(l, l);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (static_cast<int>(k) == excluded) continue;
    m += received_term(rows[k], q.per_user[k], noise_power);
  }
  return std::max(0.0, linalg::logdet_hpd(m));
}

double independent_from_rows(const std::vector<CMatrix>& rows, const CovarianceSet& q,
                             double noise_power) {
  const int k_users = static_cast<int>(rows.size());
  const double joint = rate_from_rows(rows, q, noise_power, -1);
  double total = 0.0;
  for (int k = 0; k < k_users; ++k) total += joint - rate_from_rows(rows, q, noise_power, k);
  return total;
}

std::vector<CMatrix> select_rows(const ChannelSample& sample, const SelectionVector& s) {
  std::vector<CMatrix> rows;
  rows.reserve(sample.channels.size());
  for (const auto& h : sample.channels) rows.push_back(h(s.indices(), Eigen::all));
  return rows;
}

}  // namespace

double instant_rate_joint(const ChannelSample& sample, const CovarianceSet& q,
                          const SelectionVector& s, double noise_power) {
  check_sample(sample, q);
  check_psd(q);
  return rate_from_rows(select_rows(sample, s), q, noise_power, -1);
}

double instant_rate_joint_masked(const ChannelSample& sample, const CovarianceSet& q,
                                 const SelectionVector& s, double noise_power) {
  check_sample(sample, q);
  check_psd(q);
  const Eigen::Index n = sample.channels.empty() ? 0 : sample.channels.front().rows();
  RVector mask = RVector::Zero(n);
  for (int idx : s.indices()) mask(idx) = 1.0;
  const CMatrix delta = mask.cast<cdouble>().asDiagonal();
  CMatrix m = CMatrix::Identity(n, n);
  for (std::size_t k = 0; k < sample.channels.size(); ++k) {
    const CMatrix e = received_term(sample.channels[k], q.per_user[k], noise_power);
    m += delta * e * delta.adjoint();
  }
  return std::max(0.0, linalg::logdet_hpd(m));
}

double instant_rate_without_k(const ChannelSample& sample, const CovarianceSet& q,
                              const SelectionVector& s, double noise_power, int excluded) {
  check_sample(sample, q);
  if (excluded < 0 || excluded >= static_cast<int>(q.per_user.size())) {
    throw std::out_of_range("instant_rate_without_k: user index out of range");
  }
  check_psd(q);
  return rate_from_rows(select_rows(sample, s), q, noise_power, excluded);
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  return CounterRng(seed).split(index).key();
}

int worker_threads() {
  if (const char* env = std::getenv("STATSEL_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> mc_rate_samples(const ChannelStats& stats, const CovarianceSet& q,
                                    const SelectionVector& s, Decoding mode, int n_samples,
                                    std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("mc_sum_rate: n_samples must be at least 1");
  validate_covariances(q, stats.config.user_antennas, {});
  if (s.num_antennas() != stats.config.num_antennas) {
    throw InvariantError("mc_sum_rate: selection length does not match N");
  }
  const double noise = stats.config.noise_power;
  std::vector<double> values(static_cast<std::size_t>(n_samples));

  auto work = [&](int begin, int stride) {
    for (int i = begin; i < n_samples; i += stride) {
      const auto rows = sample_channel_rows(stats, sample_seed(seed, static_cast<std::uint64_t>(i)), s.indices());
      values[static_cast<std::size_t>(i)] = mode == Decoding::joint
                                                ? rate_from_rows(rows.channels, q, noise, -1)
                                                : independent_from_rows(rows.channels, q, noise);
    }
  };

  const int threads = std::min(worker_threads(), n_samples);
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  return values;
}

RateEstimate mc_sum_rate(const ChannelStats& stats, const CovarianceSet& q, const SelectionVector& s,
                         Decoding mode, int n_samples, std::uint64_t seed) {
  const auto values = mc_rate_samples(stats, q, s, mode, n_samples, seed);
  double sum = 0.0;
  for (double v : values) sum += v;
  RateEstimate est;
  est.n_samples = n_samples;
  est.mean = sum / n_samples;
  if (n_samples > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / (n_samples - 1) / n_samples);
  }
  return est;
}

}  // namespace statsel
