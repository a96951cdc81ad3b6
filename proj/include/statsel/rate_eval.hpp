#pragma once

#include <cstdint>
#include <vector>

#include "statsel/scenario.hpp"

namespace statsel {

/// Set of active receive antennas, stored as ascending 0-based indices.
class SelectionVector {
 public:
  SelectionVector() = default;

  /// Throws InvariantError on out-of-range or duplicate indices.
  static SelectionVector from_indices(int num_antennas, std::vector<int> indices);
  /// mask[n] != 0 marks antenna n active.
  static SelectionVector from_mask(const std::vector<int>& mask);

  int num_antennas() const { return num_antennas_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const std::vector<int>& indices() const { return indices_; }
  std::vector<int> mask() const;
  bool contains(int n) const;

  friend bool operator==(const SelectionVector&, const SelectionVector&) = default;

 private:
  int num_antennas_ = 0;
  std::vector<int> indices_;
};

/// Uniformly random size-L subset, deterministic in seed.
SelectionVector random_selection(int num_antennas, int size, std::uint64_t seed);

/// Transmit covariances Q_k (N_k x N_k Hermitian PSD).
struct CovarianceSet {
  std::vector<CMatrix> per_user;
};

/// Throws InvariantError unless every Q_k is Hermitian (1e-12), PSD (-1e-10)
/// and within its trace budget (+1e-9). Budgets may be empty to skip that check.
void validate_covariances(const CovarianceSet& q, const std::vector<int>& user_antennas,
                          const std::vector<double>& budgets);

/// Q_k = (p_k / N_k) I.
CovarianceSet isotropic_covariances(const SystemConfig& config);

struct RateEstimate {
  double mean = 0.0;       // nats per channel use
  double std_error = 0.0;  // of the mean
  int n_samples = 0;
};

/// log det(I + sigma^-2 sum_k S H_k Q_k H_k^H S^H) on the L x L selected block.
double instant_rate_joint(const ChannelSample& sample, const CovarianceSet& q,
                          const SelectionVector& s, double noise_power);

/// Same quantity on the N x N masked form I + sum_k Delta E_k Delta^H.
double instant_rate_joint_masked(const ChannelSample& sample, const CovarianceSet& q,
                                 const SelectionVector& s, double noise_power);

/// Rate with user `excluded` removed from the sum.
double instant_rate_without_k(const ChannelSample& sample, const CovarianceSet& q,
                              const SelectionVector& s, double noise_power, int excluded);

/// Monte-Carlo estimate of the ergodic sum-rate. Independent mode averages
/// sum_k (rate_joint - rate_without_k) per realization. Sample i uses seed
/// CounterRng(seed).split(i); samples are summed in index order, so the
/// result does not depend on the thread count (STATSEL_THREADS).
RateEstimate mc_sum_rate(const ChannelStats& stats, const CovarianceSet& q,
                         const SelectionVector& s, Decoding mode, int n_samples,
                         std::uint64_t seed);

/// Per-sample values behind mc_sum_rate, in sample order.
std::vector<double> mc_rate_samples(const ChannelStats& stats, const CovarianceSet& q,
                                    const SelectionVector& s, Decoding mode, int n_samples,
                                    std::uint64_t seed);

/// Seed of Monte-Carlo sample `index` under master seed `seed`.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

/// Worker threads used for Monte-Carlo loops; STATSEL_THREADS overrides.
int worker_threads();

}  // namespace statsel
