#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "statsel/types.hpp"

namespace statsel {

/// Iteration controls shared by the fixed-point, AO and MM solvers.
struct SolverControls {
  double fp_tol = 1e-10;
  int fp_max_iter = 2000;
  double ao_tol = 1e-4;
  int ao_max_iter = 30;
  double mm_tol = 1e-9;
  int mm_max_iter = 500;
};

/// One scenario: array dimensions, budgets and noise in linear units (watts).
struct SystemConfig {
  int num_antennas = 0;              // N
  int num_rf_chains = 0;             // L
  std::vector<int> user_antennas;    // N_k, one entry per user
  double noise_power = 0.0;          // sigma^2 [W]
  std::vector<double> power_budgets; // p_k [W]
  std::vector<double> path_gains;    // beta_k, linear
  std::uint64_t rng_seed = 0;
  SolverControls controls;

  int num_users() const { return static_cast<int>(user_antennas.size()); }

  /// Throws InvariantError on any violated constraint.
  void validate() const;
};

/// Long-term statistics of one user: H = U_R (OmegaTilde .* Htilde) U_T^H.
struct UserStats {
  CMatrix rx_basis;          // U_R, N x N
  CMatrix tx_basis;          // U_T, N_k x N_k
  RMatrix coupling_amplitude; // OmegaTilde, N x N_k
  RMatrix coupling_power;     // Omega = OmegaTilde .* OmegaTilde
};

struct ChannelStats {
  SystemConfig config;
  std::vector<UserStats> users;

  int num_users() const { return static_cast<int>(users.size()); }
  void validate() const;
};

/// One channel realization per user, H_k is N x N_k.
struct ChannelSample {
  std::vector<CMatrix> channels;
};

/// Builds DFT eigenbases and an angular-decay coupling profile normalised to
/// sum(Omega_k) = N N_k beta_k. Deterministic in (config, seed).
ChannelStats generate_stats(const SystemConfig& config, std::uint64_t seed);

/// Draws one realization from the jointly-correlated model. Users use
/// independent child streams of `seed`.
ChannelSample sample_channel(const ChannelStats& stats, std::uint64_t seed);

/// Same draw as sample_channel, restricted to the given receive rows.
/// Returns S H_k for each user.
ChannelSample sample_channel_rows(const ChannelStats& stats, std::uint64_t seed,
                                  const std::vector<int>& rows);

/// N=32, L=8, K=4, N_k=2, p_k=10 dBm, sigma^2=-120 dBm, beta_k=-120 dB.
SystemConfig desk_config(std::uint64_t seed = 1);

inline constexpr int kStatsSchemaVersion = 1;

void save_stats(const ChannelStats& stats, const std::filesystem::path& path);
ChannelStats load_stats(const std::filesystem::path& path);

double dbm_to_watts(double dbm);
double db_to_linear(double db);
double watts_to_dbm(double watts);

}  // namespace statsel
