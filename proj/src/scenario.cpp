#include "statsel/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "statsel/linalg.hpp"
#include "statsel/rng.hpp"

namespace statsel {

namespace {

constexpr double kUnitaryTol = 1e-10;
constexpr double kNormalizationTol = 1e-9;

// Distance on a ring of `n` positions.
double ring_distance(double a, double b, double n) {
  const double d = std::fabs(a - b);
  return std::min(d, n - d);
}

CMatrix draw_htilde(CounterRng& rng, int rows, int cols) {
  CMatrix h(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) h(r, c) = rng.complex_normal();
  }
  return h;
}

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts * 1e3); }

void SystemConfig::validate() const {
  if (num_antennas < 1) throw InvariantError("config: N must be positive");
  if (num_rf_chains < 1) throw InvariantError("config: L must be positive");
  if (num_rf_chains > num_antennas) throw InvariantError("config: L must not exceed N");
  const auto k = user_antennas.size();
  if (k == 0) throw InvariantError("config: K must be positive");
  if (power_budgets.size() != k || path_gains.size() != k) {
    throw InvariantError("config: per-user lists must have K entries");
  }
  for (int nk : user_antennas) {
    if (nk < 1) throw InvariantError("config: every N_k must be positive");
  }
  if (!(noise_power > 0.0) || !std::isfinite(noise_power)) {
    throw InvariantError("config: noise power must be positive");
  }
  for (double p : power_budgets) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvariantError("config: power budgets must be nonnegative");
  }
  for (double b : path_gains) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InvariantError("config: path gains must be positive");
  }
  const auto& c = controls;
  if (!(c.fp_tol > 0.0) || !(c.ao_tol > 0.0) || !(c.mm_tol > 0.0)) {
    throw InvariantError("config: tolerances must be positive");
  }
  if (c.fp_max_iter < 1 || c.ao_max_iter < 1 || c.mm_max_iter < 1) {
    throw InvariantError("config: iteration caps must be at least 1");
  }
}

void ChannelStats::validate() const {
  config.validate();
  const int n = config.num_antennas;
  if (num_users() != config.num_users()) {
    throw InvariantError("stats: user count does not match config");
  }
  for (int k = 0; k < num_users(); ++k) {
    const auto& u = users[k];
    const int nk = config.user_antennas[k];
    const std::string tag = "stats: user " + std::to_string(k) + ": ";
    if (u.rx_basis.rows() != n || u.rx_basis.cols() != n || u.tx_basis.rows() != nk ||
        u.tx_basis.cols() != nk || u.coupling_amplitude.rows() != n ||
        u.coupling_amplitude.cols() != nk || u.coupling_power.rows() != n ||
        u.coupling_power.cols() != nk) {
      throw InvariantError(tag + "dimension mismatch");
    }
    if (linalg::unitarity_error(u.rx_basis) > kUnitaryTol) throw InvariantError(tag + "U_R is not unitary");
    if (linalg::unitarity_error(u.tx_basis) > kUnitaryTol) throw InvariantError(tag + "U_T is not unitary");
    if ((u.coupling_amplitude.array() < 0.0).any() || !u.coupling_amplitude.allFinite()) {
      throw InvariantError(tag + "negative coupling entry");
    }
    if ((u.coupling_power.array() != u.coupling_amplitude.array().square()).any()) {
      throw InvariantError(tag + "Omega is not the entrywise square of OmegaTilde");
    }
    const double target = static_cast<double>(n) * nk * config.path_gains[k];
    if (std::fabs(u.coupling_power.sum() - target) > kNormalizationTol * target) {
      throw InvariantError(tag + "coupling power does not sum to N N_k beta_k");
    }
  }
}

SystemConfig desk_config(std::uint64_t seed) {
  SystemConfig c;
  c.num_antennas = 32;
  c.num_rf_chains = 8;
  c.user_antennas.assign(4, 2);
  c.noise_power = dbm_to_watts(-120.0);
  c.power_budgets.assign(4, dbm_to_watts(10.0));
  c.path_gains.assign(4, db_to_linear(-120.0));
  c.rng_seed = seed;
  return c;
}

ChannelStats generate_stats(const SystemConfig& config, std::uint64_t seed) {
  config.validate();
  const int n = config.num_antennas;
  const CounterRng root(seed);

  // Angular spreads in beam-index units. The receive profile covers about a
  // sixteenth of the aperture; the transmit profile decays fast so that the
  // eigenmodes of each user differ markedly in strength.
  const double rx_spread = std::max(1.0, n / 16.0);
  const double tx_spread = 0.5;

  ChannelStats stats;
  stats.config = config;
  stats.users.reserve(config.num_users());
  for (int k = 0; k < config.num_users(); ++k) {
    const int nk = config.user_antennas[k];
    CounterRng rng = root.split(static_cast<std::uint64_t>(k));
    const double rx_center = rng.uniform() * n;
    const double tx_center = rng.uniform() * nk;

    RMatrix power(n, nk);
    for (int m = 0; m < nk; ++m) {
      for (int r = 0; r < n; ++r) {
        const double decay = ring_distance(r, rx_center, n) / rx_spread +
                             ring_distance(m, tx_center, nk) / tx_spread;
        power(r, m) = std::exp(-decay) * rng.exponential();
      }
    }
    const double target = static_cast<double>(n) * nk * config.path_gains[k];
    power *= target / power.sum();

    UserStats u;
    u.rx_basis = linalg::dft_matrix(n);
    u.tx_basis = linalg::dft_matrix(nk);
    u.coupling_amplitude = power.cwiseSqrt();
    u.coupling_power = u.coupling_amplitude.array().square().matrix();
    stats.users.push_back(std::move(u));
  }
  return stats;
}

ChannelSample sample_channel(const ChannelStats& stats, std::uint64_t seed) {
  const CounterRng root(seed);
  ChannelSample sample;
  sample.channels.reserve(stats.users.size());
  for (std::size_t k = 0; k < stats.users.size(); ++k) {
    const auto& u = stats.users[k];
    CounterRng rng = root.split(k);
    const CMatrix h = draw_htilde(rng, u.coupling_amplitude.rows(), u.coupling_amplitude.cols());
    const CMatrix inner = u.coupling_amplitude.cast<cdouble>().cwiseProduct(h);
    sample.channels.push_back(u.rx_basis * inner * u.tx_basis.adjoint());
  }
  return sample;
}

ChannelSample sample_channel_rows(const ChannelStats& stats, std::uint64_t seed,
                                  const std::vector<int>& rows) {
  const CounterRng root(seed);
  ChannelSample sample;
  sample.channels.reserve(stats.users.size());
  for (std::size_t k = 0; k < stats.users.size(); ++k) {
    const auto& u = stats.users[k];
    CounterRng rng = root.split(k);
    const CMatrix h = draw_htilde(rng, u.coupling_amplitude.rows(), u.coupling_amplitude.cols());
    const CMatrix inner = u.coupling_amplitude.cast<cdouble>().cwiseProduct(h);
    const CMatrix rx_rows = u.rx_basis(rows, Eigen::all);
    sample.channels.push_back(rx_rows * inner * u.tx_basis.adjoint());
  }
  return sample;
}

void save_stats(const ChannelStats& stats, const std::filesystem::path& path) {
  using detail::json;
  json users = json::array();
  for (const auto& u : stats.users) {
    users.push_back({{"U_R", detail::complex_matrix_to_json(u.rx_basis)},
                     {"U_T", detail::complex_matrix_to_json(u.tx_basis)},
                     {"OmegaTilde", detail::real_matrix_to_json(u.coupling_amplitude)}});
  }
  const json doc = {{"schema_version", kStatsSchemaVersion},
                    {"config", detail::config_to_json(stats.config)},
                    {"users", users}};
  detail::write_text_file(path, doc.dump(1) + "\n");
}

ChannelStats load_stats(const std::filesystem::path& path) {
  const auto doc = detail::read_json_file(path);
  if (!doc.is_object() || !doc.contains("schema_version")) {
    throw IoError("stats file " + path.string() + ": missing schema_version");
  }
  if (doc.at("schema_version") != kStatsSchemaVersion) {
    throw IoError("stats file " + path.string() + ": unsupported schema_version " +
                  doc.at("schema_version").dump());
  }
  ChannelStats stats;
  try {
    stats.config = detail::config_from_json(doc.at("config"));
    for (const auto& ju : doc.at("users")) {
      UserStats u;
      u.rx_basis = detail::complex_matrix_from_json(ju.at("U_R"), "U_R");
      u.tx_basis = detail::complex_matrix_from_json(ju.at("U_T"), "U_T");
      u.coupling_amplitude = detail::real_matrix_from_json(ju.at("OmegaTilde"), "OmegaTilde");
      u.coupling_power = u.coupling_amplitude.array().square().matrix();
      stats.users.push_back(std::move(u));
    }
  } catch (const detail::json::exception& e) {
    throw IoError("stats file " + path.string() + ": " + e.what());
  }
  stats.validate();
  return stats;
}

}  // namespace statsel
