#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "statsel/opt_joint.hpp"
#include "statsel/scenario.hpp"

namespace statsel {

/// A config file: one scenario plus its solver controls.
struct Scenario {
  std::string id;
  SystemConfig config;
};

/// Reads a JSON scenario. Powers may be given in dBm (noise_power_dbm,
/// power_budgets_dbm) and path gains in dB. `scenario_id` defaults to the
/// file stem.
Scenario load_scenario(const std::filesystem::path& path);

enum class Scheme { proposed, baseline };
const char* to_string(Scheme s);

/// One row of the results table. Rates are in bits.
struct RunRecord {
  std::string scenario_id;
  Decoding decoding = Decoding::joint;
  Scheme scheme = Scheme::proposed;
  double p_dbm = 0.0;
  double de_rate_bits = 0.0;
  double mc_rate_bits = 0.0;
  double mc_stderr_bits = 0.0;
  int ao_iterations = 0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  bool ok = true;  // false rows carry nan rates
  std::string note;
};

std::string record_table_header();
std::string format_record(const RunRecord& r);

/// Writes header + rows, replacing the file.
void write_table(const std::filesystem::path& path, const std::vector<RunRecord>& rows);
/// Appends rows, writing the header first when the file is new or empty.
void append_table(const std::filesystem::path& path, const std::vector<RunRecord>& rows);

double nats_to_bits(double nats);

inline constexpr int kDesignSchemaVersion = 1;

void save_design(const DesignResult& design, const std::filesystem::path& path);
DesignResult load_design(const std::filesystem::path& path);

/// Throws InvariantError when the design does not fit the stats.
void check_design(const ChannelStats& stats, const DesignResult& design);

/// Random subset and Q_k = (p_k/N_k) I, with its DE rate for `mode`.
DesignResult baseline_design(const ChannelStats& stats, Decoding mode, std::uint64_t seed);

DesignResult optimize_design(const ChannelStats& stats, Decoding mode, const AoOptions& options);

/// DE rate of an arbitrary design under `mode`, in nats.
double design_de_rate(const ChannelStats& stats, const DesignResult& design, Decoding mode);

/// Seeds derived from a master seed. Every cell of a sweep uses the same
/// lineage, so rows differ only through the power budget.
struct SeedPlan {
  std::uint64_t stats;
  std::uint64_t baseline_selection;
  std::uint64_t ao_init;
  std::uint64_t monte_carlo;
};
SeedPlan seed_plan(std::uint64_t master);

struct SweepOptions {
  std::vector<double> powers_dbm{0.0, 5.0, 10.0, 15.0, 20.0};
  std::vector<Scheme> schemes{Scheme::proposed, Scheme::baseline};
  std::vector<Decoding> decodings{Decoding::joint, Decoding::independent};
  int mc_samples = 500;
  bool timing = false;  // wall_time_s stays 0 unless set
};

/// Rows in (power, scheme, decoding) order. A failing cell yields a row
/// with ok = false and the sweep moves on.
std::vector<RunRecord> run_sweep(const Scenario& scenario, const SweepOptions& options);

}  // namespace statsel
