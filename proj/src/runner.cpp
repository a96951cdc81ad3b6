#include "statsel/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "json_io.hpp"
#include "statsel/det_equiv.hpp"
#include "statsel/opt_indep.hpp"
#include "statsel/rate_eval.hpp"
#include "statsel/rng.hpp"

namespace statsel {

using detail::json;

Scenario load_scenario(const std::filesystem::path& path) {
  const auto doc = detail::read_json_file(path);
  Scenario sc;
  sc.config = detail::config_from_json(doc);
  try {
    sc.id = doc.value("scenario_id", path.stem().string());
  } catch (const json::exception& e) {
    throw IoError("config " + path.string() + ": " + e.what());
  }
  if (sc.id.empty() || sc.id.find_first_of(",\n\r\"") != std::string::npos) {
    throw IoError("config " + path.string() + ": scenario_id must be non-empty without commas or quotes");
  }
  return sc;
}

const char* to_string(Scheme s) { return s == Scheme::proposed ? "proposed" : "baseline"; }

double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

std::string record_table_header() {
  return "scenario_id,decoding,scheme,p_dbm,de_rate_bits,mc_rate_bits,mc_stderr_bits,ao_iterations,"
         "wall_time_s,seed";
}

std::string format_record(const RunRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%s,%.12g,%.12g,%.12g,%.12g,%d,%.12g,%llu", r.scenario_id.c_str(),
                to_string(r.decoding), to_string(r.scheme), r.p_dbm, r.de_rate_bits, r.mc_rate_bits,
                r.mc_stderr_bits, r.ao_iterations, r.wall_time_s, static_cast<unsigned long long>(r.seed));
  return buf;
}

namespace {

std::string table_body(const std::vector<RunRecord>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += format_record(r);
    out += '\n';
  }
  return out;
}

}  // namespace

void write_table(const std::filesystem::path& path, const std::vector<RunRecord>& rows) {
  detail::write_text_file(path, record_table_header() + "\n" + table_body(rows));
}

void append_table(const std::filesystem::path& path, const std::vector<RunRecord>& rows) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for appending");
  if (fresh) out << record_table_header() << '\n';
  out << table_body(rows);
  if (!out) throw IoError("write failed: " + path.string());
}

void save_design(const DesignResult& d, const std::filesystem::path& path) {
  json j;
  j["schema_version"] = kDesignSchemaVersion;
  j["decoding"] = to_string(d.decoding);
  j["num_antennas"] = d.selection.num_antennas();
  j["selection"] = d.selection.indices();
  json cov = json::array();
  for (const auto& q : d.covariances.per_user) cov.push_back(detail::complex_matrix_to_json(q));
  j["covariances"] = cov;
  json pw = json::array();
  for (const auto& p : d.power.per_user) pw.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  j["eigen_powers"] = pw;
  j["de_rate_nats"] = d.de_rate;
  j["rate_trace_nats"] = d.rate_trace;
  j["ao_iterations"] = d.ao_iterations;
  j["converged"] = d.converged;
  j["fp_failed"] = d.fp_failed;
  detail::write_text_file(path, j.dump(1) + "\n");
}

DesignResult load_design(const std::filesystem::path& path) {
  const auto doc = detail::read_json_file(path);
  if (!doc.is_object() || doc.value("schema_version", -1) != kDesignSchemaVersion) {
    throw IoError("design file " + path.string() + ": missing or unsupported schema_version");
  }
  DesignResult d;
  try {
    const auto mode = doc.at("decoding").get<std::string>();
    if (mode != "joint" && mode != "independent") throw IoError("design file: unknown decoding '" + mode + "'");
    d.decoding = mode == "joint" ? Decoding::joint : Decoding::independent;
    d.selection = SelectionVector::from_indices(doc.at("num_antennas").get<int>(),
                                                doc.at("selection").get<std::vector<int>>());
    for (const auto& q : doc.at("covariances")) {
      d.covariances.per_user.push_back(detail::complex_matrix_from_json(q, "covariance"));
    }
    for (const auto& p : doc.at("eigen_powers")) {
      const auto v = p.get<std::vector<double>>();
      d.power.per_user.push_back(Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    d.de_rate = doc.at("de_rate_nats").get<double>();
    d.rate_trace = doc.at("rate_trace_nats").get<std::vector<double>>();
    d.ao_iterations = doc.at("ao_iterations").get<int>();
    d.converged = doc.at("converged").get<bool>();
    d.fp_failed = doc.at("fp_failed").get<bool>();
  } catch (const json::exception& e) {
    throw IoError("design file " + path.string() + ": " + e.what());
  }
  return d;
}

void check_design(const ChannelStats& stats, const DesignResult& d) {
  const auto& cfg = stats.config;
  if (d.selection.num_antennas() != cfg.num_antennas || d.selection.size() != cfg.num_rf_chains) {
    throw InvariantError("design: selection does not match N and L of the stats");
  }
  validate_covariances(d.covariances, cfg.user_antennas, cfg.power_budgets);
}

double design_de_rate(const ChannelStats& stats, const DesignResult& d, Decoding mode) {
  const auto& cfg = stats.config;
  const auto& ctl = cfg.controls;
  if (mode == Decoding::joint) {
    // The joint DE needs eigen-powers in the U_T frame.
    PowerAllocation power;
    for (int k = 0; k < cfg.num_users(); ++k) {
      const auto& u = stats.users[static_cast<std::size_t>(k)];
      const CMatrix qt = u.tx_basis.adjoint() * d.covariances.per_user[static_cast<std::size_t>(k)] * u.tx_basis;
      const double off = (qt - CMatrix(qt.diagonal().asDiagonal())).norm();
      if (off > 1e-9 * std::max(1.0, qt.norm())) {
        throw InvariantError("design: covariance of user " + std::to_string(k) +
                             " is not diagonal in its U_T basis");
      }
      power.per_user.push_back(qt.diagonal().real());
    }
    const auto fp = solve_fp_joint(stats, power, d.selection, cfg.noise_power, ctl.fp_tol, ctl.fp_max_iter);
    return de_rate_joint(stats, power, d.selection, cfg.noise_power, fp);
  }
  const auto fp = solve_fp_indep(stats, d.covariances, d.selection, cfg.noise_power, ctl.fp_tol, ctl.fp_max_iter);
  return de_rate_indep(stats, d.covariances, d.selection, cfg.noise_power, fp);
}

DesignResult baseline_design(const ChannelStats& stats, Decoding mode, std::uint64_t seed) {
  const auto& cfg = stats.config;
  DesignResult d;
  d.decoding = mode;
  d.selection = random_selection(cfg.num_antennas, cfg.num_rf_chains, seed);
  d.power = uniform_power(cfg);
  d.covariances = isotropic_covariances(cfg);
  d.converged = true;
  try {
    d.de_rate = design_de_rate(stats, d, mode);
  } catch (const ConvergenceError&) {
    d.fp_failed = true;
    d.converged = false;
  }
  d.rate_trace.push_back(d.de_rate);
  return d;
}

DesignResult optimize_design(const ChannelStats& stats, Decoding mode, const AoOptions& options) {
  return mode == Decoding::joint ? ao_optimize_joint(stats, options) : ao_optimize_indep(stats, options);
}

SeedPlan seed_plan(std::uint64_t master) {
  const CounterRng root(master);
  return {master, root.split(1).key(), root.split(2).key(), root.split(3).key()};
}

std::vector<RunRecord> run_sweep(const Scenario& scenario, const SweepOptions& options) {
  if (options.powers_dbm.empty()) throw InvariantError("sweep: power list is empty");
  if (options.mc_samples < 1) throw InvariantError("sweep: need at least one Monte-Carlo sample");
  const auto seeds = seed_plan(scenario.config.rng_seed);
  const ChannelStats base = generate_stats(scenario.config, seeds.stats);
  const double nan = std::nan("");

  std::vector<RunRecord> rows;
  for (double p : options.powers_dbm) {
    ChannelStats stats = base;
    stats.config.power_budgets.assign(stats.users.size(), dbm_to_watts(p));
    for (Scheme scheme : options.schemes) {
      for (Decoding mode : options.decodings) {
        RunRecord r;
        r.scenario_id = scenario.id;
        r.decoding = mode;
        r.scheme = scheme;
        r.p_dbm = p;
        r.seed = scenario.config.rng_seed;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          DesignResult d;
          if (scheme == Scheme::proposed) {
            AoOptions ao;
            ao.controls = stats.config.controls;
            ao.init_seed = seeds.ao_init;
            d = optimize_design(stats, mode, ao);
          } else {
            d = baseline_design(stats, mode, seeds.baseline_selection);
          }
          if (d.fp_failed) throw ConvergenceError("fixed point did not converge");
          const auto mc = mc_sum_rate(stats, d.covariances, d.selection, mode, options.mc_samples, seeds.monte_carlo);
          r.de_rate_bits = nats_to_bits(d.de_rate);
          r.mc_rate_bits = nats_to_bits(mc.mean);
          r.mc_stderr_bits = nats_to_bits(mc.std_error);
          r.ao_iterations = d.ao_iterations;
          if (!d.converged) r.note = "AO hit the iteration cap";
        } catch (const std::exception& e) {
          r.ok = false;
          r.de_rate_bits = r.mc_rate_bits = r.mc_stderr_bits = nan;
          r.note = e.what();
        }
        if (options.timing) {
          r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        rows.push_back(std::move(r));
      }
    }
  }
  return rows;
}

}  // namespace statsel
