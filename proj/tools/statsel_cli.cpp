// statsel: scenario generation, design optimisation, Monte-Carlo evaluation,
// power sweeps and the validation suites.
//
// Exit status: 0 success, 1 validation or convergence failure, 2 usage or I/O error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "statsel/rate_eval.hpp"
#include "statsel/runner.hpp"
#include "statsel/scenario.hpp"
#include "statsel/validation.hpp"

using namespace statsel;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

Decoding parse_decoding(const std::string& s) {
  return s == "joint" ? Decoding::joint : Decoding::independent;
}

double budget_dbm(const SystemConfig& c) { return watts_to_dbm(c.power_budgets.front()); }

void emit(const std::vector<RunRecord>& rows, const std::string& table, bool append) {
  if (table.empty()) {
    std::cout << record_table_header() << '\n';
    for (const auto& r : rows) std::cout << format_record(r) << '\n';
  } else if (append) {
    append_table(table, rows);
  } else {
    write_table(table, rows);
  }
}

struct GenArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

int cmd_gen(const GenArgs& a) {
  const auto sc = load_scenario(a.config);
  const std::uint64_t seed = a.seed.value_or(sc.config.rng_seed);
  auto stats = generate_stats(sc.config, seed_plan(seed).stats);
  stats.config.rng_seed = seed;
  save_stats(stats, a.out);
  return 0;
}

struct OptimizeArgs {
  std::string stats, out, table, decoding = "joint", scheme = "proposed", scenario_id;
  std::optional<std::uint64_t> seed;
  int samples = 0;
};

int cmd_optimize(const OptimizeArgs& a) {
  const auto stats = load_stats(a.stats);
  const Decoding mode = parse_decoding(a.decoding);
  const auto seeds = seed_plan(a.seed.value_or(stats.config.rng_seed));
  DesignResult d;
  if (a.scheme == "baseline") {
    d = baseline_design(stats, mode, seeds.baseline_selection);
  } else {
    AoOptions ao;
    ao.controls = stats.config.controls;
    ao.init_seed = seeds.ao_init;
    d = optimize_design(stats, mode, ao);
  }
  save_design(d, a.out);

  RunRecord r;
  r.scenario_id = a.scenario_id.empty() ? std::filesystem::path(a.stats).stem().string() : a.scenario_id;
  r.decoding = mode;
  r.scheme = a.scheme == "baseline" ? Scheme::baseline : Scheme::proposed;
  r.p_dbm = budget_dbm(stats.config);
  r.de_rate_bits = nats_to_bits(d.de_rate);
  r.ao_iterations = d.ao_iterations;
  r.seed = seeds.stats;
  r.mc_rate_bits = r.mc_stderr_bits = std::nan("");
  if (a.samples > 0 && !d.fp_failed) {
    const auto mc = mc_sum_rate(stats, d.covariances, d.selection, mode, a.samples, seeds.monte_carlo);
    r.mc_rate_bits = nats_to_bits(mc.mean);
    r.mc_stderr_bits = nats_to_bits(mc.std_error);
  }
  emit({r}, a.table, true);
  if (d.fp_failed) {
    std::cerr << "statsel: fixed point did not converge; design is the last good iterate\n";
    return kExitFail;
  }
  if (!d.converged) std::cerr << "statsel: warning: AO stopped at the iteration cap\n";
  return 0;
}

struct EvaluateArgs {
  std::string stats, design, table, decoding, scenario_id;
  int samples = 1000;
  std::optional<std::uint64_t> seed;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto stats = load_stats(a.stats);
  const auto d = load_design(a.design);
  check_design(stats, d);
  const Decoding mode = a.decoding.empty() ? d.decoding : parse_decoding(a.decoding);
  const std::uint64_t seed = a.seed.value_or(stats.config.rng_seed);
  const auto mc = mc_sum_rate(stats, d.covariances, d.selection, mode, a.samples, seed_plan(seed).monte_carlo);
  if (a.samples == 1) std::cerr << "statsel: warning: single sample, stderr reported as 0 (low confidence)\n";

  RunRecord r;
  r.scenario_id = a.scenario_id.empty() ? std::filesystem::path(a.stats).stem().string() : a.scenario_id;
  r.decoding = mode;
  r.scheme = d.ao_iterations > 0 ? Scheme::proposed : Scheme::baseline;
  r.p_dbm = budget_dbm(stats.config);
  r.de_rate_bits = nats_to_bits(design_de_rate(stats, d, mode));
  r.mc_rate_bits = nats_to_bits(mc.mean);
  r.mc_stderr_bits = nats_to_bits(mc.std_error);
  r.ao_iterations = d.ao_iterations;
  r.seed = seed;
  emit({r}, a.table, true);
  return 0;
}

struct SweepArgs {
  std::string config, out, decoding = "both";
  std::vector<double> powers{0.0, 5.0, 10.0, 15.0, 20.0};
  std::vector<std::string> schemes{"proposed", "baseline"};
  int samples = 500;
  bool timing = false;
};

int cmd_sweep(const SweepArgs& a) {
  const auto sc = load_scenario(a.config);
  SweepOptions o;
  o.powers_dbm = a.powers;
  o.schemes.clear();
  for (const auto& s : a.schemes) o.schemes.push_back(s == "baseline" ? Scheme::baseline : Scheme::proposed);
  if (a.decoding == "joint") o.decodings = {Decoding::joint};
  if (a.decoding == "indep") o.decodings = {Decoding::independent};
  o.mc_samples = a.samples;
  o.timing = a.timing;
  const auto rows = run_sweep(sc, o);
  emit(rows, a.out, false);
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.ok || !r.note.empty()) {
      std::cerr << "statsel: " << to_string(r.scheme) << "/" << to_string(r.decoding) << " at " << r.p_dbm
                << " dBm: " << r.note << '\n';
    }
    if (!r.ok) ++failed;
  }
  return failed ? kExitFail : 0;
}

struct ValidateArgs {
  std::string suite = "all", out;
};

int cmd_validate(const ValidateArgs& a) {
  const auto reports = run_suite(a.suite);
  std::string text = oracle::report_table_header();
  for (const auto& r : reports) text += oracle::format_report_row(r);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    std::FILE* f = std::fopen(a.out.c_str(), "wb");
    if (!f) throw IoError("cannot open " + a.out);
    std::fputs(text.c_str(), f);
    std::fclose(f);
  }
  int failed = 0;
  for (const auto& r : reports) failed += r.pass ? 0 : 1;
  std::cerr << "statsel: " << reports.size() - static_cast<std::size_t>(failed) << "/" << reports.size()
            << " checks passed\n";
  return failed ? kExitFail : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical-CSI receive antenna selection and uplink precoding"};
  app.require_subcommand(1);
  const std::vector<std::string> decodings{"joint", "indep"};
  const std::vector<std::string> schemes{"proposed", "baseline"};

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate channel statistics from a config");
  g->add_option("config", gen.config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  g->add_option("-o,--out", gen.out, "Output stats file")->required();
  g->add_option("--seed", gen.seed, "Override the config rng_seed");

  OptimizeArgs opt;
  auto* o = app.add_subcommand("optimize", "Run the alternating optimisation on a stats file");
  o->add_option("stats", opt.stats, "Stats file")->required()->check(CLI::ExistingFile);
  o->add_option("--decoding", opt.decoding, "joint or indep")->check(CLI::IsMember(decodings));
  o->add_option("--scheme", opt.scheme, "proposed or baseline")->check(CLI::IsMember(schemes));
  o->add_option("-o,--out", opt.out, "Output design file")->required();
  o->add_option("--table", opt.table, "Append the run record to this CSV table");
  o->add_option("--samples", opt.samples, "Monte-Carlo samples for the record (0 skips)")->check(CLI::NonNegativeNumber);
  o->add_option("--seed", opt.seed, "Master seed (defaults to the stats rng_seed)");
  o->add_option("--scenario-id", opt.scenario_id, "Scenario id written to the record");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Monte-Carlo evaluation of a design");
  e->add_option("stats", ev.stats, "Stats file")->required()->check(CLI::ExistingFile);
  e->add_option("design", ev.design, "Design file")->required()->check(CLI::ExistingFile);
  e->add_option("-n,--samples", ev.samples, "Monte-Carlo samples")->check(CLI::PositiveNumber);
  e->add_option("--seed", ev.seed, "Master seed (defaults to the stats rng_seed)");
  e->add_option("--decoding", ev.decoding, "joint or indep (defaults to the design's)")->check(CLI::IsMember(decodings));
  e->add_option("--table", ev.table, "Append the run record to this CSV table");
  e->add_option("--scenario-id", ev.scenario_id, "Scenario id written to the record");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Sum-rate versus power budget");
  s->add_option("config", sw.config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  s->add_option("--p-dbm", sw.powers, "Power budgets in dBm")->delimiter(',')->expected(1, -1)->check(CLI::Number);
  s->add_option("--schemes", sw.schemes, "proposed,baseline")->delimiter(',')->check(CLI::IsMember(schemes));
  s->add_option("--decoding", sw.decoding, "joint, indep or both")->check(CLI::IsMember({"joint", "indep", "both"}));
  s->add_option("-n,--samples", sw.samples, "Monte-Carlo samples per cell")->check(CLI::PositiveNumber);
  s->add_option("-o,--out", sw.out, "Output CSV table (stdout when omitted)");
  s->add_flag("--timing", sw.timing, "Record wall-clock time per cell (makes tables non-reproducible)");

  ValidateArgs va;
  auto* v = app.add_subcommand("validate", "Run oracle checks");
  v->add_option("--suite", va.suite, "kernels, de-accuracy or all")
      ->check(CLI::IsMember({"kernels", "de-accuracy", "all"}));
  v->add_option("-o,--out", va.out, "Write the report table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*o) return cmd_optimize(opt);
    if (*e) return cmd_evaluate(ev);
    if (*s) return cmd_sweep(sw);
    if (*v) return cmd_validate(va);
  } catch (const IoError& err) {
    std::cerr << "statsel: " << err.what() << '\n';
    return kExitUsage;
  } catch (const InvariantError& err) {
    std::cerr << "statsel: invalid input: " << err.what() << '\n';
    return kExitUsage;
  } catch (const ConvergenceError& err) {
    std::cerr << "statsel: " << err.what() << '\n';
    return kExitFail;
  } catch (const std::exception& err) {
    std::cerr << "statsel: error: " << err.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
