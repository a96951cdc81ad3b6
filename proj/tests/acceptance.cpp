// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "statsel/det_equiv.hpp"
#include "statsel/linalg.hpp"
#include "statsel/opt_indep.hpp"
#include "statsel/opt_joint.hpp"
#include "statsel/oracle.hpp"
#include "statsel/rate_eval.hpp"
#include "statsel/runner.hpp"
#include "statsel/validation.hpp"

using namespace statsel;
using namespace testing_support;

namespace {

int failures = 0;

void verdict(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SystemConfig scenario_config(int n, int l, std::vector<int> nk) {
  SystemConfig c = small_config(n, l, std::move(nk), dbm_to_watts(-120.0), dbm_to_watts(10.0));
  c.path_gains.assign(c.user_antennas.size(), db_to_linear(-120.0));
  return c;
}

void de_accuracy() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto reports = run_de_accuracy_suite({5, 2000, 0.03});
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  for (const auto& r : reports) worst = std::max(worst, r.rel_error);
  const bool pass = all_pass(reports) && reports.size() == 10 && elapsed <= 120.0;
  verdict("de-accuracy", pass,
          fmt("5 desk instances x 2 modes, 2000 samples; worst |DE-MC|/MC = %.3f%% (limit 3%%); %.1f s total",
              100.0 * worst, elapsed));
}

void scalar_fixed_point() {
  ChannelStats st = iid_stats(small_config(1, 1, {1}, 1.0, 1.0));
  PowerAllocation p;
  p.per_user.push_back(RVector::Constant(1, 1.0));
  const auto s = SelectionVector::from_indices(1, {0});
  const auto fp = solve_fp_joint(st, p, s, 1.0, 1e-14, 1000);
  const double gamma = fp.gamma[0](0);
  const double psi = fp.psi[0](0);
  const double de = de_rate_joint(st, p, s, 1.0, fp);
  const double siso = oracle::exact_siso_rate(1.0, 1.0, 1.0);
  const double rel_pct = 100.0 * (siso - de) / siso;
  const double golden = 0.6180339887;
  const bool pass = std::fabs(gamma - golden) <= 1e-10 && std::fabs(psi - golden) <= 1e-10 &&
                    std::fabs(de - 0.5804576) <= 1e-6 && std::fabs(siso - 0.5963474) <= 1e-7 &&
                    std::fabs(rel_pct - 2.66) <= 0.1;
  verdict("scalar-fixed-point", pass,
          fmt("gamma=%.12f psi=%.12f DE=%.9f exact=%.9f rel.err=%.3f%%", gamma, psi, de, siso, rel_pct));
}

void water_filling() {
  RVector xi(2);
  xi << 4.0, 1.0;
  const auto hand = waterfill(xi, 1.0);
  bool pass = std::fabs(hand.power(0) - 0.875) <= 1e-12 && std::fabs(hand.power(1) - 0.125) <= 1e-12;
  CounterRng rng(9001);
  double worst_budget = 0.0, worst_kkt = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int m = 1 + static_cast<int>(rng.below(12));
    RVector g(m);
    for (int i = 0; i < m; ++i) g(i) = rng.uniform() < 0.1 ? 0.0 : 10.0 * rng.exponential();
    if (g.maxCoeff() == 0.0) g(0) = 1.0;
    const double budget = 10.0 * rng.uniform();
    const auto r = waterfill(g, budget);
    worst_budget = std::max(worst_budget, std::fabs(r.power.sum() - budget));
    const double scale = std::max(1.0, r.water_level);
    for (int i = 0; i < m; ++i) {
      if (r.power(i) < 0.0) pass = false;
      if (r.power(i) > 0.0) {
        worst_kkt = std::max(worst_kkt, std::fabs(r.water_level - 1.0 / g(i) - r.power(i)) / scale);
      } else if (g(i) > 0.0 && r.water_level > 1.0 / g(i) + 1e-9 * scale) {
        pass = false;
      }
    }
  }
  pass = pass && worst_budget <= 1e-9 && worst_kkt <= 1e-9;
  verdict("water-filling", pass,
          fmt("hand case [%.6f, %.6f]; 1000 draws, max budget error %.2e, max KKT residual %.2e", hand.power(0),
              hand.power(1), worst_budget, worst_kkt));
}

void woodbury() {
  CounterRng rng(9002);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng.below(16));
    const CMatrix m = random_psd(rng, n, n) + CMatrix::Identity(n, n);
    const CMatrix g = oracle::dense_inverse(m);
    const CVector b = gaussian(rng, n, 1);
    worst = std::max(worst, (rank1_update(g, b) - oracle::dense_inverse(m + b * b.adjoint())).norm());
  }
  verdict("woodbury", worst <= 1e-10, fmt("100 instances up to 16x16, max Frobenius error %.2e", worst));
}

void greedy_vs_exhaustive() {
  const auto c = scenario_config(10, 3, {2, 2});
  const int users = c.num_users();
  int joint_ok = 0, joint_hits = 0, indep_ok = 0, indep_hits = 0;
  double joint_worst = 1.0, indep_worst = 1.0;
  for (int t = 0; t < 50; ++t) {
    const auto stats = generate_stats(c, 20000 + t);
    const auto s = random_selection(c.num_antennas, c.num_rf_chains, 21000 + t);
    const auto power = uniform_power(c);

    const auto fpj = solve_fp_joint(stats, power, s, c.noise_power, 1e-10, 2000);
    const CMatrix b = build_B_joint(stats, fpj.psi, c.noise_power);
    const auto best = oracle::exhaustive_select([&](std::span<const int> x) { return oracle::subset_logdet(b, x); },
                                                c.num_antennas, c.num_rf_chains);
    const auto g = greedy_select(b, c.num_rf_chains);
    const double ratio = oracle::subset_logdet(b, g.indices()) / best.value;
    joint_worst = std::min(joint_worst, ratio);
    joint_ok += ratio >= 0.95;
    joint_hits += g.indices() == best.subset;

    const auto fpi = solve_fp_indep(stats, to_covariances(stats, power), s, c.noise_power, 1e-10, 2000);
    const CMatrix b_hat = build_B_hat(stats, fpi, c.noise_power);
    const auto b_bars = build_B_bars(stats, fpi, c.noise_power);
    auto f2 = [&](std::span<const int> x) {
      double v = users * oracle::subset_logdet(b_hat, x);
      for (const auto& bb : b_bars) v -= oracle::subset_logdet(bb, x);
      return v;
    };
    const auto best_i = oracle::exhaustive_select(f2, c.num_antennas, c.num_rf_chains);
    const auto gi = greedy_select_indep(b_hat, b_bars, c.num_rf_chains, users).greedy.selection;
    const double ratio_i = f2(gi.indices()) / best_i.value;
    indep_worst = std::min(indep_worst, ratio_i);
    indep_ok += ratio_i >= 0.95;
    indep_hits += gi.indices() == best_i.subset;
  }
  verdict("greedy-vs-exhaustive", joint_ok == 50 && indep_ok == 50,
          fmt("N=10 L=3, 50 trials; joint worst ratio %.4f, exact hits %d/50; independent worst ratio %.4f, "
              "exact hits %d/50",
              joint_worst, joint_hits, indep_worst, indep_hits));
}

void mm_monotonicity() {
  const auto c = scenario_config(16, 4, {2, 2, 3});
  CounterRng rng(9003);
  int monotone = 0;
  double worst_drop = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto stats = generate_stats(c, 22000 + t);
    const auto s = random_selection(c.num_antennas, c.num_rf_chains, 23000 + t);
    const auto fp = solve_fp_indep(stats, isotropic_covariances(c), s, c.noise_power, 1e-10, 2000);
    const int k = t % c.num_users();
    const int nk = c.user_antennas[k];
    RVector w(nk);
    for (int i = 0; i < nk; ++i) w(i) = 0.05 + rng.uniform();
    w *= c.power_budgets[k] / w.sum();
    const CMatrix q0 = linalg::congruence_diag(stats.users[k].tx_basis, w);
    const auto mm = mm_update_Q(stats, k, fp, c.power_budgets[k], q0, 1e-12, 200);
    double drop = 0.0;
    for (std::size_t i = 1; i < mm.objective_trace.size(); ++i)
      drop = std::max(drop, mm.objective_trace[i - 1] - mm.objective_trace[i]);
    worst_drop = std::max(worst_drop, drop);
    monotone += drop <= 1e-9;
  }

  double worst_gap = 0.0;
  int relaxed = 0;
  for (int dim : {2, 4}) {
    for (int t = 0; t < 5; ++t) {
      const CMatrix u = random_unitary(rng, dim);
      RVector xi(dim), delta(dim);
      for (int i = 0; i < dim; ++i) {
        xi(i) = 0.2 + 3.0 * rng.uniform();
        delta(i) = 0.5 * rng.uniform();
      }
      const CMatrix xi_hat = linalg::congruence_diag(u, xi);
      const CMatrix dm = linalg::congruence_diag(u, delta);
      const double budget = 0.5 + 2.0 * rng.uniform();
      const int users = 2 + static_cast<int>(rng.below(3));
      const auto sol = solve_relaxed(xi_hat, dm, budget, users);
      const CMatrix pg = oracle::pg_solve_relaxed(xi_hat, dm, budget, users, 1e-12);
      worst_gap = std::max(worst_gap, std::fabs(oracle::relaxed_objective(xi_hat, dm, pg, users) -
                                                oracle::relaxed_objective(xi_hat, dm, sol.q, users)));
      ++relaxed;
    }
  }
  verdict("mm-monotonicity", monotone == 50 && worst_gap <= 1e-5,
          fmt("%d/50 traces non-decreasing (worst drop %.2e); relaxed vs projected gradient on %d 2x2/4x4 "
              "instances, max gap %.2e",
              monotone, worst_drop, relaxed, worst_gap));
}

struct InstanceDesigns {
  DesignResult joint, indep;
};

InstanceDesigns optimize_both(const ChannelStats& stats, std::uint64_t master) {
  AoOptions ao = default_ao_options(stats);
  ao.init_seed = seed_plan(master).ao_init;
  return {optimize_design(stats, Decoding::joint, ao), optimize_design(stats, Decoding::independent, ao)};
}

bool ao_converged(const DesignResult& d, double tol) {
  const auto& tr = d.rate_trace;
  if (!d.converged || d.fp_failed || d.ao_iterations > 10 || tr.size() < 2) return false;
  const double prev = tr[tr.size() - 2];
  return std::fabs(tr.back() - prev) <= tol * std::fabs(prev);
}

void ao_behaviour(const std::vector<InstanceDesigns>& extra) {
  const auto c = desk_config();
  const auto stats = generate_stats(c, seed_plan(c.rng_seed).stats);
  const auto d = optimize_both(stats, c.rng_seed);
  const bool conv = ao_converged(d.joint, c.controls.ao_tol) && ao_converged(d.indep, c.controls.ao_tol);
  int dominated = d.joint.de_rate >= d.indep.de_rate;
  for (const auto& e : extra) dominated += e.joint.de_rate >= e.indep.de_rate;
  const int total = 1 + static_cast<int>(extra.size());
  verdict("ao-behaviour", conv && dominated == total,
          fmt("desk default: joint %d iterations (%.3f bits), independent %d iterations (%.3f bits); "
              "joint >= independent on %d/%d instances",
              d.joint.ao_iterations, nats_to_bits(d.joint.de_rate), d.indep.ao_iterations,
              nats_to_bits(d.indep.de_rate), dominated, total));
}

std::vector<InstanceDesigns> proposed_vs_baseline() {
  const int instances = 10;
  const int samples = 2000;
  std::vector<InstanceDesigns> designs;
  bool pass = true;
  std::string detail;
  for (Decoding mode : {Decoding::joint, Decoding::independent}) {
    double prop_sum = 0.0, base_sum = 0.0, prop_var = 0.0, base_var = 0.0;
    for (int i = 0; i < instances; ++i) {
      const std::uint64_t master = 1 + static_cast<std::uint64_t>(i);
      const auto c = desk_config(master);
      const auto plan = seed_plan(master);
      const auto stats = generate_stats(c, plan.stats);
      if (mode == Decoding::joint) designs.push_back(optimize_both(stats, master));
      const auto& prop = mode == Decoding::joint ? designs[i].joint : designs[i].indep;
      const auto base = baseline_design(stats, mode, plan.baseline_selection);
      const auto mp = mc_sum_rate(stats, prop.covariances, prop.selection, mode, samples, plan.monte_carlo);
      const auto mb = mc_sum_rate(stats, base.covariances, base.selection, mode, samples, plan.monte_carlo);
      prop_sum += mp.mean;
      base_sum += mb.mean;
      prop_var += mp.std_error * mp.std_error;
      base_var += mb.std_error * mb.std_error;
    }
    const double prop = prop_sum / instances, base = base_sum / instances;
    const double se = std::sqrt(prop_var + base_var) / instances;
    const double gain = (prop - base) / base;
    const double sigmas = (prop - base) / se;
    pass = pass && gain >= 0.10 && sigmas > 3.0;
    detail += fmt("%s%s: proposed %.3f vs baseline %.3f bits, gain %.2f%% (need 10%%), %.1f combined SE",
                  detail.empty() ? "" : "; ", mode == Decoding::joint ? "joint" : "independent",
                  nats_to_bits(prop), nats_to_bits(base), 100.0 * gain, sigmas);
  }
  verdict("proposed-vs-baseline", pass, "10 desk instances at 10 dBm, 2000 samples; " + detail);
  return designs;
}

void sylvester() {
  CounterRng rng(9004);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 4 + static_cast<int>(rng.below(13));
    const int l = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int k = 1 + static_cast<int>(rng.below(4));
    std::vector<int> nk(k);
    for (auto& x : nk) x = 1 + static_cast<int>(rng.below(3));
    const auto c = small_config(n, l, nk, 0.05 + rng.uniform(), 1.0);
    const auto stats = generate_stats(c, 24000 + t);
    const auto s = random_selection(n, l, 25000 + t);
    CovarianceSet q;
    for (int m : nk) q.per_user.push_back(random_covariance(rng, m, 0.5 + 2.0 * rng.uniform()));
    const auto h = sample_channel(stats, 26000 + t);
    const double a = instant_rate_joint_masked(h, q, s, c.noise_power);
    const double b = instant_rate_joint(h, q, s, c.noise_power);
    worst = std::max(worst, std::fabs(a - b));
  }
  verdict("sylvester", worst <= 1e-10, fmt("100 random instances, max |difference| %.2e nats", worst));
}

std::string sweep_text(const Scenario& sc, const SweepOptions& o) {
  std::string s = record_table_header() + "\n";
  for (const auto& r : run_sweep(sc, o)) s += format_record(r) + "\n";
  return s;
}

void determinism() {
  const Scenario sc{"desk", desk_config()};
  SweepOptions o;
  o.powers_dbm = {0.0, 10.0, 20.0};
  o.mc_samples = 200;
  const auto a = sweep_text(sc, o);
  const auto b = sweep_text(sc, o);
  setenv("STATSEL_THREADS", "1", 1);
  const auto c = sweep_text(sc, o);
  unsetenv("STATSEL_THREADS");
  verdict("determinism", a == b && a == c,
          fmt("3-power desk sweep repeated 3 times (one single-threaded), %zu bytes, identical: %s", a.size(),
              a == b && a == c ? "yes" : "no"));
}

}  // namespace

int main() {
  de_accuracy();
  scalar_fixed_point();
  water_filling();
  woodbury();
  greedy_vs_exhaustive();
  mm_monotonicity();
  const auto designs = proposed_vs_baseline();
  ao_behaviour(designs);
  sylvester();
  determinism();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
