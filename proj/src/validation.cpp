#include "statsel/validation.hpp"

#include <cmath>
#include <stdexcept>

#include "statsel/det_equiv.hpp"
#include "statsel/linalg.hpp"
#include "statsel/opt_indep.hpp"
#include "statsel/rate_eval.hpp"
#include "statsel/rng.hpp"
#include "statsel/scenario.hpp"

namespace statsel {

namespace {

using oracle::OracleReport;

CMatrix gaussian(CounterRng& rng, int rows, int cols) {
  CMatrix a(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) a(r, c) = rng.complex_normal();
  return a;
}

CMatrix random_unitary(CounterRng& rng, int n) {
  Eigen::HouseholderQR<CMatrix> qr(gaussian(rng, n, n));
  return qr.householderQ() * CMatrix::Identity(n, n);
}

ChannelStats scalar_stats(double omega, double lambda, double noise) {
  ChannelStats st;
  st.config.num_antennas = 1;
  st.config.num_rf_chains = 1;
  st.config.user_antennas = {1};
  st.config.noise_power = noise;
  st.config.power_budgets = {lambda};
  st.config.path_gains = {omega};
  UserStats u;
  u.rx_basis = CMatrix::Identity(1, 1);
  u.tx_basis = CMatrix::Identity(1, 1);
  u.coupling_amplitude = RMatrix::Constant(1, 1, std::sqrt(omega));
  u.coupling_power = RMatrix::Constant(1, 1, omega);
  st.users.push_back(u);
  return st;
}

void scalar_checks(std::vector<OracleReport>& out) {
  const double noise = 1.0, omega = 1.0, lambda = 1.0;
  const auto st = scalar_stats(omega, lambda, noise);
  PowerAllocation p;
  p.per_user.push_back(RVector::Constant(1, lambda));
  const auto s = SelectionVector::from_indices(1, {0});
  const auto fp = solve_fp_joint(st, p, s, noise, 1e-14, 1000);
  const auto [g, psi] = oracle::scalar_fp_reference(noise, omega, lambda);
  out.push_back(oracle::make_report("scalar_fp_gamma", "sigma2=omega=lambda=1", g, fp.gamma[0](0), 1e-10, false));
  out.push_back(oracle::make_report("scalar_fp_psi", "sigma2=omega=lambda=1", psi, fp.psi[0](0), 1e-10, false));
  const double xi = omega * g;
  const double ref_rate = std::log1p(xi * lambda) + std::log1p(omega * psi / noise) - g * omega * psi;
  out.push_back(oracle::make_report("scalar_de_rate", "sigma2=omega=lambda=1", ref_rate,
                                    de_rate_joint(st, p, s, noise, fp), 1e-10, false));
  out.push_back(oracle::make_report("siso_rate", "snr=1", std::exp(1.0) * oracle::expint_e1(1.0),
                                    oracle::exact_siso_rate(1.0, 1.0, 1.0), 1e-12, true));
}

void waterfill_checks(std::vector<OracleReport>& out) {
  RVector xi(2);
  xi << 4.0, 1.0;
  const auto wf = waterfill(xi, 1.0);
  out.push_back(oracle::make_report("waterfill_hand", "xi=[4,1],p=1,m=0", 0.875, wf.power(0), 1e-12, false));
  out.push_back(oracle::make_report("waterfill_hand", "xi=[4,1],p=1,m=1", 0.125, wf.power(1), 1e-12, false));
  CounterRng rng(11);
  for (int t = 0; t < 20; ++t) {
    const int m = 1 + static_cast<int>(rng.below(6));
    RVector g(m);
    for (int i = 0; i < m; ++i) g(i) = rng.exponential();
    const double budget = 0.1 + 5.0 * rng.uniform();
    const auto r = waterfill(g, budget);
    out.push_back(oracle::make_report("waterfill_budget", "draw " + std::to_string(t), budget, r.power.sum(),
                                      1e-9, true));
  }
}

void woodbury_checks(std::vector<OracleReport>& out) {
  CounterRng rng(12);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + static_cast<int>(rng.below(15));
    const CMatrix a = gaussian(rng, n, n);
    const CMatrix m = a * a.adjoint() + CMatrix::Identity(n, n);
    const CMatrix g = oracle::dense_inverse(m);
    const CVector b = gaussian(rng, n, 1);
    const CMatrix ref = oracle::dense_inverse(m + b * b.adjoint());
    out.push_back(oracle::make_report("rank1_update", "n=" + std::to_string(n) + " draw " + std::to_string(t),
                                      0.0, (rank1_update(g, b) - ref).norm(), 1e-10, false));
  }
}

// B matrices as they arise inside the optimisers: from the fixed point of a
// small scenario with a random subset.
void greedy_checks(std::vector<OracleReport>& out) {
  SystemConfig c;
  c.num_antennas = 10;
  c.num_rf_chains = 3;
  c.user_antennas = {2, 2};
  c.noise_power = dbm_to_watts(-120.0);
  c.power_budgets.assign(2, dbm_to_watts(10.0));
  c.path_gains.assign(2, db_to_linear(-120.0));
  const int users = c.num_users();
  for (int t = 0; t < 5; ++t) {
    const auto stats = generate_stats(c, 3000 + t);
    const auto s = random_selection(c.num_antennas, c.num_rf_chains, 4000 + t);
    const auto power = uniform_power(c);
    const auto fpj = solve_fp_joint(stats, power, s, c.noise_power, 1e-10, 2000);
    const CMatrix bj = build_B_joint(stats, fpj.psi, c.noise_power);
    const auto joint_best = oracle::exhaustive_select(
        [&](std::span<const int> sub) { return oracle::subset_logdet(bj, sub); }, c.num_antennas, c.num_rf_chains);
    const auto g = greedy_search(bj, c.num_rf_chains);
    out.push_back(oracle::make_bound_report("greedy_joint_ratio", "trial " + std::to_string(t),
                                            0.95 * joint_best.value, oracle::subset_logdet(bj, g.selection.indices())));

    const auto fpi = solve_fp_indep(stats, to_covariances(stats, power), s, c.noise_power, 1e-10, 2000);
    const CMatrix b_hat = build_B_hat(stats, fpi, c.noise_power);
    const auto b_bars = build_B_bars(stats, fpi, c.noise_power);
    auto indep_value = [&](std::span<const int> sub) {
      double v = users * oracle::subset_logdet(b_hat, sub);
      for (const auto& bb : b_bars) v -= oracle::subset_logdet(bb, sub);
      return v;
    };
    const auto indep_best = oracle::exhaustive_select(indep_value, c.num_antennas, c.num_rf_chains);
    const auto gi = greedy_select_indep(b_hat, b_bars, c.num_rf_chains, users);
    out.push_back(oracle::make_bound_report("greedy_indep_ratio", "trial " + std::to_string(t),
                                            0.95 * indep_best.value, indep_value(gi.greedy.selection.indices())));
  }
}

void relaxed_checks(std::vector<OracleReport>& out) {
  CounterRng rng(14);
  for (int dim : {2, 4}) {
    for (int t = 0; t < 3; ++t) {
      const CMatrix u = random_unitary(rng, dim);
      RVector xi(dim), delta(dim);
      for (int i = 0; i < dim; ++i) {
        xi(i) = 0.2 + 3.0 * rng.uniform();
        delta(i) = 0.5 * rng.uniform();
      }
      const CMatrix xi_hat = linalg::congruence_diag(u, xi);
      const CMatrix dm = linalg::congruence_diag(u, delta);
      const double budget = 0.5 + 2.0 * rng.uniform();
      const int users = 3;
      const auto sol = solve_relaxed(xi_hat, dm, budget, users);
      const CMatrix pg = oracle::pg_solve_relaxed(xi_hat, dm, budget, users, 1e-12);
      out.push_back(oracle::make_report("relaxed_vs_pg", std::to_string(dim) + "x" + std::to_string(dim) + " draw " +
                                            std::to_string(t),
                                        oracle::relaxed_objective(xi_hat, dm, pg, users),
                                        oracle::relaxed_objective(xi_hat, dm, sol.q, users), 1e-5, false));
    }
  }
}

void sylvester_checks(std::vector<OracleReport>& out) {
  SystemConfig c;
  c.num_antennas = 8;
  c.num_rf_chains = 3;
  c.user_antennas = {2, 2};
  c.noise_power = 0.1;
  c.power_budgets = {1.0, 1.0};
  c.path_gains = {1.0, 1.0};
  CounterRng rng(15);
  for (int t = 0; t < 10; ++t) {
    const auto stats = generate_stats(c, 500 + t);
    const auto s = random_selection(c.num_antennas, c.num_rf_chains, 600 + t);
    CovarianceSet q;
    for (int nk : c.user_antennas) {
      const CMatrix a = gaussian(rng, nk, nk);
      const CMatrix m = a * a.adjoint();
      q.per_user.push_back(m / m.trace().real());
    }
    const auto h = sample_channel(stats, 700 + t);
    out.push_back(oracle::make_report("sylvester", "draw " + std::to_string(t),
                                      instant_rate_joint_masked(h, q, s, c.noise_power),
                                      instant_rate_joint(h, q, s, c.noise_power), 1e-10, false));
  }
}

}  // namespace

std::vector<oracle::OracleReport> run_kernel_suite() {
  std::vector<OracleReport> out;
  scalar_checks(out);
  waterfill_checks(out);
  woodbury_checks(out);
  greedy_checks(out);
  relaxed_checks(out);
  sylvester_checks(out);
  return out;
}

std::vector<oracle::OracleReport> run_de_accuracy_suite(const DeAccuracyOptions& options) {
  std::vector<OracleReport> out;
  const SystemConfig c = desk_config();
  for (int i = 0; i < options.instances; ++i) {
    const auto stats = generate_stats(c, 1000 + static_cast<std::uint64_t>(i));
    const auto s = random_selection(c.num_antennas, c.num_rf_chains, 77 + static_cast<std::uint64_t>(i));
    const auto power = uniform_power(c);
    const auto q = to_covariances(stats, power);
    const auto& ctl = c.controls;
    const std::string tag = "desk " + std::to_string(i);

    const auto fpj = solve_fp_joint(stats, power, s, c.noise_power, ctl.fp_tol, ctl.fp_max_iter);
    const double dj = de_rate_joint(stats, power, s, c.noise_power, fpj);
    const auto mj = mc_sum_rate(stats, q, s, Decoding::joint, options.mc_samples, 5);
    out.push_back(oracle::make_report("de_accuracy_joint", tag, mj.mean, dj, options.tolerance, true));

    const auto fpi = solve_fp_indep(stats, q, s, c.noise_power, ctl.fp_tol, ctl.fp_max_iter);
    const double di = de_rate_indep(stats, q, s, c.noise_power, fpi);
    const auto mi = mc_sum_rate(stats, q, s, Decoding::independent, options.mc_samples, 5);
    out.push_back(oracle::make_report("de_accuracy_indep", tag, mi.mean, di, options.tolerance, true));
  }
  return out;
}

std::vector<oracle::OracleReport> run_suite(const std::string& name) {
  if (name == "kernels") return run_kernel_suite();
  if (name == "de-accuracy") return run_de_accuracy_suite();
  if (name == "all") {
    auto out = run_kernel_suite();
    auto de = run_de_accuracy_suite();
    out.insert(out.end(), de.begin(), de.end());
    return out;
  }
  throw std::invalid_argument("unknown suite '" + name + "' (kernels, de-accuracy, all)");
}

bool all_pass(const std::vector<oracle::OracleReport>& reports) {
  for (const auto& r : reports)
    if (!r.pass) return false;
  return true;
}

}  // namespace statsel
