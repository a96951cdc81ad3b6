#include "statsel/opt_joint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "statsel/linalg.hpp"

namespace statsel {

WaterfillResult waterfill(const RVector& gains, double budget) {
  if (!(budget >= 0.0) || !std::isfinite(budget)) throw std::invalid_argument("waterfill: budget must be nonnegative");
  if ((gains.array() < 0.0).any() || !gains.allFinite()) {
    throw std::invalid_argument("waterfill: gains must be finite and nonnegative");
  }
  const Eigen::Index m = gains.size();
  WaterfillResult out;
  out.power = RVector::Zero(m);

  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (gains(i) > 0.0) active.push_back(i);
  }
  if (active.empty()) {
    if (budget > 0.0 && m > 0) {
      out.power.setConstant(budget / static_cast<double>(m));
      out.degenerate = true;
    }
    return out;
  }
  // Strongest streams first: ascending 1/xi.
  std::stable_sort(active.begin(), active.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return gains(a) > gains(b); });

  double inv_sum = 0.0;
  double level = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < active.size(); ++n) {
    const double inv = 1.0 / gains(active[n]);
    const double candidate = (budget + inv_sum + inv) / static_cast<double>(n + 1);
    if (n > 0 && candidate <= inv) break;
    inv_sum += inv;
    level = candidate;
    count = n + 1;
  }
  for (std::size_t n = 0; n < count; ++n) {
    const Eigen::Index i = active[n];
    out.power(i) = std::max(level - 1.0 / gains(i), 0.0);
  }
  // Push the rounding residue back into the water level.
  const double residue = budget - out.power.sum();
  level += residue / static_cast<double>(count);
  for (std::size_t n = 0; n < count; ++n) {
    const Eigen::Index i = active[n];
    out.power(i) = std::max(level - 1.0 / gains(i), 0.0);
  }
  out.water_level = level;
  return out;
}

CMatrix build_B_joint(const ChannelStats& stats, const std::vector<RVector>& psi, double noise_power) {
  std::vector<int> users(stats.users.size());
  std::iota(users.begin(), users.end(), 0);
  return build_selection_matrix(stats, users, psi, noise_power);
}

CMatrix rank1_update(const CMatrix& g, const CVector& b) {
  if (g.rows() != g.cols() || g.rows() != b.size()) throw std::invalid_argument("rank1_update: dimension mismatch");
  const CVector gb = g * b;
  const double denom = 1.0 + b.dot(gb).real();
  const CVector v = gb / std::sqrt(denom);
  CMatrix out = g - v * v.adjoint();
  return 0.5 * (out + out.adjoint());
}

GreedyResult greedy_search(const CMatrix& b, int size) {
  const int n = static_cast<int>(b.rows());
  if (b.rows() != b.cols()) throw std::invalid_argument("greedy_search: B must be square");
  if (size < 0 || size > n) throw std::invalid_argument("greedy_search: L must lie in [0, N]");

  const CMatrix root = linalg::hermitian_sqrt(b);
  CMatrix g = CMatrix::Identity(n, n);
  // quad(c) = b_c^H G b_c, kept current through the rank-one downdates.
  RVector quad = root.colwise().squaredNorm().transpose();
  std::vector<bool> taken(static_cast<std::size_t>(n), false);

  GreedyResult out;
  for (int step = 0; step < size; ++step) {
    int best = -1;
    double best_inc = 0.0;
    for (int c = 0; c < n; ++c) {
      if (taken[static_cast<std::size_t>(c)]) continue;
      const double inc = std::log1p(std::max(quad(c), 0.0));
      if (best < 0 || inc > best_inc + 1e-12 * std::max(1.0, std::fabs(best_inc))) {
        best = c;
        best_inc = inc;
      }
    }
    taken[static_cast<std::size_t>(best)] = true;
    out.order.push_back(best);
    out.increments.push_back(best_inc);
    out.objective += best_inc;

    const CVector gb = g * root.col(best);
    const CVector v = gb / std::sqrt(1.0 + root.col(best).dot(gb).real());
    g -= v * v.adjoint();
    const RVector proj = (v.adjoint() * root).cwiseAbs2().transpose();
    quad -= proj;
  }
  out.selection = SelectionVector::from_indices(n, out.order);
  return out;
}

double selection_objective(const CMatrix& b, const SelectionVector& s) {
  const auto& idx = s.indices();
  const CMatrix sub = b(idx, idx);
  return linalg::logdet_hpd(CMatrix::Identity(sub.rows(), sub.cols()) + 0.5 * (sub + sub.adjoint()));
}

AoOptions default_ao_options(const ChannelStats& stats) {
  AoOptions o;
  o.controls = stats.config.controls;
  o.init_seed = stats.config.rng_seed;
  return o;
}

DesignResult ao_optimize_joint(const ChannelStats& stats, const AoOptions& options) {
  const auto& cfg = stats.config;
  const auto& ctl = options.controls;
  const double noise = cfg.noise_power;

  DesignResult res;
  res.decoding = Decoding::joint;
  SelectionVector s = options.initial_selection
                          ? *options.initial_selection
                          : random_selection(cfg.num_antennas, cfg.num_rf_chains, options.init_seed);
  if (s.size() != cfg.num_rf_chains) throw InvariantError("initial selection must have L antennas");
  PowerAllocation power = uniform_power(cfg);

  auto fp = solve_fp_joint(stats, power, s, noise, ctl.fp_tol, ctl.fp_max_iter);
  res.selection = s;
  res.power = power;
  if (!fp.converged) {
    res.fp_failed = true;
    res.covariances = to_covariances(stats, power);
    return res;
  }
  double rate = de_rate_joint(stats, power, s, noise, fp);
  res.rate_trace.push_back(rate);
  res.de_rate = rate;

  for (int t = 1; t <= ctl.ao_max_iter; ++t) {
    PowerAllocation next_power;
    for (int k = 0; k < cfg.num_users(); ++k) {
      const auto uk = static_cast<std::size_t>(k);
      next_power.per_user.push_back(waterfill(fp.xi[uk], cfg.power_budgets[uk]).power);
    }
    const SelectionVector next_s = greedy_select(build_B_joint(stats, fp.psi, noise), cfg.num_rf_chains);

    SelectionVector cand_s = next_s;
    auto next_fp = solve_fp_joint(stats, next_power, cand_s, noise, ctl.fp_tol, ctl.fp_max_iter);
    double next_rate = next_fp.converged ? de_rate_joint(stats, next_power, cand_s, noise, next_fp) : -1e300;
    if (next_rate < rate && !(cand_s == s)) {
      // Keep the subset and take only the power step.
      auto alt_fp = solve_fp_joint(stats, next_power, s, noise, ctl.fp_tol, ctl.fp_max_iter);
      const double alt_rate = alt_fp.converged ? de_rate_joint(stats, next_power, s, noise, alt_fp) : -1e300;
      if (alt_rate > next_rate) {
        cand_s = s;
        next_fp = std::move(alt_fp);
        next_rate = alt_rate;
      }
    }
    if (!next_fp.converged) {
      res.fp_failed = true;
      break;
    }
    res.ao_iterations = t;
    if (next_rate < rate) {
      // No ascent step left: stay at the current point.
      res.rate_trace.push_back(rate);
      res.converged = true;
      break;
    }
    res.rate_trace.push_back(next_rate);
    res.de_rate = next_rate;
    res.selection = cand_s;
    res.power = next_power;
    const double change = (next_rate - rate) / std::max(std::fabs(rate), 1e-300);
    fp = std::move(next_fp);
    s = cand_s;
    power = std::move(next_power);
    rate = next_rate;
    if (change <= ctl.ao_tol) {
      res.converged = true;
      break;
    }
  }
  res.covariances = to_covariances(stats, res.power);
  return res;
}

DesignResult ao_optimize_joint(const ChannelStats& stats) {
  return ao_optimize_joint(stats, default_ao_options(stats));
}

}  // namespace statsel
