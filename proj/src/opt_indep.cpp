#include "statsel/opt_indep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "statsel/linalg.hpp"

namespace statsel {

namespace {

// Mixing weight for the joint diagonalisation of two commuting matrices.
constexpr double kPencilWeight = 0.7548776662466927;

double relaxed_objective_powers(const RVector& xi, const RVector& delta, const RVector& q, int k_users) {
  double f = 0.0;
  for (Eigen::Index m = 0; m < q.size(); ++m) f += k_users * std::log1p(xi(m) * q(m)) - delta(m) * q(m);
  return f;
}

RVector powers_at(const RVector& xi, const RVector& delta, double mu, int k_users) {
  RVector q = RVector::Zero(xi.size());
  for (Eigen::Index m = 0; m < xi.size(); ++m) {
    if (xi(m) > 0.0) q(m) = std::max(k_users / (mu + delta(m)) - 1.0 / xi(m), 0.0);
  }
  return q;
}

double off_diagonal_norm(const CMatrix& m) {
  return (m - CMatrix(m.diagonal().asDiagonal())).norm();
}

}  // namespace

double mm_objective(const CMatrix& q, const CMatrix& xi_hat, const std::vector<CMatrix>& xi_bars,
                    int num_users) {
  linalg::require_hermitian_psd(q, "mm_objective: Q");
  double f = num_users * linalg::logdet_i_plus_product(xi_hat, q);
  for (const auto& xb : xi_bars) f -= linalg::logdet_i_plus_product(xb, q);
  return f;
}

CMatrix mm_linearize(const CMatrix& q_ref, const std::vector<CMatrix>& xi_bars) {
  const Eigen::Index n = q_ref.rows();
  CMatrix delta = CMatrix::Zero(n, n);
  for (const auto& xb : xi_bars) {
    const CMatrix root = linalg::hermitian_sqrt(xb);
    const CMatrix inner = CMatrix::Identity(n, n) + root * q_ref * root;
    delta += root * linalg::inverse_hpd(inner) * root;
  }
  return 0.5 * (delta + delta.adjoint());
}

RVector solve_relaxed_powers(const RVector& xi_hat, const RVector& delta_in, double budget, int num_users,
                             double* multiplier) {
  if (xi_hat.size() != delta_in.size()) throw std::invalid_argument("solve_relaxed: dimension mismatch");
  if (!(budget >= 0.0)) throw std::invalid_argument("solve_relaxed: budget must be nonnegative");
  if (num_users < 1) throw std::invalid_argument("solve_relaxed: K must be positive");
  if ((xi_hat.array() < -1e-12 * std::max(1.0, xi_hat.cwiseAbs().maxCoeff())).any()) {
    throw InvariantError("solve_relaxed: XiHat must be PSD");
  }
  const RVector xi = xi_hat.cwiseMax(0.0);
  const RVector delta = delta_in.cwiseMax(0.0);
  const double k_users = num_users;

  double mu = 0.0;
  bool bounded_at_zero = true;
  for (Eigen::Index m = 0; m < xi.size(); ++m) {
    if (xi(m) > 0.0 && delta(m) <= 0.0) bounded_at_zero = false;
  }
  if (budget == 0.0) {
    if (multiplier) *multiplier = std::max(0.0, (k_users * xi - delta).maxCoeff());
    return RVector::Zero(xi.size());
  }
  if (bounded_at_zero && powers_at(xi, delta, 0.0, num_users).sum() <= budget) {
    if (multiplier) *multiplier = 0.0;
    return powers_at(xi, delta, 0.0, num_users);
  }

  // sum q(mu) is nonincreasing in mu and vanishes once mu >= max K xi_m.
  double lo = 0.0;
  double hi = std::max(k_users * xi.maxCoeff(), 1e-300);
  for (int it = 0; it < 400 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (powers_at(xi, delta, mid, num_users).sum() > budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  mu = 0.5 * (lo + hi);
  // One Newton step on the active set absorbs the bisection residue.
  RVector q = powers_at(xi, delta, mu, num_users);
  double slope = 0.0;
  for (Eigen::Index m = 0; m < q.size(); ++m) {
    if (q(m) > 0.0) slope += k_users / ((mu + delta(m)) * (mu + delta(m)));
  }
  if (slope > 0.0) {
    const double stepped = mu + (q.sum() - budget) / slope;
    if (stepped > 0.0) {
      const RVector refined = powers_at(xi, delta, stepped, num_users);
      if (std::fabs(refined.sum() - budget) < std::fabs(q.sum() - budget)) {
        mu = stepped;
        q = refined;
      }
    }
  }
  if (multiplier) *multiplier = mu;
  return q;
}

RelaxedSolution solve_relaxed(const CMatrix& xi_hat, const CMatrix& delta, double budget, int num_users) {
  linalg::require_hermitian_psd(xi_hat, "solve_relaxed: XiHat", 1e-10, 1e-10);
  linalg::require_hermitian_psd(delta, "solve_relaxed: Delta", 1e-10, 1e-10);
  const double xn = xi_hat.norm();
  const double dn = delta.norm();
  CMatrix pencil = CMatrix::Zero(xi_hat.rows(), xi_hat.cols());
  if (xn > 0.0) pencil += xi_hat / xn;
  if (dn > 0.0) pencil += kPencilWeight * delta / dn;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (pencil + pencil.adjoint()));
  const CMatrix& v = eig.eigenvectors();
  const CMatrix xi_v = v.adjoint() * xi_hat * v;
  const CMatrix delta_v = v.adjoint() * delta * v;
  if (off_diagonal_norm(xi_v) > 1e-8 * std::max(xn, 1e-300) ||
      off_diagonal_norm(delta_v) > 1e-8 * std::max(dn, 1e-300)) {
    throw InvariantError("solve_relaxed: XiHat and Delta do not share an eigenbasis");
  }
  const RVector xi = xi_v.diagonal().real();
  const RVector d = delta_v.diagonal().real();
  RelaxedSolution sol;
  const RVector q = solve_relaxed_powers(xi, d, budget, num_users, &sol.multiplier);
  sol.q = linalg::congruence_diag(v, q);
  sol.q = 0.5 * (sol.q + sol.q.adjoint());
  sol.objective = relaxed_objective_powers(xi.cwiseMax(0.0), d.cwiseMax(0.0), q, num_users);
  return sol;
}

MMState mm_update_Q(const ChannelStats& stats, int k, const FixedPointIndep& fp, double budget,
                    const CMatrix& q_init, double tol, int max_iter) {
  const int k_users = stats.num_users();
  if (k < 0 || k >= k_users) throw std::out_of_range("mm_update_Q: user index out of range");
  if (!fp.converged) throw ConvergenceError("mm_update_Q: fixed point did not converge");
  const auto uk = static_cast<std::size_t>(k);
  const CMatrix& u = stats.users[uk].tx_basis;
  linalg::require_hermitian_psd(q_init, "mm_update_Q: Q_init");
  if (q_init.trace().real() > budget + 1e-9) throw InvariantError("mm_update_Q: Q_init exceeds the budget");
  const CMatrix qt = u.adjoint() * q_init * u;
  if (off_diagonal_norm(qt) > 1e-10 * std::max(q_init.norm(), 1e-300)) {
    throw InvariantError("mm_update_Q: Q_init is not diagonal in the transmit eigenbasis");
  }

  const RVector& xi_hat = fp.hat.xi[uk];
  std::vector<RVector> xi_bars;
  for (int j = 0; j < k_users; ++j) {
    if (j != k) xi_bars.push_back(fp.excluding[static_cast<std::size_t>(j)].xi[uk]);
  }
  auto objective = [&](const RVector& q) {
    double f = 0.0;
    for (Eigen::Index m = 0; m < q.size(); ++m) {
      f += k_users * std::log1p(xi_hat(m) * q(m));
      for (const auto& xb : xi_bars) f -= std::log1p(xb(m) * q(m));
    }
    return f;
  };

  MMState st;
  RVector q = qt.diagonal().real().cwiseMax(0.0);
  if (budget == 0.0) q.setZero();
  double f = objective(q);
  st.objective_trace.push_back(f);
  if (budget == 0.0) {
    st.q = CMatrix::Zero(u.rows(), u.cols());
    st.converged = true;
    return st;
  }

  for (int j = 1; j <= max_iter; ++j) {
    RVector delta = RVector::Zero(q.size());
    for (const auto& xb : xi_bars) delta.array() += xb.array() / (1.0 + xb.array() * q.array());
    const RVector next = solve_relaxed_powers(xi_hat, delta, budget, k_users);
    const double f_next = objective(next);
    st.objective_trace.push_back(f_next);
    st.iterations = j;
    const double change = std::fabs(f_next - f) / std::max(std::fabs(f), 1e-300);
    q = next;
    f = f_next;
    // Without an interference term the surrogate is exact: one step suffices.
    if (delta.isZero(0.0) || change <= tol) {
      st.converged = true;
      break;
    }
  }
  st.q = linalg::congruence_diag(u, q);
  st.q = 0.5 * (st.q + st.q.adjoint());
  return st;
}

IndepGreedyResult greedy_select_indep(const CMatrix& b_hat, const std::vector<CMatrix>& b_bars, int size,
                                      int num_users) {
  const int n = static_cast<int>(b_hat.rows());
  if (b_hat.rows() != b_hat.cols()) throw std::invalid_argument("greedy_select_indep: B must be square");
  if (size < 0 || size > n) throw std::invalid_argument("greedy_select_indep: L must lie in [0, N]");
  for (const auto& b : b_bars) {
    if (b.rows() != n || b.cols() != n) throw std::invalid_argument("greedy_select_indep: dimension mismatch");
  }

  struct Tracker {
    CMatrix root;
    CMatrix g;
    RVector quad;
  };
  auto make = [n](const CMatrix& b) {
    Tracker t{linalg::hermitian_sqrt(b), CMatrix::Identity(n, n), RVector()};
    t.quad = t.root.colwise().squaredNorm().transpose();
    return t;
  };
  auto absorb = [](Tracker& t, int c) {
    const CVector gb = t.g * t.root.col(c);
    const CVector v = gb / std::sqrt(1.0 + t.root.col(c).dot(gb).real());
    t.g -= v * v.adjoint();
    t.quad -= (v.adjoint() * t.root).cwiseAbs2().transpose();
  };

  Tracker hat = make(b_hat);
  std::vector<Tracker> bars;
  bars.reserve(b_bars.size());
  for (const auto& b : b_bars) bars.push_back(make(b));
  std::vector<bool> taken(static_cast<std::size_t>(n), false);

  IndepGreedyResult out;
  auto& gr = out.greedy;
  for (int step = 0; step < size; ++step) {
    int best = -1;
    double best_inc = 0.0;
    for (int c = 0; c < n; ++c) {
      if (taken[static_cast<std::size_t>(c)]) continue;
      double inc = num_users * std::log1p(std::max(hat.quad(c), 0.0));
      for (const auto& t : bars) inc -= std::log1p(std::max(t.quad(c), 0.0));
      if (best < 0 || inc > best_inc + 1e-12 * std::max(1.0, std::fabs(best_inc))) {
        best = c;
        best_inc = inc;
      }
    }
    taken[static_cast<std::size_t>(best)] = true;
    gr.order.push_back(best);
    gr.increments.push_back(best_inc);
    gr.objective += best_inc;
    absorb(hat, best);
    for (auto& t : bars) absorb(t, best);
  }
  gr.selection = SelectionVector::from_indices(n, gr.order);
  out.objective = gr.objective;
  return out;
}

double selection_objective_indep(const CMatrix& b_hat, const std::vector<CMatrix>& b_bars,
                                 const SelectionVector& s, int num_users) {
  double f = num_users * selection_objective(b_hat, s);
  for (const auto& b : b_bars) f -= selection_objective(b, s);
  return f;
}

CMatrix build_B_hat(const ChannelStats& stats, const FixedPointIndep& fp, double noise_power) {
  return build_selection_matrix(stats, fp.hat.users, fp.hat.psi, noise_power);
}

std::vector<CMatrix> build_B_bars(const ChannelStats& stats, const FixedPointIndep& fp, double noise_power) {
  std::vector<CMatrix> out;
  for (const auto& bar : fp.excluding) out.push_back(build_selection_matrix(stats, bar.users, bar.psi, noise_power));
  return out;
}

namespace {

PowerAllocation eigen_powers(const ChannelStats& stats, const CovarianceSet& q) {
  PowerAllocation p;
  for (std::size_t k = 0; k < q.per_user.size(); ++k) {
    const CMatrix& u = stats.users[k].tx_basis;
    p.per_user.push_back((u.adjoint() * q.per_user[k] * u).diagonal().real().cwiseMax(0.0));
  }
  return p;
}

}  // namespace

DesignResult ao_optimize_indep(const ChannelStats& stats, const AoOptions& options) {
  const auto& cfg = stats.config;
  const auto& ctl = options.controls;
  const double noise = cfg.noise_power;
  const int k_users = cfg.num_users();

  DesignResult res;
  res.decoding = Decoding::independent;
  SelectionVector s = options.initial_selection
                          ? *options.initial_selection
                          : random_selection(cfg.num_antennas, cfg.num_rf_chains, options.init_seed);
  if (s.size() != cfg.num_rf_chains) throw InvariantError("initial selection must have L antennas");
  CovarianceSet q = isotropic_covariances(cfg);

  auto fp = solve_fp_indep(stats, q, s, noise, ctl.fp_tol, ctl.fp_max_iter);
  res.selection = s;
  res.covariances = q;
  if (!fp.converged) {
    res.fp_failed = true;
    res.power = eigen_powers(stats, q);
    return res;
  }
  double rate = de_rate_indep(stats, q, s, noise, fp);
  res.rate_trace.push_back(rate);
  res.de_rate = rate;

  for (int t = 1; t <= ctl.ao_max_iter; ++t) {
    CovarianceSet next_q;
    for (int k = 0; k < k_users; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      const auto mm = mm_update_Q(stats, k, fp, cfg.power_budgets[uk], q.per_user[uk], ctl.mm_tol, ctl.mm_max_iter);
      next_q.per_user.push_back(mm.q);
    }
    const auto pick = greedy_select_indep(build_B_hat(stats, fp, noise), build_B_bars(stats, fp, noise),
                                          cfg.num_rf_chains, k_users);
    const SelectionVector next_s = pick.greedy.selection;

    SelectionVector cand_s = next_s;
    auto next_fp = solve_fp_indep(stats, next_q, cand_s, noise, ctl.fp_tol, ctl.fp_max_iter);
    double next_rate = next_fp.converged ? de_rate_indep(stats, next_q, cand_s, noise, next_fp) : -1e300;
    if (next_rate < rate && !(cand_s == s)) {
      // Keep the subset and take only the covariance step.
      auto alt_fp = solve_fp_indep(stats, next_q, s, noise, ctl.fp_tol, ctl.fp_max_iter);
      const double alt_rate = alt_fp.converged ? de_rate_indep(stats, next_q, s, noise, alt_fp) : -1e300;
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
    res.covariances = next_q;
    const double change = (next_rate - rate) / std::max(std::fabs(rate), 1e-300);
    fp = std::move(next_fp);
    s = cand_s;
    q = std::move(next_q);
    rate = next_rate;
    if (change <= ctl.ao_tol) {
      res.converged = true;
      break;
    }
  }
  res.power = eigen_powers(stats, res.covariances);
  return res;
}

DesignResult ao_optimize_indep(const ChannelStats& stats) {
  return ao_optimize_indep(stats, default_ao_options(stats));
}

}  // namespace statsel
