#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "statsel/det_equiv.hpp"
#include "statsel/linalg.hpp"
#include "statsel/opt_joint.hpp"

using namespace statsel;
using namespace testing_support;

namespace {

double subset_logdet_ref(const CMatrix& b, const std::vector<int>& idx) {
  const int l = static_cast<int>(idx.size());
  CMatrix m = CMatrix::Identity(l, l);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) m(i, j) += b(idx[i], idx[j]);
  return logdet_ref(m);
}

}  // namespace

TEST_SUITE("opt-joint") {

TEST_CASE("water-filling examples") {
  RVector xi(2);
  xi << 4.0, 1.0;
  auto r = waterfill(xi, 1.0);
  CHECK(r.power(0) == doctest::Approx(0.875).epsilon(1e-14));
  CHECK(r.power(1) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(r.water_level == doctest::Approx(1.125).epsilon(1e-14));

  RVector same = RVector::Constant(2, 3.7);
  r = waterfill(same, 2.0);
  CHECK(r.power(0) == doctest::Approx(1.0));
  CHECK(r.power(1) == doctest::Approx(1.0));

  RVector one = RVector::Constant(1, 2.0);
  CHECK(waterfill(one, 3.0).power(0) == doctest::Approx(3.0));

  r = waterfill(RVector::Zero(4), 2.0);
  CHECK(r.degenerate);
  CHECK((r.power.array() == 0.5).all());

  RVector weak(3);
  weak << 1.0, 0.0, 1e-3;
  r = waterfill(weak, 0.5);
  CHECK(r.power(1) == 0.0);
  CHECK(r.power(2) == 0.0);
  CHECK(r.power(0) == doctest::Approx(0.5));

  CHECK(waterfill(xi, 0.0).power.sum() == 0.0);
  CHECK_THROWS(waterfill(xi, -1.0));
}

TEST_CASE("water-filling KKT on random draws") {
  CounterRng rng(41);
  for (int t = 0; t < 1000; ++t) {
    const int m = 1 + static_cast<int>(rng.below(8));
    RVector g(m);
    for (int i = 0; i < m; ++i) g(i) = rng.uniform() < 0.1 ? 0.0 : 10.0 * rng.exponential();
    if (g.maxCoeff() == 0.0) g(0) = 1.0;
    const double budget = 10.0 * rng.uniform();
    const auto r = waterfill(g, budget);
    CHECK(std::fabs(r.power.sum() - budget) <= 1e-9);
    for (int i = 0; i < m; ++i) {
      CHECK(r.power(i) >= 0.0);
      if (r.power(i) > 0.0) {
        CHECK(std::fabs(r.water_level - 1.0 / g(i) - r.power(i)) <= 1e-9 * std::max(1.0, r.water_level));
      } else if (g(i) > 0.0) {
        CHECK(r.water_level <= 1.0 / g(i) + 1e-9 * std::max(1.0, r.water_level));
      }
    }
  }
}

TEST_CASE("hypothetical channel matrix") {
  const auto c = small_config(5, 2, {2, 3}, 0.5);
  SUBCASE("zero psi") {
    const auto st = generate_stats(c, 1);
    std::vector<RVector> psi{RVector::Zero(2), RVector::Zero(3)};
    CHECK(build_B_joint(st, psi, c.noise_power).norm() == 0.0);
  }
  SUBCASE("single user with identity basis is diagonal") {
    const auto c1 = small_config(4, 2, {2}, 0.5);
    auto st = iid_stats(c1);
    st.users[0].coupling_power << 1, 2, 3, 4, 5, 6, 7, 8;
    RVector psi(2);
    psi << 0.3, 0.7;
    const CMatrix b = build_B_joint(st, {psi}, 0.5);
    const RVector ref = st.users[0].coupling_power * psi / 0.5;
    CHECK((b.diagonal().real() - ref).norm() <= 1e-14);
    CHECK((b - CMatrix(b.diagonal().asDiagonal())).norm() == 0.0);
  }
  SUBCASE("random instance is PSD") {
    const auto st = generate_stats(c, 2);
    std::vector<RVector> psi{RVector::Constant(2, 0.4), RVector::Constant(3, 0.2)};
    const CMatrix b = build_B_joint(st, psi, c.noise_power);
    CHECK(linalg::is_hermitian(b, 1e-12));
    CHECK(linalg::min_eigenvalue(b) >= -1e-10);
  }
}

TEST_CASE("rank-one update") {
  CMatrix g = CMatrix::Identity(2, 2);
  CVector e1 = CVector::Zero(2);
  e1(0) = 1.0;
  const CMatrix r = rank1_update(g, e1);
  CHECK(std::abs(r(0, 0) - 0.5) <= 1e-15);
  CHECK(std::abs(r(1, 1) - 1.0) <= 1e-15);
  CHECK(std::abs(r(0, 1)) <= 1e-15);

  CounterRng rng(42);
  const CMatrix m = random_psd(rng, 6, 6) + CMatrix::Identity(6, 6);
  const CMatrix gi = m.inverse();
  CHECK((rank1_update(gi, CVector::Zero(6)) - gi).norm() <= 1e-15);
  const CVector b = gaussian(rng, 6, 1);
  CHECK((rank1_update(gi, b) - (m + b * b.adjoint()).inverse()).norm() <= 1e-10);
}

TEST_CASE("greedy selection examples") {
  CMatrix root = CMatrix::Zero(3, 3);
  root(0, 0) = 2.0;
  root(1, 1) = 1.0;
  const CMatrix b = root * root;
  const auto g = greedy_search(b, 2);
  CHECK(g.selection.indices() == std::vector<int>{0, 1});
  CHECK(g.objective == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  CHECK(greedy_select(b, 3).indices() == std::vector<int>{0, 1, 2});
  CHECK(greedy_select(CMatrix::Zero(6, 6), 3).indices() == std::vector<int>{0, 1, 2});
  CHECK(greedy_select(b, 0).size() == 0);
}

TEST_CASE("greedy bookkeeping matches direct recomputation") {
  CounterRng rng(43);
  for (int t = 0; t < 20; ++t) {
    const int n = 6 + static_cast<int>(rng.below(7));
    const int l = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const CMatrix b = random_psd(rng, n, 1 + static_cast<int>(rng.below(4)));
    const auto g = greedy_search(b, l);
    REQUIRE(g.selection.size() == l);
    std::vector<int> picked;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.order.size(); ++i) {
      picked.push_back(g.order[i]);
      acc += g.increments[i];
      CHECK(std::fabs(acc - subset_logdet_ref(b, picked)) <= 1e-9);
    }
    CHECK(std::fabs(g.objective - selection_objective(b, g.selection)) <= 1e-9);
    CHECK(std::fabs(selection_objective(b, g.selection) - subset_logdet_ref(b, g.selection.indices())) <= 1e-10);
  }
}

TEST_CASE("greedy is at least 95% of the exhaustive optimum for small N") {
  CounterRng rng(44);
  for (int t = 0; t < 50; ++t) {
    const int n = 8 + static_cast<int>(rng.below(5));
    const int l = 2 + static_cast<int>(rng.below(3));
    const CMatrix b = random_psd(rng, n, 3);
    double best = 0.0;
    std::vector<int> idx(l);
    // Enumerate subsets through bitmasks.
    for (int mask = 0; mask < (1 << n); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) != l) continue;
      idx.clear();
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) idx.push_back(i);
      best = std::max(best, subset_logdet_ref(b, idx));
    }
    CHECK(selection_objective(b, greedy_select(b, l)) >= 0.95 * best);
  }
}

TEST_CASE("joint alternating optimisation") {
  SUBCASE("zero budget") {
    auto c = desk_config();
    c.power_budgets.assign(4, 0.0);
    const auto st = generate_stats(c, 1);
    const auto r = ao_optimize_joint(st);
    CHECK(r.de_rate == 0.0);
    CHECK(r.converged);
    CHECK(r.ao_iterations == 1);
  }
  SUBCASE("small instance beats its random starting point") {
    SystemConfig c = small_config(8, 3, {2, 2}, dbm_to_watts(-120.0), dbm_to_watts(10.0));
    c.path_gains.assign(2, db_to_linear(-120.0));
    for (int t = 0; t < 5; ++t) {
      const auto st = generate_stats(c, 70 + t);
      const auto s0 = random_selection(8, 3, 80 + t);
      const auto p0 = uniform_power(c);
      const auto fp0 = solve_fp_joint(st, p0, s0, c.noise_power, 1e-10, 2000);
      const double base = de_rate_joint(st, p0, s0, c.noise_power, fp0);
      AoOptions o = default_ao_options(st);
      o.initial_selection = s0;
      const auto r = ao_optimize_joint(st, o);
      CHECK(r.de_rate >= base);
      CHECK(r.rate_trace.front() == doctest::Approx(base).epsilon(1e-12));
    }
  }
  SUBCASE("desk instances converge with a non-decreasing trace") {
    const auto c = desk_config();
    for (int t = 0; t < 3; ++t) {
      const auto st = generate_stats(c, 90 + t);
      const auto r = ao_optimize_joint(st);
      CHECK(r.converged);
      CHECK_FALSE(r.fp_failed);
      CHECK(r.ao_iterations <= 10);
      for (std::size_t i = 1; i < r.rate_trace.size(); ++i)
        CHECK(r.rate_trace[i] >= r.rate_trace[i - 1] - 10 * c.controls.fp_tol);
      const auto n = r.rate_trace.size();
      REQUIRE(n >= 2);
      CHECK(std::fabs(r.rate_trace[n - 1] - r.rate_trace[n - 2]) <= c.controls.ao_tol * r.rate_trace[n - 2]);
      CHECK(r.de_rate == r.rate_trace.back());
      CHECK(r.selection.size() == c.num_rf_chains);
      for (int k = 0; k < 4; ++k) CHECK(r.power.per_user[k].sum() == doctest::Approx(c.power_budgets[k]));

      // The reported rate is reproducible from the returned design.
      const auto fp = solve_fp_joint(st, r.power, r.selection, c.noise_power, 1e-10, 2000);
      CHECK(de_rate_joint(st, r.power, r.selection, c.noise_power, fp) == doctest::Approx(r.de_rate).epsilon(1e-9));
    }
  }
}

}  // TEST_SUITE
