#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "statsel/rate_eval.hpp"

using namespace statsel;
using namespace testing_support;

namespace {

// Direct transcription of log det(I + sigma^-2 sum_k S H_k Q_k H_k^H S^H).
double rate_ref(const ChannelSample& h, const CovarianceSet& q, const std::vector<int>& rows, double noise,
                int skip = -1) {
  const int l = static_cast<int>(rows.size());
  CMatrix m = CMatrix::Identity(l, l);
  for (std::size_t k = 0; k < h.channels.size(); ++k) {
    if (static_cast<int>(k) == skip) continue;
    CMatrix sh(l, h.channels[k].cols());
    for (int i = 0; i < l; ++i) sh.row(i) = h.channels[k].row(rows[i]);
    m += sh * q.per_user[k] * sh.adjoint() / noise;
  }
  return logdet_ref(m);
}

}  // namespace

TEST_SUITE("rate-eval") {

TEST_CASE("selection vector") {
  const auto s = SelectionVector::from_indices(6, {4, 1, 2});
  CHECK(s.indices() == std::vector<int>{1, 2, 4});
  CHECK(s.mask() == std::vector<int>{0, 1, 1, 0, 1, 0});
  CHECK(SelectionVector::from_mask(s.mask()) == s);
  CHECK(s.contains(4));
  CHECK_FALSE(s.contains(0));
  CHECK_THROWS_AS(SelectionVector::from_indices(3, {0, 0}), InvariantError);
  CHECK_THROWS_AS(SelectionVector::from_indices(3, {3}), InvariantError);
  CHECK_THROWS_AS(SelectionVector::from_indices(3, {-1}), InvariantError);

  const auto r = random_selection(32, 8, 4);
  CHECK(r.size() == 8);
  CHECK(r == random_selection(32, 8, 4));
  CHECK_FALSE(r == random_selection(32, 8, 5));
}

TEST_CASE("random selection covers antennas evenly") {
  std::vector<int> hits(10, 0);
  for (int t = 0; t < 5000; ++t) {
    const auto s = random_selection(10, 3, 100 + t);
    for (int n : s.indices()) ++hits[n];
  }
  for (int h : hits) CHECK(std::fabs(h - 1500.0) < 150.0);
}

TEST_CASE("covariance validation") {
  CovarianceSet q;
  q.per_user.push_back(CMatrix::Identity(2, 2));
  CHECK_NOTHROW(validate_covariances(q, {2}, {2.0}));
  CHECK_THROWS_AS(validate_covariances(q, {2}, {1.5}), InvariantError);
  CHECK_THROWS_AS(validate_covariances(q, {3}, {2.0}), InvariantError);
  q.per_user[0](0, 0) = -0.1;
  CHECK_THROWS_AS(validate_covariances(q, {2}, {2.0}), InvariantError);
  q.per_user[0] = CMatrix::Identity(2, 2);
  q.per_user[0](0, 1) = cdouble(0.0, 0.3);
  CHECK_THROWS_AS(validate_covariances(q, {2}, {2.0}), InvariantError);
}

TEST_CASE("instant rate examples") {
  SUBCASE("zero covariance") {
    const auto st = generate_stats(small_config(6, 3, {2, 2}), 1);
    const auto h = sample_channel(st, 2);
    CovarianceSet q;
    q.per_user.assign(2, CMatrix::Zero(2, 2));
    const auto s = random_selection(6, 3, 1);
    CHECK(instant_rate_joint(h, q, s, 1.0) == 0.0);
  }
  SUBCASE("scalar ln 2") {
    ChannelSample h;
    h.channels.push_back(CMatrix::Ones(1, 1));
    CovarianceSet q;
    q.per_user.push_back(CMatrix::Ones(1, 1));
    CHECK(instant_rate_joint(h, q, SelectionVector::from_indices(1, {0}), 1.0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }
}

TEST_CASE("rate kernels against a direct transcription") {
  CounterRng rng(31);
  const auto c = small_config(8, 3, {2, 3, 1}, 0.3);
  for (int t = 0; t < 20; ++t) {
    const auto st = generate_stats(c, 40 + t);
    const auto s = random_selection(8, 3, 60 + t);
    CovarianceSet q;
    for (int nk : c.user_antennas) q.per_user.push_back(random_covariance(rng, nk, 1.0));
    const auto h = sample_channel(st, 80 + t);
    const double ref = rate_ref(h, q, s.indices(), c.noise_power);
    CHECK(std::fabs(instant_rate_joint(h, q, s, c.noise_power) - ref) <= 1e-10);
    CHECK(std::fabs(instant_rate_joint_masked(h, q, s, c.noise_power) - ref) <= 1e-10);
    for (int k = 0; k < 3; ++k) {
      const double ref_k = rate_ref(h, q, s.indices(), c.noise_power, k);
      CHECK(std::fabs(instant_rate_without_k(h, q, s, c.noise_power, k) - ref_k) <= 1e-10);
    }
  }
}

TEST_CASE("rate without k") {
  CounterRng rng(32);
  const auto c = small_config(5, 2, {2, 2});
  const auto st = generate_stats(c, 3);
  const auto h = sample_channel(st, 4);
  const auto s = random_selection(5, 2, 5);

  SUBCASE("K = 1 gives zero") {
    ChannelSample h1;
    h1.channels.push_back(h.channels[0]);
    CovarianceSet q1;
    q1.per_user.push_back(random_covariance(rng, 2, 1.0));
    CHECK(instant_rate_without_k(h1, q1, s, 1.0, 0) == 0.0);
  }
  SUBCASE("excluding a silent user changes nothing") {
    CovarianceSet q;
    q.per_user.push_back(random_covariance(rng, 2, 1.0));
    q.per_user.push_back(CMatrix::Zero(2, 2));
    CHECK(instant_rate_without_k(h, q, s, 1.0, 1) == doctest::Approx(instant_rate_joint(h, q, s, 1.0)));
  }
  SUBCASE("equals the rate of the reduced user set") {
    CovarianceSet q;
    q.per_user.push_back(random_covariance(rng, 2, 1.0));
    q.per_user.push_back(random_covariance(rng, 2, 1.0));
    ChannelSample h1;
    h1.channels.push_back(h.channels[0]);
    CovarianceSet q1;
    q1.per_user.push_back(q.per_user[0]);
    CHECK(std::fabs(instant_rate_without_k(h, q, s, 1.0, 1) - instant_rate_joint(h1, q1, s, 1.0)) <= 1e-12);
  }
  SUBCASE("range check") {
    CovarianceSet q;
    q.per_user.assign(2, CMatrix::Identity(2, 2) * 0.5);
    CHECK_THROWS_AS(instant_rate_without_k(h, q, s, 1.0, 2), std::out_of_range);
  }
}

TEST_CASE("subadditivity and monotonicity per realization") {
  CounterRng rng(33);
  const auto c = small_config(8, 4, {2, 2, 2}, 0.5);
  for (int t = 0; t < 20; ++t) {
    const auto st = generate_stats(c, 200 + t);
    const auto s = random_selection(8, 4, 300 + t);
    const auto h = sample_channel(st, 400 + t);
    CovarianceSet q;
    for (int nk : c.user_antennas) q.per_user.push_back(random_covariance(rng, nk, 1.0));
    const double joint = instant_rate_joint(h, q, s, c.noise_power);
    double indep = 0.0;
    for (int k = 0; k < 3; ++k) indep += joint - instant_rate_without_k(h, q, s, c.noise_power, k);
    CHECK(indep <= joint + 1e-10);

    auto bigger = q;
    bigger.per_user[t % 3] += 0.1 * CMatrix::Identity(2, 2);
    CHECK(instant_rate_joint(h, bigger, s, c.noise_power) >= joint);
  }
}

TEST_CASE("Monte-Carlo estimator") {
  SUBCASE("zero power") {
    auto c = small_config(6, 2, {2, 2});
    c.power_budgets = {0.0, 0.0};
    const auto st = generate_stats(c, 1);
    const auto q = isotropic_covariances(c);
    const auto r = mc_sum_rate(st, q, random_selection(6, 2, 1), Decoding::independent, 50, 3);
    CHECK(r.mean == 0.0);
    CHECK(r.std_error == 0.0);
  }
  SUBCASE("single user: modes agree sample by sample") {
    const auto c = small_config(6, 3, {2});
    const auto st = generate_stats(c, 2);
    const auto q = isotropic_covariances(c);
    const auto s = random_selection(6, 3, 2);
    CHECK(mc_rate_samples(st, q, s, Decoding::joint, 100, 4) ==
          mc_rate_samples(st, q, s, Decoding::independent, 100, 4));
  }
  SUBCASE("SISO mean against e E1(1)") {
    const auto c = small_config(1, 1, {1});
    const auto st = iid_stats(c);
    const auto q = isotropic_covariances(c);
    const auto r = mc_sum_rate(st, q, SelectionVector::from_indices(1, {0}), Decoding::joint, 100000, 5);
    // e E1(1), tabulated.
    const double ref = 0.5963473623231940;
    CHECK(std::fabs(r.mean - ref) <= 3.0 * r.std_error);
  }
  SUBCASE("standard error scales as 1/sqrt(n)") {
    const auto c = desk_config();
    const auto st = generate_stats(c, 3);
    const auto q = isotropic_covariances(c);
    const auto s = random_selection(32, 8, 3);
    const auto a = mc_sum_rate(st, q, s, Decoding::joint, 200, 6);
    const auto b = mc_sum_rate(st, q, s, Decoding::joint, 800, 7);
    CHECK(std::fabs(a.std_error / b.std_error - 2.0) <= 0.3 * 2.0);
  }
  SUBCASE("one sample has zero standard error") {
    const auto c = desk_config();
    const auto st = generate_stats(c, 3);
    const auto r = mc_sum_rate(st, isotropic_covariances(c), random_selection(32, 8, 3), Decoding::joint, 1, 1);
    CHECK(r.n_samples == 1);
    CHECK(r.std_error == 0.0);
  }
  SUBCASE("mean of independent below mean of joint") {
    const auto c = desk_config();
    const auto st = generate_stats(c, 4);
    const auto q = isotropic_covariances(c);
    const auto s = random_selection(32, 8, 4);
    CHECK(mc_sum_rate(st, q, s, Decoding::independent, 100, 8).mean <=
          mc_sum_rate(st, q, s, Decoding::joint, 100, 8).mean + 1e-10);
  }
  SUBCASE("rejects n = 0") {
    const auto c = small_config(2, 1, {1});
    CHECK_THROWS(mc_sum_rate(iid_stats(c), isotropic_covariances(c), SelectionVector::from_indices(2, {0}),
                             Decoding::joint, 0, 1));
  }
}

}  // TEST_SUITE
