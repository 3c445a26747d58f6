#include "vclink/errors.hpp"
#include "vclink/nulldist.hpp"
#include "vclink/parallel.hpp"
#include "vclink/sim.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace vclink;

namespace {

NullSample sample_of(std::vector<double> lambdas, int k = 2) {
  NullSample s;
  s.k = k;
  for (double l : lambdas) s.draws.push_back({l, l > 0.0 ? k : 0});
  return s;
}

double binomial(int n, int r) {
  double c = 1.0;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

}  // namespace

TEST_CASE("binomial chi-square mixture reproduces the reference critical values") {
  const double crit01[] = {7.289, 8.746, 10.019, 11.183};
  const double crit05[] = {4.231, 5.435, 6.498, 7.480};
  for (int k = 2; k <= 5; ++k) {
    const auto w = binom_mixture_weights(k);
    REQUIRE(static_cast<int>(w.size()) == k + 1);
    double sum = 0.0;
    for (int r = 0; r <= k; ++r) {
      CHECK(w[static_cast<std::size_t>(r)] == doctest::Approx(binomial(k, r) / std::pow(2.0, k)));
      sum += w[static_cast<std::size_t>(r)];
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(std::abs(binom_mixture_critical(k, 0.01) - crit01[k - 2]) < 0.001);
    CHECK(std::abs(binom_mixture_critical(k, 0.05) - crit05[k - 2]) < 0.001);
    CHECK(binom_mixture_tail(k, binom_mixture_critical(k, 0.05)) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(binom_mixture_cdf(k, 3.0) + binom_mixture_tail(k, 3.0) == doctest::Approx(1.0));
  }
  CHECK(std::abs(binom_mixture_tail(5, 14.0) - 0.002849) < 1e-5);
  CHECK(binom_mixture_cdf(2, 0.0) == doctest::Approx(0.25));
}

TEST_CASE("p value and critical value conventions") {
  std::vector<double> l;
  for (int i = 1; i <= 100; ++i) l.push_back(i);
  const auto s = sample_of(l);
  CHECK(pvalue(s, 96.0).value == doctest::Approx(0.05));
  CHECK(pvalue(s, 96.5).value == doctest::Approx(0.04));
  CHECK(pvalue(s, 0.0).value == 1.0);
  CHECK(pvalue(s, 96.0, true).value == doctest::Approx(6.0 / 101.0));
  CHECK(pvalue(s, 500.0).belowResolution);
  CHECK_FALSE(pvalue(s, 50.0).belowResolution);
  const auto c = critical_value(s, 0.05);
  CHECK(c.value == 96.0);
  CHECK(c.lowResolution);  // N * alpha = 5
  CHECK(critical_value(s, 0.5).value == 51.0);
  CHECK_FALSE(critical_value(s, 0.5).lowResolution);

  // A tie group straddling the threshold: the critical value jumps past it.
  const auto t = sample_of({1, 2, 3, 4, 5, 5, 5, 5, 5, 5});
  CHECK(critical_value(t, 0.3).value == 5.0);
  CHECK(pvalue(t, 5.0).value == doctest::Approx(0.6));
}

TEST_CASE("mixing probabilities") {
  const auto s = sample_of({0, 0, 0, 1, 2});
  const auto mp = mixing_probs(s);
  REQUIRE(mp.size() == 3);
  CHECK(mp[0] == doctest::Approx(0.6));
  CHECK(mp[1] == 0.0);
  CHECK(mp[2] == doctest::Approx(0.4));
}

TEST_CASE("generate is reproducible and independent of the thread count") {
  const auto c = StudyConfig::standard(2);
  const auto V = known_parameter_v(c.G, c.E);
  const auto serial = generate_serial(V, 600, 77);
  set_threads(4);
  const auto par = generate(V, 600, 77);
  set_threads(1);
  const auto one = generate(V, 600, 77);
  REQUIRE(par.size() == 600);
  for (std::size_t j = 0; j < 600; ++j) {
    CHECK(par.draws[j].lambda == serial.draws[j].lambda);
    CHECK(par.draws[j].nu == serial.draws[j].nu);
    CHECK(one.draws[j].lambda == serial.draws[j].lambda);
  }
  const auto other = generate(V, 600, 78);
  CHECK(other.draws[0].lambda != serial.draws[0].lambda);
  // Draw j only depends on (seed, j).
  const auto prefix = generate(V, 100, 77);
  for (std::size_t j = 0; j < 100; ++j) CHECK(prefix.draws[j].lambda == serial.draws[j].lambda);
}

TEST_CASE("k = 1 generator gives the 50:50 mixture of chi-square 0 and 1") {
  const VMatrix V{1, Eigen::MatrixXd::Constant(1, 1, 3.7)};
  const auto s = generate(V, 4000, 5);
  auto l = s.lambdas();
  std::sort(l.begin(), l.end());
  auto cdf = [](double x) { return x < 0 ? 0.0 : 0.5 + 0.5 * chisq_cdf(1, x); };
  auto left = [](double x) { return x <= 0 ? 0.0 : 0.5 + 0.5 * chisq_cdf(1, x); };
  CHECK(ks_test(l, cdf, left).p > 0.01);
  const auto mp = mixing_probs(s);
  CHECK(std::abs(mp[0] - 0.5) < 0.03);
}

TEST_CASE("intermediate nu never appears for k = 2 and 3") {
  for (int k : {2, 3}) {
    const auto c = StudyConfig::standard(k);
    const auto s = generate(known_parameter_v(c.G, c.E), 1500, 100 + static_cast<std::uint64_t>(k));
    const auto mp = mixing_probs(s);
    for (int nu = 1; nu < k; ++nu) CHECK(mp[static_cast<std::size_t>(nu)] == 0.0);
    CHECK(mp[0] > 0.0);
  }
}

TEST_CASE("null_observation has covariance V") {
  RngStream rng(1);
  const Eigen::MatrixXd V = testing::random_spd(3, rng);
  const Eigen::MatrixXd L = V.llt().matrixL();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(3, 3);
  const int n = 20000;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd z = null_observation(L, 9, static_cast<std::size_t>(j));
    S += z * z.transpose();
  }
  CHECK(((S / n) - V).cwiseAbs().maxCoeff() < 0.05 * V.cwiseAbs().maxCoeff());
  CHECK(null_observation(L, 9, 5) == null_observation(L, 9, 5));
}
