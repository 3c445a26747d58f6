#include "vclink/errors.hpp"
#include "vclink/mle.hpp"
#include "vclink/sim.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <vector>

using namespace vclink;

namespace {

Dataset scaled(const Dataset& d, int trait, double c) {
  std::vector<FamilyObservation> fams = d.families();
  for (auto& f : fams) {
    f.y(trait) *= c;
    f.y(trait + d.k()) *= c;
  }
  return Dataset(d.k(), std::move(fams));
}

Dataset swapped(const Dataset& d, int i, int j) {
  std::vector<FamilyObservation> fams = d.families();
  for (auto& f : fams) {
    std::swap(f.y(i), f.y(j));
    std::swap(f.y(i + d.k()), f.y(j + d.k()));
  }
  return Dataset(d.k(), std::move(fams));
}

}  // namespace

TEST_CASE("optimizer settings validation") {
  OptimizerSettings s;
  CHECK_NOTHROW(s.validate());
  s.nStarts = 0;
  CHECK_THROWS_AS(s.validate(), StructuralError);
  s = {};
  s.epsLL = -1.0;
  CHECK_THROWS_AS(s.validate(), StructuralError);
}

TEST_CASE("classify_nu counts loadings whose removal costs likelihood") {
  const std::vector<double> partial{-100.0, -101.0};
  CHECK(classify_nu(-100.0, partial, 1e-9) == 1);
  CHECK(classify_nu(-100.0, std::vector<double>{-100.0, -100.0}, 1e-9) == 0);
  CHECK(classify_nu(-100.0, std::vector<double>{-100.5, -101.0}, 1e-9) == 2);
  CHECK(classify_nu(-100.0, std::vector<double>{-100.0 - 1e-12, -100.0}, 1e-9) == 0);
}

TEST_CASE("restricted fits pin the loadings") {
  const auto data = testing::null_data(2, 300, 31);
  const OptimizerSettings s;
  const auto n = fit(data, Restriction::null(), s);
  CHECK(n.params.a.isZero(0.0));
  CHECK(n.converged);
  const auto p = fit(data, Restriction::partial(1), s);
  CHECK(p.params.a(1) == 0.0);
  CHECK(p.loglik >= n.loglik - 1e-9);
  const auto f = fit(data, Restriction::full(), s, {n.params, {p.params}});
  CHECK(f.loglik >= p.loglik - 1e-9);
}

TEST_CASE("fit rejects datasets too small to identify the model") {
  const auto data = testing::null_data(2, 2, 1);
  CHECK_THROWS_AS(fit(data, Restriction::full(), OptimizerSettings{}), StructuralError);
}

TEST_CASE("null MLE beats the truth") {
  const auto data = testing::null_data(2, 400, 32);
  const auto c = StudyConfig::standard(2);
  const auto truth = ComponentParams::from_covariances(Eigen::Vector2d::Zero(), c.G, c.E, Eigen::Vector2d::Zero());
  CHECK(fit(data, Restriction::null(), OptimizerSettings{}).loglik >= loglik(data, truth));
}

TEST_CASE("full fit recovers a major-gene effect") {
  const auto c = StudyConfig::standard(2);
  const Eigen::Vector2d a(0.6, 0.4);
  const auto truth = ComponentParams::from_covariances(a, c.G, c.E, Eigen::Vector2d(1.0, -1.0));
  RngStream rng(33);
  const auto data = simulate_dataset(truth, 3000, c.piLaw, rng);
  const auto t = lrt(data, OptimizerSettings{});
  CHECK(t.lambda > 50.0);
  CHECK(t.nu == 2);
  CHECK((t.fullFit.params.a - a).cwiseAbs().maxCoeff() < 0.2);
  CHECK((t.fullFit.params.mu - truth.mu).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("lrt properties on null data") {
  for (std::uint64_t seed : {41, 42, 43, 44}) {
    const auto data = testing::null_data(2, 300, seed);
    const auto t = lrt(data, OptimizerSettings{});
    CHECK(t.lambda >= 0.0);
    CHECK((t.nu == 0 || t.nu == 2));
    CHECK(t.fullFit.loglik >= t.partialFits[0].loglik - 1e-9);
    CHECK(t.fullFit.loglik >= t.partialFits[1].loglik - 1e-9);
    CHECK(t.partialFits[0].loglik >= t.nullFit.loglik - 1e-9);
    if (t.nu == 0) CHECK(t.lambda < 1e-6);
  }
}

TEST_CASE("lrt is deterministic and equivariant") {
  const auto data = testing::null_data(2, 400, 45);
  const OptimizerSettings s;
  const auto t = lrt(data, s);
  const auto again = lrt(data, s);
  CHECK(again.lambda == t.lambda);
  CHECK(again.nu == t.nu);
  const auto sc = lrt(scaled(data, 0, 3.0), s);
  CHECK(sc.lambda == doctest::Approx(t.lambda).epsilon(1e-5));
  CHECK(sc.nu == t.nu);
  const auto sw = lrt(swapped(data, 0, 1), s);
  CHECK(sw.lambda == doctest::Approx(t.lambda).epsilon(1e-6));
  CHECK(sw.nu == t.nu);
}

TEST_CASE("k = 1 reduces the partial fit to the null fit") {
  const auto data = testing::null_data(1, 300, 46);
  const auto t = lrt(data, OptimizerSettings{});
  REQUIRE(t.partialFits.size() == 1);
  CHECK(t.partialFits[0].loglik == t.nullFit.loglik);
  CHECK(t.nu == (t.fullFit.loglik - t.nullFit.loglik > OptimizerSettings{}.epsLL ? 1 : 0));
}
