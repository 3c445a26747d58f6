#include "vclink/errors.hpp"
#include "vclink/mle.hpp"
#include "vclink/parallel.hpp"
#include "vclink/sim.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace vclink;

TEST_CASE("null data follow the design") {
  const auto c = StudyConfig::standard(2);
  const auto data = testing::null_data(2, 10000, 1);
  double n0 = 0, nh = 0, n1 = 0;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(4, 4);
  for (const auto& f : data.families()) {
    n0 += f.pi == 0.0;
    nh += f.pi == 0.5;
    n1 += f.pi == 1.0;
    S += f.y * f.y.transpose();
  }
  const double n = static_cast<double>(data.size());
  CHECK(std::abs(n0 / n - 0.25) < 0.02);
  CHECK(std::abs(nh / n - 0.5) < 0.02);
  CHECK(std::abs(n1 / n - 0.25) < 0.02);
  S /= n;
  const auto sigma = assemble_sigma(Eigen::Vector2d::Zero(), SymMatrix::from_dense(c.G), SymMatrix::from_dense(c.E), 0.5, 0.25).dense();
  CHECK((S - sigma).cwiseAbs().maxCoeff() < 0.03);
  CHECK(std::abs(S(2, 0) - 0.2) < 0.03);
}

TEST_CASE("study config validation") {
  auto c = StudyConfig::standard(2);
  CHECK_NOTHROW(c.validate());
  c.G(0, 1) = c.G(1, 0) = 0.9;
  CHECK_THROWS_AS(c.validate(), NumericDomainError);
  c = StudyConfig::standard(2);
  c.piLaw = {{0.0, 0.3}, {1.0, 0.3}};
  CHECK_THROWS_AS(c.validate(), StructuralError);
  c = StudyConfig::standard(2);
  c.nReplicates = 0;
  CHECK_THROWS_AS(c.validate(), StructuralError);
}

TEST_CASE("study is reproducible and independent of the thread count") {
  auto c = StudyConfig::standard(2);
  c.nReplicates = 24;
  c.nFamilies = 200;
  c.seed = 5;
  const auto serial = run_null_study_serial(c);
  set_threads(3);
  const auto par = run_null_study(c);
  set_threads(1);
  REQUIRE(par.replicates.size() == 24);
  for (std::size_t r = 0; r < 24; ++r) {
    CHECK(par.replicates[r].lambda == serial.replicates[r].lambda);
    CHECK(par.replicates[r].nu == serial.replicates[r].nu);
    CHECK(par.replicates[r].replicate == static_cast<int>(r));
  }
  double total = 0.0;
  for (double p : par.mixing) total += p;
  CHECK(total == doctest::Approx(1.0));
  CHECK(par.mixing[1] == 0.0);
  CHECK(par.nFailed == 0);
}

TEST_CASE("nuisance sweep") {
  RngStream rng(1);
  const auto G = testing::random_spd(3, rng), E = testing::random_spd(3, rng);
  const auto s = rescale_nuisance(G, E, 0.4);
  CHECK((correlation(s.G) - correlation(G)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((correlation(s.E) - correlation(E)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(rescale_nuisance(G, E, 1.0), StructuralError);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream r(seed);
    const auto sets = nuisance_sweep(2, 0.4, 100, 5, r);
    REQUIRE(sets.size() == 5);
    for (const auto& ns : sets) {
      CHECK(ns.G(0, 0) == 0.4);
      CHECK(ns.G(1, 1) == 0.4);
      CHECK(ns.E(0, 0) == 0.6);
      CHECK(ns.G.llt().info() == Eigen::Success);
      CHECK(ns.E.llt().info() == Eigen::Success);
    }
  }
  RngStream r(3);
  CHECK_THROWS_AS(nuisance_sweep(2, 0.4, 3, 5, r), StructuralError);
}

TEST_CASE("permutation baseline") {
  const auto data = testing::null_data(2, 200, 9);
  const OptimizerSettings s;
  const auto perm = permutation_baseline(data, 6, 3, s);
  REQUIRE(perm.size() == 6);
  CHECK(perm[0] == lrt(data, s).lambda);
  for (double l : perm) CHECK(l >= 0.0);
}

TEST_CASE("bootstrap replicates keep the families' pi") {
  const auto data = testing::null_data(2, 200, 10);
  const auto nullFit = fit(data, Restriction::null(), OptimizerSettings{});
  const auto rep = bootstrap_replicate(data, nullFit.params, 4, 2);
  REQUIRE(rep.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(rep[i].pi == data[i].pi);
    CHECK(rep[i].y != data[i].y);
  }
  const auto boot = bootstrap_baseline(data, 3, 4, OptimizerSettings{});
  REQUIRE(boot.size() == 3);
  for (double l : boot) CHECK(l >= 0.0);
}
