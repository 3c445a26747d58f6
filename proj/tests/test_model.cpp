#include "vclink/errors.hpp"
#include "vclink/likelihood.hpp"
#include "vclink/model.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace vclink;

namespace {

// Gaussian log density written out from the determinant and inverse.
double mvn_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean, const Eigen::MatrixXd& S) {
  const Eigen::VectorXd r = y - mean;
  const double n = static_cast<double>(y.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + std::log(S.determinant()) + r.dot(S.inverse() * r));
}

Eigen::MatrixXd sigma_by_blocks(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G, const Eigen::MatrixXd& E,
                                double pi, double phi) {
  const auto k = A.rows();
  Eigen::MatrixXd S(2 * k, 2 * k);
  S.topLeftCorner(k, k) = S.bottomRightCorner(k, k) = A + G + E;
  S.topRightCorner(k, k) = S.bottomLeftCorner(k, k) = pi * A + 2.0 * phi * G;
  return S;
}

}  // namespace

TEST_CASE("theta ordering puts diagonals first") {
  CHECK(theta_dim(3) == 6);
  CHECK(trait_count_for_theta_dim(6) == 3);
  CHECK(trait_count_for_theta_dim(4) == -1);
  const std::pair<int, int> expected[] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
  for (int t = 0; t < 6; ++t) {
    CHECK(theta_entry(3, t) == expected[t]);
    CHECK(theta_index(3, expected[t].first, expected[t].second) == t);
    CHECK(theta_index(3, expected[t].second, expected[t].first) == t);
  }
  const Eigen::Vector3d a(1.0, 2.0, -3.0);
  const Eigen::VectorXd th = theta_map(a);
  CHECK(th(0) == 1.0);
  CHECK(th(2) == 9.0);
  CHECK(th(3) == 2.0);
  CHECK(th(5) == -6.0);
  CHECK((theta_to_matrix(3, th) - a * a.transpose()).norm() == 0.0);
}

TEST_CASE("assemble_sigma block structure") {
  RngStream rng(2);
  const Eigen::Vector2d a(0.5, -0.2);
  const Eigen::MatrixXd G = testing::random_spd(2, rng), E = testing::random_spd(2, rng);
  for (double pi : {0.0, 0.5, 1.0}) {
    const auto S = assemble_sigma(a, SymMatrix::from_dense(G), SymMatrix::from_dense(E), pi, 0.25).dense();
    CHECK((S - sigma_by_blocks(a * a.transpose(), G, E, pi, 0.25)).cwiseAbs().maxCoeff() < 1e-15);
  }
  // Null model with phi = 1/4: the cross-sib covariance of trait 1 is g11 / 2.
  const auto S0 = assemble_sigma(Eigen::Vector2d::Zero(), SymMatrix::from_dense(G), SymMatrix::from_dense(E), 1.0, 0.25);
  CHECK(S0(2, 0) == doctest::Approx(0.5 * G(0, 0)));
}

TEST_CASE("loglik equals the sum of dense Gaussian log densities") {
  const auto data = testing::null_data(2, 40, 11);
  RngStream rng(4);
  const auto p = ComponentParams::from_covariances(Eigen::Vector2d(0.3, 0.4), testing::random_spd(2, rng),
                                                   testing::random_spd(2, rng), Eigen::Vector2d(0.1, -0.1));
  double ref = 0.0;
  for (const auto& f : data.families()) {
    Eigen::VectorXd mu(4);
    mu << p.mu, p.mu;
    ref += mvn_logpdf(f.y, mu, sigma_by_blocks(p.A(), p.G(), p.E(), f.pi, f.phi));
  }
  CHECK(loglik(data, p) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("loglik reports the failing family") {
  const Dataset data(1, {{0.0, 0.25, Eigen::Vector2d(0.1, 0.2)}, {1.0, 0.25, Eigen::Vector2d(0.3, 0.3)}});
  ComponentParams p;
  p.a = Eigen::VectorXd::Constant(1, 1.0);
  p.gChol = Eigen::MatrixXd::Zero(1, 1);
  p.eChol = Eigen::MatrixXd::Zero(1, 1);
  p.mu = Eigen::VectorXd::Zero(1);
  // G = E = 0 and A = 1 make Sigma singular exactly when pi = 1.
  try {
    loglik(data, p);
    FAIL("expected NumericDomainError");
  } catch (const NumericDomainError& e) {
    REQUIRE(e.index().has_value());
    CHECK(*e.index() == 1);
  }
}

TEST_CASE("dataset validation") {
  FamilyObservation ok{0.5, 0.25, Eigen::VectorXd::Zero(4)};
  CHECK_NOTHROW(Dataset(2, {ok}));
  auto badPi = ok;
  badPi.pi = 1.5;
  CHECK_THROWS_AS(Dataset(2, {ok, badPi}), StructuralError);
  auto badLen = ok;
  badLen.y = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(Dataset(2, {badLen}), StructuralError);
  auto badPhi = ok;
  badPhi.phi = 0.7;
  CHECK_THROWS_AS(Dataset(2, {badPhi}), StructuralError);
}

TEST_CASE("component parameters") {
  Eigen::Matrix2d G;
  G << 0.4, 0.4, 0.4, 0.4;  // singular PSD
  const Eigen::Matrix2d E = Eigen::Matrix2d::Identity();
  const auto p = ComponentParams::from_covariances(Eigen::Vector2d(-1.0, 2.0), G, E, Eigen::Vector2d::Zero());
  CHECK((p.G() - G).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(p.a(0) == 1.0);  // sign normalised
  Eigen::Matrix2d bad;
  bad << 0.4, 0.9, 0.9, 0.4;
  CHECK_THROWS_AS(ComponentParams::from_covariances(Eigen::Vector2d::Zero(), bad, E, Eigen::Vector2d::Zero()),
                  NumericDomainError);
}

TEST_CASE("profile likelihood agrees with the exact likelihood at the GLS mean") {
  const auto data = testing::null_data(2, 300, 21);
  const PairLikelihood pl(data);
  RngStream rng(6);
  const Eigen::Vector2d a(0.3, -0.2);
  const Eigen::MatrixXd A = a * a.transpose(), G = testing::random_spd(2, rng), E = testing::random_spd(2, rng);
  Eigen::VectorXd mu;
  const auto v = pl.profile(A, G, E, &mu);
  REQUIRE(v.has_value());
  const auto p = ComponentParams::from_covariances(a, G, E, mu);
  CHECK(*v == doctest::Approx(loglik(data, p)).epsilon(1e-11));
  // mu-hat maximises over the mean.
  for (int i = 0; i < 2; ++i)
    for (double h : {-1e-3, 1e-3}) {
      auto q = p;
      q.mu(i) += h;
      CHECK(loglik(data, q) < *v);
    }
  CHECK_FALSE(pl.profile(A, -G - E, Eigen::MatrixXd::Zero(2, 2)).has_value());
}

TEST_CASE("analytic likelihood gradient matches central differences") {
  const auto data = testing::null_data(3, 200, 22);
  const PairLikelihood pl(data);
  RngStream rng(7);
  const Eigen::Vector3d a(0.3, -0.2, 0.1);
  const Eigen::MatrixXd A = a * a.transpose(), G = testing::random_spd(3, rng), E = testing::random_spd(3, rng);
  PairLikelihood::Gradient g;
  REQUIRE(pl.profile(A, G, E, nullptr, &g).has_value());
  const double h = 1e-5;
  for (int which = 0; which < 3; ++which) {
    const Eigen::MatrixXd B = testing::random_spd(3, rng) - Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd Ap = A, Am = A, Gp = G, Gm = G, Ep = E, Em = E;
    Eigen::MatrixXd* plus[] = {&Ap, &Gp, &Ep};
    Eigen::MatrixXd* minus[] = {&Am, &Gm, &Em};
    *plus[which] += h * B;
    *minus[which] -= h * B;
    const double fd = (*pl.profile(Ap, Gp, Ep) - *pl.profile(Am, Gm, Em)) / (2.0 * h);
    const Eigen::MatrixXd& d = which == 0 ? g.dA : which == 1 ? g.dG : g.dE;
    CHECK((d * B).trace() == doctest::Approx(fd).epsilon(1e-6));
  }
}
