#include "vclink/errors.hpp"
#include "vclink/fisher.hpp"
#include "vclink/sim.hpp"

#include "fisher_oracle.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace vclink;


TEST_CASE("parameter names") {
  CHECK(parameter_name(2, 0) == "a11");
  CHECK(parameter_name(2, 2) == "a12");
  CHECK(parameter_name(2, 3) == "g11");
  CHECK(parameter_name(2, 8) == "e12");
}

TEST_CASE("pi law validation") {
  CHECK_NOTHROW(validate_pi_law(sib_pair_pi_law()));
  CHECK_THROWS_AS(validate_pi_law({{0.0, 0.5}, {1.0, 0.4}}), StructuralError);
  CHECK_THROWS_AS(validate_pi_law({{1.5, 1.0}}), StructuralError);
  CHECK_THROWS_AS(validate_pi_law({{0.5, -0.1}, {1.0, 1.1}}), StructuralError);
}

TEST_CASE("dsigma matches central differences of the assembled covariance") {
  RngStream rng(1);
  for (int k : {1, 2, 3}) {
    const int m = theta_dim(k);
    const Eigen::MatrixXd G = testing::random_spd(k, rng), E = testing::random_spd(k, rng);
    for (double pi : {0.0, 0.5, 1.0}) {
      const double phi = 0.25;
      for (int idx = 0; idx < 3 * m; ++idx) {
        const double h = 1e-4;
        Eigen::VectorXd p = testing::pack(G, E), q = p;
        p(idx) += h;
        q(idx) -= h;
        const Eigen::MatrixXd fd = (testing::sigma_of(k, p, pi, phi) - testing::sigma_of(k, q, pi, phi)) / (2.0 * h);
        CHECK((dsigma(k, idx, pi, phi).dense() - fd).cwiseAbs().maxCoeff() < 1e-7);
      }
      // The A and G blocks of assemble_sigma itself: Sigma is linear in G, and A enters with
      // the coefficient pattern G would have at phi = pi / 2.
      for (int t = 0; t < m; ++t) {
        const auto [i, j] = theta_entry(k, t);
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(k, k);
        D(i, j) = D(j, i) = 1.0;
        const double h = 1e-4;
        auto at = [&](double s, double phiUsed) {
          return assemble_sigma(Eigen::VectorXd::Zero(k), SymMatrix::from_dense(G + s * D), SymMatrix::from_dense(E),
                                pi, phiUsed)
              .dense();
        };
        const Eigen::MatrixXd fdG = (at(h, phi) - at(-h, phi)) / (2.0 * h);
        const Eigen::MatrixXd fdA = (at(h, pi / 2.0) - at(-h, pi / 2.0)) / (2.0 * h);
        CHECK((dsigma(k, m + t, pi, phi).dense() - fdG).cwiseAbs().maxCoeff() < 1e-7);
        CHECK((dsigma(k, t, pi, phi).dense() - fdA).cwiseAbs().maxCoeff() < 1e-7);
      }
    }
  }
}

TEST_CASE("fisher_info matches the finite-difference expected Hessian") {
  RngStream rng(2);
  for (int k : {1, 2}) {
    const Eigen::MatrixXd G = testing::random_spd(k, rng), E = testing::random_spd(k, rng);
    const auto info = fisher_info(SymMatrix::from_dense(G), SymMatrix::from_dense(E), sib_pair_pi_law(), 0.25);
    const Eigen::MatrixXd ref = testing::fd_information(k, testing::pack(G, E), sib_pair_pi_law(), 0.25);
    CHECK((info.entries - ref).norm() / ref.norm() < 1e-4);
    CHECK((info.entries - info.entries.transpose()).norm() == 0.0);
  }
}

TEST_CASE("V is positive definite and scales with the nuisance matrices") {
  const auto c = StudyConfig::standard(2);
  const auto V = known_parameter_v(c.G, c.E);
  CHECK(V.k == 2);
  CHECK(V.entries.rows() == 3);
  CHECK(V.entries.llt().info() == Eigen::Success);
  // Sigma -> c Sigma scales the information by 1/c^2 and V by c^2.
  const auto V2 = known_parameter_v(2.0 * c.G, 2.0 * c.E);
  CHECK((V2.entries - 4.0 * V.entries).norm() / V.entries.norm() < 1e-10);
}

TEST_CASE("a pi law that cannot separate A from G gives a singular information") {
  const auto c = StudyConfig::standard(2);
  try {
    known_parameter_v(c.G, c.E, {{0.5, 1.0}});
    FAIL("expected NumericDomainError");
  } catch (const NumericDomainError& e) {
    const std::string what = e.what();
    CHECK(what.find("singular") != std::string::npos);
  }
}

TEST_CASE("data-based V approaches the known-parameter V") {
  const auto data = testing::null_data(2, 4000, 5);
  const auto c = StudyConfig::standard(2);
  const auto Vd = estimate_v_from_data(data, OptimizerSettings{});
  const auto Vk = known_parameter_v(c.G, c.E);
  CHECK((Vd.entries - Vk.entries).norm() / Vk.entries.norm() < 0.15);
}
