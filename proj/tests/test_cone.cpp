#include "vclink/cone.hpp"
#include "vclink/errors.hpp"
#include "vclink/fisher.hpp"
#include "vclink/sim.hpp"

#include "cone_oracle.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace vclink;

TEST_CASE("cone problem validation") {
  CHECK_THROWS_AS(ConeProblem(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4)), StructuralError);
  CHECK_THROWS_AS(ConeProblem(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(2, 2)), StructuralError);
  CHECK_THROWS_AS(ConeProblem(Eigen::VectorXd::Zero(3), -Eigen::MatrixXd::Identity(3, 3)), NumericDomainError);
}

TEST_CASE("k = 1 projection is the positive part") {
  const Eigen::MatrixXd W = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const auto up = project(ConeProblem(Eigen::VectorXd::Constant(1, 1.5), W));
  CHECK(up.lambda == doctest::Approx(2.0 * 1.5 * 1.5));
  CHECK(up.nu == 1);
  CHECK(up.objective == doctest::Approx(0.0));
  const auto down = project(ConeProblem(Eigen::VectorXd::Constant(1, -1.5), W));
  CHECK(down.lambda == 0.0);
  CHECK(down.nu == 0);
  CHECK(polar_membership(ConeProblem(Eigen::VectorXd::Constant(1, -1.5), W)));
}

TEST_CASE("points on the cone project to themselves") {
  RngStream rng(3);
  for (int k : {2, 3, 4}) {
    const Eigen::VectorXd a = testing::random_normal(k, rng);
    const Eigen::MatrixXd W = testing::random_spd(theta_dim(k), rng);
    const auto r = project(ConeProblem(theta_map(a), W));
    CHECK(r.objective < 1e-10);
    CHECK(r.nu == k);
    CHECK((r.thetaHat - theta_map(a)).norm() < 1e-5);
  }
}

TEST_CASE("Newton projection agrees with the grid oracle") {
  RngStream rng(4);
  for (int trial = 0; trial < 6; ++trial) {
    const Eigen::Matrix3d W = testing::random_spd(3, rng);
    const Eigen::Vector3d Z = testing::random_normal(3, rng, 1.5);
    const auto r = project(ConeProblem(Z, W));
    CHECK(std::abs(r.objective - testing::grid_projection_objective(Z, W, 4.0, 0.02)) < 1e-3);
  }
}

TEST_CASE("projection properties") {
  RngStream rng(5);
  for (int k : {2, 3}) {
    const int m = theta_dim(k);
    const Eigen::MatrixXd W = testing::random_spd(m, rng);
    for (int trial = 0; trial < 40; ++trial) {
      const Eigen::VectorXd Z = testing::random_normal(m, rng);
      const ConeProblem pb(Z, W);
      const auto r = project(pb);
      REQUIRE(r.converged);
      CHECK(r.lambda >= 0.0);
      CHECK(r.objective <= pb.origin_distance() + 1e-12);
      CHECK((r.nu == 0 || r.nu == k));
      CHECK((r.thetaHat - theta_map(r.aHat)).norm() < 1e-12);
      // Optimal scaling along the ray through theta-hat: <Z - theta, theta>_W = 0.
      const Eigen::VectorXd res = Z - r.thetaHat;
      CHECK(std::abs(res.dot(W * r.thetaHat)) < 1e-6 * std::max(1.0, pb.origin_distance()));
      CHECK(r.lambda == doctest::Approx(r.thetaHat.dot(W * r.thetaHat)).epsilon(1e-6));
      // Homogeneity of degree two, up to the objective tolerance that defines lambda = 0.
      for (double c : {2.0, 0.5, 10.0}) {
        const auto s = project(ConeProblem(c * Z, W));
        const double floor = 1e-12 * c * c * std::max(1.0, pb.origin_distance());
        CHECK(std::abs(s.lambda - c * c * r.lambda) <= 1e-6 * c * c * r.lambda + floor);
      }
      // Pinning a loading can only raise the objective.
      std::vector<bool> pin(static_cast<std::size_t>(k), false);
      pin[0] = true;
      CHECK(project_restricted(pb, {}, pin).objective >= r.objective - 1e-12);
    }
  }
}

TEST_CASE("polar membership agrees with a zero projection") {
  const auto c = StudyConfig::standard(2);
  const auto V = known_parameter_v(c.G, c.E);
  const Eigen::MatrixXd L = V.entries.llt().matrixL();
  const Eigen::MatrixXd W = V.entries.inverse();
  RngStream rng(6);
  int polar = 0;
  for (int j = 0; j < 500; ++j) {
    const Eigen::VectorXd Z = L * testing::random_normal(3, rng);
    const ConeProblem pb(Z, W);
    const auto r = project(pb);
    const bool zero = r.nu == 0;
    CHECK(polar_membership(pb) == zero);
    if (zero) CHECK(r.lambda <= 1e-12 * std::max(1.0, pb.origin_distance()));
    polar += zero;
  }
  CHECK(polar > 30);
}

TEST_CASE("sheet angle") {
  CHECK(sheet_angle_cosine() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(std::abs(sheet_angle_degrees() - 70.52877936550931) < 1e-10);
}

TEST_CASE("gaussian_lrt is deterministic") {
  RngStream rng(7);
  const Eigen::MatrixXd W = testing::random_spd(6, rng);
  const Eigen::VectorXd Z = testing::random_normal(6, rng);
  ConeSettings s;
  s.seed = 99;
  const auto a = gaussian_lrt(ConeProblem(Z, W), s), b = gaussian_lrt(ConeProblem(Z, W), s);
  CHECK(a.lambda == b.lambda);
  CHECK(a.nu == b.nu);
}
