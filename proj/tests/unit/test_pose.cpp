/*
Copyright 2026 The evstereo Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "evstereo/pose.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace evs;

namespace {

RectifiedIntrinsics intrinsics() {
  RectifiedIntrinsics k;
  k.f = 226.0;
  k.cu = 172.5;
  k.cv = 129.5;
  k.width = 346;
  k.height = 260;
  k.baseline = 0.1;
  return k;
}

std::vector<Eigen::Vector3d> random_landmarks(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(-1.5, 1.5), uz(2.0, 8.0);
  std::vector<Eigen::Vector3d> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(ux(rng), uy(rng), uz(rng));
  return out;
}

std::vector<StereoObservation> observe(std::span<const Eigen::Vector3d> X, const Pose& pose,
                                       const RectifiedIntrinsics& k) {
  std::vector<StereoObservation> obs;
  for (const auto& x : X) {
    obs.push_back({oracle::project_matrix(x, pose, k, Camera::kLeft),
                   oracle::project_matrix(x, pose, k, Camera::kRight)});
  }
  return obs;
}

double rotation_error(const Pose& a, const Pose& b) {
  return log_so3(a.R.transpose() * b.R).norm();
}

}  // namespace

TEST_SUITE("pose") {

TEST_CASE("triangulation of rectified pairs") {
  const auto k = intrinsics();
  // Disparity 10 px at f 226, b 0.1: Z = 2.26 m.
  const auto X = triangulate({182.5, 139.5}, {172.5, 139.5}, k);
  REQUIRE(X);
  CHECK(X->z() == doctest::Approx(2.26).epsilon(1e-12));
  CHECK(X->x() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(X->y() == doctest::Approx(0.1).epsilon(1e-12));
  // Rows are averaged.
  const auto Y = triangulate({182.5, 139.0}, {172.5, 140.0}, k);
  REQUIRE(Y);
  CHECK(Y->y() == doctest::Approx(X->y()).epsilon(1e-12));
  CHECK_FALSE(triangulate({100.0, 10.0}, {100.2, 10.0}, k));  // below d_min
  CHECK_FALSE(triangulate({100.0, 10.0}, {100.6, 10.0}, k));
  TriangulationLimits near{0.5, 10.0};
  CHECK_FALSE(triangulate({100.6, 10.0}, {100.0, 10.0}, k, near));  // beyond z_max
}

TEST_CASE("triangulation inverts projection") {
  std::mt19937_64 rng(51);
  const auto k = intrinsics();
  for (const auto& X : random_landmarks(rng, 200)) {
    const auto l = oracle::project_matrix(X, Pose::identity(), k, Camera::kLeft);
    const auto r = oracle::project_matrix(X, Pose::identity(), k, Camera::kRight);
    const auto back = triangulate(l, r, k);
    REQUIRE(back);
    CHECK((*back - X).norm() < 1e-9);
  }
}

TEST_CASE("projection agrees with the matrix form") {
  std::mt19937_64 rng(52);
  const auto k = intrinsics();
  for (int i = 0; i < 100; ++i) {
    const Pose pose = testing::random_pose(rng, 0.2, 0.3);
    for (const auto& X : random_landmarks(rng, 10)) {
      if ((pose.R * X + pose.t).z() <= 0.1) continue;
      for (Camera cam : {Camera::kLeft, Camera::kRight}) {
        const auto p = project(X, pose, k, cam);
        REQUIRE(p);
        CHECK((*p - oracle::project_matrix(X, pose, k, cam)).norm() < 1e-9);
      }
    }
  }
  CHECK_FALSE(project({0.0, 0.0, -1.0}, Pose::identity(), k, Camera::kLeft));
}

TEST_CASE("residuals and the behind-camera penalty") {
  const auto k = intrinsics();
  const std::vector<Eigen::Vector3d> X{{0.1, 0.2, 3.0}, {0.0, 0.0, -2.0}};
  std::vector<StereoObservation> obs(2);
  obs[0] = {oracle::project_matrix(X[0], Pose::identity(), k, Camera::kLeft) + Eigen::Vector2d(1, 0),
            oracle::project_matrix(X[0], Pose::identity(), k, Camera::kRight)};
  const Residuals r = reprojection_residuals(X, obs, Pose::identity(), k);
  REQUIRE(r.r.size() == 8);
  CHECK(r.r[0] == doctest::Approx(1.0));
  CHECK(std::abs(r.r[1]) < 1e-9);
  CHECK_FALSE(r.behind[0]);
  CHECK(r.behind[1]);
  for (int i = 4; i < 8; ++i) CHECK(r.r[i] == kBehindCameraResidual);
  CHECK(r.cost == doctest::Approx(1.0 + 4 * kBehindCameraResidual * kBehindCameraResidual));
}

TEST_CASE("analytic Jacobian agrees with central differences") {
  std::mt19937_64 rng(53);
  const auto k = intrinsics();
  for (int i = 0; i < 50; ++i) {
    const Pose pose = testing::random_pose(rng, 0.1, 0.2);
    const auto X = random_landmarks(rng, 8);
    const Eigen::MatrixXd J = projection_jacobian(X, pose, k);
    const Eigen::MatrixXd ref = oracle::jacobian_central(X, pose, k, 1e-6);
    const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
    CHECK(((J - ref).cwiseAbs().maxCoeff() / scale) <= 1e-4);
  }
}

TEST_CASE("increment convention") {
  Eigen::Matrix<double, 6, 1> x;
  x << 0.0, 0.1, 0.0, 0.5, -0.2, 0.3;
  const Pose p = apply_increment(Pose::identity(), x);
  CHECK((p.t - Eigen::Vector3d(0.5, -0.2, 0.3)).norm() < 1e-15);
  CHECK((p.R - exp_so3(Eigen::Vector3d(0.0, 0.1, 0.0))).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("Gauss-Newton recovers noise-free motion") {
  std::mt19937_64 rng(54);
  const auto k = intrinsics();
  for (int i = 0; i < 30; ++i) {
    const Pose truth = testing::random_pose(rng, 0.05, 0.1);
    const auto X = random_landmarks(rng, 20);
    const auto obs = observe(X, truth, k);
    const MotionEstimate est = gauss_newton(X, obs, Pose::identity(), k);
    REQUIRE(est.ok());
    CHECK(est.converged);
    CHECK((est.pose.t - truth.t).norm() < 1e-6);
    CHECK(rotation_error(est.pose, truth) < 1e-6);
    CHECK(est.final_cost < 1e-8);
  }
}

TEST_CASE("Gauss-Newton refuses degenerate input") {
  const auto k = intrinsics();
  const std::vector<Eigen::Vector3d> X{{0.0, 0.0, 3.0}};
  const auto obs = observe(X, Pose::identity(), k);
  CHECK(gauss_newton(X, obs, Pose::identity(), k).status == EstimateStatus::kDegenerate);
}

TEST_CASE("RANSAC rejects gross outliers") {
  std::mt19937_64 rng(55);
  const auto k = intrinsics();
  std::uniform_real_distribution<double> magnitude(10.0, 40.0), angle(0.0, 6.283);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose truth = testing::random_pose(rng, 0.05, 0.1);
    const auto X = random_landmarks(rng, 60);
    auto obs = observe(X, truth, k);
    std::vector<bool> outlier(obs.size(), false);
    for (std::size_t i = 0; i < obs.size(); i += 3) {  // a third corrupted
      const double m = magnitude(rng), a = angle(rng);
      const Eigen::Vector2d off(m * std::cos(a), m * std::sin(a));
      obs[i].left += off;
      obs[i].right += off;
      outlier[i] = true;
    }
    std::mt19937_64 ransac_rng(1000 + trial);
    const MotionEstimate est = ransac_estimate(X, obs, k, ransac_rng);
    REQUIRE(est.ok());
    CHECK((est.pose.t - truth.t).norm() < 0.01);
    CHECK(rotation_error(est.pose, truth) < 0.005);
    for (std::size_t i : est.inliers) CHECK_FALSE(outlier[i]);
  }
}

TEST_CASE("RANSAC is deterministic for a fixed seed") {
  std::mt19937_64 rng(56);
  const auto k = intrinsics();
  const Pose truth = testing::random_pose(rng, 0.05, 0.1);
  const auto X = random_landmarks(rng, 40);
  auto obs = observe(X, truth, k);
  obs[3].left.x() += 30.0;
  std::mt19937_64 a(9), b(9);
  const MotionEstimate ea = ransac_estimate(X, obs, k, a);
  const MotionEstimate eb = ransac_estimate(X, obs, k, b);
  CHECK(ea.pose.R == eb.pose.R);
  CHECK(ea.pose.t == eb.pose.t);
  CHECK(ea.inliers == eb.inliers);
}

TEST_CASE("RANSAC minimal and insufficient input") {
  std::mt19937_64 rng(57);
  const auto k = intrinsics();
  const Pose truth = testing::random_pose(rng, 0.05, 0.1);
  RansacOptions opt;
  opt.min_inliers = 3;
  const auto X3 = random_landmarks(rng, 3);
  std::mt19937_64 r1(1);
  const MotionEstimate ok = ransac_estimate(X3, observe(X3, truth, k), k, r1, opt);
  REQUIRE(ok.ok());
  CHECK((ok.pose.t - truth.t).norm() < 1e-6);

  const auto X2 = random_landmarks(rng, 2);
  std::mt19937_64 r2(1);
  CHECK_FALSE(ransac_estimate(X2, observe(X2, truth, k), k, r2, opt).ok());
}

TEST_CASE("uniform index draw") {
  std::mt19937_64 rng(58);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70'000; ++i) ++counts[draw_index(rng, 7)];
  for (int c : counts) CHECK(std::abs(c - 10'000) < 500);
  std::mt19937_64 a(3), b(3);
  for (int i = 0; i < 100; ++i) CHECK(draw_index(a, 1000) == draw_index(b, 1000));
}

}  // TEST_SUITE
