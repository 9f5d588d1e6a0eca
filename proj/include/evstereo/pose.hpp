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

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "evstereo/event_core.hpp"
#include "evstereo/matcher.hpp"

namespace evs {

/// A triangulated point in the previous left (rectified) camera frame.
struct Landmark {
  Eigen::Vector3d X = Eigen::Vector3d::Zero();
  std::size_t source = 0;  // index of the originating QuadMatch
};

/// Current-view rectified observations of one landmark.
struct StereoObservation {
  Eigen::Vector2d left = Eigen::Vector2d::Zero();
  Eigen::Vector2d right = Eigen::Vector2d::Zero();
};

struct TriangulationLimits {
  double d_min = 0.5;   // px
  double z_max = 100.0; // m
};

/// Rectified pinhole back-projection; rows averaged between the two views.
std::optional<Eigen::Vector3d> triangulate(const Eigen::Vector2d& left,
                                           const Eigen::Vector2d& right,
                                           const RectifiedIntrinsics& intr,
                                           const TriangulationLimits& limits = {});

/// Triangulates from the previous-time pair of a QuadMatch.
std::optional<Landmark> triangulate(const QuadMatch& m, std::size_t source,
                                    const RectifiedIntrinsics& intr,
                                    const TriangulationLimits& limits = {});

/// Pixel coordinate of R X + t in the chosen rectified camera; nullopt when
/// the point is not in front of the camera.
std::optional<Eigen::Vector2d> project(const Eigen::Vector3d& X, const Pose& pose,
                                       const RectifiedIntrinsics& intr, Camera which);

inline constexpr double kBehindCameraResidual = 1e3;

struct Residuals {
  Eigen::VectorXd r;         // 4 per feature: left u, v, right u, v
  std::vector<bool> behind;  // per feature
  double cost = 0.0;         // squared norm of r
};

/// observed - predicted, stacked. Behind-camera features get a constant
/// kBehindCameraResidual in every component and are flagged.
Residuals reprojection_residuals(std::span<const Eigen::Vector3d> landmarks,
                                 std::span<const StereoObservation> observed,
                                 const Pose& pose, const RectifiedIntrinsics& intr);

/// Local motion parameterization: R <- exp(w) R, t <- t + v, x = [w; v].
Pose apply_increment(const Pose& pose, const Eigen::Matrix<double, 6, 1>& x);

/// d(predicted pixels)/dx at x = 0, shape 4n x 6. Rows of behind-camera
/// features are zero.
Eigen::MatrixXd projection_jacobian(std::span<const Eigen::Vector3d> landmarks,
                                    const Pose& pose, const RectifiedIntrinsics& intr);

enum class EstimateStatus {
  kOk,
  kDegenerate,      // singular normal equations or too few features
  kTooFewInliers,   // RANSAC consensus below the acceptance minimum
};

struct MotionEstimate {
  Pose pose;                         // previous -> current
  std::vector<std::size_t> inliers;  // feature indices
  double final_cost = 0.0;           // px^2
  int iterations = 0;
  bool converged = false;
  EstimateStatus status = EstimateStatus::kOk;

  bool ok() const { return status == EstimateStatus::kOk; }
};

struct GaussNewtonOptions {
  int max_iterations = 20;
  double step_tolerance = 1e-10;
};

/// Plain Gauss-Newton on the stacked stereo reprojection error. Steps that
/// would raise the cost are rejected and end the iteration.
MotionEstimate gauss_newton(std::span<const Eigen::Vector3d> landmarks,
                            std::span<const StereoObservation> observed,
                            const Pose& initial, const RectifiedIntrinsics& intr,
                            const GaussNewtonOptions& options = {});

struct RansacOptions {
  int hypotheses = 50;
  int sample_size = 3;
  double inlier_threshold = 2.0;  // px, max over left/right
  int min_inliers = 6;
  GaussNewtonOptions solver;
};

/// Indices of features whose left and right reprojection distances are both
/// within `threshold` under `pose`.
std::vector<std::size_t> find_inliers(std::span<const Eigen::Vector3d> landmarks,
                                      std::span<const StereoObservation> observed,
                                      const Pose& pose, const RectifiedIntrinsics& intr,
                                      double threshold);

/// Uniform integer in [0, n) from a 64-bit engine; identical on every platform.
std::size_t draw_index(std::mt19937_64& rng, std::size_t n);

/// All hypotheses are drawn from `rng` before any is solved.
MotionEstimate ransac_estimate(std::span<const Eigen::Vector3d> landmarks,
                               std::span<const StereoObservation> observed,
                               const RectifiedIntrinsics& intr, std::mt19937_64& rng,
                               const RansacOptions& options = {});

}  // namespace evs
