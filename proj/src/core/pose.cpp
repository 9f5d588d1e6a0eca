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

#include "evstereo/pose.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <array>
#include <cmath>

#include "evstereo/error.hpp"

namespace evs {

std::optional<Eigen::Vector3d> triangulate(const Eigen::Vector2d& left,
                                           const Eigen::Vector2d& right,
                                           const RectifiedIntrinsics& intr,
                                           const TriangulationLimits& limits) {
  const double d = left.x() - right.x();
  if (!(d >= limits.d_min) || !(d > 0.0)) return std::nullopt;
  const double z = intr.f * intr.baseline / d;
  if (!(z < limits.z_max)) return std::nullopt;
  const double row = 0.5 * (left.y() + right.y());
  return Eigen::Vector3d((left.x() - intr.cu) * z / intr.f, (row - intr.cv) * z / intr.f, z);
}

std::optional<Landmark> triangulate(const QuadMatch& m, std::size_t source,
                                    const RectifiedIntrinsics& intr,
                                    const TriangulationLimits& limits) {
  const auto X = triangulate(m.at(View::kLeftPrev), m.at(View::kRightPrev), intr, limits);
  if (!X) return std::nullopt;
  return Landmark{*X, source};
}

std::optional<Eigen::Vector2d> project(const Eigen::Vector3d& X, const Pose& pose,
                                       const RectifiedIntrinsics& intr, Camera which) {
  const Eigen::Vector3d p = pose.apply(X);
  if (!(p.z() > 0.0)) return std::nullopt;
  const double x = which == Camera::kLeft ? p.x() : p.x() - intr.baseline;
  return Eigen::Vector2d(intr.f * x / p.z() + intr.cu, intr.f * p.y() / p.z() + intr.cv);
}

Residuals reprojection_residuals(std::span<const Eigen::Vector3d> landmarks,
                                 std::span<const StereoObservation> observed,
                                 const Pose& pose, const RectifiedIntrinsics& intr) {
  if (landmarks.size() != observed.size()) {
    throw Error(ErrorCode::kInvalidArgument, "residuals: landmark/observation mismatch");
  }
  Residuals out;
  const std::size_t n = landmarks.size();
  out.r.resize(static_cast<Eigen::Index>(4 * n));
  out.behind.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pl = project(landmarks[i], pose, intr, Camera::kLeft);
    const auto pr = project(landmarks[i], pose, intr, Camera::kRight);
    auto seg = out.r.segment<4>(static_cast<Eigen::Index>(4 * i));
    if (!pl || !pr) {
      out.behind[i] = true;
      seg.setConstant(kBehindCameraResidual);
      continue;
    }
    seg << observed[i].left - *pl, observed[i].right - *pr;
  }
  out.cost = out.r.squaredNorm();
  return out;
}

Pose apply_increment(const Pose& pose, const Eigen::Matrix<double, 6, 1>& x) {
  Pose out = pose;
  out.R = exp_so3(x.head<3>()) * pose.R;
  out.t = pose.t + x.tail<3>();
  return out;
}

Eigen::MatrixXd projection_jacobian(std::span<const Eigen::Vector3d> landmarks,
                                    const Pose& pose, const RectifiedIntrinsics& intr) {
  const std::size_t n = landmarks.size();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(4 * n), 6);
  const double f = intr.f, b = intr.baseline;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d rx = pose.R * landmarks[i];
    const Eigen::Vector3d p = rx + pose.t;
    if (!(p.z() > 0.0)) continue;
    Eigen::Matrix<double, 3, 6> dp;
    dp.leftCols<3>() = -hat(rx);
    dp.rightCols<3>() = Eigen::Matrix3d::Identity();

    const double iz = 1.0 / p.z(), iz2 = iz * iz;
    Eigen::Matrix<double, 4, 3> dpix;
    dpix << f * iz, 0.0, -f * p.x() * iz2,  //
        0.0, f * iz, -f * p.y() * iz2,      //
        f * iz, 0.0, -f * (p.x() - b) * iz2, //
        0.0, f * iz, -f * p.y() * iz2;
    J.block<4, 6>(static_cast<Eigen::Index>(4 * i), 0) = dpix * dp;
  }
  return J;
}

MotionEstimate gauss_newton(std::span<const Eigen::Vector3d> landmarks,
                            std::span<const StereoObservation> observed,
                            const Pose& initial, const RectifiedIntrinsics& intr,
                            const GaussNewtonOptions& options) {
  MotionEstimate est;
  est.pose = initial;
  if (landmarks.size() < 3) {
    est.status = EstimateStatus::kDegenerate;
    est.final_cost = reprojection_residuals(landmarks, observed, initial, intr).cost;
    return est;
  }

  Residuals res = reprojection_residuals(landmarks, observed, est.pose, intr);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd J = projection_jacobian(landmarks, est.pose, intr);
    Eigen::VectorXd r = res.r;
    for (std::size_t i = 0; i < res.behind.size(); ++i) {
      if (res.behind[i]) r.segment<4>(static_cast<Eigen::Index>(4 * i)).setZero();
    }
    const Eigen::Matrix<double, 6, 6> H = J.transpose() * J;
    const Eigen::Matrix<double, 6, 1> g = J.transpose() * r;
    Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.rcond() < 1e-14) {
      est.status = EstimateStatus::kDegenerate;
      break;
    }
    const Eigen::Matrix<double, 6, 1> step = ldlt.solve(g);
    if (!step.allFinite()) {
      est.status = EstimateStatus::kDegenerate;
      break;
    }
    const Pose candidate = apply_increment(est.pose, step);
    const Residuals next = reprojection_residuals(landmarks, observed, candidate, intr);
    if (next.cost > res.cost) {
      est.converged = true;  // at the numerical floor
      break;
    }
    est.pose = candidate;
    res = next;
    ++est.iterations;
    if (step.norm() < options.step_tolerance) {
      est.converged = true;
      break;
    }
  }
  est.pose.R = nearest_rotation(est.pose.R);
  est.final_cost = reprojection_residuals(landmarks, observed, est.pose, intr).cost;
  return est;
}

std::vector<std::size_t> find_inliers(std::span<const Eigen::Vector3d> landmarks,
                                      std::span<const StereoObservation> observed,
                                      const Pose& pose, const RectifiedIntrinsics& intr,
                                      double threshold) {
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    const auto pl = project(landmarks[i], pose, intr, Camera::kLeft);
    const auto pr = project(landmarks[i], pose, intr, Camera::kRight);
    if (!pl || !pr) continue;
    const double dist = std::max((observed[i].left - *pl).norm(),
                                 (observed[i].right - *pr).norm());
    if (dist <= threshold) inliers.push_back(i);
  }
  return inliers;
}

std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % range);
}

namespace {

template <typename T>
std::vector<T> gather(std::span<const T> src, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(src[i]);
  return out;
}

}  // namespace

MotionEstimate ransac_estimate(std::span<const Eigen::Vector3d> landmarks,
                               std::span<const StereoObservation> observed,
                               const RectifiedIntrinsics& intr, std::mt19937_64& rng,
                               const RansacOptions& options) {
  const std::size_t n = landmarks.size();
  const auto k = static_cast<std::size_t>(options.sample_size);
  MotionEstimate failed;
  failed.status = EstimateStatus::kDegenerate;
  if (n < k || k == 0) return failed;

  std::vector<std::vector<std::size_t>> samples(static_cast<std::size_t>(options.hypotheses));
  for (auto& s : samples) {
    while (s.size() < k) {
      const std::size_t i = draw_index(rng, n);
      if (std::find(s.begin(), s.end(), i) == s.end()) s.push_back(i);
    }
  }

  const Pose origin = Pose::identity();
  std::vector<std::size_t> best_inliers;
  Pose best_pose = origin;
  double best_cost = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (const auto& s : samples) {
    const auto lm = gather(landmarks, s);
    const auto ob = gather(observed, s);
    const MotionEstimate hyp = gauss_newton(lm, ob, origin, intr, options.solver);
    if (hyp.status == EstimateStatus::kDegenerate) continue;
    auto inl = find_inliers(landmarks, observed, hyp.pose, intr, options.inlier_threshold);
    double cost = 0.0;
    if (!inl.empty()) {
      cost = reprojection_residuals(gather(landmarks, inl), gather(observed, inl),
                                    hyp.pose, intr)
                 .cost;
    }
    if (!have_best || inl.size() > best_inliers.size() ||
        (inl.size() == best_inliers.size() && cost < best_cost)) {
      best_inliers = std::move(inl);
      best_pose = hyp.pose;
      best_cost = cost;
      have_best = true;
    }
  }
  if (!have_best || best_inliers.size() < k) {
    failed.pose = best_pose;
    failed.inliers = best_inliers;
    failed.status = have_best ? EstimateStatus::kTooFewInliers : EstimateStatus::kDegenerate;
    return failed;
  }

  MotionEstimate refined = gauss_newton(gather(landmarks, best_inliers),
                                        gather(observed, best_inliers), best_pose, intr,
                                        options.solver);
  if (refined.status == EstimateStatus::kDegenerate) {
    refined.pose = best_pose;
    refined.status = EstimateStatus::kOk;
  }
  refined.inliers =
      find_inliers(landmarks, observed, refined.pose, intr, options.inlier_threshold);
  refined.final_cost =
      refined.inliers.empty()
          ? 0.0
          : reprojection_residuals(gather(landmarks, refined.inliers),
                                   gather(observed, refined.inliers), refined.pose, intr)
                .cost;
  if (refined.inliers.size() < static_cast<std::size_t>(options.min_inliers)) {
    refined.status = EstimateStatus::kTooFewInliers;
  }
  return refined;
}

}  // namespace evs
