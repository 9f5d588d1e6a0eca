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
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace evs {

/// Microseconds. Floating-point seconds appear only at file boundaries.
using Timestamp = std::int64_t;

/// Sentinel for "this pixel never fired".
inline constexpr Timestamp kNever = std::numeric_limits<Timestamp>::min();

enum class Polarity : std::int8_t { kNegative = -1, kPositive = 1 };

enum class Camera : std::uint8_t { kLeft = 0, kRight = 1 };

inline constexpr int index(Camera cam) { return static_cast<int>(cam); }

struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  Timestamp t = 0;
  Polarity polarity = Polarity::kPositive;

  friend bool operator==(const Event&, const Event&) = default;
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  // Radial-tangential k1 k2 p1 p2 k3; shorter lists are zero-padded.
  std::vector<double> distortion;

  /// Throws evs::Error(kInvalidArgument) when the intrinsics are unusable.
  void validate() const;

  std::array<double, 5> coefficients() const;
  bool has_distortion() const;
  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1;
  }
};

// Normalized-plane distortion model, exposed for the rectifier and tests.
Eigen::Vector2d distort_normalized(const Eigen::Vector2d& p,
                                   const std::array<double, 5>& k);
Eigen::Vector2d undistort_normalized(const Eigen::Vector2d& p,
                                     const std::array<double, 5>& k);

// ---------------------------------------------------------------------------
// Rigid motion.

Eigen::Matrix3d hat(const Eigen::Vector3d& w);
Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w);
Eigen::Vector3d log_so3(const Eigen::Matrix3d& R);
/// Nearest rotation in the Frobenius sense (SVD projection).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& M);
/// max |R^T R - I| plus |det R - 1|.
double orthonormality_error(const Eigen::Matrix3d& R);

/// x' = R x + t. Carries a composition counter so long chains are
/// re-projected onto SO(3) every `kReorthonormalizeEvery` compositions.
struct Pose {
  static constexpr int kReorthonormalizeEvery = 1000;

  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  Timestamp stamp = 0;
  int compositions = 0;

  static Pose identity(Timestamp stamp = 0) {
    Pose p;
    p.stamp = stamp;
    return p;
  }
  static Pose from_quaternion(const Eigen::Quaterniond& q,
                              const Eigen::Vector3d& t, Timestamp stamp = 0);

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return R * x + t; }
  Eigen::Matrix4d matrix() const;
  Eigen::Quaterniond quaternion() const;
  bool is_valid(double tol = 1e-9) const {
    return orthonormality_error(R) <= tol;
  }
};

/// a ∘ b: apply b first, then a. The result takes b's stamp.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

// ---------------------------------------------------------------------------
// Stereo calibration and rectification.

struct StereoRig {
  CameraIntrinsics left;
  CameraIntrinsics right;
  // Right-camera-from-left-camera: X_r = R X_l + t, meters.
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const;
  /// Distance between the two optical centers.
  double rectified_baseline() const { return translation.norm(); }
};

/// Shared pinhole model of both rectified cameras. The right camera sits at
/// (+baseline, 0, 0) in the rectified left frame.
struct RectifiedIntrinsics {
  double f = 0.0;
  double cu = 0.0;
  double cv = 0.0;
  int width = 0;
  int height = 0;
  double baseline = 0.0;

  bool contains(double u, double v) const {
    return u >= 0.0 && v >= 0.0 && u <= width - 1 && v <= height - 1;
  }
};

/// Dense raw-pixel to rectified-pixel lookup, one table per camera. Built
/// once; queries are O(1) with bilinear interpolation between table nodes.
class RectificationMap {
 public:
  static RectificationMap build(const StereoRig& rig);
  /// Pinhole rig that is already rectified (no distortion, no rotation).
  static RectificationMap identity(const RectifiedIntrinsics& intr);

  const RectifiedIntrinsics& intrinsics() const { return intr_; }
  const StereoRig& rig() const { return rig_; }

  /// Rectified coordinate of a raw pixel; nullopt when the raw point lies
  /// outside the sensor or maps outside the rectified image.
  std::optional<Eigen::Vector2d> rectify_point(const Eigen::Vector2d& raw,
                                               Camera cam) const;
  /// Exact (non-tabulated) mapping; may land outside the image.
  Eigen::Vector2d rectify_exact(const Eigen::Vector2d& raw, Camera cam) const;

  /// Rectified-from-camera rotation.
  const Eigen::Matrix3d& rectifying_rotation(Camera cam) const {
    return rect_rot_[index(cam)];
  }
  bool is_identity() const { return identity_; }
  /// Table node for an integer raw pixel (no bounds flagging).
  const Eigen::Vector2d& node(int x, int y, Camera cam) const {
    const CameraIntrinsics& ci = cam == Camera::kLeft ? rig_.left : rig_.right;
    return table_[index(cam)][static_cast<std::size_t>(y) * ci.width + x];
  }

 private:
  StereoRig rig_;
  RectifiedIntrinsics intr_;
  std::array<Eigen::Matrix3d, 2> rect_rot_;
  std::array<std::vector<Eigen::Vector2d>, 2> table_;
  bool identity_ = false;
};

}  // namespace evs
