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

#include "evstereo/event_core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evstereo/error.hpp"

namespace evs {

void CameraIntrinsics::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidArgument, "camera intrinsics: " + msg);
  };
  if (!(fx > 0.0) || !(fy > 0.0)) fail("focal length must be positive");
  if (width <= 0 || height <= 0) fail("sensor size must be positive");
  if (!(cx >= 0.0 && cx < width)) fail("principal point u outside sensor");
  if (!(cy >= 0.0 && cy < height)) fail("principal point v outside sensor");
  if (distortion.size() > 5) fail("at most 5 distortion coefficients");
}

std::array<double, 5> CameraIntrinsics::coefficients() const {
  std::array<double, 5> k{};
  std::copy_n(distortion.begin(), std::min<std::size_t>(5, distortion.size()),
              k.begin());
  return k;
}

bool CameraIntrinsics::has_distortion() const {
  return std::any_of(distortion.begin(), distortion.end(),
                     [](double c) { return c != 0.0; });
}

Eigen::Vector2d distort_normalized(const Eigen::Vector2d& p,
                                   const std::array<double, 5>& k) {
  const double x = p.x(), y = p.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (k[0] + r2 * (k[1] + r2 * k[4]));
  const double dx = 2.0 * k[2] * x * y + k[3] * (r2 + 2.0 * x * x);
  const double dy = k[2] * (r2 + 2.0 * y * y) + 2.0 * k[3] * x * y;
  return {x * radial + dx, y * radial + dy};
}

// Fixed-point iteration x <- (x_d - tangential(x)) / radial(x).
Eigen::Vector2d undistort_normalized(const Eigen::Vector2d& pd,
                                     const std::array<double, 5>& k) {
  Eigen::Vector2d p = pd;
  for (int it = 0; it < 500; ++it) {
    const double x = p.x(), y = p.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (k[0] + r2 * (k[1] + r2 * k[4]));
    const double dx = 2.0 * k[2] * x * y + k[3] * (r2 + 2.0 * x * x);
    const double dy = k[2] * (r2 + 2.0 * y * y) + 2.0 * k[3] * x * y;
    const Eigen::Vector2d next((pd.x() - dx) / radial, (pd.y() - dy) / radial);
    const double change = (next - p).lpNorm<Eigen::Infinity>();
    p = next;
    if (change < 1e-15) break;
  }
  return p;
}

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d W;
  W << 0.0, -w.z(), w.y(),  //
      w.z(), 0.0, -w.x(),   //
      -w.y(), w.x(), 0.0;
  return W;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  const Eigen::Matrix3d W = hat(w);
  if (theta < 1e-8) {
    return Eigen::Matrix3d::Identity() + W + 0.5 * W * W;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + a * W + b * W * W;
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    D(2, 2) = -1.0;
  }
  return svd.matrixU() * D * svd.matrixV().transpose();
}

double orthonormality_error(const Eigen::Matrix3d& R) {
  const double ortho =
      (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho + std::abs(R.determinant() - 1.0);
}

Pose Pose::from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t,
                           Timestamp stamp) {
  Pose p;
  p.R = q.normalized().toRotationMatrix();
  p.t = t;
  p.stamp = stamp;
  return p;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = R;
  T.topRightCorner<3, 1>() = t;
  return T;
}

Eigen::Quaterniond Pose::quaternion() const {
  Eigen::Quaterniond q(R);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.R = a.R * b.R;
  out.t = a.R * b.t + a.t;
  out.stamp = b.stamp;
  out.compositions = std::max(a.compositions, b.compositions) + 1;
  if (out.compositions >= Pose::kReorthonormalizeEvery) {
    out.R = nearest_rotation(out.R);
    out.compositions = 0;
  }
  return out;
}

Pose inverse(const Pose& p) {
  Pose out;
  out.R = p.R.transpose();
  out.t = -(out.R * p.t);
  out.stamp = p.stamp;
  out.compositions = p.compositions;
  return out;
}

// ---------------------------------------------------------------------------

void StereoRig::validate() const {
  left.validate();
  right.validate();
  if (orthonormality_error(rotation) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument,
                "stereo extrinsic rotation is not orthonormal");
  }
  if (!(rectified_baseline() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "stereo baseline must be positive");
  }
}

RectificationMap RectificationMap::build(const StereoRig& rig) {
  rig.validate();
  RectificationMap m;
  m.rig_ = rig;

  // Rectified frame: x along the baseline, z close to the mean optical axis.
  const Eigen::Vector3d right_center = -rig.rotation.transpose() * rig.translation;
  const Eigen::Vector3d e1 = right_center.normalized();
  const Eigen::Vector3d mean_axis =
      (Eigen::Vector3d::UnitZ() + rig.rotation.transpose().col(2)).normalized();
  const Eigen::Vector3d e2 = mean_axis.cross(e1).normalized();
  const Eigen::Vector3d e3 = e1.cross(e2);
  Eigen::Matrix3d rect;
  rect.row(0) = e1.transpose();
  rect.row(1) = e2.transpose();
  rect.row(2) = e3.transpose();
  m.rect_rot_[0] = rect;
  m.rect_rot_[1] = rect * rig.rotation.transpose();

  m.intr_.f = 0.25 * (rig.left.fx + rig.left.fy + rig.right.fx + rig.right.fy);
  m.intr_.cu = rig.left.cx;
  m.intr_.cv = rig.left.cy;
  m.intr_.width = rig.left.width;
  m.intr_.height = rig.left.height;
  m.intr_.baseline = rig.rectified_baseline();

  const bool same_intr = rig.left.fx == rig.right.fx && rig.left.fy == rig.right.fy &&
                         rig.left.cx == rig.right.cx && rig.left.cy == rig.right.cy &&
                         rig.left.fx == rig.left.fy;
  m.identity_ = same_intr && !rig.left.has_distortion() &&
                !rig.right.has_distortion() &&
                (rect - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-15 &&
                (m.rect_rot_[1] - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <
                    1e-15;

  for (Camera cam : {Camera::kLeft, Camera::kRight}) {
    const CameraIntrinsics& ci = cam == Camera::kLeft ? rig.left : rig.right;
    auto& table = m.table_[index(cam)];
    table.resize(static_cast<std::size_t>(ci.width) * ci.height);
    for (int y = 0; y < ci.height; ++y) {
      for (int x = 0; x < ci.width; ++x) {
        table[static_cast<std::size_t>(y) * ci.width + x] =
            m.identity_ ? Eigen::Vector2d(x, y) : m.rectify_exact({x, y}, cam);
      }
    }
  }
  return m;
}

RectificationMap RectificationMap::identity(const RectifiedIntrinsics& intr) {
  StereoRig rig;
  rig.left.fx = rig.left.fy = intr.f;
  rig.left.cx = intr.cu;
  rig.left.cy = intr.cv;
  rig.left.width = intr.width;
  rig.left.height = intr.height;
  rig.right = rig.left;
  rig.translation = Eigen::Vector3d(-intr.baseline, 0.0, 0.0);
  return build(rig);
}

Eigen::Vector2d RectificationMap::rectify_exact(const Eigen::Vector2d& raw,
                                                Camera cam) const {
  const CameraIntrinsics& ci = cam == Camera::kLeft ? rig_.left : rig_.right;
  Eigen::Vector2d n((raw.x() - ci.cx) / ci.fx, (raw.y() - ci.cy) / ci.fy);
  if (ci.has_distortion()) n = undistort_normalized(n, ci.coefficients());
  const Eigen::Vector3d ray = rect_rot_[index(cam)] * Eigen::Vector3d(n.x(), n.y(), 1.0);
  return {intr_.f * ray.x() / ray.z() + intr_.cu, intr_.f * ray.y() / ray.z() + intr_.cv};
}

std::optional<Eigen::Vector2d> RectificationMap::rectify_point(
    const Eigen::Vector2d& raw, Camera cam) const {
  const CameraIntrinsics& ci = cam == Camera::kLeft ? rig_.left : rig_.right;
  if (!ci.contains(raw.x(), raw.y())) return std::nullopt;

  const auto& table = table_[index(cam)];
  const int x0 = std::min(static_cast<int>(raw.x()), ci.width - 1);
  const int y0 = std::min(static_cast<int>(raw.y()), ci.height - 1);
  const int x1 = std::min(x0 + 1, ci.width - 1);
  const int y1 = std::min(y0 + 1, ci.height - 1);
  const double ax = raw.x() - x0, ay = raw.y() - y0;
  auto at = [&](int x, int y) { return table[static_cast<std::size_t>(y) * ci.width + x]; };
  Eigen::Vector2d out = at(x0, y0);
  if (ax != 0.0 || ay != 0.0) {
    out = (1 - ax) * (1 - ay) * at(x0, y0) + ax * (1 - ay) * at(x1, y0) +
          (1 - ax) * ay * at(x0, y1) + ax * ay * at(x1, y1);
  }
  if (!intr_.contains(out.x(), out.y())) return std::nullopt;
  return out;
}

}  // namespace evs
