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

#include "oracles.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>

namespace oracle {

std::vector<Timestamp> tref_from_history(std::span<const evs::Event> history, int width,
                                         int height, Timestamp kappa) {
  // Group by pixel, keeping stream order, then rescan each pixel's list.
  std::map<std::pair<int, int>, std::vector<evs::Event>> per_pixel;
  for (const evs::Event& e : history) {
    if (e.x >= width || e.y >= height) continue;
    per_pixel[{e.x, e.y}].push_back(e);
  }
  std::vector<Timestamp> out(static_cast<std::size_t>(width) * height, evs::kNever);
  for (const auto& [px, events] : per_pixel) {
    Timestamp ref = evs::kNever;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const bool first = i == 0;
      const bool quiet = !first && events[i].t > events[i - 1].t + kappa;
      const bool flip = !first && events[i].polarity != events[i - 1].polarity;
      if (first || quiet || flip) ref = events[i].t;
    }
    out[static_cast<std::size_t>(px.second) * width + px.first] = ref;
  }
  return out;
}

const std::vector<std::array<int, 2>> kCircle3 = {
    {0, 3},  {1, 3},   {2, 2},   {3, 1},   {3, 0},  {3, -1}, {2, -2}, {1, -3},
    {0, -3}, {-1, -3}, {-2, -2}, {-3, -1}, {-3, 0}, {-3, 1}, {-2, 2}, {-1, 3}};

const std::vector<std::array<int, 2>> kCircle4 = {
    {0, 4},   {1, 4},   {2, 3},   {3, 2},   {4, 1},  {4, 0},  {4, -1},
    {3, -2},  {2, -3},  {1, -4},  {0, -4},  {-1, -4}, {-2, -3}, {-3, -2},
    {-4, -1}, {-4, 0},  {-4, 1},  {-3, 2},  {-2, 3},  {-1, 4}};

int longest_arc_exhaustive(std::span<const Timestamp> circle) {
  const int n = static_cast<int>(circle.size());
  int best = 0;
  for (int start = 0; start < n; ++start) {
    for (int len = 1; len < n; ++len) {
      Timestamp oldest_in = std::numeric_limits<Timestamp>::max();
      Timestamp newest_out = std::numeric_limits<Timestamp>::min();
      for (int k = 0; k < n; ++k) {
        const int offset = (k - start + n) % n;
        const Timestamp v = circle[static_cast<std::size_t>(k)];
        if (offset < len) {
          oldest_in = std::min(oldest_in, v);
        } else {
          newest_out = std::max(newest_out, v);
        }
      }
      if (oldest_in > newest_out) best = std::max(best, len);
    }
  }
  return best;
}

namespace {

bool circle_accepts(const evs::RefPatch& patch, const std::vector<std::array<int, 2>>& circle,
                    int lo, int hi) {
  std::vector<Timestamp> values;
  for (const auto& [dx, dy] : circle) {
    values.push_back(patch[static_cast<std::size_t>((4 + dy) * 9 + (4 + dx))]);
  }
  const int n = static_cast<int>(values.size());
  const int arc = longest_arc_exhaustive(values);
  if (arc == 0) return false;
  return (arc >= lo && arc <= hi) || (arc >= n - hi && arc <= n - lo);
}

}  // namespace

bool corner_exhaustive(const evs::RefPatch& patch) {
  return circle_accepts(patch, kCircle3, 3, 6) || circle_accepts(patch, kCircle4, 4, 8);
}

Eigen::Vector2d undistort_newton(const Eigen::Vector2d& distorted,
                                 const std::array<double, 5>& k) {
  auto forward = [&](const Eigen::Vector2d& p) {
    const double x = p.x(), y = p.y(), r2 = x * x + y * y;
    const double radial = 1.0 + k[0] * r2 + k[1] * r2 * r2 + k[4] * r2 * r2 * r2;
    return Eigen::Vector2d(x * radial + 2.0 * k[2] * x * y + k[3] * (r2 + 2.0 * x * x),
                           y * radial + k[2] * (r2 + 2.0 * y * y) + 2.0 * k[3] * x * y);
  };
  Eigen::Vector2d p = distorted;
  const double h = 1e-7;
  for (int it = 0; it < 100; ++it) {
    const Eigen::Vector2d r = forward(p) - distorted;
    if (r.norm() < 1e-15) break;
    Eigen::Matrix2d J;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d dp = Eigen::Vector2d::Zero();
      dp[c] = h;
      J.col(c) = (forward(p + dp) - forward(p - dp)) / (2.0 * h);
    }
    p -= J.inverse() * r;
  }
  return p;
}

Eigen::Matrix4d homogeneous(const evs::Pose& p) {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) T(r, c) = p.R(r, c);
    T(r, 3) = p.t[r];
  }
  return T;
}

Eigen::Vector2d project_matrix(const Eigen::Vector3d& X, const evs::Pose& pose,
                               const evs::RectifiedIntrinsics& intr, evs::Camera which) {
  Eigen::Matrix<double, 3, 4> P = Eigen::Matrix<double, 3, 4>::Zero();
  Eigen::Matrix3d K;
  K << intr.f, 0.0, intr.cu, 0.0, intr.f, intr.cv, 0.0, 0.0, 1.0;
  P.leftCols<3>() = K;
  if (which == evs::Camera::kRight) P.col(3) = K * Eigen::Vector3d(-intr.baseline, 0.0, 0.0);
  const Eigen::Vector4d Xh(X.x(), X.y(), X.z(), 1.0);
  const Eigen::Vector3d x = P * (homogeneous(pose) * Xh);
  return {x[0] / x[2], x[1] / x[2]};
}

Eigen::MatrixXd jacobian_central(std::span<const Eigen::Vector3d> landmarks,
                                 const evs::Pose& pose, const evs::RectifiedIntrinsics& intr,
                                 double step) {
  const auto n = static_cast<Eigen::Index>(landmarks.size());
  Eigen::MatrixXd J(4 * n, 6);
  auto predict = [&](const evs::Pose& p) {
    Eigen::VectorXd out(4 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& X = landmarks[static_cast<std::size_t>(i)];
      out.segment<2>(4 * i) = project_matrix(X, p, intr, evs::Camera::kLeft);
      out.segment<2>(4 * i + 2) = project_matrix(X, p, intr, evs::Camera::kRight);
    }
    return out;
  };
  for (int c = 0; c < 6; ++c) {
    Eigen::Matrix<double, 6, 1> dx = Eigen::Matrix<double, 6, 1>::Zero();
    dx[c] = step;
    // Increment convention: R <- exp(w) R, t <- t + v.
    auto perturbed = [&](double sign) {
      evs::Pose p = pose;
      const Eigen::Vector3d w = sign * dx.head<3>();
      const double angle = w.norm();
      const Eigen::Matrix3d Rw =
          angle > 0.0 ? Eigen::AngleAxisd(angle, w / angle).toRotationMatrix()
                      : Eigen::Matrix3d::Identity();
      p.R = Rw * pose.R;
      p.t = pose.t + sign * dx.tail<3>();
      return p;
    };
    J.col(c) = (predict(perturbed(1.0)) - predict(perturbed(-1.0))) / (2.0 * step);
  }
  return J;
}

std::vector<RpeRow> rpe_brute_force(std::span<const evs::PosePair> pairs,
                                    std::span<const double> lengths) {
  const std::size_t n = pairs.size();
  auto arc_between = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = i + 1; k <= j; ++k) s += (pairs[k].ref.t - pairs[k - 1].ref.t).norm();
    return s;
  };
  std::vector<RpeRow> rows;
  for (double L : lengths) {
    RpeRow row;
    row.length = L;
    double st = 0.0, sr = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (arc_between(i, n - 1) < L) continue;
      std::size_t best = i + 1;
      double best_gap = std::abs(arc_between(i, i + 1) - L);
      for (std::size_t j = i + 2; j < n; ++j) {
        const double gap = std::abs(arc_between(i, j) - L);
        if (gap < best_gap) {
          best_gap = gap;
          best = j;
        }
      }
      const Eigen::Matrix4d ref_rel =
          homogeneous(pairs[i].ref).inverse() * homogeneous(pairs[best].ref);
      const Eigen::Matrix4d est_rel =
          homogeneous(pairs[i].est).inverse() * homogeneous(pairs[best].est);
      const Eigen::Matrix4d delta = ref_rel.inverse() * est_rel;
      const double trans = delta.block<3, 1>(0, 3).norm() / L * 100.0;
      const Eigen::Matrix3d D = delta.block<3, 3>(0, 0);
      const Eigen::Vector3d axis(D(2, 1) - D(1, 2), D(0, 2) - D(2, 0), D(1, 0) - D(0, 1));
      const double angle = std::atan2(0.5 * axis.norm(), 0.5 * (D.trace() - 1.0));
      const double rot = angle * 180.0 / std::numbers::pi / L;
      st += trans * trans;
      sr += rot * rot;
      ++row.samples;
    }
    if (row.samples == 0) continue;
    row.translation = std::sqrt(st / static_cast<double>(row.samples));
    row.rotation = std::sqrt(sr / static_cast<double>(row.samples));
    rows.push_back(row);
  }
  return rows;
}

GridScene grid_scene(std::uint64_t seed, int count, const Eigen::Vector2d& motion) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(0.0, 1.0), disparity(30.0, 60.0);
  GridScene scene;
  const int columns = 12;
  for (int k = 0; k < count; ++k) {
    const Eigen::Vector2d left(100.0 + 40.0 * (k % columns), 20.0 + 6.0 * (k / columns));
    const Eigen::Vector2d right = left - Eigen::Vector2d(disparity(rng), 0.0);
    evs::Descriptor d;
    d.window = 5;
    for (int i = 0; i < 25; ++i) d.values.push_back(value(rng));
    auto feature = [&](const Eigen::Vector2d& p) {
      evs::Feature f;
      f.corner = evs::Corner{static_cast<int>(p.x()), static_cast<int>(p.y()), 1000, evs::Polarity::kPositive};
      f.position = p;
      f.descriptor = d;
      f.descriptor.center = p;
      return f;
    };
    scene.current.left.push_back(feature(left));
    scene.current.right.push_back(feature(right));
    scene.previous.left.push_back(feature(left + motion));
    scene.previous.right.push_back(feature(right + motion));
  }
  return scene;
}

void inject_decoy(GridScene& scene, std::size_t k, int link) {
  const evs::Feature& l_now = scene.current.left[k];
  const evs::Feature& r_now = scene.current.right[k];
  const evs::Feature& r_prev = scene.previous.right[k];
  const evs::Feature& l_prev = scene.previous.left[k];
  evs::Feature decoy = l_now;
  std::vector<evs::Feature>* target = nullptr;
  switch (link) {
    case 0:  // smaller disparity wins the stereo tie; too far from R' to follow it
      decoy.position = l_now.position - Eigen::Vector2d(5.0, 0.0);
      target = &scene.current.right;
      break;
    case 1:  // smaller displacement wins the temporal tie; off the L' epipolar band
      decoy.position = r_now.position + Eigen::Vector2d(0.0, -3.0);
      target = &scene.previous.right;
      break;
    case 2:  // smaller disparity; too far from L(t) for the closing link
      decoy.position = r_prev.position + Eigen::Vector2d(5.0, 0.0);
      target = &scene.previous.left;
      break;
    default:  // smaller displacement; lands 5 px from L(t)
      decoy.position = l_prev.position + Eigen::Vector2d(0.0, 3.0);
      target = &scene.current.left;
      break;
  }
  decoy.descriptor.center = decoy.position;
  decoy.corner.x = static_cast<int>(decoy.position.x());
  decoy.corner.y = static_cast<int>(decoy.position.y());
  target->push_back(decoy);
}

int attribute(const evs::Scenario& sc, const evs::Feature& f, evs::Camera cam, double radius) {
  const evs::Pose pose = sc.pose_at(f.corner.t);
  // World point into the chosen camera, then the pinhole model.
  const evs::Pose left_from_world = evs::inverse(pose);
  int best = -1;
  double best_d = radius;
  for (const evs::Junction& j : sc.junctions) {
    Eigen::Vector3d X = left_from_world.R * j.position + left_from_world.t;
    if (cam == evs::Camera::kRight) X = sc.rig.rotation * X + sc.rig.translation;
    if (X.z() <= 1e-6) continue;
    const evs::CameraIntrinsics& ci = cam == evs::Camera::kLeft ? sc.rig.left : sc.rig.right;
    const Eigen::Vector2d px(ci.fx * X.x() / X.z() + ci.cx, ci.fy * X.y() / X.z() + ci.cy);
    const double d = (px - f.position).norm();
    if (d <= best_d) {
      best_d = d;
      best = j.id;
    }
  }
  return best;
}

CorrespondenceScore score_circles(const evs::Scenario& sc, const evs::FrameFeatures& current,
                                  const evs::FrameFeatures& previous,
                                  std::span<const evs::QuadMatch> circles, double radius) {
  const std::array<const std::vector<evs::Feature>*, 4> sets = {
      &current.left, &current.right, &previous.right, &previous.left};
  const std::array<evs::Camera, 4> cams = {evs::Camera::kLeft, evs::Camera::kRight,
                                           evs::Camera::kRight, evs::Camera::kLeft};
  std::array<std::set<int>, 4> seen;
  for (int v = 0; v < 4; ++v) {
    for (const evs::Feature& f : *sets[v]) {
      const int id = attribute(sc, f, cams[v], radius);
      if (id >= 0) seen[v].insert(id);
    }
  }
  std::set<int> covisible;
  for (int id : seen[0]) {
    if (seen[1].count(id) && seen[2].count(id) && seen[3].count(id)) covisible.insert(id);
  }
  CorrespondenceScore score;
  score.covisible = covisible.size();
  std::set<int> closed;
  for (const evs::QuadMatch& q : circles) {
    ++score.circles;
    std::array<int, 4> ids{};
    std::set<int> distinct;
    for (int v = 0; v < 4; ++v) {
      ids[v] = attribute(sc, (*sets[v])[q.feature[v]], cams[v], radius);
      if (ids[v] >= 0) distinct.insert(ids[v]);
    }
    if (distinct.size() > 1) ++score.false_circles;
    if (ids[0] >= 0 && ids[0] == ids[1] && ids[1] == ids[2] && ids[2] == ids[3]) {
      closed.insert(ids[0]);
    }
  }
  for (int id : closed) score.recovered += covisible.count(id);
  return score;
}

}  // namespace oracle
