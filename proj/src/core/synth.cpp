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

#include "evstereo/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <tuple>

#include "evstereo/error.hpp"

namespace evs {

namespace {

constexpr double kNear = 0.05;         // m, clip plane for projection
constexpr double kBand = 1.25;         // px, distances tracked around each edge
constexpr double kMaxJitterUs = 20'000.0;

struct Segment2d {
  Eigen::Vector2d p0, p1;
  int contrast = 1;
};

Eigen::Vector3d world_to_camera(const Scenario& sc, const Eigen::Vector3d& w, const Pose& pose,
                                Camera cam) {
  const Eigen::Vector3d xl = pose.R.transpose() * (w - pose.t);
  if (cam == Camera::kLeft) return xl;
  return sc.rig.rotation * xl + sc.rig.translation;
}

const CameraIntrinsics& intrinsics_of(const Scenario& sc, Camera cam) {
  return cam == Camera::kLeft ? sc.rig.left : sc.rig.right;
}

Eigen::Vector2d pixel(const CameraIntrinsics& ci, const Eigen::Vector3d& x) {
  return {ci.fx * x.x() / x.z() + ci.cx, ci.fy * x.y() / x.z() + ci.cy};
}

// Liang-Barsky clip of p0-p1 against [lo, hi]; false when fully outside.
bool clip_2d(Eigen::Vector2d& p0, Eigen::Vector2d& p1, const Eigen::Vector2d& lo,
             const Eigen::Vector2d& hi) {
  double t0 = 0.0, t1 = 1.0;
  const Eigen::Vector2d d = p1 - p0;
  for (int k = 0; k < 2; ++k) {
    const double p[2] = {-d(k), d(k)};
    const double q[2] = {p0(k) - lo(k), hi(k) - p0(k)};
    for (int s = 0; s < 2; ++s) {
      if (p[s] == 0.0) {
        if (q[s] < 0.0) return false;
        continue;
      }
      const double r = q[s] / p[s];
      if (p[s] < 0.0) {
        t0 = std::max(t0, r);
      } else {
        t1 = std::min(t1, r);
      }
    }
  }
  if (t0 > t1) return false;
  const Eigen::Vector2d a = p0 + t0 * d;
  p1 = p0 + t1 * d;
  p0 = a;
  return true;
}

std::vector<Segment2d> project_segments(const Scenario& sc, const Pose& pose, Camera cam) {
  const CameraIntrinsics& ci = intrinsics_of(sc, cam);
  const Eigen::Vector2d lo(-kBand - 1.0, -kBand - 1.0);
  const Eigen::Vector2d hi(ci.width + kBand, ci.height + kBand);
  std::vector<Segment2d> out;
  out.reserve(sc.segments.size());
  for (const Segment& s : sc.segments) {
    Eigen::Vector3d a = world_to_camera(sc, s.a, pose, cam);
    Eigen::Vector3d b = world_to_camera(sc, s.b, pose, cam);
    if (a.z() < kNear && b.z() < kNear) continue;
    if (a.z() < kNear) a = b + (a - b) * ((b.z() - kNear) / (b.z() - a.z()));
    if (b.z() < kNear) b = a + (b - a) * ((a.z() - kNear) / (a.z() - b.z()));
    Segment2d seg{pixel(ci, a), pixel(ci, b), s.contrast};
    if (!clip_2d(seg.p0, seg.p1, lo, hi)) continue;
    out.push_back(seg);
  }
  return out;
}

// Per-pixel distance to the nearest projected edge, kept only within kBand.
struct DistanceField {
  int width = 0;
  int height = 0;
  std::vector<float> dist;
  std::vector<std::int8_t> side;
  std::vector<int> touched;

  DistanceField(int w, int h)
      : width(w),
        height(h),
        dist(static_cast<std::size_t>(w) * h, static_cast<float>(kBand)),
        side(static_cast<std::size_t>(w) * h, 1) {}

  void clear() {
    for (int p : touched) dist[static_cast<std::size_t>(p)] = static_cast<float>(kBand);
    touched.clear();
  }

  // Nearest-edge update for pixel (x, y); `e` is the unit direction and
  // `len` the length of the segment.
  void visit(int x, int y, const Segment2d& s, const Eigen::Vector2d& e, double len) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const double ax = x - s.p0.x(), ay = y - s.p0.y();
    const double along = ax * e.x() + ay * e.y();
    const double across = ay * e.x() - ax * e.y();
    double r;
    if (along < 0.0) {
      r = std::sqrt(ax * ax + ay * ay);
    } else if (along > len) {
      r = std::hypot(x - s.p1.x(), y - s.p1.y());
    } else {
      r = std::abs(across);
    }
    if (r >= kBand) return;
    const auto idx = static_cast<std::size_t>(y) * width + x;
    float& cell = dist[idx];
    if (cell >= static_cast<float>(kBand)) touched.push_back(static_cast<int>(idx));
    if (r < cell) {
      cell = static_cast<float>(r);
      side[idx] = static_cast<std::int8_t>((across < 0.0 ? -1 : 1) * s.contrast);
    }
  }

  void rasterize(const Segment2d& s) {
    const Eigen::Vector2d d = s.p1 - s.p0;
    const double len = d.norm();
    const Eigen::Vector2d e = len > 0.0 ? Eigen::Vector2d(d / len) : Eigen::Vector2d(1.0, 0.0);
    const bool x_major = std::abs(d.x()) >= std::abs(d.y());
    const int major = x_major ? 0 : 1;
    const int minor = 1 - major;
    const double lo = std::min(s.p0(major), s.p1(major)) - kBand;
    const double hi = std::max(s.p0(major), s.p1(major)) + kBand;
    const double slope = d(major) != 0.0 ? d(minor) / d(major) : 0.0;
    // The band around the segment, endpoint caps included, lies within this
    // distance of the clamped centerline along the minor axis.
    const double reach = kBand * std::sqrt(1.0 + slope * slope);
    const int limit = major == 0 ? width : height;
    const int m0 = std::max(0, static_cast<int>(std::ceil(lo)));
    const int m1 = std::min(limit - 1, static_cast<int>(std::floor(hi)));
    for (int m = m0; m <= m1; ++m) {
      double u = d(major) != 0.0 ? (m - s.p0(major)) / d(major) : 0.0;
      u = std::clamp(u, 0.0, 1.0);
      const double c = s.p0(minor) + u * d(minor);
      const int n0 = static_cast<int>(std::ceil(c - reach));
      const int n1 = static_cast<int>(std::floor(c + reach));
      for (int n = n0; n <= n1; ++n) {
        if (x_major) {
          visit(m, n, s, e, len);
        } else {
          visit(n, m, s, e, len);
        }
      }
    }
  }
};

bool scene_visible(const Scenario& sc, const Pose& pose) {
  const CameraIntrinsics& ci = sc.rig.left;
  const Eigen::Vector2d lo(0.0, 0.0), hi(ci.width - 1.0, ci.height - 1.0);
  for (const Segment2d& s : project_segments(sc, pose, Camera::kLeft)) {
    Eigen::Vector2d a = s.p0, b = s.p1;
    if (clip_2d(a, b, lo, hi)) return true;
  }
  return false;
}

Timestamp step_time(const Scenario& sc, std::int64_t k) {
  return static_cast<Timestamp>(std::llround(static_cast<double>(k) * sc.time_step));
}

}  // namespace

double Scenario::duration() const {
  double d = 0.0;
  for (const auto& m : motion) d += m.duration;
  return d;
}

Timestamp Scenario::duration_us() const {
  return static_cast<Timestamp>(std::llround(duration() * 1e6));
}

Pose Scenario::pose_at(Timestamp t) const {
  Pose p = start;
  double remaining = static_cast<double>(t) * 1e-6;
  for (const auto& m : motion) {
    const double s = std::min(remaining, m.duration);
    if (s <= 0.0) break;
    p.t += m.velocity * s;
    p.R = p.R * exp_so3(m.angular_velocity * s);
    remaining -= s;
  }
  p.stamp = t;
  return p;
}

void Scenario::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "scenario: " + what);
  };
  rig.validate();
  if (rig.left.has_distortion() || rig.right.has_distortion()) fail("rig must be undistorted");
  if (segments.empty()) fail("no segments");
  if (!(time_step > 0.0) || time_step > 200.0) fail("time step must be in (0, 200] us");
  for (const auto& m : motion) {
    if (!(m.duration >= 0.0)) fail("negative motion duration");
  }
  if (!(duration() > 0.0)) fail("duration must be positive");
  if (!(events_per_crossing >= 0.0) || !(jitter_us >= 0.0) || !(jitter_px >= 0.0) ||
      !(spurious_rate >= 0.0)) {
    fail("noise and density parameters must be non-negative");
  }
  if (track_period <= 0) fail("track period must be positive");
  if (!start.is_valid()) fail("start pose is not a rotation");
}

std::optional<Eigen::Vector2d> project_world(const Scenario& sc, const Eigen::Vector3d& world,
                                             const Pose& world_from_left, Camera cam) {
  const Eigen::Vector3d x = world_to_camera(sc, world, world_from_left, cam);
  if (x.z() < kNear) return std::nullopt;
  return pixel(intrinsics_of(sc, cam), x);
}

SynthOutput generate(const Scenario& sc, std::uint64_t seed) {
  sc.validate();
  const Timestamp total = sc.duration_us();
  constexpr int kSamples = 100;
  int visible = 0;
  for (int i = 0; i <= kSamples; ++i) {
    if (scene_visible(sc, sc.pose_at(total * i / kSamples))) ++visible;
  }
  if (visible * 10 < (kSamples + 1) * 9) {
    throw Error(ErrorCode::kDegenerate, "scenario: scene is not in front of the camera for 90% of the trajectory");
  }

  SynthOutput out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::int64_t steps = static_cast<std::int64_t>(std::ceil(static_cast<double>(total) / sc.time_step));
  const double dt = sc.time_step;
  std::array<DistanceField, 2> prev{DistanceField(sc.rig.left.width, sc.rig.left.height),
                                    DistanceField(sc.rig.right.width, sc.rig.right.height)};
  std::array<DistanceField, 2> cur = prev;
  std::array<std::vector<Event>*, 2> streams{&out.left, &out.right};
  std::vector<float> rates;  // px per us at each crossing, both cameras

  Timestamp next_track = 0;
  for (std::int64_t k = 0; k <= steps; ++k) {
    const Timestamp t = std::min(step_time(sc, k), total);
    const Pose pose = sc.pose_at(t);
    out.ground_truth.push_back(pose);

    if (t >= next_track) {
      for (const Junction& j : sc.junctions) {
        for (Camera cam : {Camera::kLeft, Camera::kRight}) {
          const auto px = project_world(sc, j.position, pose, cam);
          if (px && intrinsics_of(sc, cam).contains(px->x(), px->y())) {
            out.tracks.push_back({j.id, t, cam, px->x(), px->y()});
          }
        }
      }
      next_track += sc.track_period;
    }

    const double step_dt = k == 0 ? dt : static_cast<double>(t - out.ground_truth[k - 1].stamp);
    for (Camera cam : {Camera::kLeft, Camera::kRight}) {
      const int c = index(cam);
      std::swap(prev[c], cur[c]);
      cur[c].clear();
      for (const Segment2d& s : project_segments(sc, pose, cam)) cur[c].rasterize(s);
      if (k == 0) continue;
      const Timestamp t0 = out.ground_truth[k - 1].stamp;
      for (int p : cur[c].touched) {
        const auto idx = static_cast<std::size_t>(p);
        const double d1 = cur[c].dist[idx];
        const double d0 = prev[c].dist[idx];
        if (!(d1 < 1.0 && d0 >= 1.0)) continue;
        const double frac = (d0 - 1.0) / (d0 - d1);
        const double crossing = static_cast<double>(t0) + frac * step_dt;
        rates.push_back(static_cast<float>((d0 - d1) / step_dt));
        double count = std::floor(sc.events_per_crossing);
        if (uniform(rng) < sc.events_per_crossing - count) count += 1.0;
        for (int e = 0; e < static_cast<int>(count); ++e) {
          Event ev;
          ev.x = static_cast<std::uint16_t>(p % cur[c].width);
          ev.y = static_cast<std::uint16_t>(p / cur[c].width);
          ev.t = std::llround(crossing) + e;
          ev.polarity = cur[c].side[idx] < 0 ? Polarity::kNegative : Polarity::kPositive;
          streams[c]->push_back(ev);
        }
      }
    }
    if (t == total) break;
  }

  // Timestamp noise: jitter_px is converted to time at the median edge
  // speed of the run, so every event gets the same sigma.
  double sigma = sc.jitter_us;
  if (sc.jitter_px > 0.0 && !rates.empty()) {
    auto mid = rates.begin() + static_cast<std::ptrdiff_t>(rates.size() / 2);
    std::nth_element(rates.begin(), mid, rates.end());
    sigma += std::min(sc.jitter_px / static_cast<double>(*mid), kMaxJitterUs);
  }
  out.jitter_sigma_us = sigma;
  if (sigma > 0.0) {
    for (auto* s : streams) {
      for (Event& ev : *s) {
        ev.t = std::clamp<Timestamp>(ev.t + std::llround(sigma * gauss(rng)), 0, total);
      }
    }
  }

  if (sc.spurious_rate > 0.0) {
    for (Camera cam : {Camera::kLeft, Camera::kRight}) {
      const CameraIntrinsics& ci = intrinsics_of(sc, cam);
      std::poisson_distribution<long long> count(sc.spurious_rate * ci.width * ci.height *
                                                 sc.duration());
      const long long n = count(rng);
      for (long long i = 0; i < n; ++i) {
        Event ev;
        ev.x = static_cast<std::uint16_t>(std::min<double>(ci.width - 1, uniform(rng) * ci.width));
        ev.y = static_cast<std::uint16_t>(std::min<double>(ci.height - 1, uniform(rng) * ci.height));
        ev.t = std::min<Timestamp>(total, static_cast<Timestamp>(uniform(rng) * static_cast<double>(total)));
        ev.polarity = uniform(rng) < 0.5 ? Polarity::kNegative : Polarity::kPositive;
        streams[index(cam)]->push_back(ev);
      }
    }
  }

  for (auto* s : streams) {
    std::sort(s->begin(), s->end(), [](const Event& a, const Event& b) {
      return std::tie(a.t, a.y, a.x, a.polarity) < std::tie(b.t, b.y, b.x, b.polarity);
    });
  }
  return out;
}

namespace {

CameraIntrinsics pinhole(double f, int width, int height) {
  CameraIntrinsics ci;
  ci.fx = f;
  ci.fy = f;
  ci.cx = 0.5 * (width - 1);
  ci.cy = 0.5 * (height - 1);
  ci.width = width;
  ci.height = height;
  return ci;
}

StereoRig horizontal_rig(double f, int width, int height, double baseline) {
  StereoRig rig;
  rig.left = pinhole(f, width, height);
  rig.right = rig.left;
  rig.translation = Eigen::Vector3d(-baseline, 0.0, 0.0);
  return rig;
}

void add_segment(Scenario& sc, const Eigen::Vector3d& a, const Eigen::Vector3d& b, int contrast) {
  sc.segments.push_back({a, b, contrast});
}

void add_junction(Scenario& sc, const Eigen::Vector3d& p) {
  sc.junctions.push_back({static_cast<int>(sc.junctions.size()), p});
}

}  // namespace

StereoRig mvsec_like_rig() { return horizontal_rig(226.0, 346, 260, 0.10); }

StereoRig dsec_like_rig() { return horizontal_rig(560.0, 640, 480, 0.60); }

Scenario corridor_scenario(const CorridorOptions& o) {
  Scenario sc;
  sc.name = "corridor";
  sc.rig = mvsec_like_rig();
  const double hw = 0.5 * o.width, hh = 0.5 * o.height;
  const int frames = static_cast<int>(std::floor(o.length / o.brace_spacing + 1e-9));
  // Wall corners in order around the cross-section (y points down).
  const std::array<Eigen::Vector2d, 4> ring{Eigen::Vector2d(-hw, -hh), Eigen::Vector2d(hw, -hh),
                                            Eigen::Vector2d(hw, hh), Eigen::Vector2d(-hw, hh)};
  auto at = [](const Eigen::Vector2d& c, double z) { return Eigen::Vector3d(c.x(), c.y(), z); };
  for (int k = 0; k <= frames; ++k) {
    const double z = k * o.brace_spacing;
    for (int w = 0; w < 4; ++w) {
      add_segment(sc, at(ring[w], z), at(ring[(w + 1) % 4], z), (k + w) % 2 == 0 ? 1 : -1);
      add_junction(sc, at(ring[w], z));
    }
    if (k == frames) continue;
    const double z1 = z + o.brace_spacing;
    for (int w = 0; w < 4; ++w) {
      const Eigen::Vector2d& c0 = ring[w];
      const Eigen::Vector2d& c1 = ring[(w + 1) % 4];
      if (o.diagonal_braces) {
        add_segment(sc, at(c0, z), at(c1, z1), w % 2 == 0 ? 1 : -1);
        add_segment(sc, at(c1, z), at(c0, z1), w % 2 == 0 ? -1 : 1);
        add_junction(sc, at(0.5 * (c0 + c1), 0.5 * (z + z1)));
      }
      if (o.tile_size > 0.0) {
        // Diamond on the wall panel: every edge is oblique to the corridor axis.
        const Eigen::Vector2d mid = 0.5 * (c0 + c1);
        const Eigen::Vector2d across = 0.5 * o.tile_size * (c1 - c0).normalized();
        const double zm = 0.5 * (z + z1), h = 0.5 * o.tile_size;
        const std::array<Eigen::Vector3d, 4> v{at(mid, zm - h), at(mid + across, zm),
                                               at(mid, zm + h), at(mid - across, zm)};
        const int contrast = (k + w) % 2 == 0 ? -1 : 1;
        for (int i = 0; i < 4; ++i) {
          add_segment(sc, v[i], v[(i + 1) % 4], contrast);
          add_junction(sc, v[i]);
        }
      }
    }
  }
  for (int w = 0; w < 4; ++w) {
    add_segment(sc, at(ring[w], 0.0), at(ring[w], frames * o.brace_spacing), 1);
  }

  sc.start = Pose::identity();
  sc.start.t = Eigen::Vector3d(0.2, 0.1, -1.0);
  MotionPiece m;
  if (o.distance > 0.0) {
    m.duration = o.distance / o.speed;
    m.velocity = Eigen::Vector3d(o.lateral_speed, 0.0, o.speed);
  } else {
    m.duration = o.still_duration;
  }
  m.angular_velocity = Eigen::Vector3d(0.0, o.yaw_rate, 0.0);
  sc.motion.push_back(m);
  sc.jitter_px = o.jitter_px;
  sc.spurious_rate = o.spurious_rate;
  return sc;
}

Scenario street_scenario(const StreetOptions& o) {
  Scenario sc;
  sc.name = "street";
  sc.rig = dsec_like_rig();
  const double ground = 1.5;  // camera height above the road, y down
  const double length = o.distance + 60.0;
  int n = 0;
  for (double side : {-1.0, 1.0}) {
    for (double z = 4.0; z < length; z += 12.0, ++n) {
      const double x0 = side * 6.0;
      const double x1 = side * 14.0;
      const double depth = 9.0;
      const double top = ground - 6.0 - 3.0 * (n % 3);
      // Facade outline, a window grid, and the roof edge.
      const Eigen::Vector3d a(x0, ground, z), b(x0, ground, z + depth), c(x0, top, z + depth),
          d(x0, top, z);
      const int contrast = n % 2 == 0 ? 1 : -1;
      add_segment(sc, a, b, contrast);
      add_segment(sc, b, c, contrast);
      add_segment(sc, c, d, contrast);
      add_segment(sc, d, a, contrast);
      add_segment(sc, d, Eigen::Vector3d(x1, top, z), -contrast);
      add_segment(sc, c, Eigen::Vector3d(x1, top, z + depth), -contrast);
      for (const auto& p : {a, b, c, d}) add_junction(sc, p);
      for (double wz = z + 1.5; wz + 1.5 < z + depth; wz += 3.0) {
        for (double wy = ground - 2.5; wy - 1.5 > top; wy -= 3.0) {
          const Eigen::Vector3d p0(x0, wy, wz), p1(x0, wy, wz + 1.5), p2(x0, wy - 1.5, wz + 1.5),
              p3(x0, wy - 1.5, wz);
          add_segment(sc, p0, p1, -contrast);
          add_segment(sc, p1, p2, -contrast);
          add_segment(sc, p2, p3, -contrast);
          add_segment(sc, p3, p0, -contrast);
          for (const auto& p : {p0, p1, p2, p3}) add_junction(sc, p);
        }
      }
    }
  }
  sc.start = Pose::identity();
  MotionPiece m;
  m.duration = o.distance / o.speed;
  m.velocity = Eigen::Vector3d(0.0, 0.0, o.speed);
  sc.motion.push_back(m);
  sc.jitter_px = o.jitter_px;
  return sc;
}

Scenario edge_scenario(double depth, double speed, double duration) {
  Scenario sc;
  sc.name = "edge";
  sc.rig = mvsec_like_rig();
  add_segment(sc, Eigen::Vector3d(0.0, -10.0, depth), Eigen::Vector3d(0.0, 10.0, depth), 1);
  add_junction(sc, Eigen::Vector3d(0.0, 0.0, depth));
  sc.start = Pose::identity();
  sc.start.t = Eigen::Vector3d(-0.5 * speed * duration, 0.0, 0.0);
  MotionPiece m;
  m.duration = duration;
  m.velocity = Eigen::Vector3d(speed, 0.0, 0.0);
  sc.motion.push_back(m);
  return sc;
}

}  // namespace evs
