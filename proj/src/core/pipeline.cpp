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

#include "evstereo/pipeline.hpp"

#include <algorithm>
#include <string>

#include "evstereo/error.hpp"

namespace evs {

namespace {

constexpr Timestamp kMinRecencyWindow = 1'000;
constexpr Timestamp kMaxRecencyWindow = 20'000;

const char* camera_name(Camera cam) { return cam == Camera::kLeft ? "left" : "right"; }

TimeSurface blank_surface(const RectifiedIntrinsics& intr, Timestamp t, double delta,
                          Camera cam) {
  TimeSurface ts;
  ts.width = intr.width;
  ts.height = intr.height;
  ts.values.assign(static_cast<std::size_t>(intr.width) * intr.height, 0.0);
  ts.stamp = t;
  ts.delta = delta;
  ts.camera = cam;
  ts.rectified = true;
  return ts;
}

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "pipeline config: " + what);
  };
  if (events_per_estimate <= 0) fail("N must be positive");
  if (max_interval <= 0) fail("max_interval must be positive");
  if (!(delta > 0.0)) fail("delta must be positive");
  if (kappa < 0) fail("kappa must be non-negative");
  if (recency_window < 0) fail("recency window must be non-negative");
  if (matcher.window <= 0 || matcher.window % 2 == 0) fail("descriptor window must be odd");
  if (!(matcher.zncc_min > 0.0) || matcher.zncc_min > 1.0) fail("zncc_min must be in (0, 1]");
  if (!(matcher.epipolar_tolerance > 0.0)) fail("epipolar tolerance must be positive");
  if (!(matcher.temporal_radius > 0.0)) fail("temporal radius must be positive");
  if (!(matcher.closure_tolerance > 0.0)) fail("closure tolerance must be positive");
  if (matcher.d_max < 0.0) fail("d_max must be non-negative");
  if (!(limits.d_min > 0.0) || !(limits.z_max > 0.0)) fail("depth limits must be positive");
  if (ransac.hypotheses <= 0 || ransac.sample_size < 3) fail("bad RANSAC sampling");
  if (!(ransac.inlier_threshold > 0.0)) fail("inlier threshold must be positive");
  if (ransac.min_inliers <= 0) fail("min inliers must be positive");
}

std::vector<Pose> poses_of(std::span<const TrajectoryEntry> entries) {
  std::vector<Pose> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.pose);
  return out;
}

Odometry::Odometry(PipelineConfig config, RectificationMap rmap)
    : config_(std::move(config)),
      rmap_(std::move(rmap)),
      maps_{TimestampMap(rmap_.rig().left.width, rmap_.rig().left.height, config_.kappa),
            TimestampMap(rmap_.rig().right.width, rmap_.rig().right.height, config_.kappa)},
      rng_(config_.seed) {
  config_.validate();
}

Timestamp Odometry::current_recency_window(Camera cam) const {
  if (config_.recency_window > 0) return config_.recency_window;
  const auto& stamps = recent_stamps_[index(cam)];
  if (stamps.size() < 2) return kMaxRecencyWindow;
  return std::clamp(stamps.back() - stamps.front(), kMinRecencyWindow, kMaxRecencyWindow);
}

std::vector<TrajectoryEntry> Odometry::push(const Event& e, Camera cam) {
  std::vector<TrajectoryEntry> out;
  const int c = index(cam);
  if (started_ && e.t < latest_) {
    throw Error(ErrorCode::kStreamOrder,
                std::string("stream order violation: ") + camera_name(cam) + " event #" +
                    std::to_string(stats_.events[c]) + " at t=" + std::to_string(e.t) +
                    " us precedes already processed t=" + std::to_string(latest_) + " us");
  }
  if (!started_) {
    started_ = true;
    last_estimate_ = e.t;
    const RectifiedIntrinsics& intr = rmap_.intrinsics();
    prev_surfaces_ = {blank_surface(intr, e.t, config_.delta, Camera::kLeft),
                      blank_surface(intr, e.t, config_.delta, Camera::kRight)};
    TrajectoryEntry first;
    first.pose = Pose::identity(e.t);
    first.increment = Pose::identity(e.t);
    trajectory_.push_back(first);
    out.push_back(first);
  }

  while (e.t > last_estimate_ + config_.max_interval) {
    out.push_back(estimate(last_estimate_ + config_.max_interval, true));
  }

  latest_ = e.t;
  ++stats_.events[c];
  if (!maps_[c].ingest(e)) {
    ++stats_.dropped_events;
    return out;
  }
  ++events_since_estimate_;
  auto& stamps = recent_stamps_[c];
  stamps.push_back(e.t);
  const auto keep = static_cast<std::size_t>(std::max<std::int64_t>(2, config_.events_per_estimate / 10));
  while (stamps.size() > keep) stamps.pop_front();

  if (detect(maps_[c], e)) {
    corners_[c].push_back(Corner{e.x, e.y, e.t, e.polarity});
    ++stats_.corners[c];
  }

  if (cam == Camera::kLeft) ++left_since_estimate_;
  if (left_since_estimate_ >= config_.events_per_estimate && e.t > last_estimate_) {
    out.push_back(estimate(e.t, false));
  }
  return out;
}

std::vector<TrajectoryEntry> Odometry::step(std::span<const Event> left,
                                            std::span<const Event> right) {
  std::vector<TrajectoryEntry> out;
  std::size_t i = 0, j = 0;
  while (i < left.size() || j < right.size()) {
    const bool take_left = j >= right.size() || (i < left.size() && left[i].t <= right[j].t);
    auto produced = take_left ? push(left[i++], Camera::kLeft) : push(right[j++], Camera::kRight);
    out.insert(out.end(), produced.begin(), produced.end());
  }
  return out;
}

std::vector<TrajectoryEntry> Odometry::finish() {
  std::vector<TrajectoryEntry> out;
  if (started_ && events_since_estimate_ > 0 && latest_ > last_estimate_) {
    out.push_back(estimate(latest_, left_since_estimate_ < config_.events_per_estimate));
  }
  return out;
}

TrajectoryEntry Odometry::estimate(Timestamp t, bool low_event) {
  const RectifiedIntrinsics& intr = rmap_.intrinsics();
  std::array<TimeSurface, 2> surfaces = {
      render_rectified(maps_[0], t, config_.delta, rmap_, Camera::kLeft),
      render_rectified(maps_[1], t, config_.delta, rmap_, Camera::kRight)};

  FrameFeatures current;
  for (Camera cam : {Camera::kLeft, Camera::kRight}) {
    const int c = index(cam);
    const auto fresh = recency_filter(corners_[c], t, current_recency_window(cam));
    auto features = build_features(fresh, surfaces[c], rmap_, cam, config_.matcher.window);
    (cam == Camera::kLeft ? current.left : current.right) = std::move(features);
    corners_[c].clear();
  }

  const auto quads = match_circular(current, prev_features_, config_.matcher, intr.width);
  std::vector<Eigen::Vector3d> landmarks;
  std::vector<StereoObservation> observed;
  for (std::size_t q = 0; q < quads.size(); ++q) {
    if (!satisfies_stereo_constraints(quads[q], config_.matcher, intr.width)) {
      throw Error(ErrorCode::kRuntime, "matcher emitted a circle violating stereo constraints");
    }
    const auto lm = triangulate(quads[q], q, intr, config_.limits);
    if (!lm) continue;
    landmarks.push_back(lm->X);
    observed.push_back({quads[q].at(View::kLeftNow), quads[q].at(View::kRightNow)});
  }

  MotionEstimate motion;
  motion.status = EstimateStatus::kDegenerate;
  if (landmarks.size() >= static_cast<std::size_t>(config_.ransac.sample_size)) {
    motion = ransac_estimate(landmarks, observed, intr, rng_, config_.ransac);
  }

  TrajectoryEntry entry;
  entry.low_event = low_event;
  entry.matches = landmarks.size();
  entry.failed = !motion.ok();
  entry.inliers = entry.failed ? 0 : motion.inliers.size();
  entry.increment = entry.failed ? Pose::identity(t) : motion.pose;
  entry.increment.stamp = t;
  // The increment maps previous-camera coordinates into the current camera.
  entry.pose = compose(trajectory_.back().pose, inverse(entry.increment));
  entry.pose.stamp = t;
  trajectory_.push_back(entry);

  ++stats_.estimates;
  if (entry.failed) ++stats_.failed_estimates;
  if (low_event) ++stats_.stall_estimates;
  stats_.dropped_events = maps_[0].dropped() + maps_[1].dropped();

  if (sink_) sink_(stats_.estimates, surfaces[0], surfaces[1]);
  prev_surfaces_ = std::move(surfaces);
  prev_features_ = std::move(current);
  last_estimate_ = t;
  left_since_estimate_ = 0;
  events_since_estimate_ = 0;
  return entry;
}

RunResult run(const PipelineConfig& config, const RectificationMap& rmap,
              EventSource& left, EventSource& right, SurfaceSink sink) {
  Odometry odo(config, rmap);
  if (sink) odo.set_surface_sink(std::move(sink));
  std::optional<Event> l = left.next();
  std::optional<Event> r = right.next();
  while (l || r) {
    if (l && (!r || l->t <= r->t)) {
      odo.push(*l, Camera::kLeft);
      l = left.next();
    } else {
      odo.push(*r, Camera::kRight);
      r = right.next();
    }
  }
  odo.finish();
  return {odo.trajectory(), odo.stats()};
}

RunResult run(const PipelineConfig& config, const RectificationMap& rmap,
              std::span<const Event> left, std::span<const Event> right) {
  VectorSource ls(left), rs(right);
  return run(config, rmap, ls, rs);
}

}  // namespace evs
