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

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evstereo/detector.hpp"
#include "evstereo/event_core.hpp"
#include "evstereo/matcher.hpp"
#include "evstereo/pose.hpp"
#include "evstereo/surface.hpp"

namespace evs {

struct PipelineConfig {
  std::int64_t events_per_estimate = 10000;  // N, counted on the left camera
  Timestamp max_interval = 1'000'000;        // us
  double delta = 30'000.0;                   // time-surface decay, us
  Timestamp kappa = 50'000;                  // refractory interval, us
  Timestamp recency_window = 0;              // us; 0 = adaptive (N/10 events)
  MatcherConfig matcher;
  TriangulationLimits limits;
  RansacOptions ransac;
  std::uint64_t seed = 42;

  void validate() const;
};

struct TrajectoryEntry {
  Pose pose;       // absolute, world-from-camera; pose.stamp is the slice time
  Pose increment;  // previous-from-current camera motion as estimated
  bool failed = false;     // identity increment substituted
  bool low_event = false;  // triggered by max_interval, not by N events
  std::size_t matches = 0;
  std::size_t inliers = 0;
};

std::vector<Pose> poses_of(std::span<const TrajectoryEntry> entries);

struct PipelineStats {
  std::uint64_t events[2] = {0, 0};
  std::uint64_t dropped_events = 0;
  std::uint64_t corners[2] = {0, 0};
  std::uint64_t estimates = 0;
  std::uint64_t failed_estimates = 0;
  std::uint64_t stall_estimates = 0;
};

/// Source of one camera's time-ordered events.
class EventSource {
 public:
  virtual ~EventSource() = default;
  virtual std::optional<Event> next() = 0;
};

class VectorSource final : public EventSource {
 public:
  explicit VectorSource(std::span<const Event> events) : events_(events) {}
  std::optional<Event> next() override {
    if (pos_ >= events_.size()) return std::nullopt;
    return events_[pos_++];
  }

 private:
  std::span<const Event> events_;
  std::size_t pos_ = 0;
};

/// Called once per estimate with the two current rectified surfaces.
using SurfaceSink =
    std::function<void(std::size_t estimate, const TimeSurface& left, const TimeSurface& right)>;

/// Event-driven stereo odometry. Events are pushed in merged time order; an
/// estimate fires every N left-camera events or when max_interval passes
/// without one. Exactly one previous surface pair is retained.
class Odometry {
 public:
  Odometry(PipelineConfig config, RectificationMap rmap);

  /// Ingests one event (merged order). Returns the trajectory entries it
  /// produced: the initial identity pose, stall estimates it revealed, and
  /// the count-triggered estimate.
  std::vector<TrajectoryEntry> push(const Event& e, Camera cam);

  /// Merges two time-ordered chunks (left first on ties) and pushes them.
  std::vector<TrajectoryEntry> step(std::span<const Event> left,
                                    std::span<const Event> right);

  /// Estimates on the events left over since the last estimate, if any.
  std::vector<TrajectoryEntry> finish();

  const std::vector<TrajectoryEntry>& trajectory() const { return trajectory_; }
  const PipelineStats& stats() const { return stats_; }
  const PipelineConfig& config() const { return config_; }
  const RectificationMap& rectification() const { return rmap_; }
  const TimestampMap& timestamp_map(Camera cam) const { return maps_[index(cam)]; }
  /// Rectified surfaces kept from the previous estimate (left, right).
  const std::array<TimeSurface, 2>& previous_surfaces() const { return prev_surfaces_; }
  const FrameFeatures& previous_features() const { return prev_features_; }
  /// Recency window that the next estimate would use for `cam`.
  Timestamp current_recency_window(Camera cam) const;

  void set_surface_sink(SurfaceSink sink) { sink_ = std::move(sink); }

 private:
  TrajectoryEntry estimate(Timestamp t, bool low_event);

  PipelineConfig config_;
  RectificationMap rmap_;
  std::array<TimestampMap, 2> maps_;
  std::array<std::vector<Corner>, 2> corners_;
  std::array<std::deque<Timestamp>, 2> recent_stamps_;
  std::array<TimeSurface, 2> prev_surfaces_;
  FrameFeatures prev_features_;
  std::vector<TrajectoryEntry> trajectory_;
  PipelineStats stats_;
  std::mt19937_64 rng_;
  SurfaceSink sink_;

  bool started_ = false;
  Timestamp latest_ = 0;
  Timestamp last_estimate_ = 0;
  std::int64_t left_since_estimate_ = 0;
  std::int64_t events_since_estimate_ = 0;
};

struct RunResult {
  std::vector<TrajectoryEntry> trajectory;
  PipelineStats stats;
};

/// Full run over two sources; deterministic for a fixed config and seed.
RunResult run(const PipelineConfig& config, const RectificationMap& rmap,
              EventSource& left, EventSource& right, SurfaceSink sink = {});
RunResult run(const PipelineConfig& config, const RectificationMap& rmap,
              std::span<const Event> left, std::span<const Event> right);

}  // namespace evs
