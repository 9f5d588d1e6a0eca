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

#include <cstdint>
#include <vector>

#include "evstereo/event_core.hpp"

namespace evs {

/// Per-pixel last-event and reference timestamps of one camera.
///
/// t_last always takes the newest event time. t_ref only moves when the
/// pixel has been quiet for longer than the refractory interval kappa, when
/// the polarity flips, or on the first event. Both polarities share one
/// record, so t_last is the merged (most recent of either polarity) stamp.
class TimestampMap {
 public:
  TimestampMap(int width, int height, Timestamp kappa);

  /// Returns false (and counts the drop) for out-of-sensor events. Throws
  /// Error(kStreamOrder) if the event is older than the pixel's t_last.
  bool ingest(const Event& e);

  Timestamp t_last(int x, int y) const { return t_last_[offset(x, y)]; }
  Timestamp t_ref(int x, int y) const { return t_ref_[offset(x, y)]; }
  /// 0 when the pixel never fired, otherwise +1 / -1.
  int last_polarity(int x, int y) const { return polarity_[offset(x, y)]; }

  int width() const { return width_; }
  int height() const { return height_; }
  Timestamp kappa() const { return kappa_; }
  /// Newest t_last anywhere in the map, kNever when empty.
  Timestamp latest() const { return latest_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t ingested() const { return ingested_; }

  const std::vector<Timestamp>& t_last_data() const { return t_last_; }
  const std::vector<Timestamp>& t_ref_data() const { return t_ref_; }

  friend bool operator==(const TimestampMap&, const TimestampMap&) = default;

 private:
  std::size_t offset(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_;
  int height_;
  Timestamp kappa_;
  std::vector<Timestamp> t_last_;
  std::vector<Timestamp> t_ref_;
  std::vector<std::int8_t> polarity_;
  Timestamp latest_ = kNever;
  std::uint64_t dropped_ = 0;
  std::uint64_t ingested_ = 0;
};

/// Exponentially decayed snapshot of event recency, values in [0, 1].
struct TimeSurface {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  Timestamp stamp = 0;
  double delta = 0.0;  // decay constant, microseconds
  Camera camera = Camera::kLeft;
  bool rectified = false;

  double at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * width + x];
  }
  /// Bilinear sample; caller guarantees 0 <= u <= width-1, 0 <= v <= height-1.
  double sample(double u, double v) const;
};

/// exp(-(t - t_last) / delta) per pixel, exactly 0 where nothing fired.
/// Throws Error(kStreamOrder) when t precedes some t_last.
TimeSurface render(const TimestampMap& map, Timestamp t, double delta,
                   Camera cam = Camera::kLeft);

/// render() resampled into the rectified frame by bilinear splatting with
/// weight normalization.
TimeSurface render_rectified(const TimestampMap& map, Timestamp t, double delta,
                             const RectificationMap& rmap, Camera cam);

}  // namespace evs
