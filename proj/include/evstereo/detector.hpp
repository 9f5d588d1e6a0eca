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
#include <span>
#include <vector>

#include "evstereo/event_core.hpp"
#include "evstereo/surface.hpp"

namespace evs {

struct Corner {
  int x = 0;
  int y = 0;
  Timestamp t = 0;
  Polarity polarity = Polarity::kPositive;

  friend bool operator==(const Corner&, const Corner&) = default;
};

/// Offsets of the two concentric Bresenham circles, clockwise.
extern const std::array<std::array<int, 2>, 16> kInnerCircle;
extern const std::array<std::array<int, 2>, 20> kOuterCircle;

inline constexpr int kDetectorBorder = 4;
inline constexpr int kPatchSize = 2 * kDetectorBorder + 1;
using RefPatch = std::array<Timestamp, kPatchSize * kPatchSize>;

/// Length of the longest proper contiguous arc whose values are all strictly
/// newer than every value outside it (0 if none). Grows the candidate set
/// from the newest element outwards and tracks how many runs it spans.
int longest_newest_arc(std::span<const Timestamp> circle);

/// Arc acceptance on one circle: newest arc in [lo, hi] or its complement
/// in [n - hi, n - lo].
bool arc_accepted(int arc_length, int circle_size, int lo, int hi);

/// Corner test on a 9x9 t_ref neighbourhood centred on the event.
bool detect_patch(const RefPatch& patch);

/// Corner test for an event already ingested into `map`.
bool detect(const TimestampMap& map, const Event& e);

RefPatch extract_patch(const TimestampMap& map, int x, int y);

/// Keeps corners with t in [now - window, now], newest first (ties by x, y).
std::vector<Corner> recency_filter(std::span<const Corner> corners, Timestamp now,
                                   Timestamp window);

}  // namespace evs
