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

#include <span>
#include <string>
#include <vector>

#include "evstereo/event_core.hpp"

namespace evs {

struct PosePair {
  Pose est;
  Pose ref;
};

struct Association {
  std::vector<PosePair> pairs;
  std::size_t dropped = 0;  // estimates outside the reference time range
};

/// Reference pose at `t`: linear in translation, slerp in rotation. The
/// stamp must lie within the reference range.
Pose interpolate(std::span<const Pose> ref, Timestamp t);

/// Pairs every estimate with the reference interpolated at its stamp.
/// Throws Error(kInvalidArgument) when the time ranges do not overlap.
Association associate(std::span<const Pose> est, std::span<const Pose> ref);

/// Sum of consecutive translation-increment norms.
double path_length(std::span<const Pose> poses);

/// Rotation angle in radians; exactly 0 for a symmetric (identity) input.
double rotation_angle(const Eigen::Matrix3d& R);

struct WindowError {
  double length = 0.0;             // m
  std::size_t samples = 0;
  double translation_rmse = 0.0;   // % of window length
  double rotation_rmse = 0.0;      // deg per m
};

struct RpeReport {
  std::vector<WindowError> windows;
  std::vector<double> omitted;     // requested lengths longer than the path
  double mean_translation = 0.0;   // %
  double mean_rotation = 0.0;      // deg/m
  double est_length = 0.0;         // m
  double ref_length = 0.0;         // m
};

/// Relative pose error over arc-length windows. For each start pose, the end
/// is the pair whose reference arc length from the start is closest to L;
/// starts with less than L of remaining reference path are skipped.
RpeReport rpe(std::span<const PosePair> pairs, std::span<const double> window_lengths);

std::string format_report_text(const RpeReport& report);
std::string format_report_csv(const RpeReport& report);

}  // namespace evs
