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
#include <optional>
#include <span>
#include <vector>

#include "evstereo/detector.hpp"
#include "evstereo/event_core.hpp"
#include "evstereo/surface.hpp"

namespace evs {

struct Descriptor {
  std::vector<double> values;  // W*W, row-major
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  int window = 5;
};

/// Bilinear samples on the W x W integer-offset grid around `center`.
/// nullopt when any sample would leave the surface.
std::optional<Descriptor> describe(const TimeSurface& surface,
                                   const Eigen::Vector2d& center, int window);

/// Zero-normalized cross-correlation in [-1, 1]; 0 if either side is
/// constant up to rounding. Requires equal lengths.
double zncc(std::span<const double> a, std::span<const double> b);
inline double zncc(const Descriptor& a, const Descriptor& b) {
  return zncc(a.values, b.values);
}

struct MatcherConfig {
  int window = 5;
  double zncc_min = 0.8;
  double epipolar_tolerance = 1.0;  // rectified rows
  double d_max = 0.0;               // <= 0 means width / 4
  double temporal_radius = 15.0;    // px, no motion prediction
  double closure_tolerance = 1.0;   // px

  double max_disparity(int width) const { return d_max > 0.0 ? d_max : width / 4.0; }
};

/// A corner with its rectified location and descriptor on one surface.
struct Feature {
  Corner corner;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // rectified
  Descriptor descriptor;
};

/// Rectifies and describes corners (input order preserved). Corners that
/// rectify out of bounds or whose window crosses the border are dropped, as
/// are repeated detections of an already-described pixel.
std::vector<Feature> build_features(std::span<const Corner> corners,
                                    const TimeSurface& surface,
                                    const RectificationMap& rmap, Camera cam,
                                    int window);

struct StereoPair {
  std::size_t left = 0;
  std::size_t right = 0;
  double score = 0.0;

  friend bool operator==(const StereoPair&, const StereoPair&) = default;
};

/// Mutual-best epipolar matching. Ties go to the smaller disparity.
std::vector<StereoPair> match_stereo(std::span<const Feature> left,
                                     std::span<const Feature> right,
                                     const MatcherConfig& config, int width);

std::vector<StereoPair> match_stereo(std::span<const Corner> corners_left,
                                     std::span<const Corner> corners_right,
                                     const TimeSurface& surf_left,
                                     const TimeSurface& surf_right,
                                     const RectificationMap& rmap,
                                     const MatcherConfig& config);

/// The four rectified views of one feature, in circle order.
enum class View : int { kLeftNow = 0, kRightNow = 1, kRightPrev = 2, kLeftPrev = 3 };

struct QuadMatch {
  std::array<Eigen::Vector2d, 4> points;
  std::array<double, 4> scores{};  // links L->R, R->R', R'->L', L'->L
  std::array<std::size_t, 4> feature{};
  double depth = 0.0;  // filled by the pose stage

  const Eigen::Vector2d& at(View v) const { return points[static_cast<int>(v)]; }
};

struct FrameFeatures {
  std::vector<Feature> left;
  std::vector<Feature> right;
};

/// Chains L(t) -> R(t) -> R(t-dt) -> L(t-dt) -> L(t) and keeps features
/// whose chain lands back on the starting corner.
std::vector<QuadMatch> match_circular(const FrameFeatures& current,
                                      const FrameFeatures& previous,
                                      const MatcherConfig& config, int width);

/// Epipolar band and positive disparity at both times.
bool satisfies_stereo_constraints(const QuadMatch& m, const MatcherConfig& config,
                                  int width);

}  // namespace evs
