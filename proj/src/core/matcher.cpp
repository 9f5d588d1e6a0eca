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

#include "evstereo/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "evstereo/error.hpp"

namespace evs {

std::optional<Descriptor> describe(const TimeSurface& surface,
                                   const Eigen::Vector2d& center, int window) {
  if (window <= 0 || window % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "descriptor window must be odd");
  }
  const int half = window / 2;
  const double u0 = center.x() - half, v0 = center.y() - half;
  const double u1 = center.x() + half, v1 = center.y() + half;
  if (u0 < 0.0 || v0 < 0.0 || u1 > surface.width - 1 || v1 > surface.height - 1) {
    return std::nullopt;
  }
  Descriptor d;
  d.center = center;
  d.window = window;
  d.values.reserve(static_cast<std::size_t>(window) * window);
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      d.values.push_back(surface.sample(center.x() + dx, center.y() + dy));
    }
  }
  return d;
}

double zncc(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "zncc: descriptor length mismatch");
  }
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double cross = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a, db = b[i] - mean_b;
    cross += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  // Rounding noise on a flat patch must not correlate.
  const double flat = 1e-20 * static_cast<double>(n);
  if (!(var_a > flat * (1.0 + mean_a * mean_a)) || !(var_b > flat * (1.0 + mean_b * mean_b))) {
    return 0.0;
  }
  const double denom = std::sqrt(var_a * var_b);
  return std::clamp(cross / denom, -1.0, 1.0);
}

std::vector<Feature> build_features(std::span<const Corner> corners,
                                    const TimeSurface& surface,
                                    const RectificationMap& rmap, Camera cam,
                                    int window) {
  std::vector<Feature> out;
  std::set<std::pair<int, int>> seen;
  for (const Corner& c : corners) {
    if (!seen.insert({c.x, c.y}).second) continue;
    const auto rect = rmap.rectify_point(Eigen::Vector2d(c.x, c.y), cam);
    if (!rect) continue;
    auto desc = describe(surface, *rect, window);
    if (!desc) continue;
    out.push_back(Feature{c, *rect, std::move(*desc)});
  }
  return out;
}

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

struct Best {
  std::size_t index = kNone;
  double score = 0.0;
  double key = 0.0;  // tie-break: smaller wins

  void offer(std::size_t i, double s, double k) {
    if (index == kNone || s > score || (s == score && k < key)) {
      index = i;
      score = s;
      key = k;
    }
  }
};

bool epipolar_ok(const Eigen::Vector2d& l, const Eigen::Vector2d& r,
                 const MatcherConfig& config, double d_max) {
  const double d = l.x() - r.x();
  return std::abs(l.y() - r.y()) <= config.epipolar_tolerance && d > 0.0 && d <= d_max;
}

Best best_stereo_for_left(const Feature& l, std::span<const Feature> right,
                          const MatcherConfig& config, double d_max) {
  Best best;
  for (std::size_t j = 0; j < right.size(); ++j) {
    if (!epipolar_ok(l.position, right[j].position, config, d_max)) continue;
    const double s = zncc(l.descriptor, right[j].descriptor);
    if (s < config.zncc_min) continue;
    best.offer(j, s, l.position.x() - right[j].position.x());
  }
  return best;
}

Best best_stereo_for_right(const Feature& r, std::span<const Feature> left,
                           const MatcherConfig& config, double d_max) {
  Best best;
  for (std::size_t i = 0; i < left.size(); ++i) {
    if (!epipolar_ok(left[i].position, r.position, config, d_max)) continue;
    const double s = zncc(left[i].descriptor, r.descriptor);
    if (s < config.zncc_min) continue;
    best.offer(i, s, left[i].position.x() - r.position.x());
  }
  return best;
}

Best best_temporal(const Feature& f, std::span<const Feature> others,
                   const MatcherConfig& config) {
  Best best;
  const double r2 = config.temporal_radius * config.temporal_radius;
  for (std::size_t j = 0; j < others.size(); ++j) {
    const double dist2 = (others[j].position - f.position).squaredNorm();
    if (dist2 > r2) continue;
    const double s = zncc(f.descriptor, others[j].descriptor);
    if (s < config.zncc_min) continue;
    best.offer(j, s, dist2);
  }
  return best;
}

}  // namespace

std::vector<StereoPair> match_stereo(std::span<const Feature> left,
                                     std::span<const Feature> right,
                                     const MatcherConfig& config, int width) {
  const double d_max = config.max_disparity(width);
  std::vector<std::size_t> right_best(right.size(), kNone);
  for (std::size_t j = 0; j < right.size(); ++j) {
    right_best[j] = best_stereo_for_right(right[j], left, config, d_max).index;
  }
  std::vector<StereoPair> pairs;
  for (std::size_t i = 0; i < left.size(); ++i) {
    const Best b = best_stereo_for_left(left[i], right, config, d_max);
    if (b.index == kNone || right_best[b.index] != i) continue;
    pairs.push_back({i, b.index, b.score});
  }
  return pairs;
}

std::vector<StereoPair> match_stereo(std::span<const Corner> corners_left,
                                     std::span<const Corner> corners_right,
                                     const TimeSurface& surf_left,
                                     const TimeSurface& surf_right,
                                     const RectificationMap& rmap,
                                     const MatcherConfig& config) {
  const auto left =
      build_features(corners_left, surf_left, rmap, Camera::kLeft, config.window);
  const auto right =
      build_features(corners_right, surf_right, rmap, Camera::kRight, config.window);
  return match_stereo(left, right, config, rmap.intrinsics().width);
}

std::vector<QuadMatch> match_circular(const FrameFeatures& current,
                                      const FrameFeatures& previous,
                                      const MatcherConfig& config, int width) {
  const double d_max = config.max_disparity(width);
  std::vector<QuadMatch> out;
  std::set<std::size_t> used_prev_left;

  for (const StereoPair& pair : match_stereo(current.left, current.right, config, width)) {
    const Feature& l_now = current.left[pair.left];
    const Feature& r_now = current.right[pair.right];

    const Best r_prev = best_temporal(r_now, previous.right, config);
    if (r_prev.index == kNone) continue;
    const Best l_prev = best_stereo_for_right(previous.right[r_prev.index],
                                              previous.left, config, d_max);
    if (l_prev.index == kNone) continue;
    const Best back = best_temporal(previous.left[l_prev.index], current.left, config);
    if (back.index == kNone) continue;
    const Eigen::Vector2d& landed = current.left[back.index].position;
    if ((landed - l_now.position).norm() > config.closure_tolerance) continue;
    if (!used_prev_left.insert(l_prev.index).second) continue;

    QuadMatch m;
    m.points = {l_now.position, r_now.position, previous.right[r_prev.index].position,
                previous.left[l_prev.index].position};
    m.scores = {pair.score, r_prev.score, l_prev.score, back.score};
    m.feature = {pair.left, pair.right, r_prev.index, l_prev.index};
    out.push_back(m);
  }
  return out;
}

bool satisfies_stereo_constraints(const QuadMatch& m, const MatcherConfig& config,
                                  int width) {
  const double d_max = config.max_disparity(width);
  return epipolar_ok(m.at(View::kLeftNow), m.at(View::kRightNow), config, d_max) &&
         epipolar_ok(m.at(View::kLeftPrev), m.at(View::kRightPrev), config, d_max);
}

}  // namespace evs
