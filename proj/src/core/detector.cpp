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

#include "evstereo/detector.hpp"

#include <algorithm>
#include <numeric>

namespace evs {

const std::array<std::array<int, 2>, 16> kInnerCircle = {{
    {0, 3}, {1, 3}, {2, 2}, {3, 1}, {3, 0}, {3, -1}, {2, -2}, {1, -3},
    {0, -3}, {-1, -3}, {-2, -2}, {-3, -1}, {-3, 0}, {-3, 1}, {-2, 2}, {-1, 3},
}};

const std::array<std::array<int, 2>, 20> kOuterCircle = {{
    {0, 4}, {1, 4}, {2, 3}, {3, 2}, {4, 1}, {4, 0}, {4, -1},
    {3, -2}, {2, -3}, {1, -4}, {0, -4}, {-1, -4}, {-2, -3}, {-3, -2},
    {-4, -1}, {-4, 0}, {-4, 1}, {-3, 2}, {-2, 3}, {-1, 4},
}};

int longest_newest_arc(std::span<const Timestamp> circle) {
  const int n = static_cast<int>(circle.size());
  std::array<int, 32> order{};
  std::iota(order.begin(), order.begin() + n, 0);
  std::stable_sort(order.begin(), order.begin() + n,
                   [&](int a, int b) { return circle[a] > circle[b]; });

  std::array<bool, 32> in{};
  int runs = 0;
  int best = 0;
  for (int k = 1; k < n; ++k) {
    const int i = order[k - 1];
    const int neighbours = in[(i + n - 1) % n] + in[(i + 1) % n];
    runs += 1 - neighbours;
    in[i] = true;
    // Strict separation from everything still outside, and a single run.
    if (runs == 1 && circle[i] > circle[order[k]]) best = k;
  }
  return best;
}

bool arc_accepted(int arc_length, int circle_size, int lo, int hi) {
  if (arc_length <= 0) return false;
  return (arc_length >= lo && arc_length <= hi) ||
         (arc_length >= circle_size - hi && arc_length <= circle_size - lo);
}

namespace {

template <std::size_t N>
bool circle_test(const RefPatch& patch, const std::array<std::array<int, 2>, N>& circle,
                 int lo, int hi) {
  std::array<Timestamp, N> values{};
  for (std::size_t i = 0; i < N; ++i) {
    const int px = kDetectorBorder + circle[i][0];
    const int py = kDetectorBorder + circle[i][1];
    values[i] = patch[static_cast<std::size_t>(py) * kPatchSize + px];
  }
  return arc_accepted(longest_newest_arc(values), static_cast<int>(N), lo, hi);
}

}  // namespace

bool detect_patch(const RefPatch& patch) {
  return circle_test(patch, kInnerCircle, 3, 6) || circle_test(patch, kOuterCircle, 4, 8);
}

RefPatch extract_patch(const TimestampMap& map, int x, int y) {
  RefPatch patch{};
  for (int dy = -kDetectorBorder; dy <= kDetectorBorder; ++dy) {
    for (int dx = -kDetectorBorder; dx <= kDetectorBorder; ++dx) {
      patch[static_cast<std::size_t>(dy + kDetectorBorder) * kPatchSize + dx +
            kDetectorBorder] = map.t_ref(x + dx, y + dy);
    }
  }
  return patch;
}

bool detect(const TimestampMap& map, const Event& e) {
  if (e.x < kDetectorBorder || e.y < kDetectorBorder ||
      e.x >= map.width() - kDetectorBorder || e.y >= map.height() - kDetectorBorder) {
    return false;
  }
  return detect_patch(extract_patch(map, e.x, e.y));
}

std::vector<Corner> recency_filter(std::span<const Corner> corners, Timestamp now,
                                   Timestamp window) {
  std::vector<Corner> out;
  for (const Corner& c : corners) {
    if (c.t <= now && c.t >= now - window) out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const Corner& a, const Corner& b) {
    if (a.t != b.t) return a.t > b.t;
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });
  return out;
}

}  // namespace evs
