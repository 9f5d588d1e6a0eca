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

#include "evstereo/surface.hpp"

#include <cmath>
#include <string>

#include "evstereo/error.hpp"

namespace evs {

TimestampMap::TimestampMap(int width, int height, Timestamp kappa)
    : width_(width), height_(height), kappa_(kappa) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "timestamp map: empty sensor");
  }
  if (kappa < 0) {
    throw Error(ErrorCode::kInvalidArgument, "timestamp map: negative kappa");
  }
  const auto n = static_cast<std::size_t>(width) * height;
  t_last_.assign(n, kNever);
  t_ref_.assign(n, kNever);
  polarity_.assign(n, 0);
}

bool TimestampMap::ingest(const Event& e) {
  if (e.x >= width_ || e.y >= height_) {
    ++dropped_;
    return false;
  }
  const std::size_t i = offset(e.x, e.y);
  const Timestamp prev = t_last_[i];
  if (prev != kNever && e.t < prev) {
    throw Error(ErrorCode::kStreamOrder,
                "event at (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                    ") has t=" + std::to_string(e.t) + " older than t_last=" +
                    std::to_string(prev));
  }
  const auto pol = static_cast<std::int8_t>(e.polarity);
  if (prev == kNever || e.t > prev + kappa_ || pol != polarity_[i]) {
    t_ref_[i] = e.t;
  }
  t_last_[i] = e.t;
  polarity_[i] = pol;
  if (e.t > latest_) latest_ = e.t;
  ++ingested_;
  return true;
}

double TimeSurface::sample(double u, double v) const {
  const int x0 = static_cast<int>(u);
  const int y0 = static_cast<int>(v);
  const double ax = u - x0, ay = v - y0;
  if (ax == 0.0 && ay == 0.0) return at(x0, y0);
  const int x1 = x0 + 1 < width ? x0 + 1 : x0;
  const int y1 = y0 + 1 < height ? y0 + 1 : y0;
  return (1 - ax) * (1 - ay) * at(x0, y0) + ax * (1 - ay) * at(x1, y0) +
         (1 - ax) * ay * at(x0, y1) + ax * ay * at(x1, y1);
}

TimeSurface render(const TimestampMap& map, Timestamp t, double delta, Camera cam) {
  if (!(delta > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "time surface decay must be positive");
  }
  if (map.latest() != kNever && t < map.latest()) {
    throw Error(ErrorCode::kStreamOrder,
                "time surface queried at t=" + std::to_string(t) +
                    " before latest event t=" + std::to_string(map.latest()));
  }
  TimeSurface ts;
  ts.width = map.width();
  ts.height = map.height();
  ts.stamp = t;
  ts.delta = delta;
  ts.camera = cam;
  ts.values.assign(map.t_last_data().size(), 0.0);
  const auto& last = map.t_last_data();
  for (std::size_t i = 0; i < last.size(); ++i) {
    if (last[i] == kNever) continue;
    ts.values[i] = std::exp(-static_cast<double>(t - last[i]) / delta);
  }
  return ts;
}

TimeSurface render_rectified(const TimestampMap& map, Timestamp t, double delta,
                             const RectificationMap& rmap, Camera cam) {
  TimeSurface raw = render(map, t, delta, cam);
  const RectifiedIntrinsics& ri = rmap.intrinsics();
  if (rmap.is_identity() && raw.width == ri.width && raw.height == ri.height) {
    raw.rectified = true;
    return raw;
  }

  TimeSurface out;
  out.width = ri.width;
  out.height = ri.height;
  out.stamp = t;
  out.delta = delta;
  out.camera = cam;
  out.rectified = true;
  const auto n = static_cast<std::size_t>(ri.width) * ri.height;
  std::vector<double> acc(n, 0.0), weight(n, 0.0);

  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const Eigen::Vector2d& p = rmap.node(x, y, cam);
      const double fx = std::floor(p.x()), fy = std::floor(p.y());
      const double ax = p.x() - fx, ay = p.y() - fy;
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const double value = raw.at(x, y);
      const double w[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
      const int dx[4] = {0, 1, 0, 1};
      const int dy[4] = {0, 0, 1, 1};
      for (int k = 0; k < 4; ++k) {
        const int u = x0 + dx[k], v = y0 + dy[k];
        if (w[k] == 0.0 || u < 0 || v < 0 || u >= ri.width || v >= ri.height) continue;
        const std::size_t j = static_cast<std::size_t>(v) * ri.width + u;
        acc[j] += w[k] * value;
        weight[j] += w[k];
      }
    }
  }
  out.values.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (weight[j] > 0.0) out.values[j] = std::min(1.0, acc[j] / weight[j]);
  }
  return out;
}

}  // namespace evs
