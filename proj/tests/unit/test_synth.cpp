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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "evstereo/error.hpp"
#include "evstereo/synth.hpp"

using namespace evs;

namespace {

// Independent pinhole projection of a world point into one raw camera.
Eigen::Vector2d project_pinhole(const Scenario& sc, const Eigen::Vector3d& X, const Pose& world_from_left,
                                Camera cam) {
  Eigen::Vector3d x = world_from_left.R.transpose() * (X - world_from_left.t);
  const CameraIntrinsics* k = &sc.rig.left;
  if (cam == Camera::kRight) {
    x = sc.rig.rotation * x + sc.rig.translation;
    k = &sc.rig.right;
  }
  return {k->fx * x.x() / x.z() + k->cx, k->fy * x.y() / x.z() + k->cy};
}

bool ordered_and_bounded(const std::vector<Event>& events, const CameraIntrinsics& k) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].x >= k.width || events[i].y >= k.height) return false;
    if (i > 0 && events[i].t < events[i - 1].t) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("a single edge sweeps a coherent vertical stripe") {
  const Scenario sc = edge_scenario(2.0, 0.2, 0.5);
  const SynthOutput out = generate(sc, 3);
  REQUIRE(out.left.size() > 1000);
  CHECK(ordered_and_bounded(out.left, sc.rig.left));
  CHECK(ordered_and_bounded(out.right, sc.rig.right));

  std::map<int, int> per_row;
  for (const auto& e : out.left) ++per_row[e.y];
  CHECK(per_row.size() == static_cast<std::size_t>(sc.rig.left.height));
  double mean = 0.0;
  for (const auto& [row, n] : per_row) mean += n;
  mean /= static_cast<double>(per_row.size());
  for (const auto& [row, n] : per_row) CHECK(std::abs(n - mean) <= 4.0 * std::sqrt(mean) + 1.0);

  // Column against time is a straight line: the stripe moves as one.
  double st = 0, sx = 0, stt = 0, stx = 0;
  const double n = static_cast<double>(out.left.size());
  for (const auto& e : out.left) {
    const double t = e.t * 1e-6;
    st += t;
    sx += e.x;
    stt += t * t;
    stx += t * e.x;
  }
  const double slope = (n * stx - st * sx) / (n * stt - st * st);
  const double icpt = (sx - slope * st) / n;
  for (const auto& e : out.left) CHECK(std::abs(e.x - (icpt + slope * e.t * 1e-6)) < 2.0);
  // 0.2 m/s at 2 m with f 226: 22.6 px/s, the edge moving against the camera.
  CHECK(slope == doctest::Approx(-0.2 * sc.rig.left.fx / 2.0).epsilon(0.05));
}

TEST_CASE("a static rig without noise produces no events") {
  CorridorOptions o;
  o.distance = 0.0;
  o.still_duration = 0.2;
  const Scenario sc = corridor_scenario(o);
  const SynthOutput out = generate(sc, 1);
  CHECK(out.left.empty());
  CHECK(out.right.empty());
  CHECK(out.ground_truth.size() > 100);
}

TEST_CASE("event count scales with speed") {
  CorridorOptions slow, fast;
  slow.speed = 2.0;
  slow.distance = 0.5;
  fast.speed = 4.0;
  fast.distance = 1.0;  // same duration
  const SynthOutput a = generate(corridor_scenario(slow), 1);
  const SynthOutput b = generate(corridor_scenario(fast), 1);
  const double ratio = static_cast<double>(b.left.size() + b.right.size()) /
                       static_cast<double>(a.left.size() + a.right.size());
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.4);
}

TEST_CASE("junction tracks reproject onto the ground truth") {
  CorridorOptions o;
  o.speed = 4.0;
  o.distance = 0.8;
  const Scenario sc = corridor_scenario(o);
  const SynthOutput out = generate(sc, 2);
  REQUIRE(out.tracks.size() > 100);
  std::map<int, Eigen::Vector3d> where;
  for (const auto& j : sc.junctions) where[j.id] = j.position;
  for (const auto& obs : out.tracks) {
    const Eigen::Vector2d p = project_pinhole(sc, where.at(obs.junction), sc.pose_at(obs.t), obs.camera);
    CHECK((p - Eigen::Vector2d(obs.x, obs.y)).norm() <= 0.5);
  }
}

TEST_CASE("ground truth covers every time step") {
  const Scenario sc = edge_scenario(2.0, 0.2, 0.1);
  const SynthOutput out = generate(sc, 1);
  REQUIRE(out.ground_truth.size() >= 2);
  CHECK(out.ground_truth.front().stamp == 0);
  CHECK(out.ground_truth.back().stamp == sc.duration_us());
  for (std::size_t i = 1; i < out.ground_truth.size(); ++i) {
    CHECK(out.ground_truth[i].stamp - out.ground_truth[i - 1].stamp <= 200);
    CHECK(out.ground_truth[i].stamp > out.ground_truth[i - 1].stamp);
  }
  CHECK((out.ground_truth.front().t - sc.start.t).norm() < 1e-15);
}

TEST_CASE("generation is deterministic given the seed") {
  CorridorOptions o;
  o.speed = 4.0;
  o.distance = 0.3;
  o.jitter_px = 0.5;
  o.spurious_rate = 0.5;
  const Scenario sc = corridor_scenario(o);
  const SynthOutput a = generate(sc, 11), b = generate(sc, 11), c = generate(sc, 12);
  CHECK(a.left == b.left);
  CHECK(a.right == b.right);
  CHECK(a.left != c.left);
  CHECK(a.jitter_sigma_us > 0.0);
  CHECK(ordered_and_bounded(a.left, sc.rig.left));
  CHECK(ordered_and_bounded(a.right, sc.rig.right));
}

TEST_CASE("street scenario uses the wide rig") {
  StreetOptions o;
  o.distance = 1.0;
  const Scenario sc = street_scenario(o);
  CHECK(sc.rig.left.width == 640);
  CHECK(sc.rig.left.height == 480);
  CHECK(sc.rig.translation.norm() == doctest::Approx(0.6));
  const SynthOutput out = generate(sc, 1);
  CHECK(out.left.size() > 1000);
  CHECK(ordered_and_bounded(out.left, sc.rig.left));
}

TEST_CASE("degenerate and invalid scenarios") {
  try {
    generate(edge_scenario(-2.0, 0.2, 0.1), 1);
    FAIL("expected a degenerate scenario error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerate);
  }
  Scenario sc = edge_scenario(2.0, 0.2, 0.1);
  sc.time_step = 300.0;
  CHECK_THROWS_AS(generate(sc, 1), Error);
  sc = edge_scenario(2.0, 0.2, 0.0);
  CHECK_THROWS_AS(generate(sc, 1), Error);
  sc = edge_scenario(2.0, 0.2, 0.1);
  sc.rig.left.distortion = {0.1};
  CHECK_THROWS_AS(generate(sc, 1), Error);
}

}  // TEST_SUITE
