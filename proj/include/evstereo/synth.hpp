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
#include <optional>
#include <string>
#include <vector>

#include "evstereo/event_core.hpp"

namespace evs {

/// Straight 3D edge; `contrast` (+1/-1) sets which side is brighter.
struct Segment {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  int contrast = 1;
};

/// A 3D point where edges meet; the ground-truth correspondence anchor.
struct Junction {
  int id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// Constant velocity over `duration` seconds. Linear velocity is in the
/// world frame (m/s), angular velocity in the camera frame (rad/s).
struct MotionPiece {
  double duration = 0.0;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular_velocity = Eigen::Vector3d::Zero();
};

struct Scenario {
  std::string name;
  std::vector<Segment> segments;
  std::vector<Junction> junctions;
  StereoRig rig;   // pinhole, undistorted
  Pose start;      // world-from-left-camera at t = 0
  std::vector<MotionPiece> motion;

  double time_step = 200.0;         // us, at most 200
  double events_per_crossing = 1.0; // expected events per pixel crossing
  double jitter_us = 0.0;           // timestamp noise sigma, us
  double jitter_px = 0.0;           // timestamp noise as edge displacement at the
                                    // median edge speed of the run, px
  double spurious_rate = 0.0;       // uniform noise events per pixel per second
  Timestamp track_period = 10'000;  // us between recorded junction observations

  double duration() const;  // seconds
  Timestamp duration_us() const;
  /// World-from-left-camera pose at time t.
  Pose pose_at(Timestamp t) const;
  void validate() const;
};

struct JunctionObservation {
  int junction = 0;
  Timestamp t = 0;
  Camera camera = Camera::kLeft;
  double x = 0.0;  // raw pixels
  double y = 0.0;
};

struct SynthOutput {
  std::vector<Event> left;
  std::vector<Event> right;
  std::vector<Pose> ground_truth;  // world-from-left-camera, every time step
  std::vector<JunctionObservation> tracks;
  double jitter_sigma_us = 0.0;  // timestamp noise actually applied
};

/// Raw pixel projection of a world point; nullopt behind the camera.
std::optional<Eigen::Vector2d> project_world(const Scenario& sc, const Eigen::Vector3d& world,
                                             const Pose& world_from_left, Camera cam);

/// Events from a moving stereo rig: a pixel fires when its distance to the
/// nearest projected edge drops below one pixel between two time steps, at
/// the interpolated crossing time. Output streams are time-ordered.
SynthOutput generate(const Scenario& sc, std::uint64_t seed);

StereoRig mvsec_like_rig();  // 346 x 260, 10 cm baseline
StereoRig dsec_like_rig();   // 640 x 480, 60 cm baseline

struct CorridorOptions {
  double length = 20.0;        // m
  double width = 3.0;
  double height = 3.0;
  double brace_spacing = 1.0;  // m between frames
  bool diagonal_braces = false; // X brace on every wall panel
  double tile_size = 0.6;       // m, diamond tile on every wall panel; 0 disables
  double speed = 1.0;          // m/s along the corridor axis
  double distance = 10.0;      // m travelled; 0 with `still_duration` for a static rig
  double still_duration = 0.0; // s, used when distance == 0
  double lateral_speed = 0.0;  // m/s, x drift added to the forward motion
  double yaw_rate = 0.0;       // rad/s about the camera y axis
  double jitter_px = 0.0;
  double spurious_rate = 0.0;
};

/// Box corridor of rectangular frames every brace_spacing meters along +z,
/// with a diamond tile on each wall panel between frames. The rig starts
/// near the axis before the entrance and looks down the corridor.
Scenario corridor_scenario(const CorridorOptions& options = {});

struct StreetOptions {
  double speed = 8.0;      // m/s
  double distance = 40.0;  // m
  double jitter_px = 0.0;
};

/// Two rows of box-shaped building facades on a straight street, DSEC-like rig.
Scenario street_scenario(const StreetOptions& options = {});

/// One vertical edge at depth `depth`, the rig translating along x.
Scenario edge_scenario(double depth = 2.0, double speed = 0.2, double duration = 0.5);

}  // namespace evs
