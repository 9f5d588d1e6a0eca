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

#include <Eigen/Geometry>

#include <filesystem>
#include <random>
#include <string>

#include "evstereo/event_core.hpp"

namespace testing {

inline evs::Pose random_pose(std::mt19937_64& rng, double max_angle = 3.0, double max_t = 2.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  if (axis.norm() < 1e-3) axis = Eigen::Vector3d::UnitZ();
  const double angle = max_angle * std::abs(u(rng));
  evs::Pose p;
  p.R = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  p.t = max_t * Eigen::Vector3d(u(rng), u(rng), u(rng));
  return p;
}

/// Fresh scratch directory under the build tree.
inline std::string scratch(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(EVS_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline evs::StereoRig pinhole_rig(double f, int width, int height, double baseline) {
  evs::StereoRig rig;
  rig.left.fx = rig.left.fy = f;
  rig.left.cx = (width - 1) / 2.0;
  rig.left.cy = (height - 1) / 2.0;
  rig.left.width = width;
  rig.left.height = height;
  rig.right = rig.left;
  rig.translation = Eigen::Vector3d(-baseline, 0.0, 0.0);
  return rig;
}

}  // namespace testing
