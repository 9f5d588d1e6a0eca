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
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evstereo/event_core.hpp"
#include "evstereo/pipeline.hpp"
#include "evstereo/surface.hpp"

namespace evs {

// Binary event file: "EVT1", u16 width, u16 height, 8 zero bytes, then
// 13-byte little-endian records (u64 t_us, u16 x, u16 y, u8 p with 1 = +1).
inline constexpr char kEventMagic[4] = {'E', 'V', 'T', '1'};
inline constexpr std::size_t kEventHeaderSize = 16;
inline constexpr std::size_t kEventRecordSize = 13;

struct SensorSize {
  int width = 0;
  int height = 0;
};

/// Lazy reader for binary or CSV ("t_us,x,y,p", p in {0,1}) event files,
/// chosen by the leading magic. Enforces non-decreasing timestamps. Events
/// outside the sensor (from the binary header or `bounds`) are dropped and
/// counted.
class EventReader final : public EventSource {
 public:
  explicit EventReader(const std::string& path, std::optional<SensorSize> bounds = {});

  std::optional<Event> next() override;

  bool is_binary() const { return binary_; }
  std::optional<SensorSize> sensor() const { return sensor_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t read() const { return read_; }

 private:
  std::optional<Event> next_binary();
  std::optional<Event> next_csv();

  std::string path_;
  std::ifstream in_;
  bool binary_ = false;
  std::optional<SensorSize> sensor_;
  std::uint64_t offset_ = 0;  // bytes (binary) or line number (CSV)
  Timestamp last_t_ = 0;
  bool any_ = false;
  std::uint64_t dropped_ = 0;
  std::uint64_t read_ = 0;
};

std::vector<Event> read_events(const std::string& path, std::optional<SensorSize> bounds = {},
                               std::uint64_t* dropped = nullptr);
void write_events_binary(const std::string& path, SensorSize sensor,
                         std::span<const Event> events);
void write_events_csv(const std::string& path, std::span<const Event> events);

/// Flat "key = values" calibration: left./right. fx fy cx cy width height
/// [distortion], extrinsic.rotation (9, row-major), extrinsic.translation (3).
StereoRig read_calibration(const std::string& path);
StereoRig parse_calibration(const std::string& text);
void write_calibration(const std::string& path, const StereoRig& rig);

/// "stamp tx ty tz qx qy qz qw", stamp in seconds with 9 decimals, other
/// fields with 9 significant digits.
std::string format_trajectory_line(const Pose& pose);
void write_trajectory(const std::string& path, std::span<const Pose> poses);
std::vector<Pose> read_trajectory(const std::string& path);

/// 8-bit PGM with round(255 * value).
void write_pgm(const std::string& path, const TimeSurface& surface);

}  // namespace evs
