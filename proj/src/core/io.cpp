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

#include "evstereo/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "evstereo/error.hpp"

namespace evs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(const std::string& token, T& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for double is available, but strtod accepts the same
    // grammar across older standard libraries.
    char* end = nullptr;
    out = std::strtod(token.c_str(), &end);
    return !token.empty() && end == token.c_str() + token.size();
  } else {
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
  }
}

std::uint64_t read_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void write_le(std::ostream& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Events

EventReader::EventReader(const std::string& path, std::optional<SensorSize> bounds)
    : path_(path), in_(path, std::ios::binary), sensor_(bounds) {
  if (!in_) throw Error(ErrorCode::kIo, "cannot open event file '" + path + "'");
  std::array<char, kEventHeaderSize> header{};
  in_.read(header.data(), 4);
  if (in_.gcount() == 4 && std::memcmp(header.data(), kEventMagic, 4) == 0) {
    binary_ = true;
    in_.read(header.data() + 4, kEventHeaderSize - 4);
    if (in_.gcount() != static_cast<std::streamsize>(kEventHeaderSize - 4)) {
      throw Error(ErrorCode::kParse, path + ": truncated header at byte 4");
    }
    const auto* h = reinterpret_cast<const unsigned char*>(header.data());
    const int w = static_cast<int>(read_le(h + 4, 2));
    const int ht = static_cast<int>(read_le(h + 6, 2));
    if (w * ht <= 0) throw Error(ErrorCode::kParse, path + ": empty sensor in header at byte 4");
    for (std::size_t i = 8; i < kEventHeaderSize; ++i) {
      if (h[i] != 0) {
        throw Error(ErrorCode::kParse,
                    path + ": non-zero reserved header byte at offset " + std::to_string(i));
      }
    }
    sensor_ = SensorSize{w, ht};
    offset_ = kEventHeaderSize;
  } else {
    in_.clear();
    in_.seekg(0);
  }
}

std::optional<Event> EventReader::next() {
  while (true) {
    auto e = binary_ ? next_binary() : next_csv();
    if (!e) return std::nullopt;
    if (any_ && e->t < last_t_) {
      throw Error(ErrorCode::kStreamOrder,
                  path_ + ": timestamp regression at " + (binary_ ? "byte " : "line ") +
                      std::to_string(offset_) + ": " + std::to_string(e->t) + " after " +
                      std::to_string(last_t_));
    }
    last_t_ = e->t;
    any_ = true;
    ++read_;
    if (sensor_ && (e->x >= sensor_->width || e->y >= sensor_->height)) {
      if (dropped_ == 0) {
        std::cerr << "warning: " << path_ << ": event (" << e->x << "," << e->y
                  << ") outside " << sensor_->width << "x" << sensor_->height
                  << " sensor dropped\n";
      }
      ++dropped_;
      continue;
    }
    return e;
  }
}

std::optional<Event> EventReader::next_binary() {
  std::array<unsigned char, kEventRecordSize> rec{};
  in_.read(reinterpret_cast<char*>(rec.data()), kEventRecordSize);
  const auto got = in_.gcount();
  if (got == 0) return std::nullopt;
  if (got != static_cast<std::streamsize>(kEventRecordSize)) {
    throw Error(ErrorCode::kParse,
                path_ + ": truncated event record at byte " + std::to_string(offset_));
  }
  const std::uint64_t t = read_le(rec.data(), 8);
  if (t > static_cast<std::uint64_t>(std::numeric_limits<Timestamp>::max())) {
    throw Error(ErrorCode::kParse, path_ + ": timestamp overflow at byte " + std::to_string(offset_));
  }
  const unsigned p = rec[12];
  if (p > 1) {
    throw Error(ErrorCode::kParse,
                path_ + ": bad polarity " + std::to_string(p) + " at byte " + std::to_string(offset_ + 12));
  }
  offset_ += kEventRecordSize;
  Event e;
  e.t = static_cast<Timestamp>(t);
  e.x = static_cast<std::uint16_t>(read_le(rec.data() + 8, 2));
  e.y = static_cast<std::uint16_t>(read_le(rec.data() + 10, 2));
  e.polarity = p ? Polarity::kPositive : Polarity::kNegative;
  return e;
}

std::optional<Event> EventReader::next_csv() {
  std::string line;
  while (std::getline(in_, line)) {
    ++offset_;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = s.find(',', start);
      fields.push_back(trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    std::int64_t t = 0;
    unsigned x = 0, y = 0, p = 0;
    const bool ok = fields.size() == 4 && parse_number(fields[0], t) && parse_number(fields[1], x) &&
         parse_number(fields[2], y) && parse_number(fields[3], p) && t >= 0 && p <= 1 &&
         x <= 0xffff && y <= 0xffff;
    if (!ok) {
      throw Error(ErrorCode::kParse,
                  path_ + ": malformed event at line " + std::to_string(offset_) + ": '" + s + "'");
    }
    Event e;
    e.t = t;
    e.x = static_cast<std::uint16_t>(x);
    e.y = static_cast<std::uint16_t>(y);
    e.polarity = p ? Polarity::kPositive : Polarity::kNegative;
    return e;
  }
  return std::nullopt;
}

std::vector<Event> read_events(const std::string& path, std::optional<SensorSize> bounds,
                               std::uint64_t* dropped) {
  EventReader reader(path, bounds);
  std::vector<Event> out;
  while (auto e = reader.next()) out.push_back(*e);
  if (dropped) *dropped = reader.dropped();
  return out;
}

void write_events_binary(const std::string& path, SensorSize sensor,
                         std::span<const Event> events) {
  if (sensor.width <= 0 || sensor.height <= 0 || sensor.width > 0xffff || sensor.height > 0xffff) {
    throw Error(ErrorCode::kInvalidArgument, "write_events_binary: bad sensor size");
  }
  auto out = open_out(path, true);
  out.write(kEventMagic, 4);
  write_le(out, static_cast<std::uint64_t>(sensor.width), 2);
  write_le(out, static_cast<std::uint64_t>(sensor.height), 2);
  write_le(out, 0, 8);
  for (const Event& e : events) {
    write_le(out, static_cast<std::uint64_t>(e.t), 8);
    write_le(out, e.x, 2);
    write_le(out, e.y, 2);
    out.put(e.polarity == Polarity::kPositive ? 1 : 0);
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

void write_events_csv(const std::string& path, std::span<const Event> events) {
  auto out = open_out(path, false);
  for (const Event& e : events) {
    out << e.t << ',' << e.x << ',' << e.y << ',' << (e.polarity == Polarity::kPositive ? 1 : 0)
        << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Calibration

StereoRig parse_calibration(const std::string& text) {
  std::map<std::string, std::vector<double>> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse, "calibration line " + std::to_string(lineno) + ": expected 'key = values'");
    }
    const std::string key = trim(s.substr(0, eq));
    std::istringstream vs(s.substr(eq + 1));
    std::vector<double> values;
    std::string tok;
    while (vs >> tok) {
      double v = 0.0;
      if (!parse_number(tok, v)) {
        throw Error(ErrorCode::kParse, "calibration key '" + key + "': bad number '" + tok + "'");
      }
      values.push_back(v);
    }
    if (!kv.emplace(key, std::move(values)).second) {
      throw Error(ErrorCode::kParse, "calibration key '" + key + "' is duplicated");
    }
  }

  static const std::map<std::string, int> kExpected = {
      {"left.fx", 1},       {"left.fy", 1},          {"left.cx", 1},
      {"left.cy", 1},       {"left.width", 1},       {"left.height", 1},
      {"right.fx", 1},      {"right.fy", 1},         {"right.cx", 1},
      {"right.cy", 1},      {"right.width", 1},      {"right.height", 1},
      {"extrinsic.rotation", 9}, {"extrinsic.translation", 3},
      {"left.distortion", -1},   {"right.distortion", -1},
  };
  for (const auto& [key, values] : kv) {
    const auto it = kExpected.find(key);
    if (it == kExpected.end()) throw Error(ErrorCode::kParse, "calibration key '" + key + "' is unknown");
    if (it->second >= 0 && static_cast<int>(values.size()) != it->second) {
      throw Error(ErrorCode::kParse, "calibration key '" + key + "' expects " +
                                         std::to_string(it->second) + " value(s)");
    }
    if (it->second < 0 && values.size() > 5) {
      throw Error(ErrorCode::kParse, "calibration key '" + key + "' has more than 5 coefficients");
    }
  }
  for (const auto& [key, count] : kExpected) {
    if (count >= 0 && !kv.count(key)) {
      throw Error(ErrorCode::kParse, "calibration key '" + key + "' is missing");
    }
  }

  auto camera = [&](const std::string& prefix) {
    CameraIntrinsics c;
    c.fx = kv.at(prefix + ".fx")[0];
    c.fy = kv.at(prefix + ".fy")[0];
    c.cx = kv.at(prefix + ".cx")[0];
    c.cy = kv.at(prefix + ".cy")[0];
    const double w = kv.at(prefix + ".width")[0], h = kv.at(prefix + ".height")[0];
    if (w != std::floor(w) || h != std::floor(h) || w <= 0 || h <= 0 || w > 0xffff || h > 0xffff) {
      throw Error(ErrorCode::kParse, "calibration key '" + prefix + ".width/height' must be positive integers");
    }
    c.width = static_cast<int>(w);
    c.height = static_cast<int>(h);
    if (auto it = kv.find(prefix + ".distortion"); it != kv.end()) c.distortion = it->second;
    try {
      c.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "calibration '" + prefix + "': " + e.what());
    }
    return c;
  };

  StereoRig rig;
  rig.left = camera("left");
  rig.right = camera("right");
  const auto& r = kv.at("extrinsic.rotation");
  for (int i = 0; i < 9; ++i) rig.rotation(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
  const auto& t = kv.at("extrinsic.translation");
  rig.translation = Eigen::Vector3d(t[0], t[1], t[2]);
  if (orthonormality_error(rig.rotation) > 1e-6) {
    throw Error(ErrorCode::kParse, "calibration key 'extrinsic.rotation' is not orthonormal");
  }
  if (!(rig.rectified_baseline() > 0.0)) {
    throw Error(ErrorCode::kParse, "calibration key 'extrinsic.translation' gives a zero baseline");
  }
  return rig;
}

StereoRig read_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open calibration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_calibration(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void write_calibration(const std::string& path, const StereoRig& rig) {
  auto out = open_out(path, false);
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& [name, c] : {std::pair{"left", &rig.left}, std::pair{"right", &rig.right}}) {
    out << name << ".fx = " << num(c->fx) << '\n'
        << name << ".fy = " << num(c->fy) << '\n'
        << name << ".cx = " << num(c->cx) << '\n'
        << name << ".cy = " << num(c->cy) << '\n'
        << name << ".width = " << c->width << '\n'
        << name << ".height = " << c->height << '\n'
        << name << ".distortion =";
    for (double k : c->distortion) out << ' ' << num(k);
    out << '\n';
  }
  out << "extrinsic.rotation =";
  for (int i = 0; i < 9; ++i) out << ' ' << num(rig.rotation(i / 3, i % 3));
  out << "\nextrinsic.translation =";
  for (int i = 0; i < 3; ++i) out << ' ' << num(rig.translation(i));
  out << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Trajectories

std::string format_trajectory_line(const Pose& pose) {
  if (pose.stamp < 0) throw Error(ErrorCode::kInvalidArgument, "trajectory stamp must be >= 0");
  const Eigen::Quaterniond q = pose.quaternion();
  const std::array<double, 7> fields = {pose.t.x(), pose.t.y(), pose.t.z(), q.x(), q.y(), q.z(), q.w()};
  char buf[48];
  std::snprintf(buf, sizeof buf, "%lld.%06lld000", static_cast<long long>(pose.stamp / 1'000'000),
                static_cast<long long>(pose.stamp % 1'000'000));
  std::string line = buf;
  for (double v : fields) {
    if (v == 0.0) v = 0.0;  // drop the sign of negative zero
    std::snprintf(buf, sizeof buf, " %.9g", v);
    line += buf;
  }
  return line;
}

void write_trajectory(const std::string& path, std::span<const Pose> poses) {
  auto out = open_out(path, false);
  for (const Pose& p : poses) out << format_trajectory_line(p) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::vector<Pose> read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trajectory file '" + path + "'");
  std::vector<Pose> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::istringstream ls(s);
    std::array<double, 8> v{};
    std::string tok;
    int k = 0;
    while (ls >> tok) {
      if (k >= 8 || !parse_number(tok, v[static_cast<std::size_t>(k)])) { k = -1; break; }
      ++k;
    }
    if (k != 8) {
      throw Error(ErrorCode::kParse, path + ": malformed trajectory record at line " + std::to_string(lineno));
    }
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (std::abs(q.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kParse, path + ": non-unit quaternion at line " + std::to_string(lineno));
    }
    const auto stamp = static_cast<Timestamp>(std::llround(v[0] * 1e6));
    if (!out.empty() && stamp <= out.back().stamp) {
      throw Error(ErrorCode::kParse, path + ": stamps not increasing at line " + std::to_string(lineno));
    }
    out.push_back(Pose::from_quaternion(q, {v[1], v[2], v[3]}, stamp));
  }
  return out;
}

void write_pgm(const std::string& path, const TimeSurface& surface) {
  auto out = open_out(path, true);
  out << "P5\n" << surface.width << ' ' << surface.height << "\n255\n";
  for (double v : surface.values) {
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)))));
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

}  // namespace evs
