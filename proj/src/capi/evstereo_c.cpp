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

#include "evstereo/evstereo.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <string_view>
#include <vector>

#include "evstereo/error.hpp"
#include "evstereo/eval.hpp"
#include "evstereo/io.hpp"
#include "evstereo/pipeline.hpp"
#include "evstereo/synth.hpp"

struct evs_config {
  evs::PipelineConfig config;
};

struct evs_odometry {
  std::unique_ptr<evs::Odometry> odometry;
};

struct evs_trajectory {
  std::vector<evs::Pose> poses;
};

struct evs_report {
  evs::RpeReport report;
  std::size_t dropped = 0;
  std::string text;
  std::string csv;
};

namespace {

thread_local std::string g_last_error;

evs_status fail(evs_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

evs_status status_of(evs::ErrorCode code) {
  switch (code) {
    case evs::ErrorCode::kInvalidArgument: return EVS_ERR_INVALID_ARGUMENT;
    case evs::ErrorCode::kIo: return EVS_ERR_IO;
    case evs::ErrorCode::kParse: return EVS_ERR_PARSE;
    case evs::ErrorCode::kStreamOrder: return EVS_ERR_STREAM_ORDER;
    case evs::ErrorCode::kDegenerate: return EVS_ERR_DEGENERATE;
    case evs::ErrorCode::kRuntime: return EVS_ERR_RUNTIME;
  }
  return EVS_ERR_RUNTIME;
}

// Runs `body` and converts any exception into a status.
template <typename F>
evs_status guarded(F&& body) {
  try {
    return body();
  } catch (const evs::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(EVS_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(EVS_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(EVS_ERR_RUNTIME, "unknown error");
  }
}

#define EVS_REQUIRE(cond, what) \
  if (!(cond)) return fail(EVS_ERR_INVALID_ARGUMENT, what)

// Integer-valued keys and their storage; doubles below.
std::int64_t* int_field(evs::PipelineConfig& c, std::string_view key) {
  if (key == "events_per_estimate") return &c.events_per_estimate;
  if (key == "max_interval_us") return &c.max_interval;
  if (key == "kappa_us") return &c.kappa;
  if (key == "recency_window_us") return &c.recency_window;
  return nullptr;
}

int* small_int_field(evs::PipelineConfig& c, std::string_view key) {
  if (key == "window") return &c.matcher.window;
  if (key == "ransac_hypotheses") return &c.ransac.hypotheses;
  if (key == "ransac_sample_size") return &c.ransac.sample_size;
  if (key == "ransac_min_inliers") return &c.ransac.min_inliers;
  return nullptr;
}

double* double_field(evs::PipelineConfig& c, std::string_view key) {
  if (key == "delta_us") return &c.delta;
  if (key == "zncc_min") return &c.matcher.zncc_min;
  if (key == "epipolar_tolerance") return &c.matcher.epipolar_tolerance;
  if (key == "d_max") return &c.matcher.d_max;
  if (key == "temporal_radius") return &c.matcher.temporal_radius;
  if (key == "closure_tolerance") return &c.matcher.closure_tolerance;
  if (key == "ransac_threshold") return &c.ransac.inlier_threshold;
  if (key == "d_min") return &c.limits.d_min;
  if (key == "z_max") return &c.limits.z_max;
  return nullptr;
}

bool integral(double v) { return std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9e15; }

evs_pose to_c(const evs::Pose& p) {
  evs_pose out{};
  out.stamp = static_cast<double>(p.stamp) * 1e-6;
  const Eigen::Quaterniond q = p.quaternion();
  for (int i = 0; i < 3; ++i) out.t[i] = p.t[i];
  out.q[0] = q.x();
  out.q[1] = q.y();
  out.q[2] = q.z();
  out.q[3] = q.w();
  return out;
}

void fill_stats(const evs::PipelineStats& s, std::uint64_t extra_dropped, evs_stats* out) {
  out->events_left = s.events[0];
  out->events_right = s.events[1];
  out->dropped_events = s.dropped_events + extra_dropped;
  out->corners_left = s.corners[0];
  out->corners_right = s.corners[1];
  out->estimates = s.estimates;
  out->failed_estimates = s.failed_estimates;
  out->stall_estimates = s.stall_estimates;
}

evs::SensorSize sensor_of(const evs::CameraIntrinsics& ci) { return {ci.width, ci.height}; }

evs::Scenario build_scenario(const evs_synth_options& o) {
  const std::string name = o.scenario ? o.scenario : "corridor";
  if (name == "corridor") {
    evs::CorridorOptions c;
    if (o.speed > 0.0) c.speed = o.speed;
    if (o.distance > 0.0 || o.still_duration <= 0.0) {
      if (o.distance > 0.0) c.distance = o.distance;
    } else {
      c.distance = 0.0;
      c.still_duration = o.still_duration;
    }
    c.lateral_speed = o.lateral_speed;
    c.yaw_rate = o.yaw_rate;
    c.jitter_px = o.jitter_px;
    c.spurious_rate = o.spurious_rate;
    c.diagonal_braces = o.diagonal_braces != 0;
    evs::Scenario sc = evs::corridor_scenario(c);
    sc.jitter_us = o.jitter_us;
    return sc;
  }
  if (name == "street") {
    evs::StreetOptions s;
    if (o.speed > 0.0) s.speed = o.speed;
    if (o.distance > 0.0) s.distance = o.distance;
    s.jitter_px = o.jitter_px;
    evs::Scenario sc = evs::street_scenario(s);
    sc.jitter_us = o.jitter_us;
    sc.spurious_rate = o.spurious_rate;
    return sc;
  }
  if (name == "edge") {
    const double speed = o.speed > 0.0 ? o.speed : 0.2;
    const double duration = o.distance > 0.0 ? o.distance / speed : 0.5;
    evs::Scenario sc = evs::edge_scenario(o.depth != 0.0 ? o.depth : 2.0, speed, duration);
    sc.jitter_px = o.jitter_px;
    sc.jitter_us = o.jitter_us;
    sc.spurious_rate = o.spurious_rate;
    return sc;
  }
  throw evs::Error(evs::ErrorCode::kInvalidArgument, "unknown scenario '" + name + "'");
}

void write_correspondences(const std::string& path,
                           const std::vector<evs::JunctionObservation>& tracks) {
  std::ofstream out(path);
  if (!out) throw evs::Error(evs::ErrorCode::kIo, "cannot write '" + path + "'");
  out << "junction_id,t_us,cam,x,y\n";
  char line[128];
  for (const auto& o : tracks) {
    std::snprintf(line, sizeof line, "%d,%lld,%d,%.6f,%.6f\n", o.junction,
                  static_cast<long long>(o.t), evs::index(o.camera), o.x, o.y);
    out << line;
  }
  if (!out) throw evs::Error(evs::ErrorCode::kIo, "write failed for '" + path + "'");
}

}  // namespace

extern "C" {

const char* evs_version(void) { return "0.1.0"; }

const char* evs_last_error(void) { return g_last_error.c_str(); }

const char* evs_status_name(evs_status status) {
  switch (status) {
    case EVS_OK: return "ok";
    case EVS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case EVS_ERR_IO: return "i/o error";
    case EVS_ERR_PARSE: return "parse error";
    case EVS_ERR_STREAM_ORDER: return "stream order error";
    case EVS_ERR_DEGENERATE: return "degenerate input";
    case EVS_ERR_RUNTIME: return "runtime error";
    case EVS_ERR_UNKNOWN_KEY: return "unknown key";
  }
  return "unknown status";
}

// ---------------------------------------------------------------------------
// Configuration

evs_status evs_config_create(evs_config** out) {
  EVS_REQUIRE(out, "evs_config_create: null output");
  return guarded([&] {
    *out = new evs_config{};
    return EVS_OK;
  });
}

void evs_config_destroy(evs_config* config) { delete config; }

evs_status evs_config_set(evs_config* config, const char* key, double value) {
  EVS_REQUIRE(config && key, "evs_config_set: null argument");
  const std::string_view k(key);
  if (k == "seed") {
    EVS_REQUIRE(integral(value) && value >= 0.0, "seed must be a non-negative integer");
    config->config.seed = static_cast<std::uint64_t>(value);
    return EVS_OK;
  }
  if (auto* f = int_field(config->config, k)) {
    EVS_REQUIRE(integral(value), std::string(key) + " must be an integer");
    *f = static_cast<std::int64_t>(value);
    return EVS_OK;
  }
  if (auto* f = small_int_field(config->config, k)) {
    EVS_REQUIRE(integral(value) && std::abs(value) < 2e9, std::string(key) + " must be an integer");
    *f = static_cast<int>(value);
    return EVS_OK;
  }
  if (auto* f = double_field(config->config, k)) {
    EVS_REQUIRE(std::isfinite(value), std::string(key) + " must be finite");
    *f = value;
    return EVS_OK;
  }
  return fail(EVS_ERR_UNKNOWN_KEY, "unknown configuration key '" + std::string(k) + "'");
}

evs_status evs_config_get(const evs_config* config, const char* key, double* value) {
  EVS_REQUIRE(config && key && value, "evs_config_get: null argument");
  auto& c = const_cast<evs::PipelineConfig&>(config->config);
  const std::string_view k(key);
  if (k == "seed") {
    *value = static_cast<double>(c.seed);
  } else if (auto* f = int_field(c, k)) {
    *value = static_cast<double>(*f);
  } else if (auto* g = small_int_field(c, k)) {
    *value = *g;
  } else if (auto* d = double_field(c, k)) {
    *value = *d;
  } else {
    return fail(EVS_ERR_UNKNOWN_KEY, "unknown configuration key '" + std::string(k) + "'");
  }
  return EVS_OK;
}

// ---------------------------------------------------------------------------
// Odometry

evs_status evs_odometry_create(const evs_config* config, const char* calib_path,
                               evs_odometry** out) {
  EVS_REQUIRE(config && calib_path && out, "evs_odometry_create: null argument");
  return guarded([&] {
    config->config.validate();
    const evs::StereoRig rig = evs::read_calibration(calib_path);
    auto h = std::make_unique<evs_odometry>();
    h->odometry =
        std::make_unique<evs::Odometry>(config->config, evs::RectificationMap::build(rig));
    *out = h.release();
    return EVS_OK;
  });
}

void evs_odometry_destroy(evs_odometry* odometry) { delete odometry; }

evs_status evs_odometry_push(evs_odometry* odometry, evs_camera camera,
                             const evs_event* events, size_t count) {
  EVS_REQUIRE(odometry && (events || count == 0), "evs_odometry_push: null argument");
  EVS_REQUIRE(camera == EVS_LEFT || camera == EVS_RIGHT, "evs_odometry_push: bad camera");
  return guarded([&] {
    const evs::Camera cam = camera == EVS_LEFT ? evs::Camera::kLeft : evs::Camera::kRight;
    for (size_t i = 0; i < count; ++i) {
      const evs_event& e = events[i];
      if (e.polarity != 1 && e.polarity != -1) {
        return fail(EVS_ERR_INVALID_ARGUMENT,
                    "event " + std::to_string(i) + ": polarity must be +1 or -1");
      }
      evs::Event ev;
      ev.t = e.t;
      ev.x = e.x;
      ev.y = e.y;
      ev.polarity = e.polarity > 0 ? evs::Polarity::kPositive : evs::Polarity::kNegative;
      odometry->odometry->push(ev, cam);
    }
    return EVS_OK;
  });
}

evs_status evs_odometry_finish(evs_odometry* odometry) {
  EVS_REQUIRE(odometry, "evs_odometry_finish: null argument");
  return guarded([&] {
    odometry->odometry->finish();
    return EVS_OK;
  });
}

size_t evs_odometry_pose_count(const evs_odometry* odometry) {
  return odometry ? odometry->odometry->trajectory().size() : 0;
}

evs_status evs_odometry_stats(const evs_odometry* odometry, evs_stats* out) {
  EVS_REQUIRE(odometry && out, "evs_odometry_stats: null argument");
  fill_stats(odometry->odometry->stats(), 0, out);
  return EVS_OK;
}

evs_status evs_odometry_trajectory(const evs_odometry* odometry, evs_trajectory** out) {
  EVS_REQUIRE(odometry && out, "evs_odometry_trajectory: null argument");
  return guarded([&] {
    *out = new evs_trajectory{evs::poses_of(odometry->odometry->trajectory())};
    return EVS_OK;
  });
}

evs_status evs_run_files(const evs_config* config, const char* left_path,
                         const char* right_path, const char* calib_path, const char* dump_dir,
                         evs_trajectory** out, evs_stats* stats) {
  EVS_REQUIRE(config && left_path && right_path && calib_path && out,
              "evs_run_files: null argument");
  return guarded([&] {
    config->config.validate();
    const evs::StereoRig rig = evs::read_calibration(calib_path);
    const evs::RectificationMap rmap = evs::RectificationMap::build(rig);
    evs::EventReader left(left_path, sensor_of(rig.left));
    evs::EventReader right(right_path, sensor_of(rig.right));
    evs::SurfaceSink sink;
    if (dump_dir) {
      const std::filesystem::path dir(dump_dir);
      std::filesystem::create_directories(dir);
      sink = [dir](std::size_t k, const evs::TimeSurface& l, const evs::TimeSurface& r) {
        char name[32];
        std::snprintf(name, sizeof name, "left_%06zu.pgm", k);
        evs::write_pgm((dir / name).string(), l);
        std::snprintf(name, sizeof name, "right_%06zu.pgm", k);
        evs::write_pgm((dir / name).string(), r);
      };
    }
    evs::RunResult result = evs::run(config->config, rmap, left, right, sink);
    if (stats) fill_stats(result.stats, left.dropped() + right.dropped(), stats);
    *out = new evs_trajectory{evs::poses_of(result.trajectory)};
    return EVS_OK;
  });
}

// ---------------------------------------------------------------------------
// Trajectories

evs_status evs_trajectory_create(evs_trajectory** out) {
  EVS_REQUIRE(out, "evs_trajectory_create: null output");
  return guarded([&] {
    *out = new evs_trajectory{};
    return EVS_OK;
  });
}

void evs_trajectory_destroy(evs_trajectory* trajectory) { delete trajectory; }

evs_status evs_trajectory_read(const char* path, evs_trajectory** out) {
  EVS_REQUIRE(path && out, "evs_trajectory_read: null argument");
  return guarded([&] {
    *out = new evs_trajectory{evs::read_trajectory(path)};
    return EVS_OK;
  });
}

evs_status evs_trajectory_write(const evs_trajectory* trajectory, const char* path) {
  EVS_REQUIRE(trajectory && path, "evs_trajectory_write: null argument");
  return guarded([&] {
    evs::write_trajectory(path, trajectory->poses);
    return EVS_OK;
  });
}

size_t evs_trajectory_size(const evs_trajectory* trajectory) {
  return trajectory ? trajectory->poses.size() : 0;
}

evs_status evs_trajectory_get(const evs_trajectory* trajectory, size_t i, evs_pose* out) {
  EVS_REQUIRE(trajectory && out, "evs_trajectory_get: null argument");
  EVS_REQUIRE(i < trajectory->poses.size(), "evs_trajectory_get: index out of range");
  *out = to_c(trajectory->poses[i]);
  return EVS_OK;
}

evs_status evs_trajectory_append(evs_trajectory* trajectory, const evs_pose* pose) {
  EVS_REQUIRE(trajectory && pose, "evs_trajectory_append: null argument");
  const Eigen::Quaterniond q(pose->q[3], pose->q[0], pose->q[1], pose->q[2]);
  EVS_REQUIRE(std::isfinite(q.norm()) && q.norm() > 0.0, "quaternion must be non-zero");
  EVS_REQUIRE(std::isfinite(pose->stamp) && pose->stamp >= 0.0, "stamp must be non-negative");
  return guarded([&] {
    trajectory->poses.push_back(evs::Pose::from_quaternion(
        q.normalized(), Eigen::Vector3d(pose->t[0], pose->t[1], pose->t[2]),
        std::llround(pose->stamp * 1e6)));
    return EVS_OK;
  });
}

// ---------------------------------------------------------------------------
// Evaluation

evs_status evs_eval(const evs_trajectory* estimate, const evs_trajectory* reference,
                    const double* windows, size_t window_count, evs_report** out) {
  EVS_REQUIRE(estimate && reference && out && (windows || window_count == 0),
              "evs_eval: null argument");
  return guarded([&] {
    const evs::Association assoc = evs::associate(estimate->poses, reference->poses);
    auto h = std::make_unique<evs_report>();
    h->report = evs::rpe(assoc.pairs, std::span<const double>(windows, window_count));
    h->dropped = assoc.dropped;
    h->text = evs::format_report_text(h->report);
    h->csv = evs::format_report_csv(h->report);
    *out = h.release();
    return EVS_OK;
  });
}

void evs_report_destroy(evs_report* report) { delete report; }

size_t evs_report_window_count(const evs_report* report) {
  return report ? report->report.windows.size() : 0;
}

evs_status evs_report_window(const evs_report* report, size_t i, double* length,
                             size_t* samples, double* translation_pct,
                             double* rotation_deg_per_m) {
  EVS_REQUIRE(report, "evs_report_window: null report");
  EVS_REQUIRE(i < report->report.windows.size(), "evs_report_window: index out of range");
  const evs::WindowError& w = report->report.windows[i];
  if (length) *length = w.length;
  if (samples) *samples = w.samples;
  if (translation_pct) *translation_pct = w.translation_rmse;
  if (rotation_deg_per_m) *rotation_deg_per_m = w.rotation_rmse;
  return EVS_OK;
}

evs_status evs_report_summary(const evs_report* report, double* translation_pct,
                              double* rotation_deg_per_m, double* estimate_length,
                              double* reference_length, size_t* dropped) {
  EVS_REQUIRE(report, "evs_report_summary: null report");
  if (translation_pct) *translation_pct = report->report.mean_translation;
  if (rotation_deg_per_m) *rotation_deg_per_m = report->report.mean_rotation;
  if (estimate_length) *estimate_length = report->report.est_length;
  if (reference_length) *reference_length = report->report.ref_length;
  if (dropped) *dropped = report->dropped;
  return EVS_OK;
}

const char* evs_report_text(const evs_report* report) {
  return report ? report->text.c_str() : "";
}

const char* evs_report_csv(const evs_report* report) {
  return report ? report->csv.c_str() : "";
}

// ---------------------------------------------------------------------------
// Synthetic data

void evs_synth_options_init(evs_synth_options* options) {
  if (!options) return;
  *options = evs_synth_options{};
  options->scenario = "corridor";
  options->seed = 1;
}

evs_status evs_synth_write(const evs_synth_options* options, const char* left_path,
                           const char* right_path, const char* gt_path, const char* calib_path,
                           const char* corr_path, int binary) {
  EVS_REQUIRE(options && left_path && right_path && gt_path, "evs_synth_write: null argument");
  return guarded([&] {
    const evs::Scenario sc = build_scenario(*options);
    const evs::SynthOutput out = evs::generate(sc, options->seed);
    if (binary) {
      evs::write_events_binary(left_path, sensor_of(sc.rig.left), out.left);
      evs::write_events_binary(right_path, sensor_of(sc.rig.right), out.right);
    } else {
      evs::write_events_csv(left_path, out.left);
      evs::write_events_csv(right_path, out.right);
    }
    evs::write_trajectory(gt_path, out.ground_truth);
    if (calib_path) evs::write_calibration(calib_path, sc.rig);
    if (corr_path) write_correspondences(corr_path, out.tracks);
    return EVS_OK;
  });
}

}  // extern "C"
