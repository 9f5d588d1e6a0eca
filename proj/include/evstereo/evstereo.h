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

#ifndef EVSTEREO_EVSTEREO_H
#define EVSTEREO_EVSTEREO_H

/* C interface to the stereo event odometry engine.
 *
 * All handles are opaque and owned by the caller once created; release them
 * with the matching *_destroy function (NULL is accepted). Functions that can
 * fail return an evs_status; on failure evs_last_error() describes the cause.
 * The error text is thread-local and valid until the next failing call on the
 * same thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(EVSTEREO_BUILDING)
#    define EVS_API __declspec(dllexport)
#  else
#    define EVS_API __declspec(dllimport)
#  endif
#else
#  define EVS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum evs_status {
  EVS_OK = 0,
  EVS_ERR_INVALID_ARGUMENT = 1,
  EVS_ERR_IO = 2,
  EVS_ERR_PARSE = 3,
  EVS_ERR_STREAM_ORDER = 4,
  EVS_ERR_DEGENERATE = 5,
  EVS_ERR_RUNTIME = 6,
  EVS_ERR_UNKNOWN_KEY = 7
} evs_status;

typedef enum evs_camera { EVS_LEFT = 0, EVS_RIGHT = 1 } evs_camera;

typedef struct evs_event {
  int64_t t;        /* microseconds */
  uint16_t x;
  uint16_t y;
  int8_t polarity;  /* +1 or -1 */
} evs_event;

typedef struct evs_pose {
  double stamp;  /* seconds */
  double t[3];   /* meters */
  double q[4];   /* x y z w */
} evs_pose;

typedef struct evs_stats {
  uint64_t events_left;
  uint64_t events_right;
  uint64_t dropped_events;
  uint64_t corners_left;
  uint64_t corners_right;
  uint64_t estimates;
  uint64_t failed_estimates;
  uint64_t stall_estimates;
} evs_stats;

typedef struct evs_config evs_config;
typedef struct evs_odometry evs_odometry;
typedef struct evs_trajectory evs_trajectory;
typedef struct evs_report evs_report;

EVS_API const char* evs_version(void);
EVS_API const char* evs_last_error(void);
EVS_API const char* evs_status_name(evs_status status);

/* Pipeline configuration. Keys (value type):
 *   events_per_estimate (int)    max_interval_us (int)    kappa_us (int)
 *   recency_window_us (int)      seed (int)               window (int)
 *   ransac_hypotheses (int)      ransac_sample_size (int) ransac_min_inliers (int)
 *   delta_us (double)            zncc_min (double)        epipolar_tolerance (double)
 *   d_max (double)               temporal_radius (double) closure_tolerance (double)
 *   ransac_threshold (double)    d_min (double)           z_max (double)
 * Integer keys accept evs_config_set_double with an integral value and vice
 * versa. Values are checked when the configuration is used. */
EVS_API evs_status evs_config_create(evs_config** out);
EVS_API void evs_config_destroy(evs_config* config);
EVS_API evs_status evs_config_set(evs_config* config, const char* key, double value);
EVS_API evs_status evs_config_get(const evs_config* config, const char* key, double* value);

/* Streaming odometry over a calibration file. */
EVS_API evs_status evs_odometry_create(const evs_config* config, const char* calib_path,
                                       evs_odometry** out);
EVS_API void evs_odometry_destroy(evs_odometry* odometry);
/* Events of one camera; calls must interleave in global time order. */
EVS_API evs_status evs_odometry_push(evs_odometry* odometry, evs_camera camera,
                                     const evs_event* events, size_t count);
EVS_API evs_status evs_odometry_finish(evs_odometry* odometry);
EVS_API size_t evs_odometry_pose_count(const evs_odometry* odometry);
EVS_API evs_status evs_odometry_stats(const evs_odometry* odometry, evs_stats* out);
/* Snapshot of the trajectory so far. */
EVS_API evs_status evs_odometry_trajectory(const evs_odometry* odometry, evs_trajectory** out);

/* Full run over two event files (binary or CSV). When dump_dir is not NULL,
 * writes left_NNNNNN.pgm and right_NNNNNN.pgm for every estimate. stats may
 * be NULL. */
EVS_API evs_status evs_run_files(const evs_config* config, const char* left_path,
                                 const char* right_path, const char* calib_path,
                                 const char* dump_dir, evs_trajectory** out,
                                 evs_stats* stats);

EVS_API evs_status evs_trajectory_create(evs_trajectory** out);
EVS_API void evs_trajectory_destroy(evs_trajectory* trajectory);
EVS_API evs_status evs_trajectory_read(const char* path, evs_trajectory** out);
EVS_API evs_status evs_trajectory_write(const evs_trajectory* trajectory, const char* path);
EVS_API size_t evs_trajectory_size(const evs_trajectory* trajectory);
EVS_API evs_status evs_trajectory_get(const evs_trajectory* trajectory, size_t i, evs_pose* out);
/* Quaternion is normalized on append. */
EVS_API evs_status evs_trajectory_append(evs_trajectory* trajectory, const evs_pose* pose);

/* Relative pose error over arc-length windows (meters). */
EVS_API evs_status evs_eval(const evs_trajectory* estimate, const evs_trajectory* reference,
                            const double* windows, size_t window_count, evs_report** out);
EVS_API void evs_report_destroy(evs_report* report);
EVS_API size_t evs_report_window_count(const evs_report* report);
EVS_API evs_status evs_report_window(const evs_report* report, size_t i, double* length,
                                     size_t* samples, double* translation_pct,
                                     double* rotation_deg_per_m);
/* Any output pointer may be NULL. */
EVS_API evs_status evs_report_summary(const evs_report* report, double* translation_pct,
                                      double* rotation_deg_per_m, double* estimate_length,
                                      double* reference_length, size_t* dropped);
/* Owned by the report. */
EVS_API const char* evs_report_text(const evs_report* report);
EVS_API const char* evs_report_csv(const evs_report* report);

/* Synthetic scenarios: "corridor", "street" or "edge". */
typedef struct evs_synth_options {
  const char* scenario;
  double speed;           /* m/s */
  double distance;        /* m; 0 with still_duration for a static rig */
  double still_duration;  /* s */
  double lateral_speed;   /* m/s, corridor only */
  double yaw_rate;        /* rad/s, corridor only */
  double jitter_px;       /* timestamp noise as edge displacement */
  double jitter_us;       /* extra timestamp noise sigma */
  double spurious_rate;   /* events per pixel per second */
  double depth;           /* m, edge only */
  int diagonal_braces;    /* corridor only */
  uint64_t seed;
} evs_synth_options;

EVS_API void evs_synth_options_init(evs_synth_options* options);

/* Writes the two event streams (binary when binary != 0, else CSV), the
 * ground-truth trajectory and optionally the calibration and the junction
 * correspondence CSV ("junction_id,t_us,cam,x,y"). Optional paths may be
 * NULL. */
EVS_API evs_status evs_synth_write(const evs_synth_options* options, const char* left_path,
                                   const char* right_path, const char* gt_path,
                                   const char* calib_path, const char* corr_path, int binary);

#ifdef __cplusplus
}
#endif

#endif /* EVSTEREO_EVSTEREO_H */
