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

// evstereo: run stereo event odometry, evaluate trajectories, generate
// synthetic recordings. Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "evstereo/evstereo.h"

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

int report_failure(const char* what, evs_status status) {
  std::cerr << "evstereo: " << what << ": " << evs_status_name(status) << ": "
            << evs_last_error() << "\n";
  return kRuntime;
}

// A numeric flag forwarded to the pipeline configuration only when given.
struct ConfigFlag {
  const char* key;
  double value = 0.0;
  CLI::Option* option = nullptr;
};

struct RunArgs {
  std::string left, right, calib, out, dump_dir;
  bool stats = false;
  std::vector<ConfigFlag> flags;
};

struct EvalArgs {
  std::string est, ref, csv;
  std::vector<double> windows{1.0, 2.0, 5.0, 10.0};
};

struct SynthArgs {
  std::string scenario = "corridor";
  std::string left, right, gt, calib, corr;
  std::string format = "bin";
  evs_synth_options options{};
};

int do_run(RunArgs& a) {
  evs_config* config = nullptr;
  if (evs_status s = evs_config_create(&config); s != EVS_OK) return report_failure("config", s);
  for (const ConfigFlag& f : a.flags) {
    if (f.option->count() == 0) continue;
    if (evs_status s = evs_config_set(config, f.key, f.value); s != EVS_OK) {
      evs_config_destroy(config);
      return report_failure(f.key, s);
    }
  }
  evs_trajectory* traj = nullptr;
  evs_stats stats{};
  evs_status s = evs_run_files(config, a.left.c_str(), a.right.c_str(), a.calib.c_str(),
                               a.dump_dir.empty() ? nullptr : a.dump_dir.c_str(), &traj, &stats);
  evs_config_destroy(config);
  if (s != EVS_OK) return report_failure("run", s);
  s = evs_trajectory_write(traj, a.out.c_str());
  const size_t poses = evs_trajectory_size(traj);
  evs_trajectory_destroy(traj);
  if (s != EVS_OK) return report_failure("write trajectory", s);
  if (a.stats) {
    std::printf("poses %zu\nevents %llu left, %llu right, %llu dropped\n"
                "corners %llu left, %llu right\nestimates %llu (%llu failed, %llu low-event)\n",
                poses, static_cast<unsigned long long>(stats.events_left),
                static_cast<unsigned long long>(stats.events_right),
                static_cast<unsigned long long>(stats.dropped_events),
                static_cast<unsigned long long>(stats.corners_left),
                static_cast<unsigned long long>(stats.corners_right),
                static_cast<unsigned long long>(stats.estimates),
                static_cast<unsigned long long>(stats.failed_estimates),
                static_cast<unsigned long long>(stats.stall_estimates));
  }
  if (stats.dropped_events > 0) {
    std::cerr << "evstereo: warning: " << stats.dropped_events
              << " events outside the sensor were dropped\n";
  }
  return 0;
}

int do_eval(const EvalArgs& a) {
  evs_trajectory* est = nullptr;
  evs_trajectory* ref = nullptr;
  if (evs_status s = evs_trajectory_read(a.est.c_str(), &est); s != EVS_OK) {
    return report_failure("read estimate", s);
  }
  if (evs_status s = evs_trajectory_read(a.ref.c_str(), &ref); s != EVS_OK) {
    evs_trajectory_destroy(est);
    return report_failure("read reference", s);
  }
  evs_report* report = nullptr;
  const evs_status s = evs_eval(est, ref, a.windows.data(), a.windows.size(), &report);
  evs_trajectory_destroy(est);
  evs_trajectory_destroy(ref);
  if (s != EVS_OK) return report_failure("eval", s);
  std::fputs(evs_report_text(report), stdout);
  size_t dropped = 0;
  evs_report_summary(report, nullptr, nullptr, nullptr, nullptr, &dropped);
  if (dropped > 0) std::printf("estimates outside the reference range: %zu\n", dropped);
  int rc = 0;
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    out << evs_report_csv(report);
    if (!out) {
      std::cerr << "evstereo: cannot write '" << a.csv << "'\n";
      rc = kRuntime;
    }
  }
  evs_report_destroy(report);
  return rc;
}

int do_synth(SynthArgs& a) {
  a.options.scenario = a.scenario.c_str();
  const evs_status s = evs_synth_write(
      &a.options, a.left.c_str(), a.right.c_str(), a.gt.c_str(),
      a.calib.empty() ? nullptr : a.calib.c_str(), a.corr.empty() ? nullptr : a.corr.c_str(),
      a.format == "bin");
  return s == EVS_OK ? 0 : report_failure("synth", s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo event-camera visual odometry"};
  app.require_subcommand(1);
  app.set_version_flag("--version", evs_version());

  RunArgs run;
  run.flags = {{"events_per_estimate"}, {"max_interval_us"}, {"delta_us"},
               {"kappa_us"},            {"zncc_min"},        {"seed"},
               {"recency_window_us"},   {"temporal_radius"}, {"ransac_threshold"},
               {"window"}};
  CLI::App* run_cmd = app.add_subcommand("run", "Estimate a trajectory from two event files");
  run_cmd->add_option("--left", run.left, "Left event file (binary or CSV)")
      ->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--right", run.right, "Right event file (binary or CSV)")
      ->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--calib", run.calib, "Stereo calibration file")
      ->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out, "Output trajectory file")->required();
  const std::pair<const char*, const char*> run_flags[] = {
      {"-N,--events", "Left-camera events per estimate"},
      {"--max-interval", "Longest gap between estimates, us"},
      {"--delta", "Time-surface decay, us"},
      {"--kappa", "Refractory interval, us"},
      {"--zncc-min", "Minimum ZNCC score for a match"},
      {"--seed", "RANSAC seed"},
      {"--recency-window", "Corner recency window, us (0 = adaptive)"},
      {"--temporal-radius", "Temporal match search radius, px"},
      {"--ransac-threshold", "RANSAC inlier threshold, px"},
      {"--window", "Descriptor window size (odd)"}};
  for (std::size_t i = 0; i < run.flags.size(); ++i) {
    run.flags[i].option =
        run_cmd->add_option(run_flags[i].first, run.flags[i].value, run_flags[i].second);
  }
  run_cmd->add_option("--dump-surfaces", run.dump_dir,
                      "Write one PGM per camera per estimate into this directory");
  run_cmd->add_flag("--stats", run.stats, "Print event, corner and estimate counts");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Relative pose error against a reference");
  eval_cmd->add_option("--est", eval.est, "Estimated trajectory")
      ->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--ref", eval.ref, "Reference trajectory")
      ->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--windows", eval.windows, "Window lengths in meters")
      ->delimiter(',')->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--csv", eval.csv, "Also write the report as CSV");

  SynthArgs synth;
  evs_synth_options_init(&synth.options);
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic stereo recording");
  synth_cmd->add_option("--scenario", synth.scenario, "Scene and rig")
      ->check(CLI::IsMember({"corridor", "street", "edge"}))->capture_default_str();
  synth_cmd->add_option("--speed", synth.options.speed, "m/s (0 = scenario default)");
  synth_cmd->add_option("--distance", synth.options.distance, "m (0 = scenario default)");
  synth_cmd->add_option("--still", synth.options.still_duration,
                        "Static rig for this many seconds (corridor, with --distance 0)");
  synth_cmd->add_option("--lateral-speed", synth.options.lateral_speed, "m/s (corridor)");
  synth_cmd->add_option("--yaw-rate", synth.options.yaw_rate, "rad/s (corridor)");
  synth_cmd->add_option("--depth", synth.options.depth, "Edge depth, m (edge)");
  synth_cmd->add_flag("--braces", synth.options.diagonal_braces, "X braces on corridor walls");
  synth_cmd->add_option("--jitter-px", synth.options.jitter_px,
                        "Timestamp noise as edge displacement, px");
  synth_cmd->add_option("--jitter-us", synth.options.jitter_us, "Timestamp noise sigma, us");
  synth_cmd->add_option("--spurious-rate", synth.options.spurious_rate,
                        "Noise events per pixel per second");
  synth_cmd->add_option("--seed", synth.options.seed, "Noise seed")->capture_default_str();
  synth_cmd->add_option("--out-left", synth.left, "Left event file")->required();
  synth_cmd->add_option("--out-right", synth.right, "Right event file")->required();
  synth_cmd->add_option("--out-gt", synth.gt, "Ground-truth trajectory")->required();
  synth_cmd->add_option("--out-calib", synth.calib, "Calibration file");
  synth_cmd->add_option("--out-corr", synth.corr, "Junction correspondence CSV");
  synth_cmd->add_option("--format", synth.format, "Event file format")
      ->check(CLI::IsMember({"bin", "csv"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    const auto active = app.get_subcommands();
    std::cerr << (active.empty() ? app.help() : active.front()->help());
    return kUsage;
  }

  if (*run_cmd) return do_run(run);
  if (*eval_cmd) return do_eval(eval);
  return do_synth(synth);
}
