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

#include "evstereo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "evstereo/error.hpp"

namespace evs {

Pose interpolate(std::span<const Pose> ref, Timestamp t) {
  if (ref.empty() || t < ref.front().stamp || t > ref.back().stamp) {
    throw Error(ErrorCode::kInvalidArgument, "interpolate: stamp outside reference");
  }
  auto it = std::lower_bound(ref.begin(), ref.end(), t,
                             [](const Pose& p, Timestamp s) { return p.stamp < s; });
  if (it->stamp == t) return *it;
  const Pose& b = *it;
  const Pose& a = *(it - 1);
  const double alpha = static_cast<double>(t - a.stamp) / static_cast<double>(b.stamp - a.stamp);
  const Eigen::Quaterniond q = a.quaternion().slerp(alpha, b.quaternion());
  return Pose::from_quaternion(q, (1.0 - alpha) * a.t + alpha * b.t, t);
}

Association associate(std::span<const Pose> est, std::span<const Pose> ref) {
  Association out;
  if (ref.empty() || est.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "associate: empty trajectory");
  }
  for (const Pose& e : est) {
    if (e.stamp < ref.front().stamp || e.stamp > ref.back().stamp) {
      ++out.dropped;
      continue;
    }
    out.pairs.push_back({e, interpolate(ref, e.stamp)});
  }
  if (out.pairs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "associate: trajectories do not overlap in time");
  }
  return out;
}

double path_length(std::span<const Pose> poses) {
  double len = 0.0;
  for (std::size_t i = 1; i < poses.size(); ++i) len += (poses[i].t - poses[i - 1].t).norm();
  return len;
}

double rotation_angle(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d skew(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double c = 0.5 * (R.trace() - 1.0);
  return std::atan2(0.5 * skew.norm(), c);
}

namespace {

// Relative motion a^-1 b, evaluated elementwise so that a == b gives an
// exactly symmetric rotation and exactly zero translation.
void relative(const Pose& a, const Pose& b, Eigen::Matrix3d& R, Eigen::Vector3d& t) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a.R(k, i) * b.R(k, j);
      R(i, j) = s;
    }
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += a.R(k, i) * (b.t(k) - a.t(k));
    t(i) = s;
  }
}

}  // namespace

RpeReport rpe(std::span<const PosePair> pairs, std::span<const double> window_lengths) {
  if (pairs.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "rpe: need at least two pose pairs");
  }
  RpeReport report;
  std::vector<Pose> est, ref;
  for (const auto& p : pairs) {
    est.push_back(p.est);
    ref.push_back(p.ref);
  }
  report.est_length = path_length(est);
  report.ref_length = path_length(ref);

  std::vector<double> arc(ref.size(), 0.0);
  for (std::size_t i = 1; i < ref.size(); ++i) arc[i] = arc[i - 1] + (ref[i].t - ref[i - 1].t).norm();

  for (double L : window_lengths) {
    if (!(L > 0.0)) throw Error(ErrorCode::kInvalidArgument, "rpe: window length must be positive");
    double sum_t = 0.0, sum_r = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < ref.size(); ++i) {
      const double target = arc[i] + L;
      if (arc.back() < target) break;
      auto it = std::lower_bound(arc.begin() + static_cast<std::ptrdiff_t>(i) + 1, arc.end(), target);
      std::size_t j = static_cast<std::size_t>(it - arc.begin());
      if (j > i + 1 && (j == arc.size() || std::abs(arc[j - 1] - target) <= std::abs(arc[j] - target))) {
        --j;
      }
      Eigen::Matrix3d Rr, Re;
      Eigen::Vector3d tr, te;
      relative(ref[i], ref[j], Rr, tr);
      relative(est[i], est[j], Re, te);
      // delta = (ref relative)^-1 (est relative)
      Eigen::Matrix3d dR;
      Eigen::Vector3d dt;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          double s = 0.0;
          for (int k = 0; k < 3; ++k) s += Rr(k, a) * Re(k, b);
          dR(a, b) = s;
        }
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += Rr(k, a) * (te(k) - tr(k));
        dt(a) = s;
      }
      const double et = dt.norm() / L * 100.0;
      const double er = rotation_angle(dR) * 180.0 / std::numbers::pi / L;
      sum_t += et * et;
      sum_r += er * er;
      ++n;
    }
    if (n == 0) {
      report.omitted.push_back(L);
      continue;
    }
    report.windows.push_back({L, n, std::sqrt(sum_t / static_cast<double>(n)),
                              std::sqrt(sum_r / static_cast<double>(n))});
  }
  for (const auto& w : report.windows) {
    report.mean_translation += w.translation_rmse;
    report.mean_rotation += w.rotation_rmse;
  }
  if (!report.windows.empty()) {
    report.mean_translation /= static_cast<double>(report.windows.size());
    report.mean_rotation /= static_cast<double>(report.windows.size());
  }
  return report;
}

std::string format_report_text(const RpeReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%10s %8s %14s %16s\n", "window[m]", "samples",
                "trans.RMSE[%]", "rot.RMSE[deg/m]");
  out += line;
  for (const auto& w : report.windows) {
    std::snprintf(line, sizeof line, "%10.3f %8zu %14.4f %16.5f\n", w.length, w.samples,
                  w.translation_rmse, w.rotation_rmse);
    out += line;
  }
  for (double L : report.omitted) {
    std::snprintf(line, sizeof line, "%10.3f  omitted: trajectory shorter than window\n", L);
    out += line;
  }
  std::snprintf(line, sizeof line, "%10s %8s %14.4f %16.5f\n", "average", "", report.mean_translation,
                report.mean_rotation);
  out += line;
  std::snprintf(line, sizeof line, "trajectory length [m]: reference %.3f, estimate %.3f\n",
                report.ref_length, report.est_length);
  out += line;
  return out;
}

std::string format_report_csv(const RpeReport& report) {
  std::string out = "window_m,samples,translation_rmse_pct,rotation_rmse_deg_per_m\n";
  char line[160];
  for (const auto& w : report.windows) {
    std::snprintf(line, sizeof line, "%.9g,%zu,%.9g,%.9g\n", w.length, w.samples,
                  w.translation_rmse, w.rotation_rmse);
    out += line;
  }
  return out;
}

}  // namespace evs
