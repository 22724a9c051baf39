// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "memtrack/frame.hpp"
#include "memtrack/memory_bank.hpp"
#include "memtrack/random.hpp"
#include "memtrack/tracker.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace memtrack {

struct Waypoint {
  std::size_t frame = 0;
  double row = 0.0;
  double col = 0.0;
  double angle = 0.0;  ///< radians, measured from +col towards +row
};

/// Half-open frame interval [start, end).
struct FrameInterval {
  std::size_t start = 0;
  std::size_t end = 0;
};

/// A capsule "instrument": a spine of `length` pixels swept by a disk of
/// `radius`, centred on the interpolated waypoint pose.
struct TargetScript {
  ClassId class_id = 0;
  double length = 0.0;
  double radius = 0.0;
  std::vector<Waypoint> waypoints;
  std::vector<FrameInterval> visible;
  int z_order = 0;
};

struct ScenarioScript {
  int height = 0;
  int width = 0;
  std::size_t frame_count = 0;
  std::vector<TargetScript> targets;

  /// Throws ConfigError naming the offending target/field.
  void validate() const;
};

/// Parses the scenario JSON schema; unknown keys are rejected.
ScenarioScript scenario_from_json(std::string_view text);
std::string scenario_to_json(const ScenarioScript& script);

/// Interpolated pose of a target at `frame` (held after the last waypoint).
Waypoint pose_at(const TargetScript& target, std::size_t frame);
bool is_visible(const TargetScript& target, std::size_t frame);

/// Rasterizes one capsule: pixel centres within `radius` of the spine.
BinaryMask rasterize_capsule(int width, int height, const Waypoint& pose, double length,
                             double radius);

/// Ground truth per frame. Contested pixels go to the highest z_order (ties to
/// the smaller class id).
std::vector<FrameObservation> render_scenario(const ScenarioScript& script);

/// Prompt built from each class's first visible ground-truth mask.
Prompt prompt_from_ground_truth(std::span<const FrameObservation> frames);

/// Best IoU between any context mask of `cls` and the current ground truth.
double context_relevance(ClassId cls, const Context& context, const FrameObservation& gt);

/// |dilate(gt_c, 2) ∩ other classes| / |gt_c|, and the class it overlaps most.
struct OverlapInfo {
  double fraction = 0.0;
  std::optional<ClassId> partner;
};
OverlapInfo overlap_fraction(ClassId cls, const FrameObservation& gt);

struct ProposerParams {
  double q_min = 0.0;
  double q_max = 0.97;
  int r_max = 1;
  int j_max = 1;
  double p_swap_base = 0.3;
  double p_miss_base = 1.0;
  /// One draw per class and frame, shared by the three branches.
  double sigma_iou = 0.05;
  double sigma_conf = 0.05;
  std::array<double, 3> branch_offsets{0.0, -0.30, -0.40};

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Noisy three-branch proposer whose quality rises with context relevance.
std::vector<CandidateMask> synthetic_proposer(const FrameObservation& gt, const Context& context,
                                              const ProposerParams& params, RandomStream& stream);

/// Binds parameters into a tracker Proposer.
Proposer make_synthetic_proposer(ProposerParams params);

/// Scenarios compiled in from the JSON fixtures under scenarios/.
const std::map<std::string, ScenarioScript>& builtin_scenarios();

}  // namespace memtrack
