// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "memtrack/frame.hpp"
#include "memtrack/memory_bank.hpp"
#include "memtrack/synth_world.hpp"
#include "memtrack/tracker.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace memtrack {

/// Per-class masks for one frame. A missing class reads as an empty mask.
using MaskFrame = std::map<ClassId, BinaryMask>;

/// Dataset-accumulated IoU: Σ|p∩g| / Σ|p∪g|. nullopt when the class never
/// appears in either sequence. Throws std::invalid_argument on a length mismatch.
std::optional<double> class_iou(std::span<const BinaryMask> pred, std::span<const BinaryMask> gt);

/// Mean over frames of the mean per-class IoU over classes present in that
/// frame's ground truth, as a percentage. Throws std::invalid_argument if no
/// frame has a ground-truth class.
double challenge_iou(std::span<const MaskFrame> pred, std::span<const MaskFrame> gt);

/// Like challenge_iou, but each frame scores GT-present ∪ predicted-nonempty
/// classes, so hallucinated classes count as zero.
double iou_metric(std::span<const MaskFrame> pred, std::span<const MaskFrame> gt);

/// Mean of class_iou × 100 over classes present in the ground truth anywhere.
/// 0 when there are none.
double mciou(std::span<const MaskFrame> pred, std::span<const MaskFrame> gt);

struct MetricReport {
  double challenge_iou = 0.0;
  double iou = 0.0;
  double mciou = 0.0;
  std::map<ClassId, double> per_class;
  std::size_t frames_evaluated = 0;
};

MetricReport evaluate(std::span<const MaskFrame> pred, std::span<const MaskFrame> gt);

std::vector<MaskFrame> predictions_of(const TrackResult& result);
std::vector<MaskFrame> ground_truth_of(std::span<const FrameObservation> frames);
MetricReport evaluate(const TrackResult& result, std::span<const FrameObservation> gt);

struct NamedScenario {
  std::string name;
  ScenarioScript script;
};

struct AblationSpec {
  std::vector<NamedScenario> scenarios;
  std::vector<std::uint64_t> seeds;
  std::vector<PolicyKind> policies{std::begin(kAllPolicies), std::end(kAllPolicies)};
  BankConfig bank;
  ProposerParams proposer;
  std::size_t jobs = 1;
};

struct AblationCell {
  PolicyKind policy;
  std::string scenario;
  std::uint64_t seed;
  MetricReport report;
};

struct AblationTable {
  /// Ordered by (policy name, scenario name, seed).
  std::vector<AblationCell> cells;
  /// Unweighted mean over (scenario, seed) cells.
  std::map<PolicyKind, MetricReport> aggregate;
  std::map<std::string, std::map<PolicyKind, MetricReport>> per_scenario;
};

/// Unweighted mean of reports; per-class values average over the reports
/// that carry the class.
MetricReport mean_report(std::span<const MetricReport> reports);

/// Runs every (scenario, seed, policy) cell on `jobs` worker threads. A cell
/// failure is rethrown with the cell named in the message.
AblationTable run_ablation(const AblationSpec& spec);

}  // namespace memtrack
