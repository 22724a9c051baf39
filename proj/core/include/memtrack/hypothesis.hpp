// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "memtrack/mask.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

namespace memtrack {

using ClassId = int;
using ClassSet = std::set<ClassId>;

inline constexpr std::size_t kBranchCount = 3;

/// One multi-class segmentation hypothesis from the proposer.
struct CandidateMask {
  std::map<ClassId, BinaryMask> class_masks;
  std::map<ClassId, double> predicted_iou;
  std::map<ClassId, double> confidence;

  /// Throws std::invalid_argument if key sets differ or mask shapes differ.
  void validate() const;
};

/// The three per-frame hypotheses, index-aligned across frames.
class CandidateSet {
public:
  /// Throws std::invalid_argument unless exactly kBranchCount valid candidates
  /// are supplied.
  CandidateSet(std::size_t frame_index, std::vector<CandidateMask> candidates);

  std::size_t frame_index() const noexcept { return frame_index_; }
  const CandidateMask& operator[](std::size_t k) const { return candidates_[k]; }
  std::span<const CandidateMask, kBranchCount> candidates() const noexcept { return candidates_; }

private:
  std::size_t frame_index_;
  std::array<CandidateMask, kBranchCount> candidates_;
};

/// Running per-branch sum of ln(avg IoU + epsilon).
struct ScoreState {
  std::array<double, kBranchCount> cumulative{0.0, 0.0, 0.0};
  double epsilon = 1e-6;
};

enum class Verdict { Clean, Interference, Redundant };

std::string_view to_string(Verdict v) noexcept;

struct InterferenceVerdict {
  Verdict verdict;
  double ratio;
};

struct RefinementResult {
  std::optional<std::size_t> primary_index;
  std::map<ClassId, BinaryMask> refined;
  InterferenceVerdict verdict;
};

/// Mean predicted IoU over `present`. Throws on empty `present` or a class the
/// candidate does not carry.
double avg_iou(const CandidateMask& c, const ClassSet& present);

/// Branch with the highest avg IoU (lowest index on ties), or nullopt when
/// that best value is below `theta`.
std::optional<std::size_t> select_primary(const CandidateSet& s, const ClassSet& present,
                                          double theta = 0.8);

/// CC(Ms \ (Ms ∩ Ma)) ∪ (Ms ∩ Ma), with Ma the union of the alternatives.
BinaryMask refine_interference(const BinaryMask& primary,
                               std::span<const BinaryMask> alternatives,
                               Connectivity connectivity = Connectivity::Four);

/// Bounding-box overlap of the refined mask against the primary, binned into
/// the [lo, hi] acceptance band.
InterferenceVerdict classify_interference(const BinaryMask& refined, const BinaryMask& primary,
                                          double lo = 0.6, double hi = 0.9);

/// Verdict for a bare ratio. Clean on the closed interval [lo, hi].
Verdict classify_ratio(double ratio, double lo, double hi) noexcept;

/// Per-class refinement of the primary branch against the other two. The
/// frame verdict is the one of the smallest per-class ratio, which makes it
/// Interference if any class is, else Clean if any class is, else Redundant.
RefinementResult refine_frame(const CandidateSet& s, std::size_t primary_index,
                              const ClassSet& present, double lo = 0.6, double hi = 0.9);

/// Adds ln(avg_iou_k + epsilon) to every branch k. No-op when `present` is empty.
ScoreState update_scores(const ScoreState& state, const CandidateSet& s, const ClassSet& present);

/// Argmax of the cumulative scores, lowest index on ties.
std::size_t select_branch(const ScoreState& state) noexcept;

}  // namespace memtrack
