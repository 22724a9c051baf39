// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "memtrack/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace memtrack {

void CandidateMask::validate() const {
  if (class_masks.size() != predicted_iou.size() || class_masks.size() != confidence.size()) {
    throw std::invalid_argument("CandidateMask: mask/iou/confidence key sets differ");
  }
  const BinaryMask* first = nullptr;
  for (const auto& [cls, mask] : class_masks) {
    if (!predicted_iou.contains(cls) || !confidence.contains(cls)) {
      throw std::invalid_argument("CandidateMask: class " + std::to_string(cls) +
                                  " lacks a score");
    }
    if (first != nullptr && !first->same_shape(mask)) {
      throw std::invalid_argument("CandidateMask: class masks differ in shape");
    }
    first = &mask;
  }
}

CandidateSet::CandidateSet(std::size_t frame_index, std::vector<CandidateMask> candidates)
    : frame_index_(frame_index) {
  if (candidates.size() != kBranchCount) {
    throw std::invalid_argument("CandidateSet: expected 3 candidates, got " +
                                std::to_string(candidates.size()));
  }
  for (std::size_t k = 0; k < kBranchCount; ++k) {
    candidates[k].validate();
    candidates_[k] = std::move(candidates[k]);
  }
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Clean:
      return "clean";
    case Verdict::Interference:
      return "interference";
    case Verdict::Redundant:
      return "redundant";
  }
  return "unknown";
}

double avg_iou(const CandidateMask& c, const ClassSet& present) {
  if (present.empty()) {
    throw std::invalid_argument("avg_iou: present class set is empty");
  }
  double sum = 0.0;
  for (const ClassId cls : present) {
    const auto it = c.predicted_iou.find(cls);
    if (it == c.predicted_iou.end()) {
      throw std::invalid_argument("avg_iou: candidate has no score for class " +
                                  std::to_string(cls));
    }
    sum += it->second;
  }
  return sum / static_cast<double>(present.size());
}

std::optional<std::size_t> select_primary(const CandidateSet& s, const ClassSet& present,
                                          double theta) {
  if (present.empty()) {
    return std::nullopt;
  }
  std::size_t best = 0;
  double best_score = avg_iou(s[0], present);
  for (std::size_t k = 1; k < kBranchCount; ++k) {
    const double score = avg_iou(s[k], present);
    if (score > best_score) {
      best = k;
      best_score = score;
    }
  }
  if (best_score < theta) {
    return std::nullopt;
  }
  return best;
}

BinaryMask refine_interference(const BinaryMask& primary, std::span<const BinaryMask> alternatives,
                               Connectivity connectivity) {
  BinaryMask alt_union(primary.width(), primary.height());
  for (const auto& alt : alternatives) {
    alt_union = mask_union(alt_union, alt);
  }
  const BinaryMask overlap = intersect(primary, alt_union);
  const BinaryMask remainder = subtract(primary, overlap);
  return mask_union(largest_connected_component(remainder, connectivity), overlap);
}

Verdict classify_ratio(double ratio, double lo, double hi) noexcept {
  if (ratio < lo) {
    return Verdict::Interference;
  }
  if (ratio > hi) {
    return Verdict::Redundant;
  }
  return Verdict::Clean;
}

InterferenceVerdict classify_interference(const BinaryMask& refined, const BinaryMask& primary,
                                          double lo, double hi) {
  if (!refined.same_shape(primary)) {
    throw std::invalid_argument("classify_interference: mask dimensions differ");
  }
  const auto outer = bounding_box(primary);
  if (!outer) {
    return {Verdict::Redundant, 1.0};
  }
  const auto inner = bounding_box(refined);
  const double ratio = inner ? bbox_overlap_ratio(*inner, *outer) : 0.0;
  return {classify_ratio(ratio, lo, hi), ratio};
}

RefinementResult refine_frame(const CandidateSet& s, std::size_t primary_index,
                              const ClassSet& present, double lo, double hi) {
  if (primary_index >= kBranchCount) {
    throw std::out_of_range("refine_frame: primary index out of range");
  }
  RefinementResult result{primary_index, {}, {Verdict::Redundant, 1.0}};
  const CandidateMask& primary = s[primary_index];
  double min_ratio = 1.0;
  for (const ClassId cls : present) {
    const auto it = primary.class_masks.find(cls);
    if (it == primary.class_masks.end()) {
      throw std::invalid_argument("refine_frame: primary lacks class " + std::to_string(cls));
    }
    std::vector<BinaryMask> alternatives;
    for (std::size_t k = 0; k < kBranchCount; ++k) {
      if (k == primary_index) {
        continue;
      }
      const auto alt = s[k].class_masks.find(cls);
      if (alt != s[k].class_masks.end()) {
        alternatives.push_back(alt->second);
      }
    }
    BinaryMask refined = refine_interference(it->second, alternatives);
    const InterferenceVerdict v = classify_interference(refined, it->second, lo, hi);
    min_ratio = std::min(min_ratio, v.ratio);
    result.refined.emplace(cls, std::move(refined));
  }
  result.verdict = {classify_ratio(min_ratio, lo, hi), min_ratio};
  return result;
}

ScoreState update_scores(const ScoreState& state, const CandidateSet& s, const ClassSet& present) {
  ScoreState next = state;
  if (present.empty()) {
    return next;
  }
  for (std::size_t k = 0; k < kBranchCount; ++k) {
    next.cumulative[k] += std::log(avg_iou(s[k], present) + state.epsilon);
  }
  return next;
}

std::size_t select_branch(const ScoreState& state) noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kBranchCount; ++k) {
    if (state.cumulative[k] > state.cumulative[best]) {
      best = k;
    }
  }
  return best;
}

}  // namespace memtrack
