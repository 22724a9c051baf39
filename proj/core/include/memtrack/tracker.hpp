// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "memtrack/frame.hpp"
#include "memtrack/hypothesis.hpp"
#include "memtrack/memory_bank.hpp"
#include "memtrack/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memtrack {

/// Memory policies compared in the ablation: vanilla FIFO, + context-aware
/// memory, + occlusion-resilient memory, and both.
enum class PolicyKind { Fifo, CamOnly, OrmOnly, MaSam2 };

inline constexpr PolicyKind kAllPolicies[] = {PolicyKind::Fifo, PolicyKind::CamOnly,
                                              PolicyKind::OrmOnly, PolicyKind::MaSam2};

/// "fifo" | "cam" | "orm" | "ma"
std::string_view to_string(PolicyKind p) noexcept;
/// Row label used in ablation tables ("SAM2", "+ CAM", ...).
std::string_view table_label(PolicyKind p) noexcept;
/// Throws ConfigError on an unknown name.
PolicyKind parse_policy(std::string_view name);

struct ClassPrompt {
  std::size_t first_appearance_frame = 0;
  BinaryMask mask;
};

/// One mask prompt per class, given on the frame the class first appears.
using Prompt = std::map<ClassId, ClassPrompt>;

/// Produces three candidate multi-class masks for a frame from the assembled
/// memory context. Must be deterministic in its inputs and stream state.
using Proposer =
    std::function<std::vector<CandidateMask>(const FrameObservation&, const Context&, RandomStream&)>;

struct FrameRecord {
  std::size_t frame = 0;
  std::size_t branch = 0;
  std::optional<std::size_t> primary;
  /// Absent for policies without the interference filter and for frames
  /// that failed the primary gate.
  std::optional<InterferenceVerdict> verdict;
  std::vector<std::size_t> context_frames;
  std::map<ClassId, BinaryMask> masks;
  ScoreState scores;
  std::string bank_state;
};

struct TrackResult {
  std::vector<FrameRecord> frames;
  ScoreState final_scores;
  StoreCounters counters;
};

/// Throws std::invalid_argument on a bad prompt or proposer output, and
/// InvariantViolation if a memory store breaks its invariants.
TrackResult run_sequence(std::span<const FrameObservation> frames, const Prompt& prompt,
                         PolicyKind policy, const BankConfig& cfg, const Proposer& proposer,
                         std::uint64_t seed);

/// Installs the prompt for `cls` if `frame_index` is its first appearance.
/// Throws std::invalid_argument on a frame mismatch or a repeated install.
void install_prompt(MemoryBank& bank, const Prompt& prompt, ClassId cls, std::size_t frame_index);
void install_prompt(FifoBank& bank, const Prompt& prompt, ClassId cls, std::size_t frame_index);

}  // namespace memtrack
