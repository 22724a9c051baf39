// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "memtrack/hypothesis.hpp"
#include "memtrack/mask.hpp"

#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace memtrack {

enum class EntrySource { Prompt, Orm, Cam, Recent };

/// One stored frame: output masks plus the scores it was admitted with.
struct MemoryEntry {
  std::size_t frame_index = 0;
  EntrySource source = EntrySource::Recent;
  std::map<ClassId, BinaryMask> class_masks;
  double avg_confidence = 0.0;
  double avg_predicted_iou = 0.0;
  bool interference_flag = false;

  /// Mean of confidence and predicted IoU; CAM evicts the lowest.
  double quality() const noexcept { return (avg_confidence + avg_predicted_iou) / 2.0; }
};

/// Entries are immutable once stored and shared between stores and contexts.
using EntryPtr = std::shared_ptr<const MemoryEntry>;
using Context = std::vector<EntryPtr>;

struct BankConfig {
  std::size_t total_capacity = 12;
  std::size_t orm_capacity = 5;
  double cam_conf_threshold = 0.75;
  double cam_iou_threshold = 0.80;
  double theta_iou = 0.8;
  double band_lo = 0.6;
  double band_hi = 0.9;
  double epsilon = 1e-6;

  /// Throws ConfigError on a capacity or band violation.
  void validate() const;
  /// Largest CAM size allowed next to `orm_size` ORM entries.
  std::size_t cam_ceiling(std::size_t orm_size) const noexcept {
    const std::size_t reserved = 2 + orm_size;
    return total_capacity > reserved ? total_capacity - reserved : 0;
  }
};

/// Write counts per store, for checking which stores a policy touched.
struct StoreCounters {
  std::size_t prompt_installs = 0;
  std::size_t orm_inserts = 0;
  std::size_t cam_inserts = 0;
  std::size_t recent_updates = 0;
  std::size_t fifo_updates = 0;

  friend bool operator==(const StoreCounters&, const StoreCounters&) = default;
};

/// Prompt entries, a bounded occlusion-resilient FIFO (ORM), a context-aware
/// store (CAM) whose ceiling shrinks as ORM grows, and a recent-frame slot.
class MemoryBank {
public:
  explicit MemoryBank(BankConfig cfg = {});

  const BankConfig& config() const noexcept { return cfg_; }
  const std::map<ClassId, EntryPtr>& prompt_entries() const noexcept { return prompts_; }
  const std::deque<EntryPtr>& orm_entries() const noexcept { return orm_; }
  const std::vector<EntryPtr>& cam_entries() const noexcept { return cam_; }
  const EntryPtr& recent_entry() const noexcept { return recent_; }
  const StoreCounters& counters() const noexcept { return counters_; }

  /// Stores a permanent prompt for one class. Throws std::invalid_argument if
  /// the class already has one.
  void install_prompt(ClassId cls, std::size_t frame_index, BinaryMask mask);

  /// Appends an interference-flagged entry, dropping the oldest ORM entry when
  /// full and trimming CAM to its new ceiling.
  void orm_insert(MemoryEntry entry);

  /// Dual-threshold admission, excluding ORM and prompt frames.
  bool cam_admit(const MemoryEntry& entry) const;

  /// Appends to CAM; over the ceiling, the lowest-quality older entry (oldest
  /// on ties) is evicted. The appended entry itself is never the victim.
  void cam_insert(MemoryEntry entry);

  void set_recent(MemoryEntry entry);

  /// Prompts, ORM oldest-first, CAM oldest-first, then recent. Non-prompt
  /// entries repeating an earlier frame index are dropped.
  Context assemble_context(std::size_t current_frame) const;

  /// Throws InvariantViolation describing the first broken invariant.
  void check_invariants() const;

  /// {"prompt":[...],"orm":[...],"cam":[...],"recent":n|null}
  std::string state_json() const;

  std::vector<std::size_t> prompt_frames() const;

private:
  bool is_prompt_frame(std::size_t frame) const;
  void trim_cam(bool keep_newest = false);

  BankConfig cfg_;
  std::map<ClassId, EntryPtr> prompts_;
  std::deque<EntryPtr> orm_;
  std::vector<EntryPtr> cam_;
  EntryPtr recent_;
  StoreCounters counters_;
};

/// Vanilla baseline: prompts plus a FIFO of the last total_capacity - 1 frames.
class FifoBank {
public:
  explicit FifoBank(std::size_t total_capacity = 12);

  std::size_t queue_capacity() const noexcept { return queue_capacity_; }
  const std::map<ClassId, EntryPtr>& prompt_entries() const noexcept { return prompts_; }
  const std::deque<EntryPtr>& queue() const noexcept { return queue_; }
  const StoreCounters& counters() const noexcept { return counters_; }

  void install_prompt(ClassId cls, std::size_t frame_index, BinaryMask mask);
  /// Throws std::invalid_argument if the frame is not newer than the back.
  void fifo_update(MemoryEntry entry);
  /// Prompts, then the queue oldest-first (queue frames equal to a prompt
  /// frame are skipped). `newest_limit` keeps only the newest N queue entries.
  Context fifo_context(std::optional<std::size_t> newest_limit = std::nullopt) const;

  void check_invariants() const;
  std::string state_json() const;

private:
  std::size_t queue_capacity_;
  std::map<ClassId, EntryPtr> prompts_;
  std::deque<EntryPtr> queue_;
  StoreCounters counters_;
};

}  // namespace memtrack
