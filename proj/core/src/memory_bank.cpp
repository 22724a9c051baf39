// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "memtrack/memory_bank.hpp"

#include "memtrack/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <iterator>
#include <set>
#include <stdexcept>
#include <utility>

namespace memtrack {

namespace {

EntryPtr make_prompt_entry(ClassId cls, std::size_t frame_index, BinaryMask mask) {
  if (mask.empty()) {
    throw std::invalid_argument("install_prompt: prompt mask for class " + std::to_string(cls) +
                                " is empty");
  }
  auto entry = std::make_shared<MemoryEntry>();
  entry->frame_index = frame_index;
  entry->source = EntrySource::Prompt;
  entry->class_masks.emplace(cls, std::move(mask));
  entry->avg_confidence = 1.0;
  entry->avg_predicted_iou = 1.0;
  return entry;
}

nlohmann::ordered_json frames_of(const auto& entries) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    out.push_back(e->frame_index);
  }
  return out;
}

}  // namespace

void BankConfig::validate() const {
  if (total_capacity < 3) {
    throw ConfigError("bank.total_capacity must be >= 3");
  }
  if (orm_capacity < 1 || orm_capacity > total_capacity - 2) {
    throw ConfigError("bank.orm_capacity must lie in [1, total_capacity - 2]");
  }
  if (!(band_lo > 0.0 && band_lo < band_hi && band_hi < 1.0)) {
    throw ConfigError("bank band requires 0 < band_lo < band_hi < 1");
  }
  for (const double v : {cam_conf_threshold, cam_iou_threshold, theta_iou}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError("bank thresholds must lie in [0, 1]");
    }
  }
  if (!(epsilon > 0.0)) {
    throw ConfigError("bank.epsilon must be > 0");
  }
}

MemoryBank::MemoryBank(BankConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void MemoryBank::install_prompt(ClassId cls, std::size_t frame_index, BinaryMask mask) {
  if (prompts_.contains(cls)) {
    throw std::invalid_argument("install_prompt: class " + std::to_string(cls) +
                                " already prompted");
  }
  prompts_.emplace(cls, make_prompt_entry(cls, frame_index, std::move(mask)));
  ++counters_.prompt_installs;
}

bool MemoryBank::is_prompt_frame(std::size_t frame) const {
  return std::any_of(prompts_.begin(), prompts_.end(),
                     [frame](const auto& kv) { return kv.second->frame_index == frame; });
}

void MemoryBank::trim_cam(bool keep_newest) {
  const std::size_t ceiling = cfg_.cam_ceiling(orm_.size());
  while (cam_.size() > ceiling) {
    // Lowest quality, ties to the oldest frame. A just-appended entry stays.
    const auto last = keep_newest && cam_.size() > 1 ? std::prev(cam_.end()) : cam_.end();
    auto victim = std::min_element(cam_.begin(), last, [](const auto& a, const auto& b) {
      if (a->quality() != b->quality()) {
        return a->quality() < b->quality();
      }
      return a->frame_index < b->frame_index;
    });
    cam_.erase(victim);
  }
}

void MemoryBank::orm_insert(MemoryEntry entry) {
  if (!entry.interference_flag || entry.source != EntrySource::Orm) {
    throw std::invalid_argument("orm_insert: entry must be an interference-flagged ORM entry");
  }
  const bool duplicate = std::any_of(orm_.begin(), orm_.end(), [&](const EntryPtr& e) {
    return e->frame_index == entry.frame_index;
  });
  if (duplicate) {
    throw std::invalid_argument("orm_insert: frame " + std::to_string(entry.frame_index) +
                                " already in ORM");
  }
  // A frame lives in at most one curated store.
  std::erase_if(cam_, [&](const EntryPtr& e) { return e->frame_index == entry.frame_index; });
  if (orm_.size() >= cfg_.orm_capacity) {
    orm_.pop_front();
  }
  orm_.push_back(std::make_shared<const MemoryEntry>(std::move(entry)));
  ++counters_.orm_inserts;
  trim_cam();
}

bool MemoryBank::cam_admit(const MemoryEntry& entry) const {
  if (entry.avg_confidence < cfg_.cam_conf_threshold ||
      entry.avg_predicted_iou < cfg_.cam_iou_threshold) {
    return false;
  }
  const bool in_orm = std::any_of(orm_.begin(), orm_.end(), [&](const EntryPtr& e) {
    return e->frame_index == entry.frame_index;
  });
  return !in_orm && !is_prompt_frame(entry.frame_index);
}

void MemoryBank::cam_insert(MemoryEntry entry) {
  entry.source = EntrySource::Cam;
  entry.interference_flag = false;
  std::erase_if(cam_, [&](const EntryPtr& e) { return e->frame_index == entry.frame_index; });
  cam_.push_back(std::make_shared<const MemoryEntry>(std::move(entry)));
  ++counters_.cam_inserts;
  trim_cam(true);
}

void MemoryBank::set_recent(MemoryEntry entry) {
  entry.source = EntrySource::Recent;
  entry.interference_flag = false;
  recent_ = std::make_shared<const MemoryEntry>(std::move(entry));
  ++counters_.recent_updates;
}

Context MemoryBank::assemble_context(std::size_t current_frame) const {
  Context out;
  out.reserve(prompts_.size() + orm_.size() + cam_.size() + 1);
  std::set<std::size_t> seen;
  for (const auto& [cls, entry] : prompts_) {
    out.push_back(entry);
    seen.insert(entry->frame_index);
  }
  const auto add = [&](const EntryPtr& e) {
    if (e && e->frame_index < current_frame && seen.insert(e->frame_index).second) {
      out.push_back(e);
    }
  };
  for (const auto& e : orm_) {
    add(e);
  }
  for (const auto& e : cam_) {
    add(e);
  }
  add(recent_);
  return out;
}

void MemoryBank::check_invariants() const {
  if (orm_.size() > cfg_.orm_capacity) {
    throw InvariantViolation("ORM holds " + std::to_string(orm_.size()) + " entries, capacity " +
                             std::to_string(cfg_.orm_capacity));
  }
  if (cam_.size() > cfg_.cam_ceiling(orm_.size())) {
    throw InvariantViolation("CAM holds " + std::to_string(cam_.size()) +
                             " entries, ceiling " +
                             std::to_string(cfg_.cam_ceiling(orm_.size())));
  }
  std::set<std::size_t> frames;
  for (const auto& e : orm_) {
    if (!e->interference_flag || e->source != EntrySource::Orm) {
      throw InvariantViolation("ORM entry without interference flag");
    }
    if (!frames.insert(e->frame_index).second) {
      throw InvariantViolation("duplicate ORM frame " + std::to_string(e->frame_index));
    }
  }
  for (const auto& e : cam_) {
    if (e->interference_flag) {
      throw InvariantViolation("CAM entry carries an interference flag");
    }
    if (!frames.insert(e->frame_index).second) {
      throw InvariantViolation("frame " + std::to_string(e->frame_index) +
                               " stored twice across ORM/CAM");
    }
    if (is_prompt_frame(e->frame_index)) {
      throw InvariantViolation("CAM holds prompt frame " + std::to_string(e->frame_index));
    }
  }
  for (std::size_t i = 1; i < orm_.size(); ++i) {
    if (orm_[i - 1]->frame_index >= orm_[i]->frame_index) {
      throw InvariantViolation("ORM not ordered oldest-first");
    }
  }
}

std::vector<std::size_t> MemoryBank::prompt_frames() const {
  std::vector<std::size_t> out;
  for (const auto& [cls, e] : prompts_) {
    out.push_back(e->frame_index);
  }
  return out;
}

std::string MemoryBank::state_json() const {
  nlohmann::ordered_json j;
  auto prompt = nlohmann::ordered_json::array();
  for (const auto f : prompt_frames()) {
    prompt.push_back(f);
  }
  j["prompt"] = std::move(prompt);
  j["orm"] = frames_of(orm_);
  j["cam"] = frames_of(cam_);
  j["recent"] = recent_ ? nlohmann::ordered_json(recent_->frame_index) : nlohmann::ordered_json();
  return j.dump();
}

FifoBank::FifoBank(std::size_t total_capacity)
    : queue_capacity_(total_capacity > 1 ? total_capacity - 1 : 0) {
  if (total_capacity < 2) {
    throw ConfigError("FIFO bank needs total_capacity >= 2");
  }
}

void FifoBank::install_prompt(ClassId cls, std::size_t frame_index, BinaryMask mask) {
  if (prompts_.contains(cls)) {
    throw std::invalid_argument("install_prompt: class " + std::to_string(cls) +
                                " already prompted");
  }
  prompts_.emplace(cls, make_prompt_entry(cls, frame_index, std::move(mask)));
  ++counters_.prompt_installs;
}

void FifoBank::fifo_update(MemoryEntry entry) {
  if (!queue_.empty() && entry.frame_index <= queue_.back()->frame_index) {
    throw std::invalid_argument("fifo_update: frames must arrive in increasing order");
  }
  if (queue_.size() == queue_capacity_) {
    queue_.pop_front();
  }
  entry.source = EntrySource::Recent;
  entry.interference_flag = false;
  queue_.push_back(std::make_shared<const MemoryEntry>(std::move(entry)));
  ++counters_.fifo_updates;
}

Context FifoBank::fifo_context(std::optional<std::size_t> newest_limit) const {
  Context out;
  std::set<std::size_t> prompt_frames;
  for (const auto& [cls, entry] : prompts_) {
    out.push_back(entry);
    prompt_frames.insert(entry->frame_index);
  }
  std::size_t skip = 0;
  if (newest_limit && *newest_limit < queue_.size()) {
    skip = queue_.size() - *newest_limit;
  }
  for (std::size_t i = skip; i < queue_.size(); ++i) {
    if (!prompt_frames.contains(queue_[i]->frame_index)) {
      out.push_back(queue_[i]);
    }
  }
  return out;
}

void FifoBank::check_invariants() const {
  if (queue_.size() > queue_capacity_) {
    throw InvariantViolation("FIFO queue over capacity");
  }
  for (std::size_t i = 1; i < queue_.size(); ++i) {
    if (queue_[i - 1]->frame_index >= queue_[i]->frame_index) {
      throw InvariantViolation("FIFO queue not ordered by frame");
    }
  }
}

std::string FifoBank::state_json() const {
  nlohmann::ordered_json j;
  auto prompt = nlohmann::ordered_json::array();
  for (const auto& [cls, e] : prompts_) {
    prompt.push_back(e->frame_index);
  }
  j["prompt"] = std::move(prompt);
  j["fifo"] = frames_of(queue_);
  return j.dump();
}

}  // namespace memtrack
