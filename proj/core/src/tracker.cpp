// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "memtrack/tracker.hpp"

#include "memtrack/error.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <utility>

namespace memtrack {

std::string_view to_string(PolicyKind p) noexcept {
  switch (p) {
    case PolicyKind::Fifo:
      return "fifo";
    case PolicyKind::CamOnly:
      return "cam";
    case PolicyKind::OrmOnly:
      return "orm";
    case PolicyKind::MaSam2:
      return "ma";
  }
  return "unknown";
}

std::string_view table_label(PolicyKind p) noexcept {
  switch (p) {
    case PolicyKind::Fifo:
      return "SAM2";
    case PolicyKind::CamOnly:
      return "+ CAM";
    case PolicyKind::OrmOnly:
      return "+ ORM";
    case PolicyKind::MaSam2:
      return "+ CAM + ORM";
  }
  return "unknown";
}

PolicyKind parse_policy(std::string_view name) {
  for (const PolicyKind p : kAllPolicies) {
    if (to_string(p) == name) {
      return p;
    }
  }
  throw ConfigError("unknown policy '" + std::string(name) + "' (expected fifo|cam|orm|ma)");
}

namespace {

template <typename Bank>
void install_prompt_impl(Bank& bank, const Prompt& prompt, ClassId cls, std::size_t frame_index) {
  const auto it = prompt.find(cls);
  if (it == prompt.end()) {
    throw std::invalid_argument("install_prompt: class " + std::to_string(cls) + " has no prompt");
  }
  if (it->second.first_appearance_frame != frame_index) {
    throw std::invalid_argument("install_prompt: class " + std::to_string(cls) +
                                " first appears at frame " +
                                std::to_string(it->second.first_appearance_frame));
  }
  bank.install_prompt(cls, frame_index, it->second.mask);
}

bool uses_cumulative_scores(PolicyKind p) {
  return p == PolicyKind::CamOnly || p == PolicyKind::MaSam2;
}

bool uses_interference_filter(PolicyKind p) {
  return p == PolicyKind::OrmOnly || p == PolicyKind::MaSam2;
}

std::size_t greedy_branch(const CandidateSet& set, const ClassSet& present) {
  std::size_t best = 0;
  double best_score = avg_iou(set[0], present);
  for (std::size_t k = 1; k < kBranchCount; ++k) {
    const double s = avg_iou(set[k], present);
    if (s > best_score) {
      best = k;
      best_score = s;
    }
  }
  return best;
}

void validate_prompt(std::span<const FrameObservation> frames, const Prompt& prompt) {
  if (frames.empty()) {
    throw std::invalid_argument("run_sequence: no frames");
  }
  if (prompt.empty()) {
    throw std::invalid_argument("run_sequence: empty prompt");
  }
  const BinaryMask& reference = prompt.begin()->second.mask;
  for (const auto& [cls, p] : prompt) {
    if (p.first_appearance_frame >= frames.size()) {
      throw std::invalid_argument("run_sequence: class " + std::to_string(cls) +
                                  " first appears after the last frame");
    }
    if (!frames[p.first_appearance_frame].gt_masks.contains(cls)) {
      throw std::invalid_argument("run_sequence: prompt class " + std::to_string(cls) +
                                  " is absent from the frames");
    }
    if (p.mask.empty()) {
      throw std::invalid_argument("run_sequence: prompt mask for class " + std::to_string(cls) +
                                  " is empty");
    }
    if (!p.mask.same_shape(reference)) {
      throw std::invalid_argument("run_sequence: prompt masks differ in shape");
    }
  }
}

// The bank state for whichever policy is running.
struct PolicyState {
  PolicyKind policy;
  const BankConfig& cfg;
  MemoryBank bank;
  FifoBank fifo;

  PolicyState(PolicyKind p, const BankConfig& c) : policy(p), cfg(c), bank(c), fifo(c.total_capacity) {}

  void install(const Prompt& prompt, ClassId cls, std::size_t frame) {
    if (policy == PolicyKind::Fifo) {
      install_prompt_impl(fifo, prompt, cls, frame);
    } else {
      install_prompt_impl(bank, prompt, cls, frame);
      if (policy == PolicyKind::OrmOnly) {
        install_prompt_impl(fifo, prompt, cls, frame);
      }
    }
  }

  Context context(std::size_t frame) const {
    switch (policy) {
      case PolicyKind::Fifo:
        return fifo.fifo_context();
      case PolicyKind::CamOnly:
      case PolicyKind::MaSam2:
        return bank.assemble_context(frame);
      case PolicyKind::OrmOnly:
        return orm_only_context(frame);
    }
    return {};
  }

  // Prompts, ORM, then as many accepted queue frames as capacity leaves, then
  // the recent slot.
  Context orm_only_context(std::size_t frame) const {
    Context out;
    std::set<std::size_t> seen;
    for (const auto& [cls, e] : bank.prompt_entries()) {
      out.push_back(e);
      seen.insert(e->frame_index);
    }
    const auto add = [&](const EntryPtr& e) {
      if (e && e->frame_index < frame && seen.insert(e->frame_index).second) {
        out.push_back(e);
      }
    };
    for (const auto& e : bank.orm_entries()) {
      add(e);
    }
    const std::size_t room = cfg.total_capacity - 1 - bank.orm_entries().size();
    const auto& queue = fifo.queue();
    const std::size_t skip = queue.size() > room ? queue.size() - room : 0;
    for (std::size_t i = skip; i < queue.size(); ++i) {
      add(queue[i]);
    }
    add(bank.recent_entry());
    return out;
  }

  StoreCounters counters() const {
    StoreCounters c = bank.counters();
    const StoreCounters& f = fifo.counters();
    c.prompt_installs += f.prompt_installs;
    c.fifo_updates += f.fifo_updates;
    return c;
  }

  std::string state_json() const {
    switch (policy) {
      case PolicyKind::Fifo:
        return fifo.state_json();
      case PolicyKind::CamOnly:
      case PolicyKind::MaSam2:
        return bank.state_json();
      case PolicyKind::OrmOnly:
        return "{\"bank\":" + bank.state_json() + ",\"accepted\":" + fifo.state_json() + "}";
    }
    return "{}";
  }

  void check_invariants() const {
    bank.check_invariants();
    fifo.check_invariants();
  }
};

}  // namespace

void install_prompt(MemoryBank& bank, const Prompt& prompt, ClassId cls, std::size_t frame_index) {
  install_prompt_impl(bank, prompt, cls, frame_index);
}

void install_prompt(FifoBank& bank, const Prompt& prompt, ClassId cls, std::size_t frame_index) {
  install_prompt_impl(bank, prompt, cls, frame_index);
}

TrackResult run_sequence(std::span<const FrameObservation> frames, const Prompt& prompt,
                         PolicyKind policy, const BankConfig& cfg, const Proposer& proposer,
                         std::uint64_t seed) {
  cfg.validate();
  validate_prompt(frames, prompt);
  const int width = prompt.begin()->second.mask.width();
  const int height = prompt.begin()->second.mask.height();

  PolicyState state(policy, cfg);
  ScoreState scores;
  scores.epsilon = cfg.epsilon;
  ClassSet present;
  TrackResult result;
  result.frames.reserve(frames.size());

  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (const auto& [cls, p] : prompt) {
      if (p.first_appearance_frame == t) {
        state.install(prompt, cls, t);
        present.insert(cls);
      }
    }

    FrameRecord record;
    record.frame = t;
    const Context context = state.context(t);
    for (const auto& e : context) {
      record.context_frames.push_back(e->frame_index);
    }

    RandomStream stream = RandomStream::for_frame(seed, t);
    std::vector<CandidateMask> raw = proposer(frames[t], context, stream);
    if (raw.size() != kBranchCount) {
      throw std::invalid_argument("run_sequence: proposer returned " + std::to_string(raw.size()) +
                                  " candidates at frame " + std::to_string(t) + ", expected 3");
    }
    const CandidateSet candidates(t, std::move(raw));
    for (const auto& cand : candidates.candidates()) {
      for (const auto& [cls, p] : prompt) {
        const auto it = cand.class_masks.find(cls);
        if (it == cand.class_masks.end()) {
          throw std::invalid_argument("run_sequence: proposer omitted class " +
                                      std::to_string(cls) + " at frame " + std::to_string(t));
        }
        if (it->second.width() != width || it->second.height() != height) {
          throw std::invalid_argument("run_sequence: proposer mask shape differs from prompt");
        }
      }
    }

    if (uses_cumulative_scores(policy)) {
      scores = update_scores(scores, candidates, present);
      record.branch = select_branch(scores);
    } else {
      record.branch = present.empty() ? 0 : greedy_branch(candidates, present);
    }
    record.scores = scores;

    const CandidateMask& chosen = candidates[record.branch];
    for (const auto& [cls, p] : prompt) {
      if (present.contains(cls)) {
        record.masks.emplace(cls, chosen.class_masks.at(cls));
      } else {
        record.masks.emplace(cls, BinaryMask(width, height));
      }
    }

    if (!present.empty()) {
      MemoryEntry entry;
      entry.frame_index = t;
      double conf = 0.0;
      for (const ClassId cls : present) {
        entry.class_masks.emplace(cls, record.masks.at(cls));
        conf += chosen.confidence.at(cls);
      }
      entry.avg_confidence = conf / static_cast<double>(present.size());
      entry.avg_predicted_iou = avg_iou(chosen, present);

      if (policy == PolicyKind::Fifo) {
        state.fifo.fifo_update(entry);
      } else {
        record.primary = select_primary(candidates, present, cfg.theta_iou);
        bool accepted = record.primary.has_value();
        if (accepted && uses_interference_filter(policy)) {
          record.verdict =
              refine_frame(candidates, *record.primary, present, cfg.band_lo, cfg.band_hi).verdict;
          if (record.verdict->verdict == Verdict::Interference) {
            MemoryEntry orm = entry;
            orm.source = EntrySource::Orm;
            orm.interference_flag = true;
            state.bank.orm_insert(std::move(orm));
            accepted = false;
          }
        }
        if (accepted) {
          if (policy == PolicyKind::OrmOnly) {
            state.fifo.fifo_update(entry);
          } else if (state.bank.cam_admit(entry)) {
            state.bank.cam_insert(entry);
          }
        }
        state.bank.set_recent(std::move(entry));
      }
    }

    state.check_invariants();
    record.bank_state = state.state_json();
    result.frames.push_back(std::move(record));
  }

  result.final_scores = scores;
  result.counters = state.counters();
  return result;
}

}  // namespace memtrack
