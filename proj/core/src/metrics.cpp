// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "memtrack/metrics.hpp"

#include "memtrack/error.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace memtrack {

namespace {

const BinaryMask* find_mask(const MaskFrame& frame, ClassId cls) {
  const auto it = frame.find(cls);
  return it == frame.end() ? nullptr : &it->second;
}

void require_aligned(std::size_t pred, std::size_t gt, const char* op) {
  if (pred != gt) {
    throw std::invalid_argument(std::string(op) + ": prediction has " + std::to_string(pred) +
                                " frames, ground truth " + std::to_string(gt));
  }
}

// IoU of one class in one frame; a missing prediction reads as empty.
double frame_class_iou(const MaskFrame& pred, const MaskFrame& gt, ClassId cls) {
  const BinaryMask* p = find_mask(pred, cls);
  const BinaryMask* g = find_mask(gt, cls);
  if (p && g) {
    return iou(*p, *g);
  }
  const BinaryMask* only = p ? p : g;
  return only == nullptr || only->empty() ? 1.0 : 0.0;
}

ClassSet gt_classes(const MaskFrame& gt) {
  ClassSet out;
  for (const auto& [cls, m] : gt) {
    if (!m.empty()) {
      out.insert(cls);
    }
  }
  return out;
}

double frame_mean_iou(std::span<const MaskFrame> pred, std::span<const MaskFrame> gt,
                      bool penalize_hallucination, const char* op) {
  require_aligned(pred.size(), gt.size(), op);
  double total = 0.0;
  std::size_t frames = 0;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    ClassSet classes = gt_classes(gt[t]);
    if (penalize_hallucination) {
      for (const auto& [cls, m] : pred[t]) {
        if (!m.empty()) {
          classes.insert(cls);
        }
      }
    }
    if (classes.empty()) {
      continue;
    }
    double sum = 0.0;
    for (const ClassId cls : classes) {
      sum += frame_class_iou(pred[t], gt[t], cls);
    }
    total += sum / static_cast<double>(classes.size());
    ++frames;
  }
  if (frames == 0) {
    throw std::invalid_argument(std::string(op) + ": no frame has a ground-truth class");
  }
  return 100.0 * total / static_cast<double>(frames);
}

std::size_t count_gt_frames(std::span<const MaskFrame> gt) {
  return static_cast<std::size_t>(std::count_if(
      gt.begin(), gt.end(), [](const MaskFrame& f) { return !gt_classes(f).empty(); }));
}

std::map<ClassId, double> per_class_iou(std::span<const MaskFrame> pred,
                                        std::span<const MaskFrame> gt) {
  require_aligned(pred.size(), gt.size(), "mciou");
  ClassSet classes;
  for (const auto& f : gt) {
    const ClassSet present = gt_classes(f);
    classes.insert(present.begin(), present.end());
  }
  std::map<ClassId, double> out;
  for (const ClassId cls : classes) {
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t t = 0; t < gt.size(); ++t) {
      const BinaryMask* p = find_mask(pred[t], cls);
      const BinaryMask* g = find_mask(gt[t], cls);
      const std::size_t np = p ? p->count() : 0;
      const std::size_t ng = g ? g->count() : 0;
      const std::size_t ni = (p && g) ? intersection_count(*p, *g) : 0;
      inter += ni;
      uni += np + ng - ni;
    }
    out.emplace(cls, uni == 0 ? 0.0 : 100.0 * static_cast<double>(inter) / static_cast<double>(uni));
  }
  return out;
}

}  // namespace

std::optional<double> class_iou(std::span<const BinaryMask> pred, std::span<const BinaryMask> gt) {
  require_aligned(pred.size(), gt.size(), "class_iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const std::size_t ni = intersection_count(pred[t], gt[t]);
    inter += ni;
    uni += pred[t].count() + gt[t].count() - ni;
  }
  if (uni == 0) {
    return std::nullopt;
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double challenge_iou(std::span<const MaskFrame> pred, std::span<const MaskFrame> gt) {
  return frame_mean_iou(pred, gt, false, "challenge_iou");
}

double iou_metric(std::span<const MaskFrame> pred, std::span<const MaskFrame> gt) {
  return frame_mean_iou(pred, gt, true, "iou_metric");
}

double mciou(std::span<const MaskFrame> pred, std::span<const MaskFrame> gt) {
  const auto per_class = per_class_iou(pred, gt);
  if (per_class.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (const auto& [cls, v] : per_class) {
    sum += v;
  }
  return sum / static_cast<double>(per_class.size());
}

MetricReport evaluate(std::span<const MaskFrame> pred, std::span<const MaskFrame> gt) {
  MetricReport r;
  r.challenge_iou = challenge_iou(pred, gt);
  r.iou = iou_metric(pred, gt);
  r.per_class = per_class_iou(pred, gt);
  r.mciou = mciou(pred, gt);
  r.frames_evaluated = count_gt_frames(gt);
  return r;
}

std::vector<MaskFrame> predictions_of(const TrackResult& result) {
  std::vector<MaskFrame> out;
  out.reserve(result.frames.size());
  for (const auto& rec : result.frames) {
    out.push_back(rec.masks);
  }
  return out;
}

std::vector<MaskFrame> ground_truth_of(std::span<const FrameObservation> frames) {
  std::vector<MaskFrame> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    out.push_back(f.gt_masks);
  }
  return out;
}

MetricReport evaluate(const TrackResult& result, std::span<const FrameObservation> gt) {
  const auto pred = predictions_of(result);
  const auto truth = ground_truth_of(gt);
  return evaluate(pred, truth);
}

MetricReport mean_report(std::span<const MetricReport> reports) {
  MetricReport out;
  if (reports.empty()) {
    return out;
  }
  std::map<ClassId, std::pair<double, std::size_t>> classes;
  for (const auto& r : reports) {
    out.challenge_iou += r.challenge_iou;
    out.iou += r.iou;
    out.mciou += r.mciou;
    out.frames_evaluated += r.frames_evaluated;
    for (const auto& [cls, v] : r.per_class) {
      classes[cls].first += v;
      classes[cls].second += 1;
    }
  }
  const auto n = static_cast<double>(reports.size());
  out.challenge_iou /= n;
  out.iou /= n;
  out.mciou /= n;
  for (const auto& [cls, acc] : classes) {
    out.per_class.emplace(cls, acc.first / static_cast<double>(acc.second));
  }
  return out;
}

AblationTable run_ablation(const AblationSpec& spec) {
  if (spec.scenarios.empty() || spec.seeds.empty() || spec.policies.empty()) {
    throw ConfigError("ablation needs at least one scenario, seed and policy");
  }
  spec.bank.validate();
  const Proposer proposer = make_synthetic_proposer(spec.proposer);

  struct Rendered {
    std::vector<FrameObservation> frames;
    Prompt prompt;
  };
  std::vector<Rendered> rendered;
  for (const auto& s : spec.scenarios) {
    Rendered r;
    try {
      r.frames = render_scenario(s.script);
    } catch (const ConfigError& e) {
      throw ConfigError("scenario '" + s.name + "': " + e.what());
    }
    r.prompt = prompt_from_ground_truth(r.frames);
    rendered.push_back(std::move(r));
  }

  struct CellIndex {
    std::size_t policy;
    std::size_t scenario;
    std::size_t seed;
  };
  std::vector<CellIndex> order;
  for (std::size_t p = 0; p < spec.policies.size(); ++p) {
    for (std::size_t s = 0; s < spec.scenarios.size(); ++s) {
      for (std::size_t k = 0; k < spec.seeds.size(); ++k) {
        order.push_back({p, s, k});
      }
    }
  }
  std::sort(order.begin(), order.end(), [&](const CellIndex& a, const CellIndex& b) {
    return std::make_tuple(to_string(spec.policies[a.policy]), spec.scenarios[a.scenario].name,
                           spec.seeds[a.seed]) <
           std::make_tuple(to_string(spec.policies[b.policy]), spec.scenarios[b.scenario].name,
                           spec.seeds[b.seed]);
  });

  std::vector<AblationCell> cells(order.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= order.size()) {
        return;
      }
      const CellIndex& c = order[i];
      const PolicyKind policy = spec.policies[c.policy];
      const std::string cell_name = "cell (policy=" + std::string(to_string(policy)) +
                                    ", scenario=" + spec.scenarios[c.scenario].name +
                                    ", seed=" + std::to_string(spec.seeds[c.seed]) + "): ";
      try {
        const Rendered& r = rendered[c.scenario];
        const TrackResult result =
            run_sequence(r.frames, r.prompt, policy, spec.bank, proposer, spec.seeds[c.seed]);
        cells[i] = {policy, spec.scenarios[c.scenario].name, spec.seeds[c.seed],
                    evaluate(result, r.frames)};
      } catch (const InvariantViolation& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::make_exception_ptr(InvariantViolation(cell_name + e.what()));
        }
      } catch (const ConfigError& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::make_exception_ptr(ConfigError(cell_name + e.what()));
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::make_exception_ptr(std::runtime_error(cell_name + e.what()));
        }
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(spec.jobs, order.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back(worker);
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  AblationTable table;
  table.cells = std::move(cells);
  for (const PolicyKind policy : spec.policies) {
    std::vector<MetricReport> all;
    std::map<std::string, std::vector<MetricReport>> by_scenario;
    for (const auto& cell : table.cells) {
      if (cell.policy == policy) {
        all.push_back(cell.report);
        by_scenario[cell.scenario].push_back(cell.report);
      }
    }
    table.aggregate.emplace(policy, mean_report(all));
    for (const auto& [name, reports] : by_scenario) {
      table.per_scenario[name].emplace(policy, mean_report(reports));
    }
  }
  return table;
}

}  // namespace memtrack
