// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "memtrack/synth_world.hpp"

#include "memtrack/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace memtrack {

namespace detail {
const std::map<std::string, std::string>& builtin_scenario_sources();
}  // namespace detail

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
  if (!obj.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError(where + ": missing field '" + key + "'");
  }
  return *it;
}

template <typename T>
T get_as(const json& value, const std::string& where) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::size_t get_frame(const json& value, const std::string& where) {
  if (!value.is_number_integer() || value.get<long long>() < 0) {
    throw ConfigError(where + ": expected a nonnegative integer");
  }
  return value.get<std::size_t>();
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void ScenarioScript::validate() const {
  if (height < 1 || width < 1) {
    throw ConfigError("scenario.dims: height and width must be >= 1");
  }
  if (frame_count < 1) {
    throw ConfigError("scenario.frame_count must be >= 1");
  }
  std::set<ClassId> ids;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const TargetScript& t = targets[i];
    const std::string where = "scenario.targets[" + std::to_string(i) + "]";
    if (!ids.insert(t.class_id).second) {
      throw ConfigError(where + ".class_id: duplicate class " + std::to_string(t.class_id));
    }
    if (!(t.length >= 0.0) || !(t.radius > 0.0)) {
      throw ConfigError(where + ".shape: need length >= 0 and radius > 0");
    }
    if (t.waypoints.empty() || t.waypoints.front().frame != 0) {
      throw ConfigError(where + ".waypoints: first waypoint must be at frame 0");
    }
    for (std::size_t w = 0; w < t.waypoints.size(); ++w) {
      if (t.waypoints[w].frame >= frame_count) {
        throw ConfigError(where + ".waypoints[" + std::to_string(w) + "]: frame " +
                          std::to_string(t.waypoints[w].frame) + " beyond frame_count");
      }
      if (w > 0 && t.waypoints[w].frame <= t.waypoints[w - 1].frame) {
        throw ConfigError(where + ".waypoints[" + std::to_string(w) + "]: frames not increasing");
      }
    }
    for (std::size_t v = 0; v < t.visible.size(); ++v) {
      const FrameInterval& iv = t.visible[v];
      if (iv.start >= iv.end) {
        throw ConfigError(where + ".visible[" + std::to_string(v) + "]: empty interval");
      }
      if (v > 0 && iv.start < t.visible[v - 1].end) {
        throw ConfigError(where + ".visible[" + std::to_string(v) +
                          "]: intervals overlap or are unsorted");
      }
    }
  }
}

ScenarioScript scenario_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario: malformed JSON: ") + e.what());
  }
  reject_unknown_keys(doc, {"dims", "frame_count", "targets"}, "scenario");
  ScenarioScript s;
  const json& dims = require(doc, "dims", "scenario");
  if (!dims.is_array() || dims.size() != 2) {
    throw ConfigError("scenario.dims: expected [height, width]");
  }
  s.height = get_as<int>(dims[0], "scenario.dims[0]");
  s.width = get_as<int>(dims[1], "scenario.dims[1]");
  s.frame_count = get_frame(require(doc, "frame_count", "scenario"), "scenario.frame_count");
  const json& targets = require(doc, "targets", "scenario");
  if (!targets.is_array()) {
    throw ConfigError("scenario.targets: expected an array");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::string where = "scenario.targets[" + std::to_string(i) + "]";
    const json& tj = targets[i];
    reject_unknown_keys(tj, {"class_id", "shape", "waypoints", "visible", "z_order"}, where);
    TargetScript t;
    t.class_id = get_as<int>(require(tj, "class_id", where), where + ".class_id");
    const json& shape = require(tj, "shape", where);
    reject_unknown_keys(shape, {"length", "radius"}, where + ".shape");
    t.length = get_as<double>(require(shape, "length", where + ".shape"), where + ".shape.length");
    t.radius = get_as<double>(require(shape, "radius", where + ".shape"), where + ".shape.radius");
    const json& wps = require(tj, "waypoints", where);
    if (!wps.is_array()) {
      throw ConfigError(where + ".waypoints: expected an array");
    }
    for (std::size_t w = 0; w < wps.size(); ++w) {
      const std::string wwhere = where + ".waypoints[" + std::to_string(w) + "]";
      if (!wps[w].is_array() || wps[w].size() != 4) {
        throw ConfigError(wwhere + ": expected [frame, row, col, angle]");
      }
      t.waypoints.push_back({get_frame(wps[w][0], wwhere + "[0]"),
                             get_as<double>(wps[w][1], wwhere + "[1]"),
                             get_as<double>(wps[w][2], wwhere + "[2]"),
                             get_as<double>(wps[w][3], wwhere + "[3]")});
    }
    const json& vis = require(tj, "visible", where);
    if (!vis.is_array()) {
      throw ConfigError(where + ".visible: expected an array");
    }
    for (std::size_t v = 0; v < vis.size(); ++v) {
      const std::string vwhere = where + ".visible[" + std::to_string(v) + "]";
      if (!vis[v].is_array() || vis[v].size() != 2) {
        throw ConfigError(vwhere + ": expected [start, end]");
      }
      t.visible.push_back({get_frame(vis[v][0], vwhere + "[0]"), get_frame(vis[v][1], vwhere + "[1]")});
    }
    t.z_order = get_as<int>(require(tj, "z_order", where), where + ".z_order");
    s.targets.push_back(std::move(t));
  }
  s.validate();
  return s;
}

std::string scenario_to_json(const ScenarioScript& script) {
  nlohmann::ordered_json doc;
  doc["dims"] = {script.height, script.width};
  doc["frame_count"] = script.frame_count;
  auto targets = nlohmann::ordered_json::array();
  for (const auto& t : script.targets) {
    nlohmann::ordered_json tj;
    tj["class_id"] = t.class_id;
    tj["shape"] = {{"length", t.length}, {"radius", t.radius}};
    auto wps = nlohmann::ordered_json::array();
    for (const auto& w : t.waypoints) {
      wps.push_back({w.frame, w.row, w.col, w.angle});
    }
    tj["waypoints"] = std::move(wps);
    auto vis = nlohmann::ordered_json::array();
    for (const auto& v : t.visible) {
      vis.push_back({v.start, v.end});
    }
    tj["visible"] = std::move(vis);
    tj["z_order"] = t.z_order;
    targets.push_back(std::move(tj));
  }
  doc["targets"] = std::move(targets);
  return doc.dump(2);
}

Waypoint pose_at(const TargetScript& target, std::size_t frame) {
  const auto& wps = target.waypoints;
  if (frame >= wps.back().frame) {
    Waypoint w = wps.back();
    w.frame = frame;
    return w;
  }
  auto next = std::upper_bound(wps.begin(), wps.end(), frame,
                               [](std::size_t f, const Waypoint& w) { return f < w.frame; });
  auto prev = std::prev(next);
  const double span = static_cast<double>(next->frame - prev->frame);
  const double a = static_cast<double>(frame - prev->frame) / span;
  return {frame, prev->row + a * (next->row - prev->row), prev->col + a * (next->col - prev->col),
          prev->angle + a * (next->angle - prev->angle)};
}

bool is_visible(const TargetScript& target, std::size_t frame) {
  return std::any_of(target.visible.begin(), target.visible.end(),
                     [frame](const FrameInterval& iv) { return frame >= iv.start && frame < iv.end; });
}

BinaryMask rasterize_capsule(int width, int height, const Waypoint& pose, double length,
                             double radius) {
  BinaryMask m(width, height);
  const double half = length / 2.0;
  const double dr = std::sin(pose.angle) * half;
  const double dc = std::cos(pose.angle) * half;
  const double r0 = pose.row - dr;
  const double c0 = pose.col - dc;
  const double r1 = pose.row + dr;
  const double c1 = pose.col + dc;
  const double seg_r = r1 - r0;
  const double seg_c = c1 - c0;
  const double seg_len2 = seg_r * seg_r + seg_c * seg_c;
  const double r2 = radius * radius;

  const int row_lo = std::max(0, static_cast<int>(std::floor(std::min(r0, r1) - radius)));
  const int row_hi = std::min(height - 1, static_cast<int>(std::ceil(std::max(r0, r1) + radius)));
  const int col_lo = std::max(0, static_cast<int>(std::floor(std::min(c0, c1) - radius)));
  const int col_hi = std::min(width - 1, static_cast<int>(std::ceil(std::max(c0, c1) + radius)));
  for (int r = row_lo; r <= row_hi; ++r) {
    for (int c = col_lo; c <= col_hi; ++c) {
      const double pr = r - r0;
      const double pc = c - c0;
      double t = seg_len2 > 0.0 ? (pr * seg_r + pc * seg_c) / seg_len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double er = pr - t * seg_r;
      const double ec = pc - t * seg_c;
      if (er * er + ec * ec <= r2) {
        m.set(r, c);
      }
    }
  }
  return m;
}

std::vector<FrameObservation> render_scenario(const ScenarioScript& script) {
  script.validate();
  std::vector<const TargetScript*> order;
  for (const auto& t : script.targets) {
    order.push_back(&t);
  }
  std::sort(order.begin(), order.end(), [](const TargetScript* a, const TargetScript* b) {
    if (a->z_order != b->z_order) {
      return a->z_order > b->z_order;
    }
    return a->class_id < b->class_id;
  });

  std::vector<FrameObservation> frames;
  frames.reserve(script.frame_count);
  for (std::size_t f = 0; f < script.frame_count; ++f) {
    FrameObservation obs;
    obs.frame_index = f;
    BinaryMask claimed(script.width, script.height);
    for (const TargetScript* t : order) {
      BinaryMask mask(script.width, script.height);
      if (is_visible(*t, f)) {
        mask = subtract(rasterize_capsule(script.width, script.height, pose_at(*t, f), t->length,
                                          t->radius),
                        claimed);
        claimed = mask_union(claimed, mask);
      }
      if (!mask.empty()) {
        obs.visible_classes.insert(t->class_id);
      }
      obs.gt_masks.emplace(t->class_id, std::move(mask));
    }
    frames.push_back(std::move(obs));
  }
  return frames;
}

Prompt prompt_from_ground_truth(std::span<const FrameObservation> frames) {
  Prompt prompt;
  for (const auto& obs : frames) {
    for (const ClassId cls : obs.visible_classes) {
      if (!prompt.contains(cls)) {
        prompt.emplace(cls, ClassPrompt{obs.frame_index, obs.gt_masks.at(cls)});
      }
    }
  }
  return prompt;
}

double context_relevance(ClassId cls, const Context& context, const FrameObservation& gt) {
  const auto it = gt.gt_masks.find(cls);
  if (it == gt.gt_masks.end() || it->second.empty()) {
    return 0.0;
  }
  double best = 0.0;
  for (const auto& entry : context) {
    const auto m = entry->class_masks.find(cls);
    if (m != entry->class_masks.end()) {
      best = std::max(best, iou(m->second, it->second));
    }
  }
  return best;
}

OverlapInfo overlap_fraction(ClassId cls, const FrameObservation& gt) {
  OverlapInfo info;
  const BinaryMask& own = gt.gt_masks.at(cls);
  const std::size_t own_count = own.count();
  if (own_count == 0) {
    return info;
  }
  const BinaryMask grown = dilate(own, 2);
  std::size_t total = 0;
  std::size_t best = 0;
  for (const auto& [other, mask] : gt.gt_masks) {
    if (other == cls) {
      continue;
    }
    const std::size_t n = intersection_count(grown, mask);
    total += n;
    if (n > best) {
      best = n;
      info.partner = other;
    }
  }
  info.fraction = std::min(1.0, static_cast<double>(total) / static_cast<double>(own_count));
  return info;
}

void ProposerParams::validate() const {
  if (!(q_min >= 0.0 && q_min < q_max && q_max <= 1.0)) {
    throw ConfigError("proposer: need 0 <= q_min < q_max <= 1");
  }
  for (const double p : {p_swap_base, p_miss_base}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("proposer: probabilities must lie in [0, 1]");
    }
  }
  if (r_max < 0 || j_max < 0 || sigma_iou < 0.0 || sigma_conf < 0.0) {
    throw ConfigError("proposer: radii and noise scales must be nonnegative");
  }
}

std::vector<CandidateMask> synthetic_proposer(const FrameObservation& gt, const Context& context,
                                              const ProposerParams& params, RandomStream& stream) {
  std::vector<CandidateMask> out(kBranchCount);
  const bool flagged_context = std::any_of(context.begin(), context.end(),
                                           [](const EntryPtr& e) { return e->interference_flag; });

  struct ClassDraw {
    std::array<double, kBranchCount> quality{};
    double u_swap = 1.0;
    double u_miss = 1.0;
    double iou_noise = 0.0;
  };
  std::map<ClassId, ClassDraw> draws;

  // Substreams keyed by class (and branch) so one class's draws never shift
  // another's, whatever the context held.
  for (const auto& [cls, gt_mask] : gt.gt_masks) {
    const auto tag = static_cast<std::uint64_t>(cls) * 16;
    RandomStream shared = stream.substream(tag);
    ClassDraw& d = draws[cls];
    d.u_swap = shared.uniform();
    d.u_miss = shared.uniform();

    if (gt_mask.empty()) {
      const double piou = clamp01(std::abs(shared.normal(0.0, params.sigma_iou)));
      const double conf = clamp01(std::abs(shared.normal(0.0, params.sigma_conf)));
      for (auto& cand : out) {
        cand.class_masks.emplace(cls, BinaryMask(gt_mask.width(), gt_mask.height()));
        cand.predicted_iou.emplace(cls, piou);
        cand.confidence.emplace(cls, conf);
      }
      continue;
    }

    d.iou_noise = shared.normal(0.0, params.sigma_iou);
    const double rho = context_relevance(cls, context, gt);
    for (std::size_t k = 0; k < kBranchCount; ++k) {
      RandomStream branch = stream.substream(tag + 1 + k);
      const double q =
          clamp01(params.q_min + (params.q_max - params.q_min) * rho + params.branch_offsets[k]);
      d.quality[k] = q;
      const int radius = static_cast<int>(std::lround((1.0 - q) * params.r_max));
      const bool grow = branch.bernoulli(0.5);
      BinaryMask mask = grow ? dilate(gt_mask, radius) : erode(gt_mask, radius);
      const int jitter = static_cast<int>(std::lround((1.0 - q) * params.j_max));
      const double heading = branch.uniform() * 2.0 * std::numbers::pi;
      if (jitter > 0) {
        mask = translate(mask, static_cast<int>(std::lround(jitter * std::sin(heading))),
                         static_cast<int>(std::lround(jitter * std::cos(heading))));
      }
      out[k].class_masks.emplace(cls, std::move(mask));
    }
  }

  // Label swaps between overlapping classes.
  std::set<ClassId> swapped;
  for (const auto& [cls, d] : draws) {
    if (swapped.contains(cls) || gt.gt_masks.at(cls).empty()) {
      continue;
    }
    const OverlapInfo ov = overlap_fraction(cls, gt);
    if (!ov.partner || swapped.contains(*ov.partner)) {
      continue;
    }
    double p = params.p_swap_base * ov.fraction;
    if (flagged_context) {
      p *= 0.5;
    }
    if (d.u_swap < p) {
      for (auto& cand : out) {
        std::swap(cand.class_masks.at(cls), cand.class_masks.at(*ov.partner));
      }
      swapped.insert(cls);
      swapped.insert(*ov.partner);
    }
  }

  for (const auto& [cls, d] : draws) {
    const BinaryMask& gt_mask = gt.gt_masks.at(cls);
    if (gt_mask.empty()) {
      continue;
    }
    const auto tag = static_cast<std::uint64_t>(cls) * 16;
    for (std::size_t k = 0; k < kBranchCount; ++k) {
      RandomStream noise = stream.substream(tag + 8 + k);
      BinaryMask& mask = out[k].class_masks.at(cls);
      if (d.u_miss < (1.0 - d.quality[k]) * params.p_miss_base) {
        mask = BinaryMask(gt_mask.width(), gt_mask.height());
      }
      out[k].predicted_iou.emplace(cls, clamp01(iou(mask, gt_mask) + d.iou_noise));
      out[k].confidence.emplace(cls, clamp01(d.quality[k] + noise.normal(0.0, params.sigma_conf)));
    }
  }
  return out;
}

Proposer make_synthetic_proposer(ProposerParams params) {
  params.validate();
  return [params](const FrameObservation& gt, const Context& context, RandomStream& stream) {
    return synthetic_proposer(gt, context, params, stream);
  };
}

const std::map<std::string, ScenarioScript>& builtin_scenarios() {
  static const std::map<std::string, ScenarioScript> scenarios = [] {
    std::map<std::string, ScenarioScript> out;
    for (const auto& [name, text] : detail::builtin_scenario_sources()) {
      out.emplace(name, scenario_from_json(text));
    }
    return out;
  }();
  return scenarios;
}

}  // namespace memtrack
