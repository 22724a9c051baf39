// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "memtrack/serialization.hpp"

#include "memtrack/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace memtrack {

namespace {

using ojson = nlohmann::ordered_json;

ojson masks_json(const std::map<ClassId, BinaryMask>& masks) {
  ojson out = ojson::object();
  for (const auto& [cls, m] : masks) {
    out[std::to_string(cls)] = rle_to_text(rle_encode(m));
  }
  return out;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

ojson report_json(const MetricReport& r) {
  ojson j;
  j["challenge_iou"] = r.challenge_iou;
  j["iou"] = r.iou;
  j["mciou"] = r.mciou;
  ojson per_class = ojson::object();
  for (const auto& [cls, v] : r.per_class) {
    per_class[std::to_string(cls)] = v;
  }
  j["per_class"] = std::move(per_class);
  j["frames_evaluated"] = r.frames_evaluated;
  return j;
}

}  // namespace

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string jsonl_header(std::string_view kind, std::string_view config_hash) {
  ojson j;
  j["config_hash"] = config_hash;
  j["kind"] = kind;
  return j.dump();
}

std::string frame_record_json(const FrameRecord& record) {
  ojson j;
  j["frame"] = record.frame;
  j["branch"] = record.branch;
  j["verdict"] = record.verdict ? ojson(std::string(to_string(record.verdict->verdict))) : ojson();
  j["context"] = record.context_frames;
  j["masks"] = masks_json(record.masks);
  return j.dump();
}

std::string ground_truth_json(const FrameObservation& obs) {
  ojson j;
  j["frame"] = obs.frame_index;
  j["visible"] = std::vector<ClassId>(obs.visible_classes.begin(), obs.visible_classes.end());
  j["masks"] = masks_json(obs.gt_masks);
  return j.dump();
}

std::string bank_trace_json(const FrameRecord& record) {
  ojson j;
  j["frame"] = record.frame;
  j["bank"] = ojson::parse(record.bank_state);
  return j.dump();
}

void write_track_result(std::ostream& out, const TrackResult& result, std::string_view config_hash) {
  out << jsonl_header("track_result", config_hash) << '\n';
  for (const auto& rec : result.frames) {
    out << frame_record_json(rec) << '\n';
  }
}

void write_ground_truth(std::ostream& out, std::span<const FrameObservation> frames,
                        std::string_view config_hash) {
  out << jsonl_header("ground_truth", config_hash) << '\n';
  for (const auto& f : frames) {
    out << ground_truth_json(f) << '\n';
  }
}

void write_bank_trace(std::ostream& out, const TrackResult& result, std::string_view config_hash) {
  out << jsonl_header("bank_trace", config_hash) << '\n';
  for (const auto& rec : result.frames) {
    out << bank_trace_json(rec) << '\n';
  }
}

std::vector<MaskFrame> read_mask_frames(std::istream& in) {
  std::vector<MaskFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(where + ": malformed JSON: " + e.what());
    }
    if (j.contains("config_hash")) {
      continue;
    }
    if (!j.contains("frame") || !j.contains("masks") || !j["masks"].is_object()) {
      throw ConfigError(where + ": expected fields 'frame' and 'masks'");
    }
    if (!j["frame"].is_number_unsigned() || j["frame"].get<std::size_t>() != frames.size()) {
      throw ConfigError(where + ": field 'frame' out of sequence");
    }
    MaskFrame frame;
    for (const auto& [key, value] : j["masks"].items()) {
      if (!value.is_string()) {
        throw ConfigError(where + ": masks." + key + " must be an RLE string");
      }
      try {
        frame.emplace(std::stoi(key), rle_decode(rle_from_text(value.get<std::string>())));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": masks." + key + ": " + e.what());
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::string metrics_csv_row(std::string_view policy, std::string_view scenario, std::uint64_t seed,
                            const MetricReport& report) {
  return std::string(policy) + "," + std::string(scenario) + "," + std::to_string(seed) + "," +
         fixed4(report.challenge_iou) + "," + fixed4(report.iou) + "," + fixed4(report.mciou);
}

void write_ablation_csv(std::ostream& out, const AblationTable& table, std::string_view config_hash) {
  out << "# config_hash=" << config_hash << '\n' << kMetricsCsvHeader << '\n';
  for (const auto& cell : table.cells) {
    out << metrics_csv_row(to_string(cell.policy), cell.scenario, cell.seed, cell.report) << '\n';
  }
}

std::string ablation_aggregate_json(const AblationTable& table, std::string_view config_hash) {
  ojson j;
  j["config_hash"] = config_hash;
  ojson agg = ojson::object();
  for (const PolicyKind p : kAllPolicies) {
    if (const auto it = table.aggregate.find(p); it != table.aggregate.end()) {
      agg[std::string(to_string(p))] = report_json(it->second);
    }
  }
  j["aggregate"] = std::move(agg);
  ojson per = ojson::object();
  for (const auto& [name, rows] : table.per_scenario) {
    ojson s = ojson::object();
    for (const PolicyKind p : kAllPolicies) {
      if (const auto it = rows.find(p); it != rows.end()) {
        s[std::string(to_string(p))] = report_json(it->second);
      }
    }
    per[name] = std::move(s);
  }
  j["per_scenario"] = std::move(per);
  return j.dump(2);
}

std::string ablation_text_table(const AblationTable& table, std::string_view config_hash) {
  std::string out = "# config_hash=" + std::string(config_hash) + "\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %14s %10s %10s\n", "Method", "Challenge IoU", "IoU",
                "mcIoU");
  out += buf;
  for (const PolicyKind p : kAllPolicies) {
    const auto it = table.aggregate.find(p);
    if (it == table.aggregate.end()) {
      continue;
    }
    std::snprintf(buf, sizeof buf, "%-14s %14.2f %10.2f %10.2f\n",
                  std::string(table_label(p)).c_str(), it->second.challenge_iou, it->second.iou,
                  it->second.mciou);
    out += buf;
  }
  return out;
}

}  // namespace memtrack
