// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "memtrack/frame.hpp"
#include "memtrack/metrics.hpp"
#include "memtrack/tracker.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace memtrack {

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string content_hash(std::string_view bytes);

/// First line of every JSON-lines dump: {"config_hash":...,"kind":...}.
std::string jsonl_header(std::string_view kind, std::string_view config_hash);

/// {"frame":t,"branch":k,"verdict":...,"context":[...],"masks":{"cls":"W H r0 ..."}}
std::string frame_record_json(const FrameRecord& record);
/// {"frame":t,"visible":[...],"masks":{...}}
std::string ground_truth_json(const FrameObservation& obs);
/// {"frame":t,"bank":{...}}
std::string bank_trace_json(const FrameRecord& record);

void write_track_result(std::ostream& out, const TrackResult& result, std::string_view config_hash);
void write_ground_truth(std::ostream& out, std::span<const FrameObservation> frames,
                        std::string_view config_hash);
void write_bank_trace(std::ostream& out, const TrackResult& result, std::string_view config_hash);

/// Reads the per-frame masks of a result or ground-truth dump, skipping header
/// records. Throws ConfigError with the offending line number.
std::vector<MaskFrame> read_mask_frames(std::istream& in);

inline constexpr std::string_view kMetricsCsvHeader = "policy,scenario,seed,challenge_iou,iou,mciou";

/// One metrics CSV row with 4 decimal places.
std::string metrics_csv_row(std::string_view policy, std::string_view scenario, std::uint64_t seed,
                            const MetricReport& report);

void write_ablation_csv(std::ostream& out, const AblationTable& table, std::string_view config_hash);
/// Aggregate JSON keyed by policy name.
std::string ablation_aggregate_json(const AblationTable& table, std::string_view config_hash);
/// Plain-text table with one row per policy in ablation order.
std::string ablation_text_table(const AblationTable& table, std::string_view config_hash);

}  // namespace memtrack
