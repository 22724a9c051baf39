// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "memtrack/hypothesis.hpp"
#include "memtrack/mask.hpp"

#include <cstddef>
#include <map>

namespace memtrack {

/// Ground truth for one video frame. Only proposers and metrics read it.
struct FrameObservation {
  std::size_t frame_index = 0;
  std::map<ClassId, BinaryMask> gt_masks;
  ClassSet visible_classes;

  friend bool operator==(const FrameObservation&, const FrameObservation&) = default;
};

}  // namespace memtrack
