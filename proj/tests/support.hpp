// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "memtrack/hypothesis.hpp"
#include "memtrack/mask.hpp"
#include "memtrack/memory_bank.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace memtrack::testing {

// Seeded generator for property tests.
class Gen {
public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return unit() < p; }
  std::mt19937_64& engine() { return rng_; }

  // Independent pixels with the given density.
  BinaryMask noise_mask(int w, int h, double density) {
    BinaryMask m(w, h);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        m.set(r, c, coin(density));
      }
    }
    return m;
  }

  // A few random rectangles, so masks have several blobs of varied size.
  BinaryMask blob_mask(int w, int h, int max_rects = 4) {
    BinaryMask m(w, h);
    const int n = range(0, max_rects);
    for (int i = 0; i < n; ++i) {
      const int r0 = range(0, h - 1);
      const int c0 = range(0, w - 1);
      const int r1 = std::min(h - 1, r0 + range(0, h / 3));
      const int c1 = std::min(w - 1, c0 + range(0, w / 3));
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          m.set(r, c);
        }
      }
    }
    return m;
  }

  // Mixed: blobs half the time, speckle otherwise.
  BinaryMask any_mask(int w, int h) {
    return coin() ? blob_mask(w, h) : noise_mask(w, h, real(0.05, 0.6));
  }

private:
  std::mt19937_64 rng_;
};

inline BinaryMask rect_mask(int w, int h, int r0, int c0, int r1, int c1) {
  BinaryMask m(w, h);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      m.set(r, c);
    }
  }
  return m;
}

inline BinaryMask pixels_mask(int w, int h, std::initializer_list<std::pair<int, int>> px) {
  BinaryMask m(w, h);
  for (const auto& [r, c] : px) {
    m.set(r, c);
  }
  return m;
}

// Pixel-loop oracles, written without the library kernels.
inline std::size_t oracle_count(const BinaryMask& m) {
  std::size_t n = 0;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      n += m.at(r, c) ? 1 : 0;
    }
  }
  return n;
}

inline double oracle_iou(const BinaryMask& a, const BinaryMask& b) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      inter += (a.at(r, c) && b.at(r, c)) ? 1 : 0;
      uni += (a.at(r, c) || b.at(r, c)) ? 1 : 0;
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

template <typename Op>
BinaryMask oracle_pixelwise(const BinaryMask& a, const BinaryMask& b, Op op) {
  BinaryMask out(a.width(), a.height());
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      out.set(r, c, op(a.at(r, c), b.at(r, c)));
    }
  }
  return out;
}

// Recursive-free flood fill, labels in row-major discovery order.
inline std::vector<BinaryMask> oracle_components(const BinaryMask& m, bool eight) {
  std::vector<BinaryMask> comps;
  BinaryMask seen(m.width(), m.height());
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!m.at(r, c) || seen.at(r, c)) {
        continue;
      }
      BinaryMask comp(m.width(), m.height());
      std::vector<std::pair<int, int>> stack{{r, c}};
      seen.set(r, c);
      while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        comp.set(y, x);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dy == 0 && dx == 0) || (!eight && dy != 0 && dx != 0)) {
              continue;
            }
            const int ny = y + dy;
            const int nx = x + dx;
            if (m.contains(ny, nx) && m.at(ny, nx) && !seen.at(ny, nx)) {
              seen.set(ny, nx);
              stack.emplace_back(ny, nx);
            }
          }
        }
      }
      comps.push_back(std::move(comp));
    }
  }
  return comps;
}

inline BinaryMask oracle_largest_cc(const BinaryMask& m, bool eight = false) {
  const auto comps = oracle_components(m, eight);
  if (comps.empty()) {
    return BinaryMask(m.width(), m.height());
  }
  // Components come out in order of their first row-major pixel, so strict >
  // keeps the earliest on ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < comps.size(); ++i) {
    if (oracle_count(comps[i]) > oracle_count(comps[best])) {
      best = i;
    }
  }
  return comps[best];
}

inline std::optional<BBox> oracle_bbox(const BinaryMask& m) {
  std::optional<BBox> box;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!m.at(r, c)) {
        continue;
      }
      if (!box) {
        box = BBox{r, c, r, c};
      }
      box->row_min = std::min(box->row_min, r);
      box->row_max = std::max(box->row_max, r);
      box->col_min = std::min(box->col_min, c);
      box->col_max = std::max(box->col_max, c);
    }
  }
  return box;
}

// Candidate with one class per entry of `ious`, masks all `mask`.
inline CandidateMask candidate(const std::vector<std::pair<ClassId, double>>& ious,
                               const BinaryMask& mask, double conf = 0.9) {
  CandidateMask c;
  for (const auto& [cls, v] : ious) {
    c.class_masks.emplace(cls, mask);
    c.predicted_iou.emplace(cls, v);
    c.confidence.emplace(cls, conf);
  }
  return c;
}

// Single-class candidate set with the given predicted IoU per branch.
inline CandidateSet single_class_set(std::size_t frame, double a, double b, double c,
                                     ClassId cls = 1) {
  const BinaryMask m = rect_mask(8, 8, 2, 2, 5, 5);
  return CandidateSet(frame, {candidate({{cls, a}}, m), candidate({{cls, b}}, m),
                              candidate({{cls, c}}, m)});
}

inline MemoryEntry entry(std::size_t frame, double conf, double iou_score, ClassId cls = 1,
                         EntrySource source = EntrySource::Recent) {
  MemoryEntry e;
  e.frame_index = frame;
  e.source = source;
  e.class_masks.emplace(cls, BinaryMask(4, 4));
  e.avg_confidence = conf;
  e.avg_predicted_iou = iou_score;
  e.interference_flag = source == EntrySource::Orm;
  return e;
}

inline MemoryEntry orm_entry(std::size_t frame) {
  return entry(frame, 0.9, 0.9, 1, EntrySource::Orm);
}

inline MemoryEntry cam_entry(std::size_t frame, double quality) {
  return entry(frame, quality, quality, 1, EntrySource::Cam);
}

template <typename Ptrs>
std::vector<std::size_t> frames_of(const Ptrs& entries) {
  std::vector<std::size_t> out;
  for (const auto& e : entries) {
    out.push_back(e->frame_index);
  }
  return out;
}

}  // namespace memtrack::testing
