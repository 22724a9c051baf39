// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "memtrack/mask.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace memtrack {

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": mask dimensions differ (" +
                                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()) + ")");
  }
}

template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, const char* name, Op op) {
  require_same_shape(a, b, name);
  BinaryMask out(a.width(), a.height());
  auto pa = a.bits();
  auto pb = b.bits();
  auto po = out.bits();
  for (std::size_t i = 0; i < po.size(); ++i) {
    po[i] = static_cast<std::uint8_t>(op(pa[i], pb[i]));
  }
  return out;
}

std::vector<std::pair<int, int>> disk_offsets(int radius) {
  std::vector<std::pair<int, int>> offsets;
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) {
      if (dr * dr + dc * dc <= radius * radius) {
        offsets.emplace_back(dr, dc);
      }
    }
  }
  return offsets;
}

// Labels every component; returns labels (0 = background, 1.. = component in
// order of first row-major pixel) and per-label sizes (index 0 unused).
std::pair<std::vector<std::uint32_t>, std::vector<std::size_t>> label_components(
    const BinaryMask& m, Connectivity connectivity) {
  const int w = m.width();
  const int h = m.height();
  auto bits = m.bits();
  std::vector<std::uint32_t> labels(bits.size(), 0);
  std::vector<std::size_t> sizes(1, 0);
  std::vector<std::size_t> stack;

  static constexpr int kDr4[] = {-1, 1, 0, 0};
  static constexpr int kDc4[] = {0, 0, -1, 1};
  static constexpr int kDr8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int kDc8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  const bool eight = connectivity == Connectivity::Eight;
  const int n_neighbors = eight ? 8 : 4;
  const int* dr = eight ? kDr8 : kDr4;
  const int* dc = eight ? kDc8 : kDc4;

  for (std::size_t start = 0; start < bits.size(); ++start) {
    if (!bits[start] || labels[start] != 0) {
      continue;
    }
    const auto label = static_cast<std::uint32_t>(sizes.size());
    std::size_t size = 0;
    labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      const int r = static_cast<int>(p / static_cast<std::size_t>(w));
      const int c = static_cast<int>(p % static_cast<std::size_t>(w));
      for (int k = 0; k < n_neighbors; ++k) {
        const int nr = r + dr[k];
        const int nc = c + dc[k];
        if (nr < 0 || nr >= h || nc < 0 || nc >= w) {
          continue;
        }
        const std::size_t q = static_cast<std::size_t>(nr) * static_cast<std::size_t>(w) +
                              static_cast<std::size_t>(nc);
        if (bits[q] && labels[q] == 0) {
          labels[q] = label;
          stack.push_back(q);
        }
      }
    }
    sizes.push_back(size);
  }
  return {std::move(labels), std::move(sizes)};
}

}  // namespace

BinaryMask::BinaryMask(int width, int height) : BinaryMask(width, height, {}) {}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("BinaryMask: dimensions must be >= 1");
  }
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bits_.empty()) {
    bits_.assign(n, 0);
  } else if (bits_.size() != n) {
    throw std::invalid_argument("BinaryMask: bit count does not match width*height");
  }
  for (auto& b : bits_) {
    b = b ? 1 : 0;
  }
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::empty() const noexcept {
  return std::none_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "intersection_count");
  auto pa = a.bits();
  auto pb = b.bits();
  std::size_t n = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    n += static_cast<std::size_t>(pa[i] & pb[i]);
  }
  return n;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "iou");
  auto pa = a.bits();
  auto pb = b.bits();
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    inter += static_cast<std::size_t>(pa[i] & pb[i]);
    uni += static_cast<std::size_t>(pa[i] | pb[i]);
  }
  if (uni == 0) {
    return 1.0;
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "union", [](std::uint8_t x, std::uint8_t y) { return x | y; });
}

BinaryMask intersect(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "intersect", [](std::uint8_t x, std::uint8_t y) { return x & y; });
}

BinaryMask subtract(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "subtract", [](std::uint8_t x, std::uint8_t y) { return x & (y ^ 1); });
}

BinaryMask complement(const BinaryMask& m) {
  BinaryMask out(m.width(), m.height());
  auto src = m.bits();
  auto dst = out.bits();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] ^ 1;
  }
  return out;
}

bool is_subset(const BinaryMask& inner, const BinaryMask& outer) {
  require_same_shape(inner, outer, "is_subset");
  auto pi = inner.bits();
  auto po = outer.bits();
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi[i] && !po[i]) {
      return false;
    }
  }
  return true;
}

BinaryMask largest_connected_component(const BinaryMask& m, Connectivity connectivity) {
  auto [labels, sizes] = label_components(m, connectivity);
  BinaryMask out(m.width(), m.height());
  if (sizes.size() <= 1) {
    return out;
  }
  // Labels are assigned in first-pixel order, so the first maximum wins ties.
  std::uint32_t best = 1;
  for (std::uint32_t l = 2; l < sizes.size(); ++l) {
    if (sizes[l] > sizes[best]) {
      best = l;
    }
  }
  auto dst = out.bits();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    dst[i] = labels[i] == best ? 1 : 0;
  }
  return out;
}

std::size_t count_components(const BinaryMask& m, Connectivity connectivity) {
  return label_components(m, connectivity).second.size() - 1;
}

std::optional<BBox> bounding_box(const BinaryMask& m) {
  std::optional<BBox> box;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!m.at(r, c)) {
        continue;
      }
      if (!box) {
        box = BBox{r, c, r, c};
      } else {
        box->row_min = std::min(box->row_min, r);
        box->col_min = std::min(box->col_min, c);
        box->row_max = std::max(box->row_max, r);
        box->col_max = std::max(box->col_max, c);
      }
    }
  }
  return box;
}

double bbox_overlap_ratio(const BBox& inner, const BBox& outer) {
  const int r0 = std::max(inner.row_min, outer.row_min);
  const int c0 = std::max(inner.col_min, outer.col_min);
  const int r1 = std::min(inner.row_max, outer.row_max);
  const int c1 = std::min(inner.col_max, outer.col_max);
  if (r0 > r1 || c0 > c1) {
    return 0.0;
  }
  const BBox overlap{r0, c0, r1, c1};
  return static_cast<double>(overlap.area()) / static_cast<double>(outer.area());
}

BinaryMask dilate(const BinaryMask& m, int radius) {
  if (radius <= 0) {
    return m;
  }
  const auto offsets = disk_offsets(radius);
  BinaryMask out(m.width(), m.height());
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!m.at(r, c)) {
        continue;
      }
      for (const auto& [dr, dc] : offsets) {
        if (out.contains(r + dr, c + dc)) {
          out.set(r + dr, c + dc);
        }
      }
    }
  }
  return out;
}

BinaryMask erode(const BinaryMask& m, int radius) {
  if (radius <= 0) {
    return m;
  }
  const auto offsets = disk_offsets(radius);
  BinaryMask out(m.width(), m.height());
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!m.at(r, c)) {
        continue;
      }
      const bool keep = std::all_of(offsets.begin(), offsets.end(), [&](const auto& o) {
        return m.contains(r + o.first, c + o.second) && m.at(r + o.first, c + o.second);
      });
      if (keep) {
        out.set(r, c);
      }
    }
  }
  return out;
}

BinaryMask translate(const BinaryMask& m, int drow, int dcol) {
  if (drow == 0 && dcol == 0) {
    return m;
  }
  BinaryMask out(m.width(), m.height());
  for (int r = 0; r < m.height(); ++r) {
    const int nr = r + drow;
    if (nr < 0 || nr >= m.height()) {
      continue;
    }
    for (int c = 0; c < m.width(); ++c) {
      const int nc = c + dcol;
      if (nc >= 0 && nc < m.width() && m.at(r, c)) {
        out.set(nr, nc);
      }
    }
  }
  return out;
}

RleMask rle_encode(const BinaryMask& m) {
  RleMask r{m.width(), m.height(), {}};
  auto bits = m.bits();
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (const auto b : bits) {
    if (b == current) {
      ++run;
    } else {
      r.runs.push_back(run);
      current = b;
      run = 1;
    }
  }
  r.runs.push_back(run);
  return r;
}

BinaryMask rle_decode(const RleMask& r) {
  if (r.width < 1 || r.height < 1) {
    throw std::invalid_argument("rle_decode: dimensions must be >= 1");
  }
  for (std::size_t i = 1; i < r.runs.size(); ++i) {
    if (r.runs[i] == 0) {
      throw std::invalid_argument("rle_decode: zero-length run at position " + std::to_string(i));
    }
  }
  const auto n = static_cast<std::uint64_t>(r.width) * static_cast<std::uint64_t>(r.height);
  const auto total =
      std::accumulate(r.runs.begin(), r.runs.end(), std::uint64_t{0},
                      [](std::uint64_t acc, std::uint32_t v) { return acc + v; });
  if (total != n) {
    throw std::invalid_argument("rle_decode: runs sum to " + std::to_string(total) +
                                ", expected " + std::to_string(n));
  }
  BinaryMask m(r.width, r.height);
  auto bits = m.bits();
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (const auto run : r.runs) {
    std::fill_n(bits.begin() + static_cast<std::ptrdiff_t>(pos), run, value);
    pos += run;
    value ^= 1;
  }
  return m;
}

std::string rle_to_text(const RleMask& r) {
  std::string out = std::to_string(r.width) + " " + std::to_string(r.height);
  for (const auto run : r.runs) {
    out += ' ';
    out += std::to_string(run);
  }
  return out;
}

RleMask rle_from_text(std::string_view line) {
  std::vector<std::uint64_t> values;
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r' || *p == '\n')) {
      ++p;
    }
    if (p == end) {
      break;
    }
    std::uint64_t v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || (next < end && *next != ' ' && *next != '\t' && *next != '\r' &&
                              *next != '\n')) {
      throw std::invalid_argument("rle_from_text: malformed token in '" + std::string(line) +
                                  "'");
    }
    values.push_back(v);
    p = next;
  }
  if (values.size() < 3) {
    throw std::invalid_argument("rle_from_text: expected 'W H r0 ...'");
  }
  if (values[0] > 1u << 20 || values[1] > 1u << 20) {
    throw std::invalid_argument("rle_from_text: dimensions out of range");
  }
  RleMask r{static_cast<int>(values[0]), static_cast<int>(values[1]), {}};
  for (std::size_t i = 2; i < values.size(); ++i) {
    if (values[i] > UINT32_MAX) {
      throw std::invalid_argument("rle_from_text: run length out of range");
    }
    r.runs.push_back(static_cast<std::uint32_t>(values[i]));
  }
  return r;
}

}  // namespace memtrack
