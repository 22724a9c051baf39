// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memtrack {

/// Row-major binary pixel grid. One byte per pixel (0 or 1).
class BinaryMask {
public:
  /// All-zero mask. Throws std::invalid_argument when either dimension is < 1.
  BinaryMask(int width, int height);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(int row, int col) const { return bits_[index(row, col)] != 0; }
  void set(int row, int col, bool value = true) { bits_[index(row, col)] = value ? 1 : 0; }
  bool contains(int row, int col) const noexcept {
    return row >= 0 && row < height_ && col >= 0 && col < width_;
  }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits() noexcept { return bits_; }

  std::size_t count() const noexcept;
  bool empty() const noexcept;
  bool same_shape(const BinaryMask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

/// Inclusive pixel box.
struct BBox {
  int row_min;
  int col_min;
  int row_max;
  int col_max;

  long area() const noexcept {
    return static_cast<long>(row_max - row_min + 1) * static_cast<long>(col_max - col_min + 1);
  }
  friend bool operator==(const BBox&, const BBox&) = default;
};

enum class Connectivity { Four = 4, Eight = 8 };

/// |a∩b| / |a∪b|; two empty masks score 1.0.
double iou(const BinaryMask& a, const BinaryMask& b);
std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b);

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask intersect(const BinaryMask& a, const BinaryMask& b);
BinaryMask subtract(const BinaryMask& a, const BinaryMask& b);
BinaryMask complement(const BinaryMask& m);

/// True when every set pixel of `inner` is set in `outer`.
bool is_subset(const BinaryMask& inner, const BinaryMask& outer);

/// Largest connected component; ties go to the component whose first
/// row-major pixel comes first. Empty input gives an empty mask.
BinaryMask largest_connected_component(const BinaryMask& m,
                                       Connectivity connectivity = Connectivity::Four);

/// Number of connected components under the given connectivity.
std::size_t count_components(const BinaryMask& m, Connectivity connectivity = Connectivity::Four);

std::optional<BBox> bounding_box(const BinaryMask& m);

/// area(inner ∩ outer) / area(outer) using inclusive extents.
double bbox_overlap_ratio(const BBox& inner, const BBox& outer);

// Morphology with a disk structuring element {(dr,dc) : dr²+dc² ≤ r²}.
BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask erode(const BinaryMask& m, int radius);
/// Shift by (drow, dcol); pixels leaving the grid are dropped.
BinaryMask translate(const BinaryMask& m, int drow, int dcol);

/// Run-length form. runs[0] counts leading zeros (may be 0); later runs are
/// strictly positive and alternate ones/zeros.
struct RleMask {
  int width;
  int height;
  std::vector<std::uint32_t> runs;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

RleMask rle_encode(const BinaryMask& m);
/// Throws std::invalid_argument when the runs do not sum to width×height.
BinaryMask rle_decode(const RleMask& r);

/// `W H r0 r1 ...` single-line text form.
std::string rle_to_text(const RleMask& r);
RleMask rle_from_text(std::string_view line);

}  // namespace memtrack
