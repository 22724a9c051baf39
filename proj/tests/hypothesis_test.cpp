// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "memtrack/hypothesis.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace memtrack;
using namespace memtrack::testing;

namespace {

BinaryMask oracle_eq2(const BinaryMask& ms, const BinaryMask& ma) {
  const auto both = oracle_pixelwise(ms, ma, [](bool s, bool a) { return s && a; });
  const auto rest = oracle_pixelwise(ms, both, [](bool s, bool o) { return s && !o; });
  return oracle_pixelwise(oracle_largest_cc(rest), both, [](bool x, bool y) { return x || y; });
}

}  // namespace

TEST_SUITE("hypothesis") {

TEST_CASE("avg_iou") {
  const BinaryMask m(4, 4);
  const CandidateMask c = candidate({{1, 0.8}, {2, 0.6}}, m);
  CHECK(avg_iou(c, {1, 2}) == doctest::Approx(0.7));
  CHECK(avg_iou(c, {1}) == doctest::Approx(0.8));
  CHECK(avg_iou(candidate({{1, 1.0}, {2, 1.0}}, m), {1, 2}) == 1.0);
  CHECK_THROWS_AS(avg_iou(c, {}), std::invalid_argument);
  CHECK_THROWS_AS(avg_iou(c, {3}), std::invalid_argument);
}

TEST_CASE("candidate set validation") {
  const BinaryMask m(4, 4);
  CHECK_THROWS_AS(CandidateSet(0, {candidate({{1, 0.5}}, m)}), std::invalid_argument);
  CandidateMask bad = candidate({{1, 0.5}}, m);
  bad.confidence.clear();
  CHECK_THROWS_AS(CandidateSet(0, {bad, bad, bad}), std::invalid_argument);
  CandidateMask mixed = candidate({{1, 0.5}, {2, 0.5}}, m);
  mixed.class_masks.at(2) = BinaryMask(5, 4);
  CHECK_THROWS_AS(mixed.validate(), std::invalid_argument);
}

TEST_CASE("select_primary") {
  CHECK(select_primary(single_class_set(0, 0.90, 0.70, 0.85), {1}) == 0);
  CHECK_FALSE(select_primary(single_class_set(0, 0.70, 0.75, 0.60), {1}).has_value());
  CHECK(select_primary(single_class_set(0, 0.90, 0.90, 0.20), {1}) == 0);
  CHECK(select_primary(single_class_set(0, 0.10, 0.80, 0.20), {1}) == 1);
  CHECK(select_primary(single_class_set(0, 0.10, 0.70, 0.20), {1}, 0.7) == 1);
}

TEST_CASE("refine_interference collapses without overlap") {
  const BinaryMask ms = pixels_mask(8, 8, {{0, 0}, {0, 1}, {4, 4}});
  const std::vector<BinaryMask> alts{pixels_mask(8, 8, {{7, 7}})};
  CHECK(refine_interference(ms, alts) == largest_connected_component(ms));
  CHECK(refine_interference(ms, {}) == largest_connected_component(ms));
}

TEST_CASE("refine_interference keeps a fully covered primary") {
  const BinaryMask ms = pixels_mask(8, 8, {{0, 0}, {3, 3}, {6, 6}});
  const std::vector<BinaryMask> alts{rect_mask(8, 8, 0, 0, 3, 7), rect_mask(8, 8, 4, 0, 7, 7)};
  CHECK(refine_interference(ms, alts) == ms);
}

TEST_CASE("refine_interference 8x8 two-blob fixture") {
  // 6-pixel blob at the top left, 3-pixel blob on row 5.
  const BinaryMask ms = pixels_mask(8, 8, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2},
                                           {5, 5}, {5, 6}, {5, 7}});
  const std::vector<BinaryMask> alts{pixels_mask(8, 8, {{5, 5}, {7, 0}}),
                                     pixels_mask(8, 8, {{5, 6}})};
  const BinaryMask out = refine_interference(ms, alts);
  const BinaryMask expected = pixels_mask(8, 8, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1},
                                                 {1, 2}, {5, 5}, {5, 6}});
  CHECK(out == expected);
  CHECK(out == oracle_eq2(ms, mask_union(alts[0], alts[1])));
  CHECK(out.count() == 8);
}

TEST_CASE("classify_interference fixtures") {
  // Primary box 10 rows x 16 cols.
  const BinaryMask primary = rect_mask(20, 12, 0, 0, 9, 15);
  const auto same = classify_interference(primary, primary);
  CHECK(same.verdict == Verdict::Redundant);
  CHECK(same.ratio == 1.0);

  const auto clean = classify_interference(rect_mask(20, 12, 0, 0, 9, 11), primary);
  CHECK(clean.ratio == doctest::Approx(0.75));
  CHECK(clean.verdict == Verdict::Clean);

  const auto hit = classify_interference(rect_mask(20, 12, 0, 0, 9, 3), primary);
  CHECK(hit.ratio == doctest::Approx(0.25));
  CHECK(hit.verdict == Verdict::Interference);

  const auto none = classify_interference(BinaryMask(20, 12), BinaryMask(20, 12));
  CHECK(none.verdict == Verdict::Redundant);
  CHECK(none.ratio == 1.0);
  CHECK(classify_interference(BinaryMask(20, 12), primary).verdict == Verdict::Interference);
}

TEST_CASE("classify_ratio band edges are clean") {
  CHECK(classify_ratio(0.6, 0.6, 0.9) == Verdict::Clean);
  CHECK(classify_ratio(0.9, 0.6, 0.9) == Verdict::Clean);
  CHECK(classify_ratio(std::nextafter(0.6, 0.0), 0.6, 0.9) == Verdict::Interference);
  CHECK(classify_ratio(std::nextafter(0.9, 1.0), 0.6, 0.9) == Verdict::Redundant);
  CHECK(classify_ratio(0.0, 0.6, 0.9) == Verdict::Interference);
  CHECK(classify_ratio(1.0, 0.6, 0.9) == Verdict::Redundant);
}

TEST_CASE("refine_frame takes the worst class") {
  // Class 1 untouched (Redundant); class 2 split in two, the bigger part kept.
  const BinaryMask c1 = rect_mask(20, 20, 0, 0, 3, 3);
  const BinaryMask c2 = rect_mask(20, 20, 10, 0, 19, 15);
  const BinaryMask cut = rect_mask(20, 20, 10, 0, 19, 3);
  CandidateMask primary;
  primary.class_masks = {{1, c1}, {2, mask_union(cut, rect_mask(20, 20, 10, 5, 19, 15))}};
  primary.predicted_iou = {{1, 0.9}, {2, 0.9}};
  primary.confidence = {{1, 0.9}, {2, 0.9}};
  CandidateMask alt = primary;
  alt.class_masks.at(1) = BinaryMask(20, 20);
  alt.class_masks.at(2) = BinaryMask(20, 20);
  const CandidateSet set(0, {primary, alt, alt});
  const RefinementResult r = refine_frame(set, 0, {1, 2});
  REQUIRE(r.primary_index == 0);
  CHECK(r.refined.at(1) == c1);
  CHECK(r.refined.at(2) == rect_mask(20, 20, 10, 5, 19, 15));
  CHECK(r.verdict.verdict == Verdict::Clean);
  CHECK(r.verdict.ratio == doctest::Approx(110.0 / 160.0));
  CHECK_THROWS_AS(refine_frame(set, 3, {1}), std::out_of_range);
}

TEST_CASE("update_scores worked examples") {
  const ScoreState s0;
  const ScoreState s1 = update_scores(s0, single_class_set(0, 0.9, 0.5, 0.7), {1});
  CHECK(s1.cumulative[0] == doctest::Approx(-0.10536).epsilon(1e-4));
  CHECK(s1.cumulative[1] == doctest::Approx(-0.69315).epsilon(1e-4));
  CHECK(s1.cumulative[2] == doctest::Approx(-0.35667).epsilon(1e-4));
  CHECK(s1.cumulative[0] == std::log(0.9 + 1e-6));

  const ScoreState ones = update_scores(s0, single_class_set(0, 1.0, 1.0, 1.0), {1});
  for (const double v : ones.cumulative) {
    CHECK(v == doctest::Approx(1e-6).epsilon(1e-6));
  }

  const ScoreState zero = update_scores(s0, single_class_set(0, 1.0, 1.0, 0.0), {1});
  CHECK(zero.cumulative[2] == doctest::Approx(-13.8155).epsilon(1e-5));

  const ScoreState paused = update_scores(s1, single_class_set(1, 0.1, 0.1, 0.1), {});
  CHECK(paused.cumulative == s1.cumulative);
}

TEST_CASE("select_branch") {
  ScoreState s;
  s.cumulative = {-0.1, -0.7, -0.35};
  CHECK(select_branch(s) == 0);
  s.cumulative = {-2.0, -2.0, -2.0};
  CHECK(select_branch(s) == 0);
  s.cumulative = {-5.0, -1.0, -9.0};
  CHECK(select_branch(s) == 1);
  s.cumulative = {-5.0, -1.0, -1.0};
  CHECK(select_branch(s) == 1);
}

TEST_CASE("verdict names") {
  CHECK(to_string(Verdict::Clean) == "clean");
  CHECK(to_string(Verdict::Interference) == "interference");
  CHECK(to_string(Verdict::Redundant) == "redundant");
}

}
