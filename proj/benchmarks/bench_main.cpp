// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "memtrack/mask.hpp"
#include "memtrack/memory_bank.hpp"
#include "memtrack/synth_world.hpp"
#include "memtrack/tracker.hpp"

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

namespace {

using namespace memtrack;

BinaryMask noisy(int size, std::uint64_t seed, double density) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution on(density);
  BinaryMask m(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      m.set(r, c, on(rng));
    }
  }
  return m;
}

void BM_Iou(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const BinaryMask a = noisy(n, 1, 0.4);
  const BinaryMask b = noisy(n, 2, 0.4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou(a, b));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Iou)->Arg(64)->Arg(128)->Arg(256);

void BM_LargestComponent(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const BinaryMask m = noisy(n, 3, 0.55);
  for (auto _ : state) {
    benchmark::DoNotOptimize(largest_connected_component(m));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_LargestComponent)->Arg(64)->Arg(128)->Arg(256);

void BM_Dilate(benchmark::State& state) {
  const BinaryMask m = noisy(128, 4, 0.05);
  const int radius = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dilate(m, radius));
  }
}
BENCHMARK(BM_Dilate)->Arg(1)->Arg(2)->Arg(3);

void BM_RleRoundTrip(benchmark::State& state) {
  const BinaryMask m = noisy(128, 5, 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rle_decode(rle_encode(m)));
  }
}
BENCHMARK(BM_RleRoundTrip);

void BM_BankCycle(benchmark::State& state) {
  BinaryMask mask(16, 16);
  mask.set(4, 4);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unit(0.5, 1.0);
  MemoryBank bank;
  bank.install_prompt(1, 0, mask);
  std::size_t frame = 0;
  for (auto _ : state) {
    ++frame;
    MemoryEntry e;
    e.frame_index = frame;
    e.avg_confidence = unit(rng);
    e.avg_predicted_iou = unit(rng);
    e.class_masks.emplace(1, mask);
    if (frame % 7 == 0) {
      e.source = EntrySource::Orm;
      e.interference_flag = true;
      bank.orm_insert(e);
    } else if (bank.cam_admit(e)) {
      e.source = EntrySource::Cam;
      bank.cam_insert(e);
    }
    e.source = EntrySource::Recent;
    bank.set_recent(std::move(e));
    benchmark::DoNotOptimize(bank.assemble_context(frame + 1));
  }
}
BENCHMARK(BM_BankCycle);

void BM_TrackFrames(benchmark::State& state) {
  const auto policy = static_cast<PolicyKind>(state.range(0));
  const auto frames = render_scenario(builtin_scenarios().at("overlap"));
  const Prompt prompt = prompt_from_ground_truth(frames);
  const Proposer proposer = make_synthetic_proposer({});
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_sequence(frames, prompt, policy, {}, proposer, 0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames.size()));
  state.SetLabel(std::string(to_string(policy)));
}
BENCHMARK(BM_TrackFrames)
    ->Arg(static_cast<int>(PolicyKind::Fifo))
    ->Arg(static_cast<int>(PolicyKind::MaSam2))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
