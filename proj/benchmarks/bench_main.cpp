#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ptk/dataio.hpp"
#include "ptk/matcher.hpp"
#include "ptk/tokenizer.hpp"
#include "ptk/tracker.hpp"

using namespace ptk;

namespace {

TokenizedPair make_bench_pair(std::mt19937& rng, const MatcherConfig& c) {
  TokenizedPair tp;
  std::uniform_int_distribution<int> pos(1, c.position_vocab);
  for (int i = 0; i < kPairTokens; ++i) {
    tp.position[i] = pos(rng);
    tp.type[i] = (i % kNumJoints) + 1;
    tp.segment[i] = i < kNumJoints ? 1 : 3;
    tp.attn_mask[i] = true;
  }
  return tp;
}

void BM_MatcherForward(benchmark::State& state) {
  MatcherConfig mc;
  mc.dropout_p = 0.0;
  ModelParams params = init_params(mc, 1);
  std::mt19937 rng(2);
  std::vector<TokenizedPair> batch;
  for (int i = 0; i < state.range(0); ++i) batch.push_back(make_bench_pair(rng, mc));
  for (auto _ : state) {
    nn::Tape tape(false);
    auto fr = matcher_forward(tape, params, mc, batch);
    benchmark::DoNotOptimize(fr.logits->value.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MatcherForward)->Arg(1)->Arg(8)->Arg(32);

void BM_TrainStep(benchmark::State& state) {
  MatcherConfig mc;
  ModelParams params = init_params(mc, 1);
  params.set_requires_grad(true);
  std::mt19937 rng(2);
  std::vector<TokenizedPair> batch;
  std::vector<int> labels;
  for (int i = 0; i < 32; ++i) {
    batch.push_back(make_bench_pair(rng, mc));
    labels.push_back(i % 2);
  }
  ForwardOptions opts;
  opts.training = true;
  for (auto _ : state) {
    params.zero_grads();
    opts.dropout_seed = state.iterations();
    nn::Tape tape(true);
    auto fr = matcher_forward(tape, params, mc, batch, opts);
    tape.backward(tape.cross_entropy(fr.logits, labels));
    benchmark::DoNotOptimize(fr.logits->grad.data());
  }
}
BENCHMARK(BM_TrainStep);

void BM_TokenizePair(benchmark::State& state) {
  SynthConfig cfg;
  cfg.num_persons = 2;
  cfg.num_frames = 2;
  cfg.seed = 3;
  auto sr = generate_synthetic(cfg);
  const auto& a = sr.ground_truth.frames[1].poses[0];
  const auto& b = sr.ground_truth.frames[0].poses[0];
  for (auto _ : state) {
    auto tp = tokenize_pair(a, b, 1, 4, 1920, 1080, TokenGrid{});
    benchmark::DoNotOptimize(tp.position.data());
  }
}
BENCHMARK(BM_TokenizePair);

void BM_TrackFrame(benchmark::State& state) {
  SynthConfig cfg;
  cfg.num_persons = 4;
  cfg.num_frames = 30;
  cfg.jitter_sigma = 2.0;
  cfg.seed = 4;
  auto sr = generate_synthetic(cfg);
  MatcherConfig mc;
  mc.num_layers = 2;
  mc.hidden = 32;
  mc.intermediate = 32;
  mc.heads = 2;
  ModelParams params = init_params(mc, 5);
  TrackerConfig tcfg;
  for (auto _ : state) {
    auto result = track_video(sr.detected, params, mc, tcfg);
    benchmark::DoNotOptimize(result.tracked.frames.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.num_frames);
}
BENCHMARK(BM_TrackFrame);

}  // namespace

BENCHMARK_MAIN();
