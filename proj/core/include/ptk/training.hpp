#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptk/dataio.hpp"
#include "ptk/matcher.hpp"
#include "ptk/tokenizer.hpp"

namespace ptk {

struct TrainConfig {
  int batch_size = 32;
  double peak_lr = 1e-4;
  double warmup_fraction = 0.01;
  int epochs = 25;
  std::uint64_t seed = 0;
  // Adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 0.0;  // global L2 norm; 0 disables

  void validate() const;
};

struct PairSample {
  TokenizedPair pair;  // label field set
  std::string video_id;
  int frame_current = 0;
  int frame_past = 0;
  int gap = 0;
};

struct PairDataset {
  std::vector<PairSample> samples;

  int num_positive() const;
  int num_negative() const;
};

/// Mines labeled pose pairs from track-annotated sequences. Positives are
/// same-track pairs at gaps 1..delta; negatives are cross-track pairs from the
/// same frame pair. negatives_per_positive < 0 keeps every negative; otherwise
/// negatives are subsampled to that ratio.
PairDataset mine_pairs(const std::vector<SequenceFile>& sequences, int delta,
                       const TokenGrid& grid, double negatives_per_positive = -1.0,
                       std::uint64_t seed = 0, bool relative_tokens = false);

/// Uniform subsample without replacement, preserving class mix; reproducible.
PairDataset subsample_pairs(const PairDataset& dataset, int max_count, std::uint64_t seed);

/// Appends `copies` translated views of every sample: both poses of a pair
/// shift by one random grid offset, chosen so all visible tokens stay on the
/// grid. Labels are unchanged (matching is translation invariant). Improves
/// position-embedding coverage when the corpus visits few cells.
PairDataset augment_translation(const PairDataset& dataset, int copies, const TokenGrid& grid,
                                std::uint64_t seed);

/// Class-balanced index batches: each slot picks a class fairly, then a member
/// of that class uniformly, with replacement.
class BalancedSampler {
 public:
  BalancedSampler(const PairDataset& dataset, std::uint64_t seed);
  std::vector<int> next_batch(int batch_size);

 private:
  std::vector<int> positives_;
  std::vector<int> negatives_;
  std::uint64_t state_;
};

/// Piecewise-linear warmup/decay: 0 -> peak over ceil(warmup_fraction * total)
/// steps, then peak -> 0 at total_steps.
double lr_at(int step, int total_steps, const TrainConfig& config);

struct EpochMetrics {
  int epoch = 0;
  int step = 0;  // global step at end of epoch
  double lr = 0.0;
  double mean_loss = 0.0;
  double match_accuracy = 0.0;  // on the epoch's training batches
};

struct TrainResult {
  std::vector<EpochMetrics> log;
};

/// In-place supervised training of `params` with Adam on the cross-entropy
/// over the two logits. Throws on non-finite loss, naming the step.
TrainResult train(ModelParams& params, const MatcherConfig& model_config,
                  const TrainConfig& config, const PairDataset& dataset);

void write_metrics_csv(const TrainResult& result, const std::string& path);

/// Fraction of pairs where (score >= 0.5) agrees with the label.
double match_accuracy(const ModelParams& params, const MatcherConfig& config,
                      const PairDataset& dataset);

}  // namespace ptk
