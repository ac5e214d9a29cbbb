#include "ptk/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ptk {

namespace {

// splitmix64; used for sampling so results do not depend on libstdc++
// distribution internals
std::uint64_t next_u64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double next_unit(std::uint64_t& state) {
  return static_cast<double>(next_u64(state) >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1 || epochs < 1) throw std::invalid_argument("TrainConfig: sizes positive");
  if (!(peak_lr > 0.0)) throw std::invalid_argument("TrainConfig: peak_lr must be positive");
  if (!(warmup_fraction > 0.0) || !(warmup_fraction < 1.0))
    throw std::invalid_argument("TrainConfig: warmup_fraction must lie in (0,1)");
}

int PairDataset::num_positive() const {
  int n = 0;
  for (const auto& s : samples)
    if (s.pair.label && *s.pair.label) ++n;
  return n;
}

int PairDataset::num_negative() const {
  int n = 0;
  for (const auto& s : samples)
    if (s.pair.label && !*s.pair.label) ++n;
  return n;
}

PairDataset mine_pairs(const std::vector<SequenceFile>& sequences, int delta,
                       const TokenGrid& grid, double negatives_per_positive, std::uint64_t seed,
                       bool relative_tokens) {
  if (delta < 1) throw std::invalid_argument("mine_pairs: delta must be >= 1");
  PairDataset out;
  std::uint64_t rng = seed ^ 0x7061697273ULL;
  std::vector<PairSample> negatives;
  long long num_positive = 0;

  auto tokenize = [&](const SequenceFile& seq, const Pose& cur, const Pose& past, int gap) {
    return relative_tokens
               ? tokenize_pair_relative(cur, past, gap, delta, seq.frame_width, seq.frame_height,
                                        grid)
               : tokenize_pair(cur, past, gap, delta, seq.frame_width, seq.frame_height, grid);
  };

  for (const auto& seq : sequences) {
    const int n_frames = static_cast<int>(seq.frames.size());
    for (int t = 1; t < n_frames; ++t) {
      for (int gap = 1; gap <= delta && gap <= t; ++gap) {
        const Frame& cur = seq.frames[t];
        const Frame& past = seq.frames[t - gap];
        for (const auto& cp : cur.poses) {
          if (!cp.track_id) continue;
          for (const auto& pp : past.poses) {
            if (!pp.track_id) continue;
            PairSample s;
            s.pair = tokenize(seq, cp, pp, gap);
            s.pair.label = (*cp.track_id == *pp.track_id);
            s.video_id = seq.video_id;
            s.frame_current = t;
            s.frame_past = t - gap;
            s.gap = gap;
            if (*s.pair.label) {
              out.samples.push_back(std::move(s));
              ++num_positive;
            } else {
              negatives.push_back(std::move(s));
            }
          }
        }
      }
    }
  }

  if (negatives_per_positive >= 0.0) {
    const long long keep = std::min<long long>(
        static_cast<long long>(negatives_per_positive * static_cast<double>(num_positive)),
        static_cast<long long>(negatives.size()));
    // partial Fisher-Yates for a uniform subset
    for (long long i = 0; i < keep; ++i) {
      const long long j = i + static_cast<long long>(next_unit(rng) * (negatives.size() - i));
      std::swap(negatives[i], negatives[std::min<long long>(j, negatives.size() - 1)]);
    }
    negatives.resize(keep);
  }
  for (auto& n : negatives) out.samples.push_back(std::move(n));
  return out;
}

PairDataset subsample_pairs(const PairDataset& dataset, int max_count, std::uint64_t seed) {
  if (max_count <= 0 || max_count >= static_cast<int>(dataset.samples.size())) return dataset;
  std::vector<int> idx(dataset.samples.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::uint64_t rng = seed ^ 0x73756273616dULL;
  for (int i = 0; i < max_count; ++i) {
    const int j = i + static_cast<int>(next_unit(rng) * (idx.size() - i));
    std::swap(idx[i], idx[std::min<int>(j, static_cast<int>(idx.size()) - 1)]);
  }
  PairDataset out;
  out.samples.reserve(max_count);
  for (int i = 0; i < max_count; ++i) out.samples.push_back(dataset.samples[idx[i]]);
  return out;
}

PairDataset augment_translation(const PairDataset& dataset, int copies, const TokenGrid& grid,
                                std::uint64_t seed) {
  if (copies < 0) throw std::invalid_argument("augment_translation: copies must be >= 0");
  const int w = grid.grid_w, h = grid.grid_h;
  PairDataset out = dataset;
  out.samples.reserve(dataset.samples.size() * (1 + copies));
  std::uint64_t rng = seed ^ 0x7368696674ULL;
  for (int c = 0; c < copies; ++c)
    for (const auto& sample : dataset.samples) {
      int min_col = w, max_col = -1, min_row = h, max_row = -1;
      for (int i = 0; i < kPairTokens; ++i) {
        if (!sample.pair.attn_mask[i]) continue;
        const int p = sample.pair.position[i] - 1;
        min_col = std::min(min_col, p % w);
        max_col = std::max(max_col, p % w);
        min_row = std::min(min_row, p / w);
        max_row = std::max(max_row, p / w);
      }
      if (max_col < 0) continue;  // fully masked pair, nothing to shift
      const int dc = -min_col + static_cast<int>(next_u64(rng) % (w - (max_col - min_col)));
      const int dr = -min_row + static_cast<int>(next_u64(rng) % (h - (max_row - min_row)));
      PairSample shifted = sample;
      for (int i = 0; i < kPairTokens; ++i) {
        if (!shifted.pair.attn_mask[i]) continue;
        const int p = shifted.pair.position[i] - 1;
        shifted.pair.position[i] = 1 + (p % w + dc) + (p / w + dr) * w;
      }
      out.samples.push_back(std::move(shifted));
    }
  return out;
}

BalancedSampler::BalancedSampler(const PairDataset& dataset, std::uint64_t seed)
    : state_(seed ^ 0x62616c616e636564ULL) {
  for (size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    if (!s.pair.label) throw std::invalid_argument("BalancedSampler: unlabeled sample");
    (*s.pair.label ? positives_ : negatives_).push_back(static_cast<int>(i));
  }
  if (positives_.empty() || negatives_.empty())
    throw std::invalid_argument("BalancedSampler: need both classes present");
}

std::vector<int> BalancedSampler::next_batch(int batch_size) {
  std::vector<int> out(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const auto& cls = (next_u64(state_) & 1ULL) ? positives_ : negatives_;
    out[i] = cls[next_u64(state_) % cls.size()];
  }
  return out;
}

double lr_at(int step, int total_steps, const TrainConfig& config) {
  config.validate();
  if (total_steps < 1) throw std::invalid_argument("lr_at: total_steps must be >= 1");
  const int warmup = std::max(1, static_cast<int>(std::ceil(config.warmup_fraction * total_steps)));
  if (step <= 0) return 0.0;
  if (step <= warmup) return config.peak_lr * static_cast<double>(step) / warmup;
  if (step >= total_steps) return 0.0;
  return config.peak_lr * static_cast<double>(total_steps - step) / (total_steps - warmup);
}

namespace {

struct AdamState {
  std::vector<std::vector<nn::real>> m, v;
  long long t = 0;
};

void adam_step(std::vector<nn::TensorPtr>& params, AdamState& st, const TrainConfig& cfg,
               double lr) {
  if (st.m.empty()) {
    st.m.resize(params.size());
    st.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      st.m[i].assign(params[i]->value.size(), 0.0);
      st.v[i].assign(params[i]->value.size(), 0.0);
    }
  }
  if (cfg.grad_clip > 0.0) {
    double norm_sq = 0.0;
    for (auto& p : params)
      for (double g : p->grad) norm_sq += g * g;
    const double norm = std::sqrt(norm_sq);
    if (norm > cfg.grad_clip) {
      const double s = cfg.grad_clip / norm;
      for (auto& p : params)
        for (auto& g : p->grad) g *= s;
    }
  }
  ++st.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    for (size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      st.m[i][j] = cfg.beta1 * st.m[i][j] + (1.0 - cfg.beta1) * g;
      st.v[i][j] = cfg.beta2 * st.v[i][j] + (1.0 - cfg.beta2) * g * g;
      const double mh = st.m[i][j] / bc1;
      const double vh = st.v[i][j] / bc2;
      p.value[j] -= lr * mh / (std::sqrt(vh) + cfg.adam_eps);
    }
  }
}

}  // namespace

TrainResult train(ModelParams& params, const MatcherConfig& model_config,
                  const TrainConfig& config, const PairDataset& dataset) {
  config.validate();
  model_config.validate();
  if (dataset.samples.empty()) throw std::invalid_argument("train: empty dataset");

  const int steps_per_epoch = std::max(
      1, static_cast<int>((dataset.samples.size() + config.batch_size - 1) / config.batch_size));
  const int total_steps = steps_per_epoch * config.epochs;

  params.set_requires_grad(true);
  BalancedSampler sampler(dataset, config.seed);
  AdamState adam;
  auto tensors = params.all();

  TrainResult result;
  int global_step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    long long correct = 0, seen = 0;
    double lr = 0.0;
    for (int s = 0; s < steps_per_epoch; ++s) {
      const auto idx = sampler.next_batch(config.batch_size);
      std::vector<TokenizedPair> batch;
      std::vector<int> labels;
      batch.reserve(idx.size());
      for (int i : idx) {
        batch.push_back(dataset.samples[i].pair);
        labels.push_back(*dataset.samples[i].pair.label ? 1 : 0);
      }
      ++global_step;
      lr = lr_at(global_step, total_steps, config);

      nn::Tape tape(true);
      ForwardOptions opts;
      opts.training = true;
      opts.dropout_seed = config.seed * 2654435761ULL + static_cast<std::uint64_t>(global_step);
      auto fwd = matcher_forward(tape, params, model_config, batch, opts);
      auto loss = tape.cross_entropy(fwd.logits, labels);
      if (!std::isfinite(loss->value[0]))
        throw std::runtime_error("train: non-finite loss at step " + std::to_string(global_step));
      loss_sum += loss->value[0];
      for (size_t i = 0; i < labels.size(); ++i) {
        const bool pred_match = fwd.logits->value[2 * i + 1] >= fwd.logits->value[2 * i];
        correct += (pred_match == (labels[i] == 1)) ? 1 : 0;
        ++seen;
      }
      params.zero_grads();
      tape.backward(loss);
      adam_step(tensors, adam, config, lr);
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.step = global_step;
    em.lr = lr;
    em.mean_loss = loss_sum / steps_per_epoch;
    em.match_accuracy = seen ? static_cast<double>(correct) / seen : 0.0;
    result.log.push_back(em);
  }
  params.set_requires_grad(false);
  return result;
}

void write_metrics_csv(const TrainResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
  out << "epoch,step,lr,loss,match_accuracy\n";
  for (const auto& em : result.log) {
    out << em.epoch << "," << em.step << "," << em.lr << "," << em.mean_loss << ","
        << em.match_accuracy << "\n";
  }
}

double match_accuracy(const ModelParams& params, const MatcherConfig& config,
                      const PairDataset& dataset) {
  if (dataset.samples.empty()) return 0.0;
  long long correct = 0;
  const int chunk = 256;
  for (size_t start = 0; start < dataset.samples.size(); start += chunk) {
    const size_t end = std::min(dataset.samples.size(), start + chunk);
    std::vector<TokenizedPair> batch;
    batch.reserve(end - start);
    for (size_t i = start; i < end; ++i) batch.push_back(dataset.samples[i].pair);
    const auto scores = match_scores(params, config, batch);
    for (size_t i = start; i < end; ++i) {
      const bool label = *dataset.samples[i].pair.label;
      if ((scores[i - start] >= 0.5) == label) ++correct;
    }
  }
  return static_cast<double>(correct) / dataset.samples.size();
}

}  // namespace ptk
