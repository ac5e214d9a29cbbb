#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ptk/tensor.hpp"
#include "ptk/tokenizer.hpp"

namespace ptk {

struct MatcherConfig {
  int num_layers = 4;
  int hidden = 128;
  int intermediate = 128;
  int heads = 4;
  double dropout_p = 0.1;
  int max_segment = 4;  // lookback window delta
  int position_vocab = 432;
  int type_vocab = kNumJoints;
  // Embedding ablation switches; disabled tables are skipped in the sum.
  bool use_position = true;
  bool use_type = true;
  bool use_segment = true;

  void validate() const;
};

/// All learned weights of the matcher. Tensors are owned here and shared with
/// tapes during forward/backward.
struct ModelParams {
  nn::TensorPtr pos_emb, type_emb, seg_emb;

  struct Layer {
    nn::TensorPtr wq, bq, wk, bk, wv, bv;   // attention projections
    nn::TensorPtr wo, bo;                   // attention output projection
    nn::TensorPtr ln1_g, ln1_b;             // post-attention layer norm
    nn::TensorPtr wi, bi, wf, bf;           // feed-forward in/out
    nn::TensorPtr ln2_g, ln2_b;             // post-feed-forward layer norm
  };
  std::vector<Layer> layers;
  nn::TensorPtr pooler_w, pooler_b;
  nn::TensorPtr cls_w, cls_b;

  /// Stable-ordered (name, tensor) view over every parameter.
  std::vector<std::pair<std::string, nn::TensorPtr>> named() const;
  std::vector<nn::TensorPtr> all() const;
  void set_requires_grad(bool on);
  void zero_grads();
};

struct ParamCount {
  long long embeddings = 0;
  long long transformer = 0;
  long long pooler = 0;
  long long classifier = 0;

  /// The matcher network proper: transformer stack + pooler + classifier,
  /// excluding the embedding lookup tables.
  long long network() const { return transformer + pooler + classifier; }
  long long total() const { return embeddings + network(); }
};

ParamCount count_params(const MatcherConfig& config);

/// Per-layer, per-head attention probabilities for one example.
struct AttentionMaps {
  int layers = 0;
  int heads = 0;
  std::vector<double> probs;  // [layers][heads][30][30], row-major

  double at(int layer, int head, int query, int key) const;
  /// Normalized per-token attention mass (column sums over query rows).
  std::vector<double> column_mass(int layer, int head) const;
};

struct ForwardOptions {
  bool training = false;
  std::uint64_t dropout_seed = 0;
  bool want_attention = false;
};

struct ForwardResult {
  nn::TensorPtr logits;                  // [batch, 2]; class 1 = match
  std::vector<AttentionMaps> attention;  // one per example when requested
};

ForwardResult matcher_forward(nn::Tape& tape, const ModelParams& params,
                              const MatcherConfig& config,
                              const std::vector<TokenizedPair>& batch,
                              const ForwardOptions& opts = {});

/// Reproducible N(0, 0.02) init; layer-norm gains 1, biases 0.
ModelParams init_params(const MatcherConfig& config, std::uint64_t seed);

/// Probability the pair is a match (softmax over the two logits, class 1).
double match_score(const ModelParams& params, const MatcherConfig& config,
                   const TokenizedPair& pair);
std::vector<double> match_scores(const ModelParams& params, const MatcherConfig& config,
                                 const std::vector<TokenizedPair>& batch);

AttentionMaps extract_attention(const ModelParams& params, const MatcherConfig& config,
                                const TokenizedPair& pair);

void save_checkpoint(const ModelParams& params, const MatcherConfig& config,
                     const std::string& path);
std::pair<ModelParams, MatcherConfig> load_checkpoint(const std::string& path);

}  // namespace ptk
