#include "ptk/matcher.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace ptk {

namespace {

constexpr double kMaskConstant = -1e4;
constexpr double kLayerNormEps = 1e-12;
constexpr char kCheckpointMagic[8] = {'P', 'T', 'K', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void MatcherConfig::validate() const {
  if (num_layers < 1 || hidden < 1 || intermediate < 1 || heads < 1 || max_segment < 1 ||
      position_vocab < 1 || type_vocab < 1)
    throw std::invalid_argument("MatcherConfig: all sizes must be positive");
  if (hidden % heads != 0)
    throw std::invalid_argument("MatcherConfig: hidden (" + std::to_string(hidden) +
                                ") must be divisible by heads (" + std::to_string(heads) + ")");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw std::invalid_argument("MatcherConfig: dropout_p must be in [0,1)");
}

std::vector<std::pair<std::string, nn::TensorPtr>> ModelParams::named() const {
  std::vector<std::pair<std::string, nn::TensorPtr>> out;
  out.emplace_back("pos_emb", pos_emb);
  out.emplace_back("type_emb", type_emb);
  out.emplace_back("seg_emb", seg_emb);
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    out.emplace_back(p + "wq", L.wq);
    out.emplace_back(p + "bq", L.bq);
    out.emplace_back(p + "wk", L.wk);
    out.emplace_back(p + "bk", L.bk);
    out.emplace_back(p + "wv", L.wv);
    out.emplace_back(p + "bv", L.bv);
    out.emplace_back(p + "wo", L.wo);
    out.emplace_back(p + "bo", L.bo);
    out.emplace_back(p + "ln1_g", L.ln1_g);
    out.emplace_back(p + "ln1_b", L.ln1_b);
    out.emplace_back(p + "wi", L.wi);
    out.emplace_back(p + "bi", L.bi);
    out.emplace_back(p + "wf", L.wf);
    out.emplace_back(p + "bf", L.bf);
    out.emplace_back(p + "ln2_g", L.ln2_g);
    out.emplace_back(p + "ln2_b", L.ln2_b);
  }
  out.emplace_back("pooler_w", pooler_w);
  out.emplace_back("pooler_b", pooler_b);
  out.emplace_back("cls_w", cls_w);
  out.emplace_back("cls_b", cls_b);
  return out;
}

std::vector<nn::TensorPtr> ModelParams::all() const {
  std::vector<nn::TensorPtr> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

void ModelParams::set_requires_grad(bool on) {
  for (auto& t : all()) {
    t->requires_grad = on;
    if (on) t->ensure_grad();
  }
}

void ModelParams::zero_grads() {
  for (auto& t : all()) t->zero_grad();
}

ParamCount count_params(const MatcherConfig& c) {
  c.validate();
  ParamCount n;
  n.embeddings = static_cast<long long>(c.position_vocab + c.type_vocab + c.max_segment) * c.hidden;
  const long long attn = 4LL * (c.hidden * c.hidden + c.hidden);
  const long long ff = static_cast<long long>(c.hidden) * c.intermediate + c.intermediate +
                       static_cast<long long>(c.intermediate) * c.hidden + c.hidden;
  const long long ln = 4LL * c.hidden;
  n.transformer = static_cast<long long>(c.num_layers) * (attn + ff + ln);
  n.pooler = static_cast<long long>(c.hidden) * c.hidden + c.hidden;
  n.classifier = 2LL * c.hidden + 2;
  return n;
}

double AttentionMaps::at(int layer, int head, int query, int key) const {
  const int t = kPairTokens;
  return probs[((static_cast<size_t>(layer) * heads + head) * t + query) * t + key];
}

std::vector<double> AttentionMaps::column_mass(int layer, int head) const {
  const int t = kPairTokens;
  std::vector<double> mass(t, 0.0);
  double total = 0.0;
  for (int q = 0; q < t; ++q)
    for (int k = 0; k < t; ++k) {
      const double v = at(layer, head, q, k);
      mass[k] += v;
      total += v;
    }
  if (total > 0.0)
    for (auto& m : mass) m /= total;
  return mass;
}

namespace {

nn::TensorPtr normal_init(nn::Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<nn::real> data(nn::numel(shape));
  for (auto& v : data) v = dist(rng);
  return nn::Tensor::from(std::move(shape), std::move(data));
}

nn::TensorPtr constant_init(nn::Shape shape, double v) {
  std::vector<nn::real> data(nn::numel(shape), v);
  return nn::Tensor::from(std::move(shape), std::move(data));
}

}  // namespace

ModelParams init_params(const MatcherConfig& c, std::uint64_t seed) {
  c.validate();
  std::mt19937_64 rng(seed);
  const double sd = 0.02;
  const int h = c.hidden;
  ModelParams p;
  p.pos_emb = normal_init({c.position_vocab, h}, sd, rng);
  p.type_emb = normal_init({c.type_vocab, h}, sd, rng);
  p.seg_emb = normal_init({c.max_segment, h}, sd, rng);
  p.layers.resize(c.num_layers);
  for (auto& L : p.layers) {
    L.wq = normal_init({h, h}, sd, rng);
    L.bq = constant_init({h}, 0.0);
    L.wk = normal_init({h, h}, sd, rng);
    L.bk = constant_init({h}, 0.0);
    L.wv = normal_init({h, h}, sd, rng);
    L.bv = constant_init({h}, 0.0);
    L.wo = normal_init({h, h}, sd, rng);
    L.bo = constant_init({h}, 0.0);
    L.ln1_g = constant_init({h}, 1.0);
    L.ln1_b = constant_init({h}, 0.0);
    L.wi = normal_init({h, c.intermediate}, sd, rng);
    L.bi = constant_init({c.intermediate}, 0.0);
    L.wf = normal_init({c.intermediate, h}, sd, rng);
    L.bf = constant_init({h}, 0.0);
    L.ln2_g = constant_init({h}, 1.0);
    L.ln2_b = constant_init({h}, 0.0);
  }
  p.pooler_w = normal_init({h, h}, sd, rng);
  p.pooler_b = constant_init({h}, 0.0);
  p.cls_w = normal_init({h, 2}, sd, rng);
  p.cls_b = constant_init({2}, 0.0);
  return p;
}

ForwardResult matcher_forward(nn::Tape& tape, const ModelParams& params,
                              const MatcherConfig& c, const std::vector<TokenizedPair>& batch,
                              const ForwardOptions& opts) {
  c.validate();
  if (batch.empty()) throw std::invalid_argument("matcher_forward: empty batch");
  const int b = static_cast<int>(batch.size());
  const int t = kPairTokens;
  const int h = c.hidden;
  const int dh = h / c.heads;

  // 0-indexed token ids, range-checked here so errors name the offender.
  std::vector<int> pos_ids, type_ids, seg_ids;
  pos_ids.reserve(static_cast<size_t>(b) * t);
  type_ids.reserve(static_cast<size_t>(b) * t);
  seg_ids.reserve(static_cast<size_t>(b) * t);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < t; ++j) {
      const int pos = batch[i].position[j];
      const int typ = batch[i].type[j];
      const int seg = batch[i].segment[j];
      if (pos < 1 || pos > c.position_vocab)
        throw std::out_of_range("matcher_forward: position token " + std::to_string(pos) +
                                " outside [1," + std::to_string(c.position_vocab) + "]");
      if (typ < 1 || typ > c.type_vocab)
        throw std::out_of_range("matcher_forward: type token " + std::to_string(typ) +
                                " outside [1," + std::to_string(c.type_vocab) + "]");
      if (seg < 1 || seg > c.max_segment)
        throw std::out_of_range("matcher_forward: segment token " + std::to_string(seg) +
                                " outside [1," + std::to_string(c.max_segment) + "]");
      pos_ids.push_back(pos - 1);
      type_ids.push_back(typ - 1);
      seg_ids.push_back(seg - 1);
    }
  }

  // E_sum over the enabled embedding tables
  nn::TensorPtr hidden;
  if (c.use_position) hidden = tape.embedding_lookup(params.pos_emb, pos_ids, {b, t});
  if (c.use_type) {
    auto e = tape.embedding_lookup(params.type_emb, type_ids, {b, t});
    hidden = hidden ? tape.add(hidden, e) : e;
  }
  if (c.use_segment) {
    auto e = tape.embedding_lookup(params.seg_emb, seg_ids, {b, t});
    hidden = hidden ? tape.add(hidden, e) : e;
  }
  if (!hidden) throw std::invalid_argument("matcher_forward: all embedding tables disabled");

  // additive attention mask, [b,1,1,t]: 0 where visible, large negative otherwise
  auto mask = nn::Tensor::create({b, 1, 1, t});
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < t; ++j)
      mask->value[static_cast<size_t>(i) * t + j] = batch[i].attn_mask[j] ? 0.0 : kMaskConstant;

  std::uint64_t drop_site = 0;
  auto next_seed = [&]() { return opts.dropout_seed * 1000003ULL + (drop_site++); };

  ForwardResult result;
  if (opts.want_attention) {
    result.attention.assign(b, AttentionMaps{});
    for (auto& m : result.attention) {
      m.layers = c.num_layers;
      m.heads = c.heads;
      m.probs.assign(static_cast<size_t>(c.num_layers) * c.heads * t * t, 0.0);
    }
  }

  for (int l = 0; l < c.num_layers; ++l) {
    const auto& L = params.layers[l];
    auto q = tape.add(tape.matmul(hidden, L.wq), L.bq);
    auto k = tape.add(tape.matmul(hidden, L.wk), L.bk);
    auto v = tape.add(tape.matmul(hidden, L.wv), L.bv);
    auto qm = tape.swap_middle_dims(tape.reshape(q, {b, t, c.heads, dh}));
    auto km = tape.swap_middle_dims(tape.reshape(k, {b, t, c.heads, dh}));
    auto vm = tape.swap_middle_dims(tape.reshape(v, {b, t, c.heads, dh}));
    auto scores = tape.scale(tape.matmul(qm, tape.transpose_last_two(km)),
                             1.0 / std::sqrt(static_cast<double>(dh)));
    scores = tape.add(scores, mask);
    auto probs = tape.softmax_last_dim(scores);  // [b, heads, t, t]
    if (opts.want_attention) {
      for (int i = 0; i < b; ++i) {
        const size_t per_example = static_cast<size_t>(c.heads) * t * t;
        std::copy_n(probs->value.data() + i * per_example, per_example,
                    result.attention[i].probs.data() +
                        static_cast<size_t>(l) * per_example);
      }
    }
    auto probs_d = tape.dropout(probs, c.dropout_p, opts.training, next_seed());
    auto ctx = tape.reshape(tape.swap_middle_dims(tape.matmul(probs_d, vm)), {b, t, h});
    auto attn_out = tape.add(tape.matmul(ctx, L.wo), L.bo);
    attn_out = tape.dropout(attn_out, c.dropout_p, opts.training, next_seed());
    hidden = tape.layer_norm(tape.add(hidden, attn_out), L.ln1_g, L.ln1_b, kLayerNormEps);
    auto ff = tape.gelu(tape.add(tape.matmul(hidden, L.wi), L.bi));
    ff = tape.add(tape.matmul(ff, L.wf), L.bf);
    ff = tape.dropout(ff, c.dropout_p, opts.training, next_seed());
    hidden = tape.layer_norm(tape.add(hidden, ff), L.ln2_g, L.ln2_b, kLayerNormEps);
  }

  auto first = tape.select_dim1(hidden, 0);  // [b, h]
  auto pooled = tape.tanh(tape.add(tape.matmul(first, params.pooler_w), params.pooler_b));
  result.logits = tape.add(tape.matmul(pooled, params.cls_w), params.cls_b);
  return result;
}

std::vector<double> match_scores(const ModelParams& params, const MatcherConfig& config,
                                 const std::vector<TokenizedPair>& batch) {
  nn::Tape tape(false);
  auto res = matcher_forward(tape, params, config, batch, {});
  std::vector<double> out(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const double a = res.logits->value[2 * i];      // non-match logit
    const double m = res.logits->value[2 * i + 1];  // match logit
    out[i] = 1.0 / (1.0 + std::exp(a - m));
  }
  return out;
}

double match_score(const ModelParams& params, const MatcherConfig& config,
                   const TokenizedPair& pair) {
  return match_scores(params, config, {pair})[0];
}

AttentionMaps extract_attention(const ModelParams& params, const MatcherConfig& config,
                                const TokenizedPair& pair) {
  nn::Tape tape(false);
  ForwardOptions opts;
  opts.want_attention = true;
  auto res = matcher_forward(tape, params, config, {pair}, opts);
  return std::move(res.attention[0]);
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const MatcherConfig& config,
                     const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u32(os, kCheckpointVersion);
  write_u32(os, static_cast<std::uint32_t>(config.num_layers));
  write_u32(os, static_cast<std::uint32_t>(config.hidden));
  write_u32(os, static_cast<std::uint32_t>(config.intermediate));
  write_u32(os, static_cast<std::uint32_t>(config.heads));
  write_u32(os, static_cast<std::uint32_t>(config.max_segment));
  write_u32(os, static_cast<std::uint32_t>(config.position_vocab));
  write_u32(os, static_cast<std::uint32_t>(config.type_vocab));
  write_u32(os, (config.use_position ? 1u : 0u) | (config.use_type ? 2u : 0u) |
                    (config.use_segment ? 4u : 0u));
  write_f64(os, config.dropout_p);
  const auto named = params.named();
  write_u32(os, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(t->shape.size()));
    for (int d : t->shape) write_u32(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t->value.data()),
             static_cast<std::streamsize>(t->value.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::pair<ModelParams, MatcherConfig> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  const std::uint32_t version = read_u32(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version) +
                             " in " + path);
  MatcherConfig c;
  c.num_layers = static_cast<int>(read_u32(is));
  c.hidden = static_cast<int>(read_u32(is));
  c.intermediate = static_cast<int>(read_u32(is));
  c.heads = static_cast<int>(read_u32(is));
  c.max_segment = static_cast<int>(read_u32(is));
  c.position_vocab = static_cast<int>(read_u32(is));
  c.type_vocab = static_cast<int>(read_u32(is));
  const std::uint32_t flags = read_u32(is);
  c.use_position = flags & 1u;
  c.use_type = flags & 2u;
  c.use_segment = flags & 4u;
  c.dropout_p = read_f64(is);
  c.validate();

  ModelParams p = init_params(c, 0);
  const auto named = p.named();
  const std::uint32_t count = read_u32(is);
  if (count != named.size())
    throw std::runtime_error("load_checkpoint: parameter count mismatch in " + path);
  for (const auto& [name, t] : named) {
    const std::uint32_t nlen = read_u32(is);
    std::string fname(nlen, '\0');
    is.read(fname.data(), nlen);
    if (fname != name)
      throw std::runtime_error("load_checkpoint: expected blob '" + name + "', found '" + fname +
                               "' in " + path);
    const std::uint32_t rank = read_u32(is);
    nn::Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(read_u32(is));
    if (shape != t->shape)
      throw std::runtime_error("load_checkpoint: shape mismatch for '" + name + "': file has " +
                               nn::shape_str(shape) + ", config implies " +
                               nn::shape_str(t->shape));
    is.read(reinterpret_cast<char*>(t->value.data()),
            static_cast<std::streamsize>(t->value.size() * sizeof(double)));
    if (!is) throw std::runtime_error("load_checkpoint: truncated blob '" + name + "' in " + path);
  }
  return {std::move(p), c};
}

}  // namespace ptk
