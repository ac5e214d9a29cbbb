#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace ptk::nn {

using real = double;
using Shape = std::vector<int>;

int numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Tensor {
  Shape shape;
  std::vector<real> value;
  std::vector<real> grad;  // allocated on demand, same length as value
  bool requires_grad = false;

  int numel() const { return static_cast<int>(value.size()); }
  void ensure_grad();
  void zero_grad();

  static std::shared_ptr<Tensor> create(Shape shape, bool requires_grad = false);
  static std::shared_ptr<Tensor> from(Shape shape, std::vector<real> data,
                                      bool requires_grad = false);
  static std::shared_ptr<Tensor> scalar(real v);
};

using TensorPtr = std::shared_ptr<Tensor>;

/// Records primitive ops for one forward pass; backward() replays the tape in
/// reverse exactly once. A non-recording tape performs plain inference.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);  // right-aligned broadcast
  TensorPtr scale(const TensorPtr& a, real s);
  TensorPtr transpose_last_two(const TensorPtr& a);
  TensorPtr swap_middle_dims(const TensorPtr& a);  // 4D: [a,b,c,d] -> [a,c,b,d]
  TensorPtr embedding_lookup(const TensorPtr& table, const std::vector<int>& ids,
                             Shape id_shape);
  TensorPtr softmax_last_dim(const TensorPtr& a);
  TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias,
                       real eps);
  TensorPtr gelu(const TensorPtr& a);
  TensorPtr tanh(const TensorPtr& a);
  TensorPtr dropout(const TensorPtr& a, real p, bool training, std::uint64_t seed);
  TensorPtr reshape(const TensorPtr& a, Shape shape);
  TensorPtr concat_axis0(const std::vector<TensorPtr>& parts);
  TensorPtr select_dim1(const TensorPtr& a, int index);  // [B,T,...] -> [B,...]
  /// Mean negative log-likelihood of `labels` under softmax(logits). [B,C] -> scalar.
  TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels);

  /// Accumulates d(loss)/d(param) into .grad of every requires_grad tensor
  /// reachable on this tape. Loss must be scalar; the tape is single-use.
  void backward(const TensorPtr& loss);

  bool recording() const { return recording_; }

 private:
  bool grads_needed(std::initializer_list<TensorPtr> inputs) const;
  void record(std::function<void()> fn) { back_.push_back(std::move(fn)); }

  bool recording_;
  bool consumed_ = false;
  std::vector<std::function<void()>> back_;
};

}  // namespace ptk::nn
