#include "ptk/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ptk::nn {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void check_shape_match(const char* op, const Shape& a, const Shape& b) {
  if (a != b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                                shape_str(b));
  }
}

std::vector<int> row_strides(const Shape& s) {
  std::vector<int> st(s.size());
  int acc = 1;
  for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
    st[i] = acc;
    acc *= s[i];
  }
  return st;
}

}  // namespace

int numel(const Shape& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

void Tensor::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

TensorPtr Tensor::create(Shape shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->value.assign(ptk::nn::numel(shape), 0.0);
  t->shape = std::move(shape);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

TensorPtr Tensor::from(Shape shape, std::vector<real> data, bool requires_grad) {
  if (static_cast<int>(data.size()) != ptk::nn::numel(shape))
    throw std::invalid_argument("Tensor::from: data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->value = std::move(data);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

TensorPtr Tensor::scalar(real v) { return from({1}, {v}); }

bool Tape::grads_needed(std::initializer_list<TensorPtr> inputs) const {
  if (!recording_) return false;
  for (const auto& t : inputs)
    if (t && t->requires_grad) return true;
  return false;
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
  const Shape& as = a->shape;
  const Shape& bs = b->shape;
  if (as.size() < 2 || bs.size() < 2)
    throw std::invalid_argument("matmul: need rank >= 2, got " + shape_str(as) + " x " +
                                shape_str(bs));
  const int m = as[as.size() - 2];
  const int k = as[as.size() - 1];
  const int k2 = bs[bs.size() - 2];
  const int n = bs[bs.size() - 1];
  if (k != k2)
    throw std::invalid_argument("matmul: inner dims differ, " + shape_str(as) + " x " +
                                shape_str(bs));
  const bool b_broadcast = bs.size() == 2 && as.size() > 2;
  if (!b_broadcast && !std::equal(as.begin(), as.end() - 2, bs.begin(), bs.end() - 2))
    throw std::invalid_argument("matmul: batch dims differ, " + shape_str(as) + " x " +
                                shape_str(bs));

  Shape out_shape(as.begin(), as.end() - 1);
  out_shape.push_back(n);
  auto out = Tensor::create(out_shape);
  const int batches = numel(as) / (m * k);
  for (int i = 0; i < batches; ++i) {
    ConstMatMap A(a->value.data() + static_cast<size_t>(i) * m * k, m, k);
    ConstMatMap B(b->value.data() + (b_broadcast ? 0 : static_cast<size_t>(i) * k * n), k, n);
    MatMap C(out->value.data() + static_cast<size_t>(i) * m * n, m, n);
    C.noalias() = A * B;
  }

  if (grads_needed({a, b})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      for (int i = 0; i < batches; ++i) {
        ConstMatMap dC(out->grad.data() + static_cast<size_t>(i) * m * n, m, n);
        if (a->requires_grad) {
          a->ensure_grad();
          ConstMatMap B(b->value.data() + (b_broadcast ? 0 : static_cast<size_t>(i) * k * n), k,
                        n);
          MatMap dA(a->grad.data() + static_cast<size_t>(i) * m * k, m, k);
          dA.noalias() += dC * B.transpose();
        }
        if (b->requires_grad) {
          b->ensure_grad();
          ConstMatMap A(a->value.data() + static_cast<size_t>(i) * m * k, m, k);
          MatMap dB(b->grad.data() + (b_broadcast ? 0 : static_cast<size_t>(i) * k * n), k, n);
          dB.noalias() += A.transpose() * dC;
        }
      }
    });
  }
  return out;
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
  // Right-aligned broadcast; a dim of 1 (or a missing leading dim) repeats.
  const size_t rank = std::max(a->shape.size(), b->shape.size());
  Shape as(rank, 1), bs(rank, 1), os(rank, 1);
  std::copy(a->shape.begin(), a->shape.end(), as.end() - a->shape.size());
  std::copy(b->shape.begin(), b->shape.end(), bs.end() - b->shape.size());
  for (size_t i = 0; i < rank; ++i) {
    if (as[i] != bs[i] && as[i] != 1 && bs[i] != 1)
      throw std::invalid_argument("add: incompatible shapes " + shape_str(a->shape) + " vs " +
                                  shape_str(b->shape));
    os[i] = std::max(as[i], bs[i]);
  }
  auto out = Tensor::create(os);
  const int total = out->numel();
  const bool same = a->shape == b->shape;

  // gather indices for the broadcast case, built once with an odometer and
  // shared with the backward pass
  std::shared_ptr<std::vector<int>> ia_idx, ib_idx;
  if (!same) {
    ia_idx = std::make_shared<std::vector<int>>(total);
    ib_idx = std::make_shared<std::vector<int>>(total);
    auto ast = row_strides(as), bst = row_strides(bs);
    std::vector<int> midx(rank, 0);
    int ia = 0, ib = 0;
    for (int i = 0; i < total; ++i) {
      (*ia_idx)[i] = ia;
      (*ib_idx)[i] = ib;
      for (int d = static_cast<int>(rank) - 1; d >= 0; --d) {
        if (++midx[d] < os[d]) {
          if (as[d] != 1) ia += ast[d];
          if (bs[d] != 1) ib += bst[d];
          break;
        }
        midx[d] = 0;
        if (as[d] != 1) ia -= ast[d] * (os[d] - 1);
        if (bs[d] != 1) ib -= bst[d] * (os[d] - 1);
      }
    }
  }

  if (same) {
    for (int i = 0; i < total; ++i) out->value[i] = a->value[i] + b->value[i];
  } else {
    for (int i = 0; i < total; ++i) out->value[i] = a->value[(*ia_idx)[i]] + b->value[(*ib_idx)[i]];
  }

  if (grads_needed({a, b})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      if (a->requires_grad) a->ensure_grad();
      if (b->requires_grad) b->ensure_grad();
      if (same) {
        if (a->requires_grad)
          for (int i = 0; i < total; ++i) a->grad[i] += out->grad[i];
        if (b->requires_grad)
          for (int i = 0; i < total; ++i) b->grad[i] += out->grad[i];
        return;
      }
      if (a->requires_grad)
        for (int i = 0; i < total; ++i) a->grad[(*ia_idx)[i]] += out->grad[i];
      if (b->requires_grad)
        for (int i = 0; i < total; ++i) b->grad[(*ib_idx)[i]] += out->grad[i];
    });
  }
  return out;
}

TensorPtr Tape::scale(const TensorPtr& a, real s) {
  auto out = Tensor::create(a->shape);
  for (int i = 0; i < a->numel(); ++i) out->value[i] = a->value[i] * s;
  if (grads_needed({a})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      a->ensure_grad();
      for (int i = 0; i < a->numel(); ++i) a->grad[i] += out->grad[i] * s;
    });
  }
  return out;
}

TensorPtr Tape::transpose_last_two(const TensorPtr& a) {
  const Shape& s = a->shape;
  if (s.size() < 2) throw std::invalid_argument("transpose_last_two: rank < 2 " + shape_str(s));
  const int m = s[s.size() - 2];
  const int n = s[s.size() - 1];
  Shape os = s;
  std::swap(os[os.size() - 2], os[os.size() - 1]);
  auto out = Tensor::create(os);
  const int batches = a->numel() / (m * n);
  for (int b = 0; b < batches; ++b) {
    const real* src = a->value.data() + static_cast<size_t>(b) * m * n;
    real* dst = out->value.data() + static_cast<size_t>(b) * m * n;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
  }
  if (grads_needed({a})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      a->ensure_grad();
      for (int b = 0; b < batches; ++b) {
        const real* gsrc = out->grad.data() + static_cast<size_t>(b) * m * n;
        real* gdst = a->grad.data() + static_cast<size_t>(b) * m * n;
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) gdst[i * n + j] += gsrc[j * m + i];
      }
    });
  }
  return out;
}

TensorPtr Tape::swap_middle_dims(const TensorPtr& a) {
  const Shape& s = a->shape;
  if (s.size() != 4) throw std::invalid_argument("swap_middle_dims: need rank 4 " + shape_str(s));
  const int d0 = s[0], d1 = s[1], d2 = s[2], d3 = s[3];
  auto out = Tensor::create({d0, d2, d1, d3});
  auto idx_src = [=](int i, int j, int k, int l) {
    return ((static_cast<size_t>(i) * d1 + j) * d2 + k) * d3 + l;
  };
  auto idx_dst = [=](int i, int k, int j, int l) {
    return ((static_cast<size_t>(i) * d2 + k) * d1 + j) * d3 + l;
  };
  for (int i = 0; i < d0; ++i)
    for (int j = 0; j < d1; ++j)
      for (int k = 0; k < d2; ++k)
        for (int l = 0; l < d3; ++l)
          out->value[idx_dst(i, k, j, l)] = a->value[idx_src(i, j, k, l)];
  if (grads_needed({a})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      a->ensure_grad();
      for (int i = 0; i < d0; ++i)
        for (int j = 0; j < d1; ++j)
          for (int k = 0; k < d2; ++k)
            for (int l = 0; l < d3; ++l)
              a->grad[idx_src(i, j, k, l)] += out->grad[idx_dst(i, k, j, l)];
    });
  }
  return out;
}

TensorPtr Tape::embedding_lookup(const TensorPtr& table, const std::vector<int>& ids,
                                 Shape id_shape) {
  if (table->shape.size() != 2)
    throw std::invalid_argument("embedding_lookup: table must be 2D, got " +
                                shape_str(table->shape));
  if (static_cast<int>(ids.size()) != numel(id_shape))
    throw std::invalid_argument("embedding_lookup: ids length mismatch");
  const int vocab = table->shape[0];
  const int h = table->shape[1];
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab)
      throw std::out_of_range("embedding_lookup: id " + std::to_string(ids[i]) + " at position " +
                              std::to_string(i) + " outside vocab [0," + std::to_string(vocab) +
                              ")");
  }
  Shape os = id_shape;
  os.push_back(h);
  auto out = Tensor::create(os);
  for (size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(table->value.data() + static_cast<size_t>(ids[i]) * h, h,
                out->value.data() + i * h);
  }
  if (grads_needed({table})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      table->ensure_grad();
      for (size_t i = 0; i < ids.size(); ++i) {
        real* dst = table->grad.data() + static_cast<size_t>(ids[i]) * h;
        const real* src = out->grad.data() + i * h;
        for (int j = 0; j < h; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

TensorPtr Tape::softmax_last_dim(const TensorPtr& a) {
  const int n = a->shape.back();
  const int rows = a->numel() / n;
  auto out = Tensor::create(a->shape);
  for (int r = 0; r < rows; ++r) {
    const real* x = a->value.data() + static_cast<size_t>(r) * n;
    real* y = out->value.data() + static_cast<size_t>(r) * n;
    real mx = x[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    real sum = 0.0;
    for (int i = 0; i < n; ++i) {
      y[i] = std::exp(x[i] - mx);
      sum += y[i];
    }
    for (int i = 0; i < n; ++i) y[i] /= sum;
  }
  if (grads_needed({a})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      a->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        const real* y = out->value.data() + static_cast<size_t>(r) * n;
        const real* dy = out->grad.data() + static_cast<size_t>(r) * n;
        real* dx = a->grad.data() + static_cast<size_t>(r) * n;
        real dot = 0.0;
        for (int i = 0; i < n; ++i) dot += dy[i] * y[i];
        for (int i = 0; i < n; ++i) dx[i] += (dy[i] - dot) * y[i];
      }
    });
  }
  return out;
}

TensorPtr Tape::layer_norm(const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias,
                           real eps) {
  const int n = x->shape.back();
  check_shape_match("layer_norm gain", gain->shape, Shape{n});
  check_shape_match("layer_norm bias", bias->shape, Shape{n});
  const int rows = x->numel() / n;
  auto out = Tensor::create(x->shape);
  auto xhat = std::make_shared<std::vector<real>>(x->numel());
  auto inv_std = std::make_shared<std::vector<real>>(rows);
  for (int r = 0; r < rows; ++r) {
    const real* v = x->value.data() + static_cast<size_t>(r) * n;
    real mean = 0.0;
    for (int i = 0; i < n; ++i) mean += v[i];
    mean /= n;
    real var = 0.0;
    for (int i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
    var /= n;
    const real is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    real* xh = xhat->data() + static_cast<size_t>(r) * n;
    real* y = out->value.data() + static_cast<size_t>(r) * n;
    for (int i = 0; i < n; ++i) {
      xh[i] = (v[i] - mean) * is;
      y[i] = xh[i] * gain->value[i] + bias->value[i];
    }
  }
  if (grads_needed({x, gain, bias})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      if (x->requires_grad) x->ensure_grad();
      if (gain->requires_grad) gain->ensure_grad();
      if (bias->requires_grad) bias->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        const real* dy = out->grad.data() + static_cast<size_t>(r) * n;
        const real* xh = xhat->data() + static_cast<size_t>(r) * n;
        const real is = (*inv_std)[r];
        if (gain->requires_grad || bias->requires_grad) {
          for (int i = 0; i < n; ++i) {
            if (gain->requires_grad) gain->grad[i] += dy[i] * xh[i];
            if (bias->requires_grad) bias->grad[i] += dy[i];
          }
        }
        if (x->requires_grad) {
          real* dx = x->grad.data() + static_cast<size_t>(r) * n;
          real sum_g = 0.0, sum_gx = 0.0;
          for (int i = 0; i < n; ++i) {
            const real g = dy[i] * gain->value[i];
            sum_g += g;
            sum_gx += g * xh[i];
          }
          for (int i = 0; i < n; ++i) {
            const real g = dy[i] * gain->value[i];
            dx[i] += is * (g - sum_g / n - xh[i] * sum_gx / n);
          }
        }
      }
    });
  }
  return out;
}

TensorPtr Tape::gelu(const TensorPtr& a) {
  auto out = Tensor::create(a->shape);
  constexpr real inv_sqrt2 = 0.7071067811865475244;
  for (int i = 0; i < a->numel(); ++i) {
    const real x = a->value[i];
    out->value[i] = 0.5 * x * (1.0 + std::erf(x * inv_sqrt2));
  }
  if (grads_needed({a})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      a->ensure_grad();
      constexpr real inv_sqrt2pi = 0.3989422804014326779;
      for (int i = 0; i < a->numel(); ++i) {
        const real x = a->value[i];
        const real cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        const real pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
        a->grad[i] += out->grad[i] * (cdf + x * pdf);
      }
    });
  }
  return out;
}

TensorPtr Tape::tanh(const TensorPtr& a) {
  auto out = Tensor::create(a->shape);
  for (int i = 0; i < a->numel(); ++i) out->value[i] = std::tanh(a->value[i]);
  if (grads_needed({a})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      a->ensure_grad();
      for (int i = 0; i < a->numel(); ++i) {
        const real y = out->value[i];
        a->grad[i] += out->grad[i] * (1.0 - y * y);
      }
    });
  }
  return out;
}

TensorPtr Tape::dropout(const TensorPtr& a, real p, bool training, std::uint64_t seed) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0,1)");
  if (!training || p == 0.0) return a;  // identity, shares the input node
  auto mask = std::make_shared<std::vector<real>>(a->numel());
  std::mt19937_64 rng(seed);
  const real keep_scale = 1.0 / (1.0 - p);
  const std::uint64_t threshold =
      static_cast<std::uint64_t>(p * static_cast<real>(std::mt19937_64::max()));
  for (int i = 0; i < a->numel(); ++i)
    (*mask)[i] = (rng() < threshold) ? 0.0 : keep_scale;
  auto out = Tensor::create(a->shape);
  for (int i = 0; i < a->numel(); ++i) out->value[i] = a->value[i] * (*mask)[i];
  if (grads_needed({a})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      a->ensure_grad();
      for (int i = 0; i < a->numel(); ++i) a->grad[i] += out->grad[i] * (*mask)[i];
    });
  }
  return out;
}

TensorPtr Tape::reshape(const TensorPtr& a, Shape shape) {
  if (numel(shape) != a->numel())
    throw std::invalid_argument("reshape: cannot view " + shape_str(a->shape) + " as " +
                                shape_str(shape));
  auto out = Tensor::from(shape, a->value);
  if (grads_needed({a})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      a->ensure_grad();
      for (int i = 0; i < a->numel(); ++i) a->grad[i] += out->grad[i];
    });
  }
  return out;
}

TensorPtr Tape::concat_axis0(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_axis0: no inputs");
  Shape os = parts[0]->shape;
  int total0 = 0;
  for (const auto& p : parts) {
    if (!std::equal(p->shape.begin() + 1, p->shape.end(), os.begin() + 1, os.end()))
      throw std::invalid_argument("concat_axis0: trailing dims differ, " + shape_str(p->shape) +
                                  " vs " + shape_str(os));
    total0 += p->shape[0];
  }
  os[0] = total0;
  auto out = Tensor::create(os);
  size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p->value.begin(), p->value.end(), out->value.begin() + off);
    off += p->value.size();
  }
  bool need = false;
  if (recording_)
    for (const auto& p : parts) need = need || p->requires_grad;
  if (need) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      size_t o = 0;
      for (const auto& p : parts) {
        if (p->requires_grad) {
          p->ensure_grad();
          for (size_t i = 0; i < p->value.size(); ++i) p->grad[i] += out->grad[o + i];
        }
        o += p->value.size();
      }
    });
  }
  return out;
}

TensorPtr Tape::select_dim1(const TensorPtr& a, int index) {
  if (a->shape.size() < 2) throw std::invalid_argument("select_dim1: rank < 2");
  const int b = a->shape[0];
  const int t = a->shape[1];
  if (index < 0 || index >= t) throw std::out_of_range("select_dim1: index out of range");
  const int inner = a->numel() / (b * t);
  Shape os = {b};
  os.insert(os.end(), a->shape.begin() + 2, a->shape.end());
  auto out = Tensor::create(os);
  for (int i = 0; i < b; ++i) {
    std::copy_n(a->value.data() + (static_cast<size_t>(i) * t + index) * inner, inner,
                out->value.data() + static_cast<size_t>(i) * inner);
  }
  if (grads_needed({a})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      a->ensure_grad();
      for (int i = 0; i < b; ++i) {
        real* dst = a->grad.data() + (static_cast<size_t>(i) * t + index) * inner;
        const real* src = out->grad.data() + static_cast<size_t>(i) * inner;
        for (int j = 0; j < inner; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

TensorPtr Tape::cross_entropy(const TensorPtr& logits, const std::vector<int>& labels) {
  if (logits->shape.size() != 2)
    throw std::invalid_argument("cross_entropy: logits must be 2D, got " +
                                shape_str(logits->shape));
  const int b = logits->shape[0];
  const int c = logits->shape[1];
  if (static_cast<int>(labels.size()) != b)
    throw std::invalid_argument("cross_entropy: label count mismatch");
  auto probs = std::make_shared<std::vector<real>>(logits->value.size());
  real loss = 0.0;
  for (int i = 0; i < b; ++i) {
    if (labels[i] < 0 || labels[i] >= c)
      throw std::out_of_range("cross_entropy: label " + std::to_string(labels[i]) +
                              " outside [0," + std::to_string(c) + ")");
    const real* x = logits->value.data() + static_cast<size_t>(i) * c;
    real* p = probs->data() + static_cast<size_t>(i) * c;
    real mx = x[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, x[j]);
    real sum = 0.0;
    for (int j = 0; j < c; ++j) {
      p[j] = std::exp(x[j] - mx);
      sum += p[j];
    }
    for (int j = 0; j < c; ++j) p[j] /= sum;
    loss -= std::log(std::max(p[labels[i]], 1e-300));
  }
  auto out = Tensor::scalar(loss / b);
  if (grads_needed({logits})) {
    out->requires_grad = true;
    out->ensure_grad();
    record([=]() {
      logits->ensure_grad();
      const real g = out->grad[0] / b;
      for (int i = 0; i < b; ++i) {
        const real* p = probs->data() + static_cast<size_t>(i) * c;
        real* dx = logits->grad.data() + static_cast<size_t>(i) * c;
        for (int j = 0; j < c; ++j) dx[j] += g * (p[j] - (j == labels[i] ? 1.0 : 0.0));
      }
    });
  }
  return out;
}

void Tape::backward(const TensorPtr& loss) {
  if (!recording_) throw std::logic_error("backward: tape is not recording");
  if (consumed_) throw std::logic_error("backward: tape already consumed");
  if (loss->numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss->shape));
  consumed_ = true;
  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = back_.rbegin(); it != back_.rend(); ++it) (*it)();
  back_.clear();
}

}  // namespace ptk::nn
