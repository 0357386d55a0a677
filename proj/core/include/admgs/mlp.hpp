#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "admgs/errors.hpp"
#include "admgs/rng.hpp"
#include "admgs/tensor.hpp"

namespace admgs {

enum class Activation { None, ReLU };

template <class T>
T activate(Activation a, T z) {
  return a == Activation::ReLU ? (z > T(0) ? z : T(0)) : z;
}

template <class T>
T activate_derivative(Activation a, T z) {
  return a == Activation::ReLU ? (z > T(0) ? T(1) : T(0)) : T(1);
}

// Numerically safe heads used by the fields on top of raw MLP outputs.
template <class T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                   : std::exp(x) / (T(1) + std::exp(x));
}

template <class T>
T softplus(T x) {
  return x > T(20) ? x : std::log1p(std::exp(x));
}

template <class T>
T softplus_derivative(T x) {
  return sigmoid(x);
}

template <class T>
struct MlpLayer {
  Tensor<T> weight;  // out×in
  Tensor<T> bias;    // out×1
  Activation act = Activation::None;
};

// Widest layer (input or output) supported by the stack scratch buffers
// in the forward/backward kernels.
inline constexpr std::size_t kMlpMaxWidth = 256;

// Fully connected network. Hidden layers use ReLU, the last layer is
// linear; output nonlinearities live in the field wrappers.
template <class T>
struct Mlp {
  std::vector<MlpLayer<T>> layers;

  int input_dim() const { return int(layers.front().weight.cols); }
  int output_dim() const { return int(layers.back().weight.rows); }

  static Mlp make(const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw InvalidArgument("mlp: need at least one layer");
    for (int d : dims) {
      if (d <= 0 || std::size_t(d) > kMlpMaxWidth) {
        throw InvalidArgument("mlp: layer width out of supported range");
      }
    }
    Mlp m;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      MlpLayer<T> layer;
      layer.weight.resize(std::size_t(dims[l + 1]), std::size_t(dims[l]));
      layer.bias.resize(std::size_t(dims[l + 1]), 1);
      const double bound = std::sqrt(6.0 / double(dims[l] + dims[l + 1]));
      for (auto& w : layer.weight.v) w = T(rng.uniform(-bound, bound));
      layer.act =
          (l + 2 < dims.size()) ? Activation::ReLU : Activation::None;
      m.layers.push_back(std::move(layer));
    }
    return m;
  }

  void zero_final_layer() {
    auto& last = layers.back();
    std::fill(last.weight.v.begin(), last.weight.v.end(), T(0));
    std::fill(last.bias.v.begin(), last.bias.v.end(), T(0));
  }
  void set_final_bias(T value) {
    auto& last = layers.back();
    std::fill(last.bias.v.begin(), last.bias.v.end(), value);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }
};

// Records one forward pass: the input followed by every layer's
// pre-activation vector. One backward per forward.
template <class T>
struct MlpTape {
  std::vector<T> buf;
  std::size_t input_dim = 0;
  bool recorded = false;
  bool consumed = false;

  const T* input() const { return buf.data(); }
  // Pre-activations of layer l, given the owning network.
  const T* preact(const Mlp<T>& m, std::size_t l) const {
    std::size_t off = input_dim;
    for (std::size_t k = 0; k < l; ++k) off += m.layers[k].weight.rows;
    return buf.data() + off;
  }
};

// y = mlp(x); records the tape for the reverse pass. `out` must hold
// output_dim() values.
template <class T>
void mlp_forward(const Mlp<T>& m, const T* x, T* out, MlpTape<T>& tape) {
  const std::size_t in_dim = std::size_t(m.input_dim());
  std::size_t total = in_dim;
  for (const auto& l : m.layers) total += l.weight.rows;
  tape.buf.resize(total);
  tape.input_dim = in_dim;
  tape.recorded = true;
  tape.consumed = false;

  std::copy(x, x + in_dim, tape.buf.begin());
  T act[kMlpMaxWidth];
  std::copy(x, x + in_dim, act);

  std::size_t off = in_dim;
  for (const auto& layer : m.layers) {
    const std::size_t rows = layer.weight.rows, cols = layer.weight.cols;
    T* z = tape.buf.data() + off;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* wr = layer.weight.row(r);
      T acc = layer.bias.v[r];
      for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * act[c];
      z[r] = acc;
    }
    for (std::size_t r = 0; r < rows; ++r) act[r] = activate(layer.act, z[r]);
    off += rows;
  }
  std::copy(act, act + m.layers.back().weight.rows, out);
}

// Parameter-gradient accumulator mirroring an Mlp's layer shapes. Kept
// separate from the network so parallel chunks can accumulate privately
// and merge in a fixed order.
template <class T>
struct MlpGrad {
  std::vector<std::vector<T>> w, b;

  explicit MlpGrad(const Mlp<T>& m) {
    for (const auto& l : m.layers) {
      w.emplace_back(l.weight.size(), T(0));
      b.emplace_back(l.bias.size(), T(0));
    }
  }
  void clear() {
    for (auto& x : w) std::fill(x.begin(), x.end(), T(0));
    for (auto& x : b) std::fill(x.begin(), x.end(), T(0));
  }
  void merge(const MlpGrad& o) {
    for (std::size_t l = 0; l < w.size(); ++l) {
      for (std::size_t i = 0; i < w[l].size(); ++i) w[l][i] += o.w[l][i];
      for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] += o.b[l][i];
    }
  }
  // Flush into the network's own .g accumulators.
  void add_to(Mlp<T>& m) const {
    for (std::size_t l = 0; l < w.size(); ++l) {
      for (std::size_t i = 0; i < w[l].size(); ++i) m.layers[l].weight.g[i] += w[l][i];
      for (std::size_t i = 0; i < b[l].size(); ++i) m.layers[l].bias.g[i] += b[l][i];
    }
  }
};

// Exact reverse pass. `out_bar` has output_dim() entries; input adjoints
// are accumulated into x_bar (when non-null) and parameter adjoints into
// `grads`. Throws if the tape was never recorded or already consumed.
template <class T>
void mlp_backward(const Mlp<T>& m, MlpTape<T>& tape, const T* out_bar,
                  T* x_bar, MlpGrad<T>& grads) {
  if (!tape.recorded) {
    throw ContractViolation("mlp_backward: tape has no recorded forward pass");
  }
  if (tape.consumed) {
    throw ContractViolation("mlp_backward: tape already consumed");
  }
  tape.consumed = true;

  const std::size_t n_layers = m.layers.size();
  T delta[kMlpMaxWidth];
  T next[kMlpMaxWidth];
  T a[kMlpMaxWidth];
  std::size_t delta_len = std::size_t(m.output_dim());
  std::copy(out_bar, out_bar + delta_len, delta);

  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& layer = m.layers[li];
    const std::size_t rows = layer.weight.rows, cols = layer.weight.cols;
    const T* z = tape.preact(m, li);
    // δ = out̄ ⊙ act'(z)
    for (std::size_t r = 0; r < rows; ++r) {
      delta[r] *= activate_derivative(layer.act, z[r]);
    }
    // Input activations of this layer.
    if (li == 0) {
      std::copy(tape.input(), tape.input() + cols, a);
    } else {
      const auto& prev = m.layers[li - 1];
      const T* zp = tape.preact(m, li - 1);
      for (std::size_t c = 0; c < cols; ++c) a[c] = activate(prev.act, zp[c]);
    }
    // W̄ += δ aᵀ, b̄ += δ; x̄ = Wᵀ δ.
    auto& wg = grads.w[li];
    auto& bg = grads.b[li];
    std::fill(next, next + cols, T(0));
    for (std::size_t r = 0; r < rows; ++r) {
      const T d = delta[r];
      bg[r] += d;
      if (d == T(0)) continue;
      T* wrow = wg.data() + r * cols;
      const T* wr = layer.weight.row(r);
      for (std::size_t c = 0; c < cols; ++c) {
        wrow[c] += d * a[c];
        next[c] += wr[c] * d;
      }
    }
    std::copy(next, next + cols, delta);
    delta_len = cols;
  }
  if (x_bar) {
    for (std::size_t c = 0; c < delta_len; ++c) x_bar[c] += delta[c];
  }
}

}  // namespace admgs
