#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "apir/grid.hpp"

namespace apir {

// Real tensor [batch, feature, h, w]; batch is 1 throughout.
struct Tensor4 {
  int n = 1, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
    if (n_ < 1 || c_ < 1 || h_ < 1 || w_ < 1)
      throw DimensionError("tensor extents must be positive");
    data.assign(std::size_t(n_) * c_ * h_ * w_, 0.0);
  }

  std::size_t idx(int b, int f, int i, int j) const {
    return ((std::size_t(b) * c + f) * h + i) * w + j;
  }
  double& at(int b, int f, int i, int j) { return data[idx(b, f, i, j)]; }
  double at(int b, int f, int i, int j) const { return data[idx(b, f, i, j)]; }
  bool same_shape(const Tensor4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

enum class Activation { linear, relu };

struct ConvLayer {
  int in_features = 0;
  int out_features = 0;
  int k = 3;  // odd
  Activation act = Activation::linear;
  std::vector<double> weights;  // [out][in][k][k]
  std::vector<double> bias;     // [out]

  ConvLayer() = default;
  ConvLayer(int in, int out, int k_, Activation a);
  std::size_t weight_idx(int o, int c, int a, int b) const {
    return ((std::size_t(o) * in_features + c) * k + a) * k + b;
  }
  std::size_t param_count() const { return weights.size() + bias.size(); }
};

// Convolution with periodic (wrap-around) padding, spatial extents preserved,
// activation applied afterward.
Tensor4 conv2d_periodic(const Tensor4& x, const ConvLayer& layer);

// Sum of squared differences over mask==1 positions (mask broadcast over the
// feature axis), divided by (masked position count * feature count).
double masked_mse_loss(const Tensor4& pred, const Tensor4& target, const MaskGrid& mask);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-20;
  double lr = 1e-3;
  long t = 0;
  std::vector<double> m, v;

  AdamState() = default;
  explicit AdamState(std::size_t n_params)
      : m(n_params, 0.0), v(n_params, 0.0) {}
  void reset() {
    t = 0;
    std::fill(m.begin(), m.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
  }
};

// Bias-corrected Adam: p -= lr * mhat / (sqrt(vhat) + eps), eps outside the root.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state);
void set_learning_rate(AdamState& state, double lr);

// Fixed-chain convolutional network. forward_recorded keeps the per-layer
// trace needed by backward_masked_mse; plain forward is trace-free and const.
// With residual set the input is added to the final output (requires matching
// feature counts), giving A(x) = chain(x) + x.
class Network {
 public:
  std::vector<ConvLayer> layers;
  bool residual = false;

  Tensor4 forward(const Tensor4& x) const;
  const Tensor4& forward_recorded(const Tensor4& x);
  bool has_trace() const { return traced_; }

  // Gradient of masked_mse_loss(output, target, mask) with respect to every
  // parameter (param_vector layout) and optionally the input. Returns the
  // loss. Raises StateError unless forward_recorded ran first.
  double backward_masked_mse(const Tensor4& target, const MaskGrid& mask,
                             std::vector<double>& param_grads,
                             Tensor4* input_grad = nullptr);

  std::size_t param_count() const;
  std::vector<double> param_vector() const;
  void set_params(const std::vector<double>& p);

 private:
  std::vector<Tensor4> inputs_;   // per-layer inputs, inputs_[0] = x
  std::vector<Tensor4> preact_;   // per-layer pre-activations
  Tensor4 output_;
  bool traced_ = false;
};

}  // namespace apir
