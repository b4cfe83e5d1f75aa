#include "apir/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <utility>

namespace apir {

namespace {

int wrap_mod(int x, int m) { return ((x % m) + m) % m; }

// Wrap-padded copy of feature planes: each plane grows by p on every side,
// margins filled from the opposite border. Hot loops then index contiguously.
void build_padded(const double* x, int c, int h, int w, int p, std::vector<double>& pad) {
  const int ph = h + 2 * p, pw = w + 2 * p;
  pad.resize(std::size_t(c) * ph * pw);
  for (int f = 0; f < c; ++f) {
    for (int u = 0; u < ph; ++u) {
      const double* srow = x + (std::size_t(f) * h + wrap_mod(u - p, h)) * w;
      double* drow = pad.data() + (std::size_t(f) * ph + u) * pw;
      std::memcpy(drow + p, srow, std::size_t(w) * sizeof(double));
      for (int v = 0; v < p; ++v) drow[v] = srow[wrap_mod(v - p, w)];
      for (int v = p + w; v < pw; ++v) drow[v] = srow[wrap_mod(v - p, w)];
    }
  }
}

// Convolution without the activation; writes pre-activations into out.
void conv_linear(const Tensor4& x, const ConvLayer& L, Tensor4& out,
                 std::vector<double>& pad) {
  if (x.n != 1) throw DimensionError("batch must be 1");
  if (x.c != L.in_features)
    throw DimensionError("conv input has " + std::to_string(x.c) +
                         " features, layer expects " + std::to_string(L.in_features));
  const int h = x.h, w = x.w, k = L.k, p = (k - 1) / 2;
  const int pw = w + 2 * p;
  build_padded(x.data.data(), x.c, h, w, p, pad);

  if (out.n != 1 || out.c != L.out_features || out.h != h || out.w != w)
    out = Tensor4(1, L.out_features, h, w);
  for (int o = 0; o < L.out_features; ++o) {
    double* plane = out.data.data() + std::size_t(o) * h * w;
    std::fill(plane, plane + std::size_t(h) * w, L.bias[o]);
    for (int cf = 0; cf < L.in_features; ++cf) {
      const double* fpad = pad.data() + std::size_t(cf) * (h + 2 * p) * pw;
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
          const double wv = L.weights[L.weight_idx(o, cf, a, b)];
          for (int i = 0; i < h; ++i) {
            double* dst = plane + std::size_t(i) * w;
            const double* src = fpad + std::size_t(i + a) * pw + b;
            for (int j = 0; j < w; ++j) dst[j] += wv * src[j];
          }
        }
      }
    }
  }
}

void activate(Tensor4& t, Activation act) {
  if (act == Activation::relu)
    for (auto& v : t.data) v = v > 0.0 ? v : 0.0;
}

}  // namespace

ConvLayer::ConvLayer(int in, int out, int k_, Activation a)
    : in_features(in), out_features(out), k(k_), act(a) {
  if (in < 1 || out < 1) throw DimensionError("feature counts must be >= 1");
  if (k_ < 1 || k_ % 2 == 0) throw ValueError("kernel size must be odd and >= 1");
  weights.assign(std::size_t(out) * in * k_ * k_, 0.0);
  bias.assign(out, 0.0);
}

Tensor4 conv2d_periodic(const Tensor4& x, const ConvLayer& layer) {
  Tensor4 out;
  std::vector<double> pad;
  conv_linear(x, layer, out, pad);
  activate(out, layer.act);
  return out;
}

double masked_mse_loss(const Tensor4& pred, const Tensor4& target, const MaskGrid& mask) {
  if (!pred.same_shape(target))
    throw DimensionError("masked_mse_loss: tensor shapes differ");
  if (mask.n1 != pred.h || mask.n2 != pred.w)
    throw DimensionError("masked_mse_loss: mask extents do not match tensors");
  const std::size_t cnt = mask.popcount();
  if (cnt == 0) throw ValueError("masked_mse_loss: empty mask");

  double s = 0.0;
  for (int f = 0; f < pred.c; ++f) {
    for (int i = 0; i < pred.h; ++i) {
      for (int j = 0; j < pred.w; ++j) {
        if (!mask.on(i, j)) continue;
        double d = pred.at(0, f, i, j) - target.at(0, f, i, j);
        s += d * d;
      }
    }
  }
  return s / (double(cnt) * pred.c);
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& st) {
  if (params.size() != grads.size() || params.size() != st.m.size() ||
      params.size() != st.v.size())
    throw DimensionError("adam_step: parameter, gradient, and moment sizes differ");
  st.t += 1;
  const double b1 = st.beta1, b2 = st.beta2;
  const double c1 = 1.0 - std::pow(b1, double(st.t));
  const double c2 = 1.0 - std::pow(b2, double(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    st.m[i] = b1 * st.m[i] + (1.0 - b1) * g;
    st.v[i] = b2 * st.v[i] + (1.0 - b2) * g * g;
    const double mhat = st.m[i] / c1;
    const double vhat = st.v[i] / c2;
    params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

void set_learning_rate(AdamState& state, double lr) {
  if (lr <= 0.0) throw ValueError("learning rate must be positive");
  state.lr = lr;
}

Tensor4 Network::forward(const Tensor4& x) const {
  Tensor4 cur = x, next;
  std::vector<double> pad;
  for (const auto& L : layers) {
    conv_linear(cur, L, next, pad);
    activate(next, L.act);
    std::swap(cur, next);
  }
  if (residual) {
    if (!cur.same_shape(x))
      throw DimensionError("residual requires matching input/output shapes");
    for (std::size_t i = 0; i < cur.data.size(); ++i) cur.data[i] += x.data[i];
  }
  return cur;
}

const Tensor4& Network::forward_recorded(const Tensor4& x) {
  inputs_.assign(layers.size(), Tensor4());
  preact_.assign(layers.size(), Tensor4());
  std::vector<double> pad;
  Tensor4 cur = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    inputs_[l] = cur;
    conv_linear(cur, layers[l], preact_[l], pad);
    cur = preact_[l];
    activate(cur, layers[l].act);
  }
  if (residual) {
    if (!cur.same_shape(x))
      throw DimensionError("residual requires matching input/output shapes");
    for (std::size_t i = 0; i < cur.data.size(); ++i) cur.data[i] += x.data[i];
  }
  output_ = std::move(cur);
  traced_ = true;
  return output_;
}

double Network::backward_masked_mse(const Tensor4& target, const MaskGrid& mask,
                                    std::vector<double>& param_grads,
                                    Tensor4* input_grad) {
  if (!traced_) throw StateError("backward called before a recorded forward pass");
  const Tensor4& pred = output_;
  const double loss = masked_mse_loss(pred, target, mask);

  // d(loss)/d(pred): 2 (pred - target) / (count * features) on the mask.
  Tensor4 g(pred.n, pred.c, pred.h, pred.w);
  const double scale = 2.0 / (double(mask.popcount()) * pred.c);
  for (int f = 0; f < pred.c; ++f)
    for (int i = 0; i < pred.h; ++i)
      for (int j = 0; j < pred.w; ++j)
        if (mask.on(i, j))
          g.at(0, f, i, j) = scale * (pred.at(0, f, i, j) - target.at(0, f, i, j));

  param_grads.assign(param_count(), 0.0);
  Tensor4 residual_grad;
  if (residual) residual_grad = g;

  // Parameter slice offsets per layer (weights then bias, layer order).
  std::vector<std::size_t> offs(layers.size() + 1, 0);
  for (std::size_t l = 0; l < layers.size(); ++l)
    offs[l + 1] = offs[l] + layers[l].param_count();

  std::vector<double> xpad, gpad;
  Tensor4 gin;
  for (int l = int(layers.size()) - 1; l >= 0; --l) {
    const ConvLayer& L = layers[l];
    const Tensor4& x = inputs_[l];
    const Tensor4& z = preact_[l];
    const int h = x.h, w = x.w, k = L.k, p = (k - 1) / 2;
    const int ph = h + 2 * p, pw = w + 2 * p;

    if (L.act == Activation::relu) {
      for (std::size_t i = 0; i < g.data.size(); ++i)
        if (z.data[i] <= 0.0) g.data[i] = 0.0;
    }

    double* wgrad = param_grads.data() + offs[l];
    double* bgrad = wgrad + L.weights.size();

    // Bias: plain sums over each output plane.
    for (int o = 0; o < L.out_features; ++o) {
      const double* gp = g.data.data() + std::size_t(o) * h * w;
      double s = 0.0;
      for (std::size_t i = 0; i < std::size_t(h) * w; ++i) s += gp[i];
      bgrad[o] = s;
    }

    // Weights: correlate the output gradient with the padded input.
    build_padded(x.data.data(), x.c, h, w, p, xpad);
    for (int o = 0; o < L.out_features; ++o) {
      const double* gplane = g.data.data() + std::size_t(o) * h * w;
      for (int cf = 0; cf < L.in_features; ++cf) {
        const double* fpad = xpad.data() + std::size_t(cf) * ph * pw;
        for (int a = 0; a < k; ++a) {
          for (int b = 0; b < k; ++b) {
            double s = 0.0;
            for (int i = 0; i < h; ++i) {
              const double* grow = gplane + std::size_t(i) * w;
              const double* xrow = fpad + std::size_t(i + a) * pw + b;
              for (int j = 0; j < w; ++j) s += grow[j] * xrow[j];
            }
            wgrad[L.weight_idx(o, cf, a, b)] = s;
          }
        }
      }
    }

    // Input gradient: correlate the padded output gradient with the flipped
    // kernel. Skipped for the first layer unless the caller asked for it.
    if (l > 0 || input_grad != nullptr) {
      build_padded(g.data.data(), L.out_features, h, w, p, gpad);
      gin = Tensor4(1, L.in_features, h, w);
      for (int cf = 0; cf < L.in_features; ++cf) {
        double* plane = gin.data.data() + std::size_t(cf) * h * w;
        for (int o = 0; o < L.out_features; ++o) {
          const double* fpad = gpad.data() + std::size_t(o) * ph * pw;
          for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) {
              const double wv = L.weights[L.weight_idx(o, cf, a, b)];
              const int ra = k - 1 - a, rb = k - 1 - b;
              for (int i = 0; i < h; ++i) {
                double* dst = plane + std::size_t(i) * w;
                const double* src = fpad + std::size_t(i + ra) * pw + rb;
                for (int j = 0; j < w; ++j) dst[j] += wv * src[j];
              }
            }
          }
        }
      }
      g = std::move(gin);
    }
  }

  if (input_grad != nullptr) {
    if (residual)
      for (std::size_t i = 0; i < g.data.size(); ++i)
        g.data[i] += residual_grad.data[i];
    *input_grad = std::move(g);
  }
  return loss;
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const auto& L : layers) n += L.param_count();
  return n;
}

std::vector<double> Network::param_vector() const {
  std::vector<double> p;
  p.reserve(param_count());
  for (const auto& L : layers) {
    p.insert(p.end(), L.weights.begin(), L.weights.end());
    p.insert(p.end(), L.bias.begin(), L.bias.end());
  }
  return p;
}

void Network::set_params(const std::vector<double>& p) {
  if (p.size() != param_count())
    throw DimensionError("set_params: size mismatch");
  std::size_t k = 0;
  for (auto& L : layers) {
    std::copy(p.begin() + k, p.begin() + k + L.weights.size(), L.weights.begin());
    k += L.weights.size();
    std::copy(p.begin() + k, p.begin() + k + L.bias.size(), L.bias.begin());
    k += L.bias.size();
  }
  traced_ = false;  // stored trace no longer matches the parameters
}

}  // namespace apir
