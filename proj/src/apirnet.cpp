#include "apir/apirnet.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "apir/rng.hpp"

namespace apir {

namespace {

void check_arch(const ArchitectureSpec& arch) {
  if (arch.n_coils < 1) throw ValueError("n_coils must be >= 1");
  if (arch.widths.empty()) throw ValueError("widths must be nonempty");
  for (std::size_t i = 0; i < arch.widths.size(); ++i) {
    if (arch.widths[i] < 1) throw ValueError("widths must be positive");
    if (i > 0 && arch.widths[i] >= arch.widths[i - 1])
      throw ValueError("widths must be strictly decreasing");
  }
  if (arch.widths.back() <= 2 * arch.n_coils)
    throw ValueError("last width must exceed the 2C feature count");
}

Tensor4 stack_features(const ComplexGrid& g) {
  const int C = g.channels;
  Tensor4 t(1, 2 * C, g.n1, g.n2);
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < g.n1; ++i) {
      for (int j = 0; j < g.n2; ++j) {
        const cdouble z = g.at(c, 0, i, j);
        t.at(0, c, i, j) = z.real();
        t.at(0, C + c, i, j) = z.imag();
      }
    }
  }
  return t;
}

ComplexGrid unstack_features(const Tensor4& t, Domain d) {
  if (t.c % 2 != 0) throw DimensionError("feature count must be even");
  const int C = t.c / 2;
  ComplexGrid g(C, 1, t.h, t.w, d);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < t.h; ++i)
      for (int j = 0; j < t.w; ++j)
        g.at(c, 0, i, j) = cdouble(t.at(0, c, i, j), t.at(0, C + c, i, j));
  return g;
}

void require_2d(const ComplexGrid& g, const char* what) {
  if (g.nf != 1)
    throw DimensionError(std::string(what) + " supports single-slice 2D grids only");
}

}  // namespace

Network build_network(const ArchitectureSpec& arch, std::uint64_t seed) {
  check_arch(arch);
  const int io = 2 * arch.n_coils;

  Network net;
  net.residual = arch.residual;
  net.layers.emplace_back(io, arch.widths.front(), 5, Activation::linear);
  for (std::size_t i = 1; i < arch.widths.size(); ++i)
    net.layers.emplace_back(arch.widths[i - 1], arch.widths[i], 3, Activation::relu);
  net.layers.emplace_back(arch.widths.back(), io, 3, Activation::relu);
  net.layers.emplace_back(io, io, 5, Activation::linear);

  Rng rng(seed);
  for (auto& L : net.layers) {
    for (auto& w : L.weights) w = rng.uniform(-0.05, 0.05);
    for (auto& b : L.bias) b = rng.uniform(-0.05, 0.05);
  }
  return net;
}

ComplexGrid forward_complete(const Network& net, const ComplexGrid& kspace,
                             const SamplingMasks& masks) {
  require_2d(kspace, "forward_complete");
  if (net.layers.empty()) throw StateError("network has no layers");
  if (net.layers.front().in_features != 2 * kspace.channels)
    throw DimensionError("network expects " +
                         std::to_string(net.layers.front().in_features / 2) +
                         " coil channels, grid has " +
                         std::to_string(kspace.channels));
  const ComplexGrid pin = apply_mask(kspace, masks.m_pattern);
  const Tensor4 out = net.forward(stack_features(pin));
  return unstack_features(out, Domain::kspace);
}

void train_level(Network& net, AdamState& opt, const ComplexGrid& kspace_norm,
                 const SamplingMasks& masks, int k1, int k2, double lr, int epochs,
                 std::vector<double>& trace) {
  require_2d(kspace_norm, "train_level");
  if (epochs < 0) throw ValueError("epochs must be >= 0");
  const ComplexGrid sc = crop_centered(kspace_norm, k1, k2);
  const SamplingMasks mc = crop_centered(masks, k1, k2);
  if (mc.m_sampled.popcount() == 0)
    throw ValueError("region has no sampled positions");

  const Tensor4 input = stack_features(apply_mask(sc, mc.m_pattern));
  const Tensor4 target = stack_features(sc);
  set_learning_rate(opt, lr);

  std::vector<double> params = net.param_vector();
  std::vector<double> grads;
  for (int e = 0; e < epochs; ++e) {
    net.forward_recorded(input);
    const double loss = net.backward_masked_mse(target, mc.m_sampled, grads);
    if (!std::isfinite(loss))
      throw ValueError("training diverged at epoch " + std::to_string(e) +
                       " (loss is not finite)");
    trace.push_back(loss);
    adam_step(params, grads, opt);
    net.set_params(params);
  }
}

TrainRun hierarchical_train(const ComplexGrid& kspace, const SamplingMasks& masks,
                            const ArchitectureSpec& arch, const LevelSchedule& sched,
                            std::uint64_t seed, bool reset_optimizer) {
  require_2d(kspace, "hierarchical_train");
  if (sched.levels.empty()) throw ValueError("schedule has no levels");
  for (std::size_t l = 0; l < sched.levels.size(); ++l) {
    const auto& lv = sched.levels[l];
    if (lv.k1 < 1 || lv.k2 < 1 || lv.k1 > kspace.n1 || lv.k2 > kspace.n2)
      throw DimensionError("level " + std::to_string(l + 1) +
                           " region does not fit the grid");
    if (l > 0 && (lv.k1 < sched.levels[l - 1].k1 || lv.k2 < sched.levels[l - 1].k2))
      throw ValueError("level regions must be nondecreasing");
    if (lv.epochs < 0) throw ValueError("epochs must be >= 0");
    if (lv.lr <= 0) throw ValueError("learning rate must be positive");
  }
  if (sched.levels.back().k1 != kspace.n1 || sched.levels.back().k2 != kspace.n2)
    throw ValueError("last level region must cover the full grid");

  const auto t0 = std::chrono::steady_clock::now();
  auto [norm, rec] = normalize(kspace, masks.m_sampled);

  TrainRun run;
  run.seed = seed;
  run.norm = rec;
  run.params = build_network(arch, seed);

  AdamState opt(run.params.param_count());
  for (const auto& lv : sched.levels) {
    if (reset_optimizer) opt.reset();
    run.loss_trace.emplace_back();
    train_level(run.params, opt, norm, masks, lv.k1, lv.k2, lv.lr, lv.epochs,
                run.loss_trace.back());
    run.level_checkpoints.push_back(run.params);
  }
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

std::tuple<ComplexGrid, RealGrid, TrainRun> apirnet_reconstruct(
    const ComplexGrid& kspace, const SamplingMasks& masks,
    const ArchitectureSpec& arch, const LevelSchedule& sched, std::uint64_t seed,
    bool reset_optimizer, bool hard_dc) {
  TrainRun run = hierarchical_train(kspace, masks, arch, sched, seed, reset_optimizer);
  auto [norm, rec] = normalize(kspace, masks.m_sampled);
  ComplexGrid completed =
      denormalize(forward_complete(run.params, norm, masks), rec);
  if (hard_dc) {
    for (int i = 0; i < kspace.n1; ++i)
      for (int j = 0; j < kspace.n2; ++j)
        if (masks.m_sampled.on(i, j))
          for (int c = 0; c < kspace.channels; ++c)
            completed.at(c, 0, i, j) = kspace.at(c, 0, i, j);
  }
  RealGrid image = reconstruct_image(completed);
  return {std::move(completed), std::move(image), std::move(run)};
}

}  // namespace apir
