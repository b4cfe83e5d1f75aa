#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "apir/grid.hpp"
#include "apir/masks.hpp"
#include "apir/nn.hpp"
#include "apir/signal.hpp"

namespace apir {

// Decreasing-width all-convolutional net on 2C real features: a 5x5 linear
// layer into widths[0], a 3x3 ReLU chain through the widths down to 2C, and a
// closing 5x5 linear layer at 2C. Default widths give depth 6 with four ReLU
// layers.
struct ArchitectureSpec {
  int n_coils = 8;
  std::vector<int> widths = {64, 48, 32, 24};
  bool residual = false;  // optional input->output skip
};

struct LevelSpec {
  int k1 = 0, k2 = 0;   // centered region extents
  double lr = 1e-3;
  int epochs = 0;
};

struct LevelSchedule {
  std::vector<LevelSpec> levels;  // regions nondecreasing; last = full grid
};

struct TrainRun {
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> loss_trace;  // per level, pre-update loss per epoch
  Network params;
  NormalizationRecord norm;
  double wall_seconds = 0.0;
  std::vector<Network> level_checkpoints;
};

Network build_network(const ArchitectureSpec& arch, std::uint64_t seed);

// Pattern-mask the input, stack re/im as 2C features (re_0..re_{C-1},
// im_0..im_{C-1}), run the network, restack to C complex channels. The raw
// network output is the completed k-space; no data-consistency replacement.
ComplexGrid forward_complete(const Network& net, const ComplexGrid& kspace,
                             const SamplingMasks& masks);

// Adam steps of the masked loss on the centered (k1, k2) crop. The loss per
// epoch is recorded before the update. Training is full-batch deterministic.
void train_level(Network& net, AdamState& opt, const ComplexGrid& kspace_norm,
                 const SamplingMasks& masks, int k1, int k2, double lr, int epochs,
                 std::vector<double>& trace);

TrainRun hierarchical_train(const ComplexGrid& kspace, const SamplingMasks& masks,
                            const ArchitectureSpec& arch, const LevelSchedule& sched,
                            std::uint64_t seed, bool reset_optimizer = false);

// hierarchical_train, forward_complete on the full grid, denormalize, then
// image formation. hard_dc optionally restores measured values afterward.
std::tuple<ComplexGrid, RealGrid, TrainRun> apirnet_reconstruct(
    const ComplexGrid& kspace, const SamplingMasks& masks,
    const ArchitectureSpec& arch, const LevelSchedule& sched, std::uint64_t seed,
    bool reset_optimizer = false, bool hard_dc = false);

}  // namespace apir
