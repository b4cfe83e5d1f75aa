#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apir/apirnet.hpp"
#include "apir/grappa.hpp"
#include "apir/grid.hpp"
#include "apir/masks.hpp"

namespace apir {

enum class Method { zero_filled, grappa, apirnet };

struct MethodSpec {
  Method method = Method::zero_filled;
  GrappaGeometry geom;                  // grappa
  double lambda = 0.0;                  // grappa
  ArchitectureSpec arch;                // apirnet
  LevelSchedule schedule;               // apirnet
  bool reset_optimizer = false;         // apirnet
  std::string name() const;
};

struct ReplicaConfig {
  int n_replicas = 50;
  double sigma = 0.05;
  std::uint64_t base_seed = 1;
  std::uint64_t seed_stride = 1;  // 0 forces identical replicas
  int threads = 1;  // replicas run in parallel; accumulation stays in replica order
  MethodSpec method;
};

struct NoiseMap {
  RealGrid std_map;        // per-pixel std of the method reconstructions
  RealGrid amplification;  // std_map / reference_std (0 where reference is 0)
  RealGrid mean_image;     // replica mean of the method reconstructions
  RealGrid reference_std;  // per-pixel std of the fully-sampled reference
};

// Numerically stable streaming mean/variance accumulator over grids.
class WelfordGrid {
 public:
  void add(const RealGrid& x);
  long count() const { return n_; }
  const RealGrid& mean() const { return mean_; }
  RealGrid std_sample() const;  // sqrt(m2 / (n - 1)), needs n >= 2
 private:
  long n_ = 0;
  RealGrid mean_, m2_;
};

// Pseudo multiple replica evaluation. kspace is the clean, fully sampled
// k-space; per replica a full-grid noise field is drawn (seed base + r*stride,
// r = 1..n) so the subsampled method input and the fully-sampled reference
// share identical draws at acquired positions. GRAPPA weights are calibrated
// once on the clean subsampled data, keeping that method linear in the noise;
// APIR-Net retrains per replica (train seed = noise seed + 1000003).
NoiseMap run_replicas(const ComplexGrid& kspace, const SamplingMasks& masks,
                      const ReplicaConfig& cfg);

struct MethodReport {
  std::string name;
  double mse_full = 0.0;
  double mse_support = 0.0;
  double mean_amplification = 0.0;  // spatial mean over support (or all pixels)
  double max_amplification = 0.0;
  RealGrid recon;
  RealGrid error_image;  // |recon - reference|
  NoiseMap noise;        // empty when replicas were skipped
  bool has_noise = false;
};

// Reconstruct the acquired data with each method, compare against the
// reference image, and (n_replicas >= 2) attach replica noise maps computed
// from the clean k-space. Writes report.json plus per-method grids and 16-bit
// grayscale images under out_dir when it is nonempty.
std::vector<MethodReport> compare_methods(
    const ComplexGrid& kspace_acquired, const ComplexGrid& kspace_clean,
    const SamplingMasks& masks, const RealGrid& reference, const MaskGrid& support,
    const std::vector<MethodSpec>& methods, const ReplicaConfig& replica_base,
    const std::string& out_dir, double error_gain = 5.0);

}  // namespace apir
