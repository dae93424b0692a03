#pragma once

#include <vector>

#include "bat/backbone.hpp"
#include "bat/config.hpp"
#include "bat/correlation.hpp"
#include "bat/nn.hpp"
#include "bat/satma.hpp"
#include "bat/tensor.hpp"
#include "bat/updater.hpp"
#include "bat/voxel.hpp"

namespace bat {

// Detached per-iteration internals for invariant checks.
struct IterationTrace {
    std::vector<Tensor> flow_start;  // f entering the iteration (low-res)
    std::vector<Tensor> df_used;     // the warp step the correlation consumed
};

struct ForwardResult {
    std::vector<Tensor> flows_full;  // K full-resolution 2×H0×W0 fields
    std::vector<Tensor> flows_low;   // K low-resolution fields
    IterationTrace trace;
};

Tensor voxel_to_tensor(const VoxelGrid& grid);

// Full pipeline: shared-weight features over the temporal groups,
// bidirectional temporal correlation, SATMA, dual ConvGRU refinement.
class BatModel {
  public:
    explicit BatModel(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    Tensor alpha() const { return alpha_; }

    // groups_past: the N reference-stream groups; groups_future: the N
    // target-stream groups (must be empty in backward-only mode).
    // detach_iters = false keeps the whole K-step graph differentiable
    // (used by finite-difference verification).
    ForwardResult forward(const std::vector<Tensor>& groups_past,
                          const std::vector<Tensor>& groups_future, int iters,
                          bool detach_iters = true) const;

    // Convenience: voxelize + split + forward for one sample.
    ForwardResult infer(const EventStream& past, const EventStream& future, uint64_t t0,
                        uint64_t t_mid, uint64_t t1, int iters) const;

  private:
    ModelConfig cfg_;
    ParamStore store_;
    BackboneNet fnet_;
    BackboneNet cnet_;
    SatmaNet satma_;
    UpdaterNet updater_;
    Tensor alpha_;
};

}  // namespace bat
