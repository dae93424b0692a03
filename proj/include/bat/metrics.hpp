#pragma once

#include <cstdint>
#include <vector>

#include "bat/flow_io.hpp"
#include "bat/tensor.hpp"

namespace bat {

struct Metrics {
    double epe = 0.0;      // mean endpoint error, px
    double npe1 = 0.0;     // % of valid pixels with EPE > 1 px
    double npe2 = 0.0;
    double npe3 = 0.0;
    double ae = 0.0;       // mean angular error of (u, v, 1) vectors, degrees
    double pct_out = 0.0;  // % with EPE > 3 px and EPE > 5% of gt magnitude
};

// Empty mask means every pixel is valid; otherwise one byte per pixel.
Metrics compute_metrics(const FlowField& pred, const FlowField& gt,
                        const std::vector<uint8_t>& valid = {});

// 2×H×W tensor (channel 0 = u, 1 = v) <-> interleaved flow field.
Tensor flow_to_tensor(const FlowField& f);
FlowField tensor_to_flow(const Tensor& t, FlowResolution res = FlowResolution::Full);

// Σ_i γ^{K−i} · mean over valid pixels of (|du| + |dv|). preds are 2×H×W
// tensors ordered i = 1..K; gt matches; valid is a 1×H×W weight tensor
// (no gradient), empty meaning all-ones.
Tensor sequence_loss(const std::vector<Tensor>& preds, const Tensor& gt, const Tensor& valid,
                     double gamma);

}  // namespace bat
