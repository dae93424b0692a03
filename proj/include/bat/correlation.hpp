#pragma once

#include <vector>

#include "bat/config.hpp"
#include "bat/tensor.hpp"

namespace bat {

// Per-direction local correlation maps around the linearly scaled flow.
struct CorrSet {
    std::vector<Tensor> forward;   // j = 1..N, each corr_channels()×H×W
    std::vector<Tensor> backward;  // j = 1..N-1
    Tensor df;                     // flow / N, the shared warp step
    FlowMode mode = FlowMode::Bidirectional;
};

// Correlates f_ref with f_adj around p + scaled_flow: a (2r+1)² grid of
// bilinear samples spaced by alpha (a learnable 1-element tensor), each
// channel dot(F_ref(p), sample)/√D. Channel order is row-major over
// (dy, dx) ∈ [-r, r]². two_level appends the same grid over a 2× average
// pooled f_adj at halved centre coordinates.
Tensor corr_group(const Tensor& f_ref, const Tensor& f_adj, const Tensor& scaled_flow,
                  const Tensor& alpha, int radius, bool two_level);

// feats is 1-based conceptually: feats[0] = F_1. Bidirectional/forward-only
// expect 2N maps (past stream then future stream); backward-only expects the
// N past maps alone and touches nothing else.
CorrSet build_btc(const std::vector<Tensor>& feats, const Tensor& flow, const Tensor& alpha,
                  const ModelConfig& cfg);

}  // namespace bat
