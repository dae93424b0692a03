#pragma once

#include <vector>

#include "bat/config.hpp"
#include "bat/nn.hpp"
#include "bat/tensor.hpp"

namespace bat {

// Shared weights for motion encoding and spatially adaptive aggregation;
// one instance serves every group and every refinement iteration.
struct SatmaNet {
    Conv2d enc_corr1, enc_corr2;  // correlation branch
    Conv2d enc_flow1, enc_flow2;  // flow branch
    Conv2d enc_out;               // joint projection to D_m - 2 (flow re-appended)
    Conv2d attn;                  // spatial attention over concat(target, adj)
    Conv2d q_proj, k_proj, v_proj;
    Conv2d off_dw, off_pw;        // offset net: depthwise 5x5 then 1x1 -> 2k
    int attn_points = 9;
    double attn_range = 8.0;
};

SatmaNet make_satma(ParamStore& store, const ModelConfig& cfg);

// Eq-style motion encoder over one correlation map and the current flow.
Tensor motion_encode(const SatmaNet& net, const Tensor& corr, const Tensor& flow);

// sigmoid(conv(concat(M_target, M_adj))), single channel.
Tensor spatial_attention(const SatmaNet& net, const Tensor& m_target, const Tensor& m_adj);

// M_adj queries k bilinear samples of the projected M_target at learned
// offsets (tanh-bounded by ρ) around each pixel; softmax(QKᵀ/√D_m)·V.
// weights_out optionally receives the detached k×H×W attention weights.
Tensor deformable_aggregate(const SatmaNet& net, const Tensor& m_adj, const Tensor& m_target,
                            Tensor* weights_out = nullptr);

// M_fuse = A_spa ⊙ M_agg + M_adj.
Tensor fuse(const Tensor& a_spa, const Tensor& m_agg, const Tensor& m_adj);

// Applies SATMA between the target motion feature (last forward group, or
// the first backward group when no forward groups exist) and every other
// feature, then concatenates forward groups ascending followed by backward
// groups ascending. The target itself passes through unfused.
Tensor aggregate_all(const SatmaNet& net, const std::vector<Tensor>& fwd,
                     const std::vector<Tensor>& bwd);

}  // namespace bat
