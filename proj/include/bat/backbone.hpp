#pragma once

#include <vector>

#include "bat/config.hpp"
#include "bat/nn.hpp"
#include "bat/tensor.hpp"

namespace bat {

// One residual block: conv3x3(stride)-[norm]-relu-conv3x3-[norm], with a
// 1x1 projection skip when shape changes; relu after the sum.
struct ResBlock {
    Conv2d conv1, conv2;
    Conv2d proj;  // undefined weights when identity skip
    bool has_proj = false;
    bool norm = false;
};

// Stride-8 extractor: 7x7 stem, three stages of two residual blocks (each
// stage opens with stride 2), 1x1 output head.
struct BackboneNet {
    Conv2d stem;
    std::vector<ResBlock> blocks;
    Conv2d head;
    bool norm = false;
};

BackboneNet make_backbone(ParamStore& store, const std::string& prefix, int in_ch, int out_ch,
                          int base_ch, bool norm);

Tensor backbone_forward(const BackboneNet& net, const Tensor& x);

struct ContextState {
    Tensor context;  // D_c×H×W, rectified
    Tensor hidden;   // D_h×H×W, in (-1, 1)
};

// Shared-weight feature extractor applied to each group grid independently.
std::vector<Tensor> extract_features(const BackboneNet& net, const std::vector<Tensor>& groups);

// Splits the context backbone output into rectified context features and a
// tanh-bounded initial hidden state.
ContextState extract_context(const BackboneNet& net, const Tensor& frames, int context_dim,
                             int hidden_dim);

}  // namespace bat
