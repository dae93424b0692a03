#pragma once

#include <vector>

#include "bat/config.hpp"
#include "bat/nn.hpp"
#include "bat/tensor.hpp"

namespace bat {

// One separable ConvGRU direction: gates and candidate over concat(h, x).
struct GruStage {
    Conv2d wz, wr, wh;
};

struct UpdaterNet {
    GruStage horiz;  // 1×5 kernels
    GruStage vert;   // 5×1 kernels
    Conv2d flow1, flow2;  // flow head; flow2 zero-initialized
    Conv2d mask1, mask2;  // convex upsample mask head (only when enabled)
    bool convex = false;
    int stride = 8;
};

UpdaterNet make_updater(ParamStore& store, const ModelConfig& cfg, int motion_channels);

// z = σ(Wz·[h,x]); r = σ(Wr·[h,x]); h̃ = tanh(Wh·[r⊙h, x]); h' = (1−z)⊙h + z⊙h̃.
Tensor convgru_stage(const GruStage& stage, const Tensor& h, const Tensor& x);

// Horizontal (1×5) then vertical (5×1) stage.
Tensor convgru_step(const UpdaterNet& net, const Tensor& h, const Tensor& x);

Tensor flow_head(const UpdaterNet& net, const Tensor& h);

// Bilinear spatial upsampling by s with value scaling by s (feature-pixel
// units -> image-pixel units). Constant fields stay constant exactly for
// power-of-two s.
Tensor upsample_flow(const Tensor& flow_low, int s);

}  // namespace bat
