#include "bat/updater.hpp"

#include <algorithm>

namespace bat {

UpdaterNet make_updater(ParamStore& store, const ModelConfig& cfg, int motion_channels) {
    UpdaterNet net;
    net.convex = cfg.use_convex_upsample;
    net.stride = cfg.stride;
    const int dh = cfg.hidden_dim;
    const int din = dh + motion_channels + cfg.context_dim;
    auto stage = [&](const std::string& prefix, int kh, int kw) {
        GruStage s;
        s.wz = make_conv(store, prefix + ".wz", din, dh, kh, kw);
        s.wr = make_conv(store, prefix + ".wr", din, dh, kh, kw);
        s.wh = make_conv(store, prefix + ".wh", din, dh, kh, kw);
        return s;
    };
    net.horiz = stage("gru.h", 1, 5);
    net.vert = stage("gru.v", 5, 1);
    net.flow1 = make_conv(store, "head.flow1", dh, cfg.flow_head_dim, 3, 3, 1);
    net.flow2 = make_conv(store, "head.flow2", cfg.flow_head_dim, 2, 3, 3, 1, -1, -1, true);
    if (net.convex) {
        net.mask1 = make_conv(store, "head.mask1", dh, cfg.flow_head_dim, 3, 3, 1);
        net.mask2 = make_conv(store, "head.mask2", cfg.flow_head_dim, 9 * cfg.stride * cfg.stride,
                              1, 1, 1, 0, 0);
    }
    return net;
}

Tensor convgru_stage(const GruStage& stage, const Tensor& h, const Tensor& x) {
    if (h.ndim() != 3 || x.ndim() != 3 || h.dim(1) != x.dim(1) || h.dim(2) != x.dim(2))
        throw ShapeMismatch("convgru_stage: h and x must share spatial dims");
    Tensor hx = concat0({h, x});
    Tensor z = sigmoid(stage.wz(hx));
    Tensor r = sigmoid(stage.wr(hx));
    Tensor cand = tanh(stage.wh(concat0({mul(r, h), x})));
    Tensor keep = add_scalar(neg(z), 1.0);  // 1 - z
    return add(mul(keep, h), mul(z, cand));
}

Tensor convgru_step(const UpdaterNet& net, const Tensor& h, const Tensor& x) {
    return convgru_stage(net.vert, convgru_stage(net.horiz, h, x), x);
}

Tensor flow_head(const UpdaterNet& net, const Tensor& h) {
    return net.flow2(relu(net.flow1(h)));
}

Tensor upsample_flow(const Tensor& flow_low, int s) {
    if (s < 1) throw BadFactor("upsample_flow: factor must be >= 1");
    if (flow_low.ndim() != 3 || flow_low.dim(0) != 2)
        throw ShapeMismatch("upsample_flow: flow must be 2×H×W");
    if (s == 1) return flow_low;
    const int h = flow_low.dim(1), w = flow_low.dim(2);
    const int ho = h * s, wo = w * s;
    std::vector<double> coords(static_cast<size_t>(2) * ho * wo);
    // Pixel-centre mapping, clamped so border samples stay in bounds and
    // constant fields upsample to constant fields.
    for (int y = 0; y < ho; ++y)
        for (int x = 0; x < wo; ++x) {
            const double sx = std::clamp((x + 0.5) / s - 0.5, 0.0, static_cast<double>(w - 1));
            const double sy = std::clamp((y + 0.5) / s - 0.5, 0.0, static_cast<double>(h - 1));
            coords[static_cast<size_t>(y) * wo + x] = sx;
            coords[static_cast<size_t>(ho) * wo + static_cast<size_t>(y) * wo + x] = sy;
        }
    return mul_scalar(bilinear_sample(flow_low, Tensor::from({2, ho, wo}, std::move(coords))),
                      static_cast<double>(s));
}

}  // namespace bat
