#include "bat/correlation.hpp"

#include <cmath>

namespace bat {

namespace {

// Pixel-centre coordinates (channel 0 = x, channel 1 = y) of an H×W grid.
Tensor identity_coords(int h, int w) {
    std::vector<double> data(static_cast<size_t>(2) * h * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            data[static_cast<size_t>(y) * w + x] = x;
            data[static_cast<size_t>(h) * w + static_cast<size_t>(y) * w + x] = y;
        }
    return Tensor::from({2, h, w}, std::move(data));
}

Tensor const_offset(double dx, double dy, int h, int w) {
    std::vector<double> data(static_cast<size_t>(2) * h * w);
    const size_t plane = static_cast<size_t>(h) * w;
    std::fill(data.begin(), data.begin() + plane, dx);
    std::fill(data.begin() + plane, data.end(), dy);
    return Tensor::from({2, h, w}, std::move(data));
}

}  // namespace

Tensor corr_group(const Tensor& f_ref, const Tensor& f_adj, const Tensor& scaled_flow,
                  const Tensor& alpha, int radius, bool two_level) {
    if (f_ref.ndim() != 3 || f_ref.shape() != f_adj.shape())
        throw ShapeMismatch("corr_group: feature maps must share a D×H×W shape");
    const int d = f_ref.dim(0), h = f_ref.dim(1), w = f_ref.dim(2);
    if (scaled_flow.ndim() != 3 || scaled_flow.dim(0) != 2 || scaled_flow.dim(1) != h ||
        scaled_flow.dim(2) != w)
        throw ShapeMismatch("corr_group: flow must be 2×H×W at feature resolution");
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    const Tensor centre = add(identity_coords(h, w), scaled_flow);
    std::vector<Tensor> channels;
    channels.reserve(static_cast<size_t>((2 * radius + 1) * (2 * radius + 1)) * (two_level ? 2 : 1));

    auto level = [&](const Tensor& target, const Tensor& centre_l) {
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx) {
                Tensor coords = (dx == 0 && dy == 0)
                                    ? centre_l
                                    : add(centre_l, scale_by(const_offset(dx, dy, h, w), alpha));
                channels.push_back(dot_channels(f_ref, bilinear_sample(target, coords)));
            }
    };
    level(f_adj, centre);
    if (two_level) level(avg_pool2d(f_adj, 2), mul_scalar(centre, 0.5));

    return mul_scalar(concat0(channels), inv_sqrt_d);
}

CorrSet build_btc(const std::vector<Tensor>& feats, const Tensor& flow, const Tensor& alpha,
                  const ModelConfig& cfg) {
    const int n = cfg.groups;
    const size_t expected =
        cfg.mode == FlowMode::BackwardOnly ? static_cast<size_t>(n) : static_cast<size_t>(2 * n);
    if (feats.size() != expected)
        throw ListLengthMismatch("build_btc: expected " + std::to_string(expected) +
                                 " feature maps, got " + std::to_string(feats.size()));

    CorrSet set;
    set.mode = cfg.mode;
    set.df = mul_scalar(flow, 1.0 / static_cast<double>(n));
    const Tensor& f_ref = feats[static_cast<size_t>(n - 1)];  // F_N

    if (cfg.mode != FlowMode::BackwardOnly) {
        for (int j = 1; j <= n; ++j)
            set.forward.push_back(corr_group(f_ref, feats[static_cast<size_t>(n - 1 + j)],
                                             mul_scalar(set.df, static_cast<double>(j)), alpha,
                                             cfg.radius, cfg.corr_two_level));
    }
    if (cfg.mode != FlowMode::ForwardOnly) {
        for (int j = 1; j <= n - 1; ++j)
            set.backward.push_back(corr_group(f_ref, feats[static_cast<size_t>(n - 1 - j)],
                                              mul_scalar(set.df, static_cast<double>(-j)), alpha,
                                              cfg.radius, cfg.corr_two_level));
    }
    return set;
}

}  // namespace bat
