#include "bat/satma.hpp"

namespace bat {

namespace {

Tensor identity_coords(int h, int w) {
    std::vector<double> data(static_cast<size_t>(2) * h * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            data[static_cast<size_t>(y) * w + x] = x;
            data[static_cast<size_t>(h) * w + static_cast<size_t>(y) * w + x] = y;
        }
    return Tensor::from({2, h, w}, std::move(data));
}

}  // namespace

SatmaNet make_satma(ParamStore& store, const ModelConfig& cfg) {
    const int dm = cfg.motion_dim;
    const int cc = cfg.corr_channels();
    SatmaNet net;
    net.attn_points = cfg.attn_points;
    net.attn_range = cfg.attn_range;
    net.enc_corr1 = make_conv(store, "satma.enc_corr1", cc, 2 * dm, 1, 1, 1, 0, 0);
    net.enc_corr2 = make_conv(store, "satma.enc_corr2", 2 * dm, dm + dm / 2, 3, 3, 1);
    net.enc_flow1 = make_conv(store, "satma.enc_flow1", 2, dm, 7, 7, 1);
    net.enc_flow2 = make_conv(store, "satma.enc_flow2", dm, dm / 2, 3, 3, 1);
    net.enc_out = make_conv(store, "satma.enc_out", 2 * dm, dm - 2, 3, 3, 1);
    net.attn = make_conv(store, "satma.attn", 2 * dm, 1, 3, 3, 1);
    net.q_proj = make_conv(store, "satma.q_proj", dm, dm, 1, 1, 1, 0, 0);
    net.k_proj = make_conv(store, "satma.k_proj", dm, dm, 1, 1, 1, 0, 0);
    net.v_proj = make_conv(store, "satma.v_proj", dm, dm, 1, 1, 1, 0, 0);
    net.off_dw = make_conv(store, "satma.off_dw", dm, dm, 5, 5, 1, -1, -1, false, dm);
    net.off_pw = make_conv(store, "satma.off_pw", dm, 2 * cfg.attn_points, 1, 1, 1, 0, 0);
    return net;
}

Tensor motion_encode(const SatmaNet& net, const Tensor& corr, const Tensor& flow) {
    if (corr.ndim() != 3 || flow.ndim() != 3 || flow.dim(0) != 2 || corr.dim(1) != flow.dim(1) ||
        corr.dim(2) != flow.dim(2))
        throw ShapeMismatch("motion_encode: corr C×H×W and flow 2×H×W must align");
    Tensor c = relu(net.enc_corr1(corr));
    c = relu(net.enc_corr2(c));
    Tensor f = relu(net.enc_flow1(flow));
    f = relu(net.enc_flow2(f));
    Tensor joint = relu(net.enc_out(concat0({c, f})));
    return concat0({joint, flow});
}

Tensor spatial_attention(const SatmaNet& net, const Tensor& m_target, const Tensor& m_adj) {
    if (m_target.shape() != m_adj.shape())
        throw ShapeMismatch("spatial_attention: motion features must match");
    return sigmoid(net.attn(concat0({m_target, m_adj})));
}

Tensor deformable_aggregate(const SatmaNet& net, const Tensor& m_adj, const Tensor& m_target,
                            Tensor* weights_out) {
    if (m_adj.shape() != m_target.shape())
        throw ShapeMismatch("deformable_aggregate: motion features must match");
    const int dm = m_adj.dim(0), h = m_adj.dim(1), w = m_adj.dim(2);
    const int k = net.attn_points;

    Tensor q = net.q_proj(m_adj);
    Tensor k_map = net.k_proj(m_target);
    Tensor v_map = net.v_proj(m_target);
    Tensor offsets = mul_scalar(tanh(net.off_pw(net.off_dw(m_adj))), net.attn_range);

    const Tensor base = identity_coords(h, w);
    std::vector<Tensor> k_samples, v_samples;
    k_samples.reserve(static_cast<size_t>(k));
    v_samples.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
        Tensor coords = add(base, slice0(offsets, 2 * i, 2 * i + 2));
        k_samples.push_back(reshape(bilinear_sample(k_map, coords), {1, dm, h, w}));
        v_samples.push_back(reshape(bilinear_sample(v_map, coords), {1, dm, h, w}));
    }
    return pointwise_attention(q, concat0(k_samples), concat0(v_samples), weights_out);
}

Tensor fuse(const Tensor& a_spa, const Tensor& m_agg, const Tensor& m_adj) {
    if (m_agg.shape() != m_adj.shape())
        throw ShapeMismatch("fuse: aggregated and adjacent features must match");
    return add(mul_spatial(m_agg, a_spa), m_adj);
}

Tensor aggregate_all(const SatmaNet& net, const std::vector<Tensor>& fwd,
                     const std::vector<Tensor>& bwd) {
    if (fwd.empty() && bwd.empty()) throw ListLengthMismatch("aggregate_all: no motion features");
    const Tensor& target = fwd.empty() ? bwd.front() : fwd.back();
    const bool target_in_fwd = !fwd.empty();

    auto satma_or_pass = [&](const Tensor& m, bool is_target) {
        if (is_target) return m;
        Tensor a = spatial_attention(net, target, m);
        Tensor agg = deformable_aggregate(net, m, target);
        return fuse(a, agg, m);
    };

    std::vector<Tensor> parts;
    parts.reserve(fwd.size() + bwd.size());
    for (size_t j = 0; j < fwd.size(); ++j)
        parts.push_back(satma_or_pass(fwd[j], target_in_fwd && j + 1 == fwd.size()));
    for (size_t j = 0; j < bwd.size(); ++j)
        parts.push_back(satma_or_pass(bwd[j], !target_in_fwd && j == 0));
    return concat0(parts);
}

}  // namespace bat
