#include "bat/backbone.hpp"

namespace bat {

namespace {

ResBlock make_block(ParamStore& store, const std::string& name, int cin, int cout, int stride,
                    bool norm) {
    ResBlock block;
    block.norm = norm;
    block.conv1 = make_conv(store, name + ".c1", cin, cout, 3, 3, stride);
    block.conv2 = make_conv(store, name + ".c2", cout, cout, 3, 3, 1);
    block.has_proj = stride != 1 || cin != cout;
    if (block.has_proj) block.proj = make_conv(store, name + ".proj", cin, cout, 1, 1, stride, 0, 0);
    return block;
}

Tensor block_forward(const ResBlock& block, const Tensor& x) {
    Tensor y = block.conv1(x);
    if (block.norm) y = instance_norm(y);
    y = relu(y);
    y = block.conv2(y);
    if (block.norm) y = instance_norm(y);
    Tensor skip = block.has_proj ? block.proj(x) : x;
    return relu(add(y, skip));
}

}  // namespace

BackboneNet make_backbone(ParamStore& store, const std::string& prefix, int in_ch, int out_ch,
                          int base_ch, bool norm) {
    BackboneNet net;
    net.norm = norm;
    net.stem = make_conv(store, prefix + ".stem", in_ch, base_ch, 7, 7, 1);
    const int c1 = base_ch, c2 = base_ch + base_ch / 2, c3 = 2 * base_ch;
    net.blocks.push_back(make_block(store, prefix + ".s1b0", c1, c1, 2, norm));
    net.blocks.push_back(make_block(store, prefix + ".s1b1", c1, c1, 1, norm));
    net.blocks.push_back(make_block(store, prefix + ".s2b0", c1, c2, 2, norm));
    net.blocks.push_back(make_block(store, prefix + ".s2b1", c2, c2, 1, norm));
    net.blocks.push_back(make_block(store, prefix + ".s3b0", c2, c3, 2, norm));
    net.blocks.push_back(make_block(store, prefix + ".s3b1", c3, c3, 1, norm));
    net.head = make_conv(store, prefix + ".head", c3, out_ch, 1, 1, 1, 0, 0);
    return net;
}

Tensor backbone_forward(const BackboneNet& net, const Tensor& x) {
    if (x.ndim() != 3) throw ShapeMismatch("backbone input must be C×H×W");
    if (x.dim(1) % 8 != 0 || x.dim(2) % 8 != 0)
        throw NotDivisibleByStride("backbone input dims must be divisible by 8");
    Tensor y = net.stem(x);
    if (net.norm) y = instance_norm(y);
    y = relu(y);
    for (const ResBlock& block : net.blocks) y = block_forward(block, y);
    return net.head(y);
}

std::vector<Tensor> extract_features(const BackboneNet& net, const std::vector<Tensor>& groups) {
    if (groups.empty()) throw ShapeMismatch("extract_features: no groups");
    for (const Tensor& g : groups)
        if (g.shape() != groups.front().shape())
            throw ShapeMismatch("extract_features: group shapes differ");
    std::vector<Tensor> feats;
    feats.reserve(groups.size());
    for (const Tensor& g : groups) feats.push_back(backbone_forward(net, g));
    return feats;
}

ContextState extract_context(const BackboneNet& net, const Tensor& frames, int context_dim,
                             int hidden_dim) {
    Tensor out = backbone_forward(net, frames);
    if (out.dim(0) != context_dim + hidden_dim)
        throw ShapeMismatch("context backbone output does not split into D_c + D_h");
    ContextState state;
    state.context = relu(slice0(out, 0, context_dim));
    state.hidden = tanh(slice0(out, context_dim, context_dim + hidden_dim));
    return state;
}

}  // namespace bat
