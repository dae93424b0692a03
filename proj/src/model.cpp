#include "bat/model.hpp"

namespace bat {

Tensor voxel_to_tensor(const VoxelGrid& grid) {
    return Tensor::from({grid.bins, grid.height, grid.width}, grid.data);
}

BatModel::BatModel(const ModelConfig& cfg) : cfg_(cfg), store_(cfg.seed) {
    cfg_.validate();
    fnet_ = make_backbone(store_, "fnet", cfg_.bins_per_group(), cfg_.feat_dim,
                          cfg_.feat_dim / 2, true);
    cnet_ = make_backbone(store_, "cnet", cfg_.context_in_bins(),
                          cfg_.context_dim + cfg_.hidden_dim, cfg_.feat_dim / 2, false);
    satma_ = make_satma(store_, cfg_);
    updater_ = make_updater(store_, cfg_, cfg_.n_motion() * cfg_.motion_dim);
    alpha_ = store_.add_bounded("corr.alpha", Tensor::scalar(1.0), 1e-3);
}

ForwardResult BatModel::forward(const std::vector<Tensor>& groups_past,
                                const std::vector<Tensor>& groups_future, int iters,
                                bool detach_iters) const {
    if (iters < 1) throw BadConfig("forward requires at least one iteration");
    if (static_cast<int>(groups_past.size()) != cfg_.groups)
        throw ListLengthMismatch("forward: wrong past group count");
    const bool backward_only = cfg_.mode == FlowMode::BackwardOnly;
    if (backward_only) {
        if (!groups_future.empty())
            throw ListLengthMismatch("forward: backward-only mode takes no future groups");
    } else if (static_cast<int>(groups_future.size()) != cfg_.groups) {
        throw ListLengthMismatch("forward: wrong future group count");
    }

    std::vector<Tensor> all_groups = groups_past;
    all_groups.insert(all_groups.end(), groups_future.begin(), groups_future.end());
    const std::vector<Tensor> feats = extract_features(fnet_, all_groups);

    // Event frames for the context network: the last reference group plus
    // the whole target stream, or the full past stream without a target.
    std::vector<Tensor> ctx_parts;
    if (backward_only) {
        ctx_parts = groups_past;
    } else {
        ctx_parts.push_back(groups_past.back());
        ctx_parts.insert(ctx_parts.end(), groups_future.begin(), groups_future.end());
    }
    const ContextState ctx =
        extract_context(cnet_, concat0(ctx_parts), cfg_.context_dim, cfg_.hidden_dim);

    const int hf = feats.front().dim(1), wf = feats.front().dim(2);
    Tensor flow = Tensor::zeros({2, hf, wf});
    Tensor hidden = ctx.hidden;

    ForwardResult result;
    for (int it = 0; it < iters; ++it) {
        const Tensor f_it = detach_iters ? flow.detach() : flow;
        result.trace.flow_start.push_back(f_it.detach());

        const CorrSet corr = build_btc(feats, f_it, alpha_, cfg_);
        result.trace.df_used.push_back(corr.df.detach());

        std::vector<Tensor> m_fwd, m_bwd;
        for (const Tensor& c : corr.forward) m_fwd.push_back(motion_encode(satma_, c, f_it));
        for (const Tensor& c : corr.backward) m_bwd.push_back(motion_encode(satma_, c, f_it));
        const Tensor m_bid = aggregate_all(satma_, m_fwd, m_bwd);

        hidden = convgru_step(updater_, hidden, concat0({m_bid, ctx.context}));
        flow = add(f_it, flow_head(updater_, hidden));

        result.flows_low.push_back(flow);
        if (updater_.convex) {
            const Tensor mask = updater_.mask2(relu(updater_.mask1(hidden)));
            result.flows_full.push_back(convex_upsample(flow, mask, cfg_.stride));
        } else {
            result.flows_full.push_back(upsample_flow(flow, cfg_.stride));
        }
    }
    return result;
}

ForwardResult BatModel::infer(const EventStream& past, const EventStream& future, uint64_t t0,
                              uint64_t t_mid, uint64_t t1, int iters) const {
    const VoxelGrid v_past = voxelize(past, t0, t_mid, cfg_.bins);
    std::vector<Tensor> groups_past, groups_future;
    for (const VoxelGrid& g : split_groups(v_past, cfg_.groups))
        groups_past.push_back(voxel_to_tensor(g));
    if (cfg_.mode != FlowMode::BackwardOnly) {
        const VoxelGrid v_future = voxelize(future, t_mid, t1, cfg_.bins);
        for (const VoxelGrid& g : split_groups(v_future, cfg_.groups))
            groups_future.push_back(voxel_to_tensor(g));
    }
    return forward(groups_past, groups_future, iters);
}

}  // namespace bat
