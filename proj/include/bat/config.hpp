#pragma once

#include <cstdint>
#include <string>

#include "bat/errors.hpp"

namespace bat {

// Which correlation directions the model computes. BackwardOnly predicts the
// flow of the upcoming interval from past events alone.
enum class FlowMode { Bidirectional, ForwardOnly, BackwardOnly };

FlowMode parse_flow_mode(const std::string& name);
std::string to_string(FlowMode mode);

struct ModelConfig {
    int feat_dim = 128;       // D: feature channels per group
    int motion_dim = 128;     // D_m: motion feature channels
    int context_dim = 128;    // D_c
    int hidden_dim = 128;     // D_h
    int flow_head_dim = 256;
    int stride = 8;           // s: backbone downsample factor
    int groups = 3;           // N: temporal groups per stream
    int bins = 15;            // B: voxel bins per stream
    int radius = 2;           // r: correlation grid radius
    int attn_points = 9;      // k: deformable attention samples
    double attn_range = 8.0;  // ρ: offset bound in feature pixels
    FlowMode mode = FlowMode::Bidirectional;
    bool corr_two_level = false;   // add an avg-pooled second correlation level
    bool use_convex_upsample = false;
    uint64_t seed = 0;

    int bins_per_group() const { return bins / groups; }
    int corr_channels() const {
        const int per = (2 * radius + 1) * (2 * radius + 1);
        return corr_two_level ? 2 * per : per;
    }
    int n_forward() const { return mode == FlowMode::BackwardOnly ? 0 : groups; }
    int n_backward() const { return mode == FlowMode::ForwardOnly ? 0 : groups - 1; }
    int n_motion() const { return n_forward() + n_backward(); }
    // Channels of the voxel frames fed to the context network: the last
    // reference group plus all target groups, or the whole past stream when
    // no target stream exists.
    int context_in_bins() const {
        return mode == FlowMode::BackwardOnly ? bins : (groups + 1) * bins_per_group();
    }

    void validate() const;

    static ModelConfig tiny();
    static ModelConfig full();
};

ModelConfig parse_model_preset(const std::string& name);

}  // namespace bat
