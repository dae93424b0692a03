#include "bat/config.hpp"

namespace bat {

FlowMode parse_flow_mode(const std::string& name) {
    if (name == "bidirectional") return FlowMode::Bidirectional;
    if (name == "forward-only") return FlowMode::ForwardOnly;
    if (name == "backward-only") return FlowMode::BackwardOnly;
    throw BadMode("unknown flow mode '" + name + "'");
}

std::string to_string(FlowMode mode) {
    switch (mode) {
        case FlowMode::Bidirectional: return "bidirectional";
        case FlowMode::ForwardOnly: return "forward-only";
        case FlowMode::BackwardOnly: return "backward-only";
    }
    throw BadMode("invalid flow mode value");
}

void ModelConfig::validate() const {
    if (groups < 1) throw BadConfig("groups must be >= 1");
    if (bins < 2) throw BadConfig("bins must be >= 2");
    if (bins % groups != 0) throw NotDivisible("bins must be divisible by groups");
    if (stride != 8) throw BadConfig("backbone downsamples by exactly 8");
    if (radius < 0) throw BadConfig("radius must be >= 0");
    if (attn_points < 1) throw BadConfig("attn_points must be >= 1");
    if (attn_range <= 0.0) throw BadConfig("attn_range must be > 0");
    if (feat_dim < 4 || feat_dim % 4 != 0) throw BadConfig("feat_dim must be a positive multiple of 4");
    if (motion_dim < 4 || motion_dim % 2 != 0) throw BadConfig("motion_dim must be even and >= 4");
    if (context_dim < 1 || hidden_dim < 1 || flow_head_dim < 1)
        throw BadConfig("context/hidden/flow-head dims must be positive");
    if (mode == FlowMode::BackwardOnly && groups < 2)
        throw BadConfig("backward-only mode needs at least 2 groups");
}

ModelConfig ModelConfig::tiny() {
    ModelConfig cfg;
    cfg.feat_dim = 64;
    cfg.motion_dim = 64;
    cfg.context_dim = 96;
    cfg.hidden_dim = 96;
    cfg.flow_head_dim = 128;
    return cfg;
}

ModelConfig ModelConfig::full() { return ModelConfig{}; }

ModelConfig parse_model_preset(const std::string& name) {
    if (name == "tiny") return ModelConfig::tiny();
    if (name == "full") return ModelConfig::full();
    throw BadConfig("unknown model preset '" + name + "'");
}

}  // namespace bat
