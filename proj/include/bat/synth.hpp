#pragma once

#include <cstdint>
#include <vector>

#include "bat/events.hpp"
#include "bat/flow_io.hpp"

namespace bat {

enum class TextureKind { Checkerboard, RandomBandlimited, Bar };

TextureKind parse_texture_kind(const std::string& name);

// A translating log-intensity texture observed by an ideal event camera with
// contrast threshold C. Velocity is in pixels per interval dt_us; `accel`
// adds an affine-in-time component v(u) = velocity + accel * u with
// u = t / dt_us. The texture wraps around, so ground-truth flow is valid at
// every pixel.
struct SyntheticSceneSpec {
    TextureKind texture = TextureKind::Checkerboard;
    uint16_t width = 64;
    uint16_t height = 64;
    double vx = 0.0;           // px per dt
    double vy = 0.0;
    double ax = 0.0;           // px per dt per interval (affine-in-time)
    double ay = 0.0;
    uint64_t duration_us = 100000;
    uint64_t dt_us = 50000;    // interval length for ground-truth flow
    double threshold = 0.2;    // contrast threshold C in log-intensity units
    double amplitude = 1.0;    // texture contrast; 0 gives an untextured scene
    int tile = 8;              // checkerboard tile / bandlimited cell size px
    uint64_t seed = 0;
    int steps_per_dt = 256;
};

struct SyntheticScene {
    EventStream events;
    std::vector<FlowField> gt_flows;  // one full-res field per dt interval
};

SyntheticScene synthesize_events(const SyntheticSceneSpec& spec);

}  // namespace bat
