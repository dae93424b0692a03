#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bat/errors.hpp"

namespace bat {

enum class FlowResolution { Full, Feature };

// Dense per-pixel 2-vector displacement. `Full` fields are in image pixels
// over the target interval; `Feature` fields live at 1/s resolution in
// feature-pixel units.
struct FlowField {
    int width = 0;
    int height = 0;
    FlowResolution res = FlowResolution::Full;
    std::vector<double> uv;  // interleaved (u, v), row-major

    static FlowField constant(int w, int h, double u, double v,
                              FlowResolution res = FlowResolution::Full);

    double& u(int x, int y) { return uv[2 * (static_cast<size_t>(y) * width + x)]; }
    double& v(int x, int y) { return uv[2 * (static_cast<size_t>(y) * width + x) + 1]; }
    double u(int x, int y) const { return uv[2 * (static_cast<size_t>(y) * width + x)]; }
    double v(int x, int y) const { return uv[2 * (static_cast<size_t>(y) * width + x) + 1]; }
};

// Middlebury .flo: float magic 202021.25 ("PIEH"), i32 width, i32 height,
// interleaved little-endian f32 (u, v) row-major.
FlowField read_flo(const std::string& path);
void write_flo(const FlowField& flow, const std::string& path);

// Renders the standard flow color wheel into a binary PPM (P6) image.
// Flow magnitude is normalized by `max_flow` when positive, otherwise by the
// field's own maximum.
std::string render_flow_ppm(const FlowField& flow, double max_flow = 0.0);
void write_flow_ppm(const FlowField& flow, const std::string& path, double max_flow = 0.0);

}  // namespace bat
