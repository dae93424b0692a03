#include "bat/flow_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace bat {

namespace {

constexpr float kFloMagic = 202021.25f;  // spells "PIEH" in little-endian bytes

void put_f32(std::string& out, float v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

void put_i32(std::string& out, int32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

// Middlebury color wheel: 55 hues over six arcs.
struct ColorWheel {
    std::vector<std::array<double, 3>> colors;
    ColorWheel() {
        const int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
        auto arc = [&](int n, double r0, double g0, double b0, double r1, double g1, double b1) {
            for (int i = 0; i < n; ++i) {
                double f = static_cast<double>(i) / n;
                colors.push_back({r0 + f * (r1 - r0), g0 + f * (g1 - g0), b0 + f * (b1 - b0)});
            }
        };
        arc(RY, 255, 0, 0, 255, 255, 0);
        arc(YG, 255, 255, 0, 0, 255, 0);
        arc(GC, 0, 255, 0, 0, 255, 255);
        arc(CB, 0, 255, 255, 0, 0, 255);
        arc(BM, 0, 0, 255, 255, 0, 255);
        arc(MR, 255, 0, 255, 255, 0, 0);
    }
};

}  // namespace

FlowField FlowField::constant(int w, int h, double u, double v, FlowResolution res) {
    FlowField f;
    f.width = w;
    f.height = h;
    f.res = res;
    f.uv.resize(static_cast<size_t>(w) * h * 2);
    for (size_t i = 0; i < f.uv.size(); i += 2) {
        f.uv[i] = u;
        f.uv[i + 1] = v;
    }
    return f;
}

FlowField read_flo(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    float magic = 0;
    int32_t w = 0, h = 0;
    in.read(reinterpret_cast<char*>(&magic), 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    if (!in || magic != kFloMagic) throw IoError(path + ": not a flow file (bad magic)");
    if (w <= 0 || h <= 0) throw IoError(path + ": bad dimensions");
    FlowField f;
    f.width = w;
    f.height = h;
    f.uv.resize(static_cast<size_t>(w) * h * 2);
    std::vector<float> tmp(f.uv.size());
    in.read(reinterpret_cast<char*>(tmp.data()), static_cast<std::streamsize>(tmp.size() * 4));
    if (!in) throw IoError(path + ": truncated flow data");
    std::copy(tmp.begin(), tmp.end(), f.uv.begin());
    return f;
}

void write_flo(const FlowField& flow, const std::string& path) {
    std::string out;
    out.reserve(12 + flow.uv.size() * 4);
    put_f32(out, kFloMagic);
    put_i32(out, flow.width);
    put_i32(out, flow.height);
    for (double v : flow.uv) put_f32(out, static_cast<float>(v));
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw IoError("short write to " + path);
}

std::string render_flow_ppm(const FlowField& flow, double max_flow) {
    static const ColorWheel wheel;
    double norm = max_flow;
    if (norm <= 0.0) {
        for (size_t i = 0; i < flow.uv.size(); i += 2) {
            norm = std::max(norm, std::hypot(flow.uv[i], flow.uv[i + 1]));
        }
        if (norm == 0.0) norm = 1.0;
    }
    std::string out = "P6\n" + std::to_string(flow.width) + " " + std::to_string(flow.height) + "\n255\n";
    const int n = static_cast<int>(wheel.colors.size());
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            double u = flow.u(x, y) / norm;
            double v = flow.v(x, y) / norm;
            double rad = std::min(std::hypot(u, v), 1.0);
            double angle = std::atan2(-v, -u) / M_PI;          // [-1, 1]
            double fk = (angle + 1.0) / 2.0 * (n - 1);
            int k0 = static_cast<int>(fk);
            int k1 = (k0 + 1) % n;
            double f = fk - k0;
            for (int c = 0; c < 3; ++c) {
                double col = (wheel.colors[k0][c] + f * (wheel.colors[k1][c] - wheel.colors[k0][c])) / 255.0;
                col = 1.0 - rad * (1.0 - col);  // fade to white at zero flow
                out.push_back(static_cast<char>(std::lround(col * 255.0)));
            }
        }
    }
    return out;
}

void write_flow_ppm(const FlowField& flow, const std::string& path, double max_flow) {
    std::string bytes = render_flow_ppm(flow, max_flow);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("short write to " + path);
}

}  // namespace bat
