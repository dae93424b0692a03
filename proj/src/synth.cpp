#include "bat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bat {

namespace {

// Base log-intensity image, sampled toroidally so translation never exposes
// undefined texture.
struct BaseTexture {
    int w, h;
    std::vector<double> img;

    double at(int x, int y) const {
        x %= w;
        if (x < 0) x += w;
        y %= h;
        if (y < 0) y += h;
        return img[static_cast<size_t>(y) * w + x];
    }

    double sample(double x, double y) const {
        double fx = std::floor(x), fy = std::floor(y);
        double dx = x - fx, dy = y - fy;
        int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        double v00 = at(x0, y0), v10 = at(x0 + 1, y0);
        double v01 = at(x0, y0 + 1), v11 = at(x0 + 1, y0 + 1);
        double top = v00 + dx * (v10 - v00);
        double bot = v01 + dx * (v11 - v01);
        return top + dy * (bot - top);
    }
};

BaseTexture make_texture(const SyntheticSceneSpec& spec) {
    BaseTexture tex;
    tex.w = spec.width;
    tex.h = spec.height;
    tex.img.assign(static_cast<size_t>(tex.w) * tex.h, 0.0);
    std::mt19937_64 rng(spec.seed);
    const int tile = std::max(1, spec.tile);
    switch (spec.texture) {
        case TextureKind::Checkerboard:
            for (int y = 0; y < tex.h; ++y)
                for (int x = 0; x < tex.w; ++x)
                    tex.img[static_cast<size_t>(y) * tex.w + x] =
                        ((x / tile + y / tile) % 2) ? spec.amplitude : 0.0;
            break;
        case TextureKind::RandomBandlimited: {
            // Random values on a coarse toroidal lattice, bilinearly upsampled.
            int cw = std::max(2, tex.w / tile), ch = std::max(2, tex.h / tile);
            std::vector<double> coarse(static_cast<size_t>(cw) * ch);
            std::uniform_real_distribution<double> uni(0.0, spec.amplitude);
            for (double& v : coarse) v = uni(rng);
            for (int y = 0; y < tex.h; ++y) {
                for (int x = 0; x < tex.w; ++x) {
                    double gx = static_cast<double>(x) * cw / tex.w;
                    double gy = static_cast<double>(y) * ch / tex.h;
                    int x0 = static_cast<int>(gx), y0 = static_cast<int>(gy);
                    double dx = gx - x0, dy = gy - y0;
                    auto c = [&](int cx, int cy) { return coarse[static_cast<size_t>(cy % ch) * cw + (cx % cw)]; };
                    double top = c(x0, y0) + dx * (c(x0 + 1, y0) - c(x0, y0));
                    double bot = c(x0, y0 + 1) + dx * (c(x0 + 1, y0 + 1) - c(x0, y0 + 1));
                    tex.img[static_cast<size_t>(y) * tex.w + x] = top + dy * (bot - top);
                }
            }
            break;
        }
        case TextureKind::Bar: {
            int x0 = (tex.w - tile) / 2;
            for (int y = 0; y < tex.h; ++y)
                for (int x = x0; x < x0 + tile && x < tex.w; ++x)
                    tex.img[static_cast<size_t>(y) * tex.w + x] = spec.amplitude;
            break;
        }
    }
    return tex;
}

}  // namespace

TextureKind parse_texture_kind(const std::string& name) {
    if (name == "checkerboard") return TextureKind::Checkerboard;
    if (name == "random-bandlimited") return TextureKind::RandomBandlimited;
    if (name == "bar") return TextureKind::Bar;
    throw BadConfig("unknown texture kind '" + name + "'");
}

SyntheticScene synthesize_events(const SyntheticSceneSpec& spec) {
    if (spec.threshold <= 0.0) throw BadConfig("contrast threshold must be > 0");
    if (spec.duration_us == 0) throw BadConfig("duration must be > 0");
    if (spec.dt_us == 0) throw BadConfig("dt must be > 0");

    const BaseTexture tex = make_texture(spec);
    const int W = spec.width, H = spec.height;
    const double C = spec.threshold;

    // Texture displacement in px at normalized time u = t / dt.
    auto disp_x = [&](double u) { return spec.vx * u + 0.5 * spec.ax * u * u; };
    auto disp_y = [&](double u) { return spec.vy * u + 0.5 * spec.ay * u * u; };

    const double step_us = static_cast<double>(spec.dt_us) / spec.steps_per_dt;
    const auto steps_after_zero =
        static_cast<uint64_t>(std::ceil(static_cast<double>(spec.duration_us) / step_us - 1e-9));
    // Simulate one extra interval before t = 0 with emission suppressed:
    // each pixel's reference settles into its steady threshold ladder, so
    // the first observed interval fires at the same rate as later ones.
    // A cold start (ref = level at t = 0) stays silent until the motion
    // accumulates a full threshold of contrast.
    const uint64_t warmup_steps = spec.steps_per_dt;
    const double t_start = -static_cast<double>(spec.dt_us);

    std::vector<double> level(static_cast<size_t>(W) * H);  // log intensity at previous step
    std::vector<double> ref(static_cast<size_t>(W) * H);    // level at last event per pixel
    {
        const double u0 = t_start / static_cast<double>(spec.dt_us);
        const double ox = disp_x(u0), oy = disp_y(u0);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                level[static_cast<size_t>(y) * W + x] = tex.sample(x - ox, y - oy);
    }
    ref = level;

    SyntheticScene scene;
    scene.events.geom = {spec.width, spec.height};
    double t_prev = t_start;
    for (uint64_t n = 1; n <= warmup_steps + steps_after_zero; ++n) {
        double t_cur = std::min(t_start + static_cast<double>(n) * step_us,
                                static_cast<double>(spec.duration_us));
        double u = t_cur / static_cast<double>(spec.dt_us);
        double ox = disp_x(u), oy = disp_y(u);
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                size_t i = static_cast<size_t>(y) * W + x;
                double l_new = tex.sample(x - ox, y - oy);
                double l_old = level[i];
                // Emit one event per crossed multiple of C, timestamp by
                // linear interpolation within the step.
                while (l_new - ref[i] >= C || ref[i] - l_new >= C) {
                    bool rising = l_new > ref[i];
                    double target = rising ? ref[i] + C : ref[i] - C;
                    double frac = (l_new == l_old) ? 1.0 : (target - l_old) / (l_new - l_old);
                    frac = std::clamp(frac, 0.0, 1.0);
                    double te = t_prev + frac * (t_cur - t_prev);
                    ref[i] = target;
                    if (te < 0.0) continue;  // crossing happened before observation start
                    Event e;
                    e.t = static_cast<uint64_t>(std::llround(std::clamp(te, 0.0, static_cast<double>(spec.duration_us))));
                    e.x = static_cast<uint16_t>(x);
                    e.y = static_cast<uint16_t>(y);
                    e.p = rising ? 1 : -1;
                    scene.events.events.push_back(e);
                }
                level[i] = l_new;
            }
        }
        t_prev = t_cur;
    }

    std::stable_sort(scene.events.events.begin(), scene.events.events.end(),
                     [](const Event& a, const Event& b) {
                         if (a.t != b.t) return a.t < b.t;
                         if (a.y != b.y) return a.y < b.y;
                         return a.x < b.x;
                     });

    const uint64_t intervals = spec.duration_us / spec.dt_us;
    for (uint64_t i = 0; i < intervals; ++i) {
        double fu = disp_x(static_cast<double>(i + 1)) - disp_x(static_cast<double>(i));
        double fv = disp_y(static_cast<double>(i + 1)) - disp_y(static_cast<double>(i));
        scene.gt_flows.push_back(FlowField::constant(W, H, fu, fv));
    }
    return scene;
}

}  // namespace bat
