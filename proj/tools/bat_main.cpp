// bat: synthesize event data, voxelize, train, infer, evaluate, visualize.
//
// Exit codes: 0 success, 1 usage error, 2 data/config error, 3 numeric
// failure. BAT_THREADS is honored for API compatibility; every code path is
// sequential, so it caps parallelism at 1 regardless of value.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bat/errors.hpp"
#include "bat/events.hpp"
#include "bat/flow_io.hpp"
#include "bat/metrics.hpp"
#include "bat/model.hpp"
#include "bat/synth.hpp"
#include "bat/train.hpp"
#include "bat/voxel.hpp"

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr uint64_t kFromStream = UINT64_MAX;

void parse_size(const std::string& s, uint16_t& w, uint16_t& h) {
    unsigned uw = 0, uh = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%ux%u%c", &uw, &uh, &tail) != 2 || uw == 0 || uh == 0 ||
        uw > UINT16_MAX || uh > UINT16_MAX)
        throw UsageError("bad --size '" + s + "' (expected WxH)");
    w = static_cast<uint16_t>(uw);
    h = static_cast<uint16_t>(uh);
}

void parse_pair(const std::string& s, const char* flag, double& a, double& b) {
    char tail = 0;
    if (std::sscanf(s.c_str(), "%lf,%lf%c", &a, &b, &tail) != 2)
        throw UsageError(std::string("bad ") + flag + " '" + s + "' (expected a,b)");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---- synth ----

struct SynthArgs {
    std::string scene = "checkerboard";
    std::string size = "64x64";
    std::string flow = "0,0";
    std::string accel = "0,0";
    uint64_t duration_us = 100000;
    uint64_t dt_us = 50000;
    double threshold = 0.2;
    double amplitude = 1.0;
    int tile = 8;
    int steps_per_dt = 256;
    uint64_t seed = 0;
    std::string format = "evt1";
    std::string out;
};

int run_synth(const SynthArgs& a) {
    bat::SyntheticSceneSpec spec;
    spec.texture = bat::parse_texture_kind(a.scene);
    parse_size(a.size, spec.width, spec.height);
    parse_pair(a.flow, "--flow", spec.vx, spec.vy);
    parse_pair(a.accel, "--accel", spec.ax, spec.ay);
    spec.duration_us = a.duration_us;
    spec.dt_us = a.dt_us;
    spec.threshold = a.threshold;
    spec.amplitude = a.amplitude;
    spec.tile = a.tile;
    spec.steps_per_dt = a.steps_per_dt;
    spec.seed = a.seed;
    if (a.format != "evt1" && a.format != "csv")
        throw UsageError("bad --format '" + a.format + "' (expected evt1 or csv)");

    const bat::SyntheticScene scene = bat::synthesize_events(spec);
    std::filesystem::create_directories(a.out);
    const std::string events_path = a.out + "/events." + a.format;
    bat::save_events(scene.events, events_path);
    for (size_t i = 0; i < scene.gt_flows.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "/gt_%04zu.flo", i);
        bat::write_flo(scene.gt_flows[i], a.out + name);
    }
    std::printf("events=%zu intervals=%zu out=%s\n", scene.events.events.size(),
                scene.gt_flows.size(), events_path.c_str());
    return 0;
}

// ---- voxelize ----

struct VoxelizeArgs {
    std::string events;
    std::string size = "0x0";
    uint64_t t0 = kFromStream;
    uint64_t t1 = kFromStream;
    int bins = 15;
    std::string out;
};

int run_voxelize(const VoxelizeArgs& a) {
    bat::Geometry geom;
    if (a.size != "0x0") parse_size(a.size, geom.width, geom.height);
    const bat::EventStream stream = bat::load_events(a.events, geom);
    if (stream.events.empty() && (a.t0 == kFromStream || a.t1 == kFromStream))
        throw bat::InvalidInterval("empty stream needs explicit --t0/--t1");
    const uint64_t t0 = a.t0 == kFromStream ? stream.events.front().t : a.t0;
    const uint64_t t1 = a.t1 == kFromStream ? stream.events.back().t : a.t1;
    const bat::VoxelGrid grid = bat::voxelize(stream, t0, t1, a.bins);
    bat::save_voxels(grid, a.out);
    std::printf("bins=%d size=%dx%d sum=%s\n", grid.bins, grid.width, grid.height,
                fmt(grid.sum()).c_str());
    return 0;
}

// ---- train ----

struct TrainArgs {
    std::string preset = "tiny";
    std::string mode = "bidirectional";
    bat::TrainConfig cfg;
    uint64_t model_seed = 0;
    bool convex_upsample = false;
};

int run_train(TrainArgs& a) {
    a.cfg.model = bat::parse_model_preset(a.preset);
    a.cfg.model.mode = bat::parse_flow_mode(a.mode);
    a.cfg.model.seed = a.model_seed;
    a.cfg.model.use_convex_upsample = a.convex_upsample;
    if (a.cfg.out_dir.empty()) throw UsageError("train needs --out");

    bat::BatModel model(a.cfg.model);
    const bat::TrainResult result = bat::train_toy(model, a.cfg);
    if (!result.loss_curve.empty())
        std::printf("first_loss=%s final_loss=%s\n", fmt(result.loss_curve.front()).c_str(),
                    fmt(result.loss_curve.back()).c_str());
    std::printf("val_epe_median=%s checkpoint=%s/checkpoint.batw\n",
                fmt(result.val_epe_median).c_str(), a.cfg.out_dir.c_str());
    return 0;
}

// ---- infer ----

struct InferArgs {
    std::string events;
    std::string future;
    std::string checkpoint;
    std::string model_config;
    std::string mode;
    std::string preset = "tiny";
    std::string size = "0x0";
    uint64_t t0 = kFromStream;
    uint64_t t_mid = kFromStream;
    uint64_t t1 = kFromStream;
    int iters = 12;
    std::string out;
};

int run_infer(const InferArgs& a) {
    bat::ModelConfig mc;
    std::string config_path = a.model_config;
    if (config_path.empty() && !a.checkpoint.empty()) {
        const std::filesystem::path sibling =
            std::filesystem::path(a.checkpoint).parent_path() / "config.json";
        if (std::filesystem::exists(sibling)) config_path = sibling.string();
    }
    if (!config_path.empty())
        mc = bat::load_model_config(config_path);
    else
        mc = bat::parse_model_preset(a.preset);
    if (!a.mode.empty()) mc.mode = bat::parse_flow_mode(a.mode);

    bat::BatModel model(mc);
    if (!a.checkpoint.empty()) bat::load_checkpoint(model.params(), a.checkpoint);

    bat::Geometry geom;
    if (a.size != "0x0") parse_size(a.size, geom.width, geom.height);
    const bat::EventStream stream = bat::load_events(a.events, geom);
    if (stream.events.empty() && (a.t0 == kFromStream || a.t1 == kFromStream))
        throw bat::InvalidInterval("empty stream needs explicit --t0/--t-mid/--t1");
    const uint64_t t0 = a.t0 == kFromStream ? stream.events.front().t : a.t0;
    const uint64_t t1 = a.t1 == kFromStream ? stream.events.back().t : a.t1;
    const uint64_t t_mid = a.t_mid == kFromStream ? t0 + (t1 - t0) / 2 : a.t_mid;

    const bat::EventStream past = bat::slice(stream, t0, t_mid);
    bat::EventStream future;
    if (mc.mode != bat::FlowMode::BackwardOnly) {
        const bat::EventStream& src =
            a.future.empty() ? stream : bat::load_events(a.future, geom);
        if (src.geom != stream.geom) throw bat::ShapeMismatch("future stream geometry differs");
        future = bat::slice(src, t_mid, t1);
    }

    const bat::ForwardResult result = [&] {
        bat::NoGrad guard;
        return model.infer(past, future, t0, t_mid, t1, a.iters);
    }();
    const bat::FlowField flow = bat::tensor_to_flow(result.flows_full.back());
    bat::write_flo(flow, a.out);
    std::printf("events_past=%zu events_future=%zu size=%dx%d out=%s\n", past.events.size(),
                future.events.size(), flow.width, flow.height, a.out.c_str());
    return 0;
}

// ---- eval ----

struct EvalArgs {
    std::string pred, gt, json_out;
};

int run_eval(const EvalArgs& a) {
    const bat::FlowField pred = bat::read_flo(a.pred);
    const bat::FlowField gt = bat::read_flo(a.gt);
    const bat::Metrics m = bat::compute_metrics(pred, gt);
    std::printf("epe=%s\n1pe=%s\n2pe=%s\n3pe=%s\nae=%s\npct_out=%s\n", fmt(m.epe).c_str(),
                fmt(m.npe1).c_str(), fmt(m.npe2).c_str(), fmt(m.npe3).c_str(), fmt(m.ae).c_str(),
                fmt(m.pct_out).c_str());
    if (!a.json_out.empty()) {
        nlohmann::json j;
        j["epe"] = m.epe;
        j["1pe"] = m.npe1;
        j["2pe"] = m.npe2;
        j["3pe"] = m.npe3;
        j["ae"] = m.ae;
        j["pct_out"] = m.pct_out;
        std::ofstream out(a.json_out);
        if (!out) throw bat::IoError("cannot write " + a.json_out);
        out << j.dump(2) << '\n';
    }
    return 0;
}

// ---- viz ----

struct VizArgs {
    std::string flow, out;
    double max_flow = 0.0;
};

int run_viz(const VizArgs& a) {
    const bat::FlowField flow = bat::read_flo(a.flow);
    bat::write_flow_ppm(flow, a.out, a.max_flow);
    std::printf("size=%dx%d out=%s\n", flow.width, flow.height, a.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bat — event-based optical flow with bidirectional adaptive temporal correlation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file with [subcommand] sections; flags win");
    app.footer("BAT_THREADS caps internal parallelism (all paths are sequential).");

    SynthArgs synth;
    CLI::App* s = app.add_subcommand("synth", "Synthesize events from a translating texture");
    s->add_option("--scene,--texture", synth.scene, "checkerboard | random-bandlimited | bar");
    s->add_option("--size", synth.size, "sensor size WxH");
    s->add_option("--flow", synth.flow, "velocity vx,vy in px per dt");
    s->add_option("--accel", synth.accel, "affine-in-time velocity term ax,ay");
    s->add_option("--duration-us", synth.duration_us, "scene length, µs");
    s->add_option("--dt-us", synth.dt_us, "ground-truth flow interval, µs");
    s->add_option("--threshold", synth.threshold, "contrast threshold C");
    s->add_option("--amplitude", synth.amplitude, "texture contrast");
    s->add_option("--tile", synth.tile, "texture tile/cell size, px");
    s->add_option("--steps-per-dt", synth.steps_per_dt, "simulation substeps per dt");
    s->add_option("--seed", synth.seed, "texture RNG seed");
    s->add_option("--format", synth.format, "events file format: evt1 | csv");
    s->add_option("--out", synth.out, "output directory")->required();

    VoxelizeArgs vox;
    CLI::App* v = app.add_subcommand("voxelize", "Build a voxel grid from an event file");
    v->add_option("--events", vox.events, "input .evt1 or .csv")->required();
    v->add_option("--size", vox.size, "sensor size WxH (CSV input only)");
    v->add_option("--t0", vox.t0, "interval start, µs (default: first event)");
    v->add_option("--t1", vox.t1, "interval end, µs (default: last event)");
    v->add_option("--bins", vox.bins, "temporal bins B");
    v->add_option("--out", vox.out, "output .vxg path")->required();

    TrainArgs train;
    CLI::App* t = app.add_subcommand("train", "Train on synthetic translating textures");
    t->add_option("--preset", train.preset, "model preset: tiny | full");
    t->add_option("--mode", train.mode, "bidirectional | forward-only | backward-only");
    t->add_option("--steps", train.cfg.steps, "optimizer steps");
    t->add_option("--batch", train.cfg.batch, "scenes per step");
    t->add_option("--lr", train.cfg.lr, "peak learning rate");
    t->add_option("--gamma", train.cfg.gamma, "sequence-loss decay");
    t->add_option("--iters", train.cfg.iters, "refinement iterations (train)");
    t->add_option("--val-iters", train.cfg.val_iters, "refinement iterations (validation)");
    t->add_option("--weight-decay", train.cfg.weight_decay, "decoupled weight decay");
    t->add_option("--data-seed", train.cfg.data_seed, "scene stream seed");
    t->add_option("--seed", train.model_seed, "weight init seed");
    t->add_option("--scene-size", train.cfg.scene_size, "square scene side, px");
    t->add_option("--max-flow", train.cfg.max_flow, "velocity bound, px per dt");
    t->add_option("--dt-us", train.cfg.dt_us, "interval length, µs");
    t->add_option("--val-scenes", train.cfg.val_scenes, "held-out scene count");
    t->add_flag("--affine", train.cfg.affine, "sample affine-in-time velocities");
    t->add_flag("--convex-upsample", train.convex_upsample, "learned convex upsampling");
    t->add_option("--out", train.cfg.out_dir, "artifact directory")->required();

    InferArgs infer;
    CLI::App* i = app.add_subcommand("infer", "Predict flow for one event interval");
    i->add_option("--events", infer.events, "event file (reference/past stream)")->required();
    i->add_option("--future", infer.future, "target-stream event file (default: same file)");
    i->add_option("--checkpoint", infer.checkpoint, "trained weights (.batw)");
    i->add_option("--model-config", infer.model_config,
                  "config.json (default: next to the checkpoint)");
    i->add_option("--mode", infer.mode, "override flow mode");
    i->add_option("--preset", infer.preset, "model preset when no config.json is found");
    i->add_option("--size", infer.size, "sensor size WxH (CSV input only)");
    i->add_option("--t0", infer.t0, "past interval start, µs (default: first event)");
    i->add_option("--t-mid", infer.t_mid, "split timestamp, µs (default: midpoint)");
    i->add_option("--t1", infer.t1, "target interval end, µs (default: last event)");
    i->add_option("--iters", infer.iters, "refinement iterations");
    i->add_option("--out", infer.out, "output .flo path")->required();

    EvalArgs eval;
    CLI::App* e = app.add_subcommand("eval", "Compare predicted flow against ground truth");
    e->add_option("--pred", eval.pred, "predicted .flo")->required();
    e->add_option("--gt", eval.gt, "ground-truth .flo")->required();
    e->add_option("--json", eval.json_out, "also write metrics as JSON");

    VizArgs viz;
    CLI::App* z = app.add_subcommand("viz", "Render flow with the standard color wheel");
    z->add_option("--flow", viz.flow, "input .flo")->required();
    z->add_option("--out", viz.out, "output .ppm path")->required();
    z->add_option("--max-flow", viz.max_flow, "normalization magnitude (0 = field max)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& ex) {
        return app.exit(ex);  // --help / --version
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return 1;
    }

    try {
        if (s->parsed()) return run_synth(synth);
        if (v->parsed()) return run_voxelize(vox);
        if (t->parsed()) return run_train(train);
        if (i->parsed()) return run_infer(infer);
        if (e->parsed()) return run_eval(eval);
        if (z->parsed()) return run_viz(viz);
        return 1;
    } catch (const UsageError& ex) {
        std::fprintf(stderr, "usage error: %s\n", ex.what());
        return 1;
    } catch (const bat::DivergedLoss& ex) {
        std::fprintf(stderr, "numeric failure: %s\n", ex.what());
        return 3;
    } catch (const bat::NumericError& ex) {
        std::fprintf(stderr, "numeric failure: %s\n", ex.what());
        return 3;
    } catch (const bat::Error& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
}
