#include "bat/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "bat/metrics.hpp"
#include "bat/optim.hpp"
#include "json.hpp"

namespace bat {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::pair<EventStream, EventStream> split_sample(const ToySample& s) {
    return {slice(s.scene.events, s.t0, s.t_mid), slice(s.scene.events, s.t_mid, s.t1)};
}

}  // namespace

uint64_t toy_scene_seed(uint64_t data_seed, uint64_t index) {
    return splitmix64(splitmix64(data_seed) ^ index);
}

uint64_t toy_val_seed(uint64_t data_seed, int scene_index) {
    return splitmix64(splitmix64(data_seed ^ 0x5bd1e995ULL) ^ static_cast<uint64_t>(scene_index));
}

ToySample make_toy_sample(const TrainConfig& cfg, uint64_t scene_seed, bool constant_flow) {
    std::mt19937_64 rng(scene_seed);
    std::uniform_real_distribution<double> vel(-cfg.max_flow, cfg.max_flow);

    SyntheticSceneSpec spec;
    spec.texture = TextureKind::RandomBandlimited;
    spec.width = static_cast<uint16_t>(cfg.scene_size);
    spec.height = static_cast<uint16_t>(cfg.scene_size);
    // High-contrast fine texture: the defaults leave most of a small scene
    // below one threshold crossing per interval, and nearly-empty voxels
    // give the correlation nothing to match.
    spec.amplitude = 2.0;
    spec.tile = 4;
    spec.threshold = 0.15;
    spec.vx = vel(rng);
    spec.vy = vel(rng);
    if (cfg.affine && !constant_flow) {
        std::uniform_real_distribution<double> acc(-cfg.max_flow / 4.0, cfg.max_flow / 4.0);
        spec.ax = acc(rng);
        spec.ay = acc(rng);
    }
    spec.dt_us = cfg.dt_us;
    spec.duration_us = 2 * cfg.dt_us;
    spec.seed = splitmix64(scene_seed);

    ToySample s;
    s.scene = synthesize_events(spec);
    s.t0 = 0;
    s.t_mid = cfg.dt_us;
    s.t1 = 2 * cfg.dt_us;
    s.gt = s.scene.gt_flows.at(1);
    return s;
}

TrainResult train_toy(BatModel& model, const TrainConfig& cfg) {
    if (cfg.steps < 0) throw BadConfig("train: negative step count");
    if (cfg.batch < 1 || cfg.iters < 1 || cfg.val_iters < 1)
        throw BadConfig("train: batch and iteration counts must be positive");
    if (cfg.lr <= 0.0) throw BadConfig("train: learning rate must be positive");

    AdamWConfig ocfg;
    ocfg.weight_decay = cfg.weight_decay;
    AdamW opt(model.params(), ocfg);

    TrainResult result;
    result.loss_curve.reserve(static_cast<size_t>(cfg.steps));
    for (int step = 0; step < cfg.steps; ++step) {
        const double lr_now = one_cycle_lr(step, cfg.steps, cfg.lr);
        model.params().zero_grad();
        double loss_value = 0.0;
        try {
            Tape tape;
            Tensor total = Tensor::scalar(0.0);
            for (int b = 0; b < cfg.batch; ++b) {
                const uint64_t index = static_cast<uint64_t>(step) * cfg.batch + b;
                const ToySample s =
                    make_toy_sample(cfg, toy_scene_seed(cfg.data_seed, index), !cfg.affine);
                const auto [past, future] = split_sample(s);
                const ForwardResult out = model.infer(past, future, s.t0, s.t_mid, s.t1, cfg.iters);
                const Tensor loss =
                    sequence_loss(out.flows_full, flow_to_tensor(s.gt), Tensor(), cfg.gamma);
                total = add(total, mul_scalar(loss, 1.0 / cfg.batch));
            }
            loss_value = total.item();
            backward(total);
        } catch (const NumericError& e) {
            throw DivergedLoss("training step " + std::to_string(step) + ": " + e.what());
        }
        if (!std::isfinite(loss_value))
            throw DivergedLoss("training step " + std::to_string(step) + ": non-finite loss");
        opt.step(lr_now);
        result.loss_curve.push_back(loss_value);
    }

    result.val_epes = validate_toy(model, cfg);
    result.val_epe_median = median_of(result.val_epes);

    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        save_checkpoint(model.params(), cfg.out_dir + "/checkpoint.batw");
        save_run_config(cfg, cfg.out_dir + "/config.json");
        std::ofstream curve(cfg.out_dir + "/loss_curve.csv");
        if (!curve) throw IoError("train: cannot write loss curve");
        curve << "step,loss,lr\n";
        char buf[64];
        for (size_t i = 0; i < result.loss_curve.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", result.loss_curve[i]);
            curve << i << ',' << buf << ',';
            std::snprintf(buf, sizeof buf, "%.17g",
                          one_cycle_lr(static_cast<long>(i), cfg.steps, cfg.lr));
            curve << buf << '\n';
        }
    }
    return result;
}

std::vector<double> validate_toy(const BatModel& model, const TrainConfig& cfg) {
    NoGrad guard;
    std::vector<double> epes;
    epes.reserve(static_cast<size_t>(cfg.val_scenes));
    for (int i = 0; i < cfg.val_scenes; ++i) {
        const ToySample s = make_toy_sample(cfg, toy_val_seed(cfg.data_seed, i), true);
        const auto [past, future] = split_sample(s);
        const ForwardResult out = model.infer(past, future, s.t0, s.t_mid, s.t1, cfg.val_iters);
        epes.push_back(compute_metrics(tensor_to_flow(out.flows_full.back()), s.gt).epe);
    }
    return epes;
}

double median_of(std::vector<double> xs) {
    if (xs.empty()) throw BadConfig("median of empty list");
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

void save_run_config(const TrainConfig& cfg, const std::string& path) {
    nlohmann::json j;
    nlohmann::json& m = j["model"];
    m["feat_dim"] = cfg.model.feat_dim;
    m["motion_dim"] = cfg.model.motion_dim;
    m["context_dim"] = cfg.model.context_dim;
    m["hidden_dim"] = cfg.model.hidden_dim;
    m["flow_head_dim"] = cfg.model.flow_head_dim;
    m["stride"] = cfg.model.stride;
    m["groups"] = cfg.model.groups;
    m["bins"] = cfg.model.bins;
    m["radius"] = cfg.model.radius;
    m["attn_points"] = cfg.model.attn_points;
    m["attn_range"] = cfg.model.attn_range;
    m["mode"] = to_string(cfg.model.mode);
    m["corr_two_level"] = cfg.model.corr_two_level;
    m["use_convex_upsample"] = cfg.model.use_convex_upsample;
    m["seed"] = cfg.model.seed;
    nlohmann::json& t = j["train"];
    t["steps"] = cfg.steps;
    t["batch"] = cfg.batch;
    t["lr"] = cfg.lr;
    t["gamma"] = cfg.gamma;
    t["iters"] = cfg.iters;
    t["weight_decay"] = cfg.weight_decay;
    t["data_seed"] = cfg.data_seed;
    t["scene_size"] = cfg.scene_size;
    t["max_flow"] = cfg.max_flow;
    t["dt_us"] = cfg.dt_us;
    t["val_scenes"] = cfg.val_scenes;
    t["val_iters"] = cfg.val_iters;
    t["affine"] = cfg.affine;

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

ModelConfig load_model_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    const nlohmann::json m = j.contains("model") ? j["model"] : j;
    ModelConfig cfg;
    try {
        cfg.feat_dim = m.value("feat_dim", cfg.feat_dim);
        cfg.motion_dim = m.value("motion_dim", cfg.motion_dim);
        cfg.context_dim = m.value("context_dim", cfg.context_dim);
        cfg.hidden_dim = m.value("hidden_dim", cfg.hidden_dim);
        cfg.flow_head_dim = m.value("flow_head_dim", cfg.flow_head_dim);
        cfg.stride = m.value("stride", cfg.stride);
        cfg.groups = m.value("groups", cfg.groups);
        cfg.bins = m.value("bins", cfg.bins);
        cfg.radius = m.value("radius", cfg.radius);
        cfg.attn_points = m.value("attn_points", cfg.attn_points);
        cfg.attn_range = m.value("attn_range", cfg.attn_range);
        cfg.mode = parse_flow_mode(m.value("mode", to_string(cfg.mode)));
        cfg.corr_two_level = m.value("corr_two_level", cfg.corr_two_level);
        cfg.use_convex_upsample = m.value("use_convex_upsample", cfg.use_convex_upsample);
        cfg.seed = m.value("seed", cfg.seed);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace bat
