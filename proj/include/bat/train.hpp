#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bat/model.hpp"
#include "bat/synth.hpp"

namespace bat {

// Toy curriculum: translating band-limited textures, one 2·dt scene per
// sample split into past [0, dt] and future [dt, 2dt] event slices, with the
// flow over the second interval as supervision.
struct TrainConfig {
    ModelConfig model = ModelConfig::tiny();
    int steps = 200;
    int batch = 2;
    double lr = 2e-4;
    double gamma = 0.8;
    int iters = 8;  // refinement iterations while training
    double weight_decay = 1e-4;
    uint64_t data_seed = 1;
    int scene_size = 32;
    double max_flow = 8.0;  // |velocity| bound, px per dt
    uint64_t dt_us = 50000;
    int val_scenes = 10;
    int val_iters = 12;
    bool affine = false;  // sample an extra affine-in-time velocity term
    std::string out_dir;  // when set: checkpoint.batw, config.json, loss_curve.csv
};

struct TrainResult {
    std::vector<double> loss_curve;  // one batch-mean loss per step
    std::vector<double> val_epes;    // per held-out scene
    double val_epe_median = 0.0;
};

struct ToySample {
    SyntheticScene scene;
    uint64_t t0 = 0, t_mid = 0, t1 = 0;
    FlowField gt;  // flow over [t_mid, t1]
};

// Deterministic seed streams: training scenes by running index, validation
// scenes by a disjoint stream so both flow modes see identical held-out data.
uint64_t toy_scene_seed(uint64_t data_seed, uint64_t index);
uint64_t toy_val_seed(uint64_t data_seed, int scene_index);

ToySample make_toy_sample(const TrainConfig& cfg, uint64_t scene_seed, bool constant_flow);

// AdamW + linear one-cycle schedule over cfg.steps. Deterministic for a
// fixed config; NaN anywhere raises DivergedLoss with the failing step.
TrainResult train_toy(BatModel& model, const TrainConfig& cfg);

// Median-EPE validation pass on the held-out constant-flow scenes.
std::vector<double> validate_toy(const BatModel& model, const TrainConfig& cfg);
double median_of(std::vector<double> xs);

// config.json sidecar written next to checkpoints.
void save_run_config(const TrainConfig& cfg, const std::string& path);
ModelConfig load_model_config(const std::string& path);

}  // namespace bat
