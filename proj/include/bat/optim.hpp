#pragma once

#include <vector>

#include "bat/nn.hpp"

namespace bat {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

// AdamW with decoupled weight decay:
//   p -= lr · m̂ / (√v̂ + eps) + lr · wd · p
// A parameter whose gradient buffer was never touched contributes zero
// gradient, so only decay moves it.
class AdamW {
  public:
    AdamW(ParamStore& store, AdamWConfig cfg = {});

    void step(double lr);
    long steps_taken() const { return t_; }

  private:
    ParamStore* store_;
    AdamWConfig cfg_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Linear one-cycle schedule over `total` steps: ramp from lr_max/25 to lr_max
// across the first 5% of steps, then decay linearly to lr_max/1e4. `step` is
// the 0-based index of the step about to run.
double one_cycle_lr(long step, long total, double lr_max);

}  // namespace bat
