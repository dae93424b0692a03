#include "bat/optim.hpp"

#include <algorithm>
#include <cmath>

#include "bat/errors.hpp"

namespace bat {

AdamW::AdamW(ParamStore& store, AdamWConfig cfg) : store_(&store), cfg_(cfg) {
    m_.reserve(store.size());
    v_.reserve(store.size());
    for (const Parameter& p : store.all()) {
        m_.emplace_back(p.value.numel(), 0.0);
        v_.emplace_back(p.value.numel(), 0.0);
    }
}

void AdamW::step(double lr) {
    if (m_.size() != store_->size())
        throw ShapeMismatch("AdamW: parameter count changed after construction");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t pi = 0; pi < store_->size(); ++pi) {
        Parameter& p = store_->all()[pi];
        double* w = p.value.data();
        const size_t n = p.value.numel();
        const std::vector<double>& gbuf = p.value.impl()->grad;
        std::vector<double>& m = m_[pi];
        std::vector<double>& v = v_[pi];
        for (size_t i = 0; i < n; ++i) {
            const double g = gbuf.empty() ? 0.0 : gbuf[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps) + lr * cfg_.weight_decay * w[i];
        }
    }
    store_->project();
}

double one_cycle_lr(long step, long total, double lr_max) {
    if (total <= 0) throw BadConfig("one_cycle_lr: total steps must be positive");
    step = std::clamp(step, 0L, total - 1);
    const double lr_start = lr_max / 25.0;
    const double lr_end = lr_max / 1e4;
    const long warmup = std::max(1L, static_cast<long>(std::llround(0.05 * static_cast<double>(total))));
    if (step < warmup) {
        const double t = static_cast<double>(step) / static_cast<double>(warmup);
        return lr_start + (lr_max - lr_start) * t;
    }
    const long tail = std::max(1L, total - warmup);
    const double t = static_cast<double>(step - warmup + 1) / static_cast<double>(tail);
    return lr_max + (lr_end - lr_max) * t;
}

}  // namespace bat
