#include "bat/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace bat {

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           const std::vector<Tensor>& inputs, double h,
                           int max_coords_per_tensor) {
    // Analytic pass.
    std::vector<std::vector<double>> analytic;
    double loss_scale = 1.0;
    {
        for (const Tensor& t : inputs) const_cast<Tensor&>(t).zero_grad();
        Tape tape;
        Tensor loss = loss_fn();
        loss_scale = std::max(1.0, std::abs(loss.item()));
        backward(loss);
        for (const Tensor& t : inputs) analytic.push_back(t.grad());
    }

    GradCheckReport report;
    NoGrad guard;
    for (size_t ti = 0; ti < inputs.size(); ++ti) {
        Tensor t = inputs[ti];
        const size_t n = t.numel();
        size_t count = n;
        if (max_coords_per_tensor > 0)
            count = std::min(n, static_cast<size_t>(max_coords_per_tensor));
        for (size_t c = 0; c < count; ++c) {
            // Evenly spaced coordinates, always including index 0.
            const size_t i = (count == n) ? c : (c * n) / count;
            double* slot = t.data() + i;
            const double saved = *slot;
            const auto central = [&](double step) {
                *slot = saved + step;
                const double up = loss_fn().item();
                *slot = saved - step;
                const double down = loss_fn().item();
                *slot = saved;
                return (up - down) / (2.0 * step);
            };
            const double numeric = central(h);
            const double half = central(h / 2.0);
            // Rounding noise in one estimate is a few ulps of the loss over h.
            const double noise = 64.0 * 2.2e-16 * loss_scale / h;
            const double gap_tol = 5e-3 * std::max(std::abs(numeric), std::abs(half)) + noise;
            if (std::abs(numeric - half) > gap_tol) {
                ++report.coords_skipped;
                continue;
            }
            const double a = analytic[ti][i];
            // A gap within fd rounding noise is a match. Central differences
            // cannot resolve gradients below ~1e3 ulps of the loss over h;
            // without this floor a true-zero gradient (e.g. a conv bias that
            // instance_norm cancels exactly) reads as a spurious mismatch.
            const double atol = 1024.0 * 2.2e-16 * loss_scale / h;
            const double rel = std::abs(a - numeric) <= atol
                                   ? 0.0
                                   : std::abs(a - numeric) /
                                         std::max(1e-8, std::abs(a) + std::abs(numeric));
            report.max_rel_err = std::max(report.max_rel_err, rel);
            ++report.coords_checked;
        }
    }
    return report;
}

}  // namespace bat
