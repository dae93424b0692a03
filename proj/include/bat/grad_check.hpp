#pragma once

#include <functional>
#include <vector>

#include "bat/tensor.hpp"

namespace bat {

struct GradCheckReport {
    double max_rel_err = 0.0;
    size_t coords_checked = 0;
    // Coordinates whose h and h/2 central differences disagree. There the
    // stencil straddles a non-differentiable point (relu/abs kink), so the
    // numeric estimate says nothing about the analytic gradient.
    size_t coords_skipped = 0;
};

// Compares tape gradients of loss_fn() against central finite differences.
// loss_fn must rebuild the scalar loss from the current values of `inputs`
// deterministically. Relative error per coordinate is
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// Each coordinate's stencil is validated by halving h: a smooth loss gives
// near-identical estimates (truncation is O(h²)), a kink crossing does not
// and the coordinate is skipped. A wrong analytic gradient is still caught:
// its finite differences agree with each other, only not with the tape.
// Gaps within the fd rounding floor (~1e3 ulps of the loss over h) count as
// matches, so exactly-zero gradients do not read as noise-driven mismatches.
// max_coords_per_tensor == 0 checks every coordinate; otherwise an evenly
// spaced subset of that size is checked per tensor.
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           const std::vector<Tensor>& inputs, double h = 1e-5,
                           int max_coords_per_tensor = 0);

}  // namespace bat
