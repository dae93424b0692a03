#pragma once

#include <cmath>
#include <initializer_list>
#include <memory>
#include <string>

#include "bat/tensor.hpp"

namespace bat::detail {

inline void check_finite(const Tensor& t, const char* op) {
    const double* p = t.data();
    const size_t n = t.numel();
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p[i]))
            throw NumericError(std::string(op) + " produced a non-finite value");
    }
}

inline bool want_grad(std::initializer_list<const Tensor*> inputs) {
    if (!Tape::active()) return false;
    for (const Tensor* t : inputs)
        if (t->defined() && t->requires_grad()) return true;
    return false;
}

inline void record(std::function<void()> fn) { Tape::active()->record(std::move(fn)); }

// Output gradient, or nullptr when no downstream op touched it (dead branch).
inline const double* out_grad(const std::shared_ptr<TensorImpl>& o) {
    return o->grad.empty() ? nullptr : o->grad.data();
}

inline size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
}

}  // namespace bat::detail
