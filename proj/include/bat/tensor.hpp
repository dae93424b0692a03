#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "bat/errors.hpp"

namespace bat {

struct TensorImpl {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;

    std::vector<double>& ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
        return grad;
    }
};

// Dense row-major double tensor with value semantics over a shared impl.
// Every op validates shapes, checks outputs for NaN/Inf eagerly, and records
// a backward closure on the active tape when any input requires gradients.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(impl_); }
    const std::vector<int>& shape() const { return impl_->shape; }
    int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(impl_->shape.size()); }
    size_t numel() const { return impl_->data.size(); }
    double* data() { return impl_->data.data(); }
    const double* data() const { return impl_->data.data(); }
    std::vector<double>& vec() { return impl_->data; }
    const std::vector<double>& vec() const { return impl_->data; }
    double item() const;

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    Tensor& set_requires_grad(bool v) {
        impl_->requires_grad = v;
        return *this;
    }
    // Same values, no gradient flow, independent storage.
    Tensor detach() const;
    Tensor clone() const { return detach(); }

    std::vector<double>& grad() { return impl_->ensure_grad(); }
    const std::vector<double>& grad() const { return impl_->ensure_grad(); }
    bool has_grad() const { return impl_ && !impl_->grad.empty(); }
    void zero_grad() {
        if (impl_) impl_->grad.assign(impl_->data.size(), 0.0);
    }

    std::shared_ptr<TensorImpl> impl() const { return impl_; }
    static Tensor wrap(std::shared_ptr<TensorImpl> impl) { return Tensor(std::move(impl)); }

  private:
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
    mutable std::shared_ptr<TensorImpl> impl_;
};

// Records backward closures for ops executed in its scope; one thread-local
// tape is active at a time (nesting restores the previous one). backward()
// replays nodes in reverse recording order, exactly once.
class Tape {
  public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();
    void record(std::function<void()> node) { nodes_.push_back(std::move(node)); }

    friend void backward(const Tensor& loss);

  private:
    std::vector<std::function<void()>> nodes_;
    bool consumed_ = false;
    Tape* prev_ = nullptr;
};

// Scope guard suspending gradient recording (inference / finite differences).
class NoGrad {
  public:
    NoGrad();
    ~NoGrad();
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;

  private:
    Tape* saved_;
};

// Scalar loss -> gradients on every contributing tensor with requires_grad.
void backward(const Tensor& loss);

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor scale_by(const Tensor& x, const Tensor& s);  // s is a 1-element tensor
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor clamp_min(const Tensor& a, double lo);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator+(const Tensor& a, double s) { return add_scalar(a, s); }
inline Tensor operator*(const Tensor& a, double s) { return mul_scalar(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return mul_scalar(a, s); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

// ---- reductions & shaping ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor concat0(const std::vector<Tensor>& parts);
Tensor slice0(const Tensor& a, int begin, int end);
Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k]x[k,n] -> [m,n]

// ---- convolution & normalization ----
// x: C_in×H×W, w: C_out×(C_in/groups)×kh×kw, b: C_out or undefined.
// Cross-correlation with zero padding (pad_h rows, pad_w columns).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad_h,
              int pad_w, int groups = 1);
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    return conv2d(x, w, b, stride, pad, pad, 1);
}
Tensor avg_pool2d(const Tensor& x, int k);  // stride k, floor semantics
Tensor instance_norm(const Tensor& x, double eps = 1e-5);  // per-channel over H×W, no affine
// RAFT-style learned upsampling: out(c, y·s+dy, x·s+dx) is a softmax-weighted
// (over the 3×3 neighborhood, zero-padded) combination of s·flow. Mask logits
// are (9·s·s)×H×W with channel index j·s·s + dy·s + dx, j row-major over the
// 3×3 neighborhood.
Tensor convex_upsample(const Tensor& flow, const Tensor& mask_logits, int s);

// ---- sampling & attention ----
// src: C×H×W; coords: 2×H'×W' with channel 0 = x, channel 1 = y in source
// pixel units. Out-of-bounds taps read zero. Differentiable in both inputs.
Tensor bilinear_sample(const Tensor& src, const Tensor& coords);
Tensor dot_channels(const Tensor& a, const Tensor& b);      // D×H×W ⋅ D×H×W -> 1×H×W
Tensor mul_spatial(const Tensor& x, const Tensor& gate);    // C×H×W ⊙ 1×H×W
// q: D×H×W, k/v: P×D×H×W. Per pixel: softmax_p(q·k_p/√D) convex-combines v_p.
// weights_out, when given, receives the detached P×H×W attention weights.
Tensor pointwise_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                           Tensor* weights_out = nullptr);

}  // namespace bat
