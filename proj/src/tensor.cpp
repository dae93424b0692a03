#include "bat/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "tensor_common.hpp"

namespace bat {

using detail::check_finite;
using detail::out_grad;
using detail::record;
using detail::shape_numel;
using detail::want_grad;

namespace {

thread_local Tape* g_active_tape = nullptr;

Tensor make(std::vector<int> shape) {
    auto impl = std::make_shared<TensorImpl>();
    impl->data.assign(shape_numel(shape), 0.0);
    impl->shape = std::move(shape);
    return Tensor::wrap(std::move(impl));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) throw ShapeMismatch(std::string(op) + ": shapes differ");
}

// Elementwise unary op plus a backward that maps (output grad, input value,
// output value) -> input grad contribution.
template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& x, const char* name, Fwd fwd, Bwd dfdx) {
    Tensor out = make(x.shape());
    const double* xd = x.data();
    double* od = out.data();
    const size_t n = x.numel();
    for (size_t i = 0; i < n; ++i) od[i] = fwd(xd[i]);
    check_finite(out, name);
    if (want_grad({&x})) {
        out.set_requires_grad(true);
        auto xi = x.impl(), oi = out.impl();
        record([xi, oi, dfdx]() {
            const double* g = out_grad(oi);
            if (!g) return;
            auto& gx = xi->ensure_grad();
            for (size_t i = 0; i < xi->data.size(); ++i)
                gx[i] += g[i] * dfdx(xi->data[i], oi->data[i]);
        });
    }
    return out;
}

}  // namespace

// ---- Tensor ----

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    Tensor t = make(std::move(shape));
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    Tensor t = make(std::move(shape));
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != data.size())
        throw ShapeMismatch("Tensor::from: data length does not match shape");
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return Tensor::wrap(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

double Tensor::item() const {
    if (!impl_ || impl_->data.size() != 1) throw NotScalar("item() requires a 1-element tensor");
    return impl_->data[0];
}

Tensor Tensor::detach() const {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    return Tensor::wrap(std::move(impl));
}

// ---- Tape ----

Tape::Tape() : prev_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

NoGrad::NoGrad() : saved_(g_active_tape) { g_active_tape = nullptr; }

NoGrad::~NoGrad() { g_active_tape = saved_; }

void backward(const Tensor& loss) {
    Tape* tape = g_active_tape;
    if (!tape) throw NoTape("backward() requires an active tape");
    if (tape->consumed_) throw TapeConsumed("tape already consumed by a prior backward()");
    if (!loss.defined() || loss.numel() != 1) throw NotScalar("backward() requires a scalar loss");
    tape->consumed_ = true;
    if (loss.requires_grad()) loss.impl()->ensure_grad()[0] += 1.0;
    for (auto it = tape->nodes_.rbegin(); it != tape->nodes_.rend(); ++it) (*it)();
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = make(a.shape());
    const double* ad = a.data();
    const double* bd = b.data();
    double* od = out.data();
    for (size_t i = 0; i < a.numel(); ++i) od[i] = ad[i] + bd[i];
    check_finite(out, "add");
    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ai = a.impl(), bi = b.impl(), oi = out.impl();
        record([ai, bi, oi]() {
            const double* g = out_grad(oi);
            if (!g) return;
            if (ai->requires_grad) {
                auto& ga = ai->ensure_grad();
                for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
            }
            if (bi->requires_grad) {
                auto& gb = bi->ensure_grad();
                for (size_t i = 0; i < gb.size(); ++i) gb[i] += g[i];
            }
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = make(a.shape());
    const double* ad = a.data();
    const double* bd = b.data();
    double* od = out.data();
    for (size_t i = 0; i < a.numel(); ++i) od[i] = ad[i] - bd[i];
    check_finite(out, "sub");
    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ai = a.impl(), bi = b.impl(), oi = out.impl();
        record([ai, bi, oi]() {
            const double* g = out_grad(oi);
            if (!g) return;
            if (ai->requires_grad) {
                auto& ga = ai->ensure_grad();
                for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
            }
            if (bi->requires_grad) {
                auto& gb = bi->ensure_grad();
                for (size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
            }
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = make(a.shape());
    const double* ad = a.data();
    const double* bd = b.data();
    double* od = out.data();
    for (size_t i = 0; i < a.numel(); ++i) od[i] = ad[i] * bd[i];
    check_finite(out, "mul");
    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ai = a.impl(), bi = b.impl(), oi = out.impl();
        record([ai, bi, oi]() {
            const double* g = out_grad(oi);
            if (!g) return;
            if (ai->requires_grad) {
                auto& ga = ai->ensure_grad();
                for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bi->data[i];
            }
            if (bi->requires_grad) {
                auto& gb = bi->ensure_grad();
                for (size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * ai->data[i];
            }
        });
    }
    return out;
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary_op(a, "add_scalar", [s](double x) { return x + s; },
                    [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
    return unary_op(a, "mul_scalar", [s](double x) { return x * s; },
                    [s](double, double) { return s; });
}

Tensor scale_by(const Tensor& x, const Tensor& s) {
    if (s.numel() != 1) throw ShapeMismatch("scale_by: scale must have exactly one element");
    const double sv = s.data()[0];
    Tensor out = make(x.shape());
    const double* xd = x.data();
    double* od = out.data();
    for (size_t i = 0; i < x.numel(); ++i) od[i] = xd[i] * sv;
    check_finite(out, "scale_by");
    if (want_grad({&x, &s})) {
        out.set_requires_grad(true);
        auto xi = x.impl(), si = s.impl(), oi = out.impl();
        record([xi, si, oi, sv]() {
            const double* g = out_grad(oi);
            if (!g) return;
            if (xi->requires_grad) {
                auto& gx = xi->ensure_grad();
                for (size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * sv;
            }
            if (si->requires_grad) {
                double acc = 0.0;
                for (size_t i = 0; i < xi->data.size(); ++i) acc += g[i] * xi->data[i];
                si->ensure_grad()[0] += acc;
            }
        });
    }
    return out;
}

Tensor neg(const Tensor& a) {
    return unary_op(a, "neg", [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor relu(const Tensor& a) {
    return unary_op(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                    [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
    return unary_op(a, "tanh", [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor abs(const Tensor& a) {
    return unary_op(a, "abs", [](double x) { return std::abs(x); },
                    [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor clamp_min(const Tensor& a, double lo) {
    return unary_op(a, "clamp_min", [lo](double x) { return x < lo ? lo : x; },
                    [lo](double x, double) { return x < lo ? 0.0 : 1.0; });
}

// ---- reductions & shaping ----

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    const double* ad = a.data();
    for (size_t i = 0; i < a.numel(); ++i) acc += ad[i];
    Tensor out = Tensor::scalar(acc);
    check_finite(out, "sum");
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.impl(), oi = out.impl();
        record([ai, oi]() {
            const double* g = out_grad(oi);
            if (!g) return;
            auto& ga = ai->ensure_grad();
            for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
        });
    }
    return out;
}

Tensor mean(const Tensor& a) {
    if (a.numel() == 0) throw ShapeMismatch("mean of an empty tensor");
    return mul_scalar(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
    if (shape_numel(shape) != a.numel()) throw ShapeMismatch("reshape: element count changes");
    Tensor out = Tensor::from(std::move(shape), a.vec());
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.impl(), oi = out.impl();
        record([ai, oi]() {
            const double* g = out_grad(oi);
            if (!g) return;
            auto& ga = ai->ensure_grad();
            for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
        });
    }
    return out;
}

Tensor concat0(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat0 of zero tensors");
    std::vector<int> shape = parts[0].shape();
    if (shape.empty()) throw ShapeMismatch("concat0 requires rank >= 1");
    size_t tail = 1;
    for (size_t i = 1; i < shape.size(); ++i) tail *= static_cast<size_t>(shape[i]);
    int total0 = 0;
    for (const Tensor& p : parts) {
        if (p.ndim() != static_cast<int>(shape.size()))
            throw ShapeMismatch("concat0: rank mismatch");
        for (size_t i = 1; i < shape.size(); ++i)
            if (p.shape()[i] != shape[i]) throw ShapeMismatch("concat0: trailing dims differ");
        total0 += p.shape()[0];
    }
    shape[0] = total0;
    Tensor out = make(shape);
    double* od = out.data();
    size_t off = 0;
    for (const Tensor& p : parts) {
        std::copy(p.data(), p.data() + p.numel(), od + off);
        off += p.numel();
    }
    bool needs = false;
    if (Tape::active())
        for (const Tensor& p : parts)
            if (p.requires_grad()) needs = true;
    if (needs) {
        out.set_requires_grad(true);
        std::vector<std::shared_ptr<TensorImpl>> impls;
        impls.reserve(parts.size());
        for (const Tensor& p : parts) impls.push_back(p.impl());
        auto oi = out.impl();
        record([impls, oi]() {
            const double* g = out_grad(oi);
            if (!g) return;
            size_t off = 0;
            for (const auto& pi : impls) {
                if (pi->requires_grad) {
                    auto& gp = pi->ensure_grad();
                    for (size_t i = 0; i < gp.size(); ++i) gp[i] += g[off + i];
                }
                off += pi->data.size();
            }
        });
    }
    return out;
}

Tensor slice0(const Tensor& a, int begin, int end) {
    if (a.ndim() < 1 || begin < 0 || end > a.dim(0) || begin >= end)
        throw ShapeMismatch("slice0: bad range");
    size_t tail = a.numel() / static_cast<size_t>(a.dim(0));
    std::vector<int> shape = a.shape();
    shape[0] = end - begin;
    Tensor out = make(shape);
    std::copy(a.data() + begin * tail, a.data() + end * tail, out.data());
    if (want_grad({&a})) {
        out.set_requires_grad(true);
        auto ai = a.impl(), oi = out.impl();
        record([ai, oi, begin, tail]() {
            const double* g = out_grad(oi);
            if (!g) return;
            auto& ga = ai->ensure_grad();
            for (size_t i = 0; i < oi->data.size(); ++i) ga[begin * tail + i] += g[i];
        });
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
        throw ShapeMismatch("matmul: requires [m,k] x [k,n]");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out = make({m, n});
    const double* ad = a.data();
    const double* bd = b.data();
    double* od = out.data();
    for (int i = 0; i < m; ++i)
        for (int l = 0; l < k; ++l) {
            const double av = ad[i * k + l];
            for (int j = 0; j < n; ++j) od[i * n + j] += av * bd[l * n + j];
        }
    check_finite(out, "matmul");
    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ai = a.impl(), bi = b.impl(), oi = out.impl();
        record([ai, bi, oi, m, k, n]() {
            const double* g = out_grad(oi);
            if (!g) return;
            if (ai->requires_grad) {
                auto& ga = ai->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int l = 0; l < k; ++l) {
                        double acc = 0.0;
                        for (int j = 0; j < n; ++j) acc += g[i * n + j] * bi->data[l * n + j];
                        ga[i * k + l] += acc;
                    }
            }
            if (bi->requires_grad) {
                auto& gb = bi->ensure_grad();
                for (int l = 0; l < k; ++l)
                    for (int i = 0; i < m; ++i) {
                        const double av = ai->data[i * k + l];
                        for (int j = 0; j < n; ++j) gb[l * n + j] += av * g[i * n + j];
                    }
            }
        });
    }
    return out;
}

}  // namespace bat
