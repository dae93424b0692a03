#include <cmath>

#include "tensor_common.hpp"

namespace bat {

using detail::check_finite;
using detail::out_grad;
using detail::record;
using detail::want_grad;

Tensor bilinear_sample(const Tensor& src, const Tensor& coords) {
    if (src.ndim() != 3) throw ShapeMismatch("bilinear_sample: src must be C×H×W");
    if (coords.ndim() != 3 || coords.dim(0) != 2)
        throw ShapeMismatch("bilinear_sample: coords must be 2×H'×W'");
    const int c = src.dim(0), h = src.dim(1), w = src.dim(2);
    const int ho = coords.dim(1), wo = coords.dim(2);
    const size_t npix = static_cast<size_t>(ho) * wo;
    Tensor out = Tensor::zeros({c, ho, wo});
    const double* sd = src.data();
    const double* cd = coords.data();
    double* od = out.data();

    auto tap = [&](int cc, int yy, int xx) -> double {
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;
        return sd[(static_cast<size_t>(cc) * h + yy) * w + xx];
    };

    for (size_t p = 0; p < npix; ++p) {
        const double x = cd[p], y = cd[npix + p];
        if (!std::isfinite(x) || !std::isfinite(y))
            throw NumericError("bilinear_sample: non-finite coordinate");
        const double fx = std::floor(x), fy = std::floor(y);
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
        const double dx = x - fx, dy = y - fy;
        // All four taps out of bounds: zero padding leaves the output at 0.
        if (x0 < -1 || x0 >= w || y0 < -1 || y0 >= h) continue;
        const double w00 = (1.0 - dx) * (1.0 - dy), w10 = dx * (1.0 - dy);
        const double w01 = (1.0 - dx) * dy, w11 = dx * dy;
        for (int cc = 0; cc < c; ++cc) {
            od[static_cast<size_t>(cc) * npix + p] =
                w00 * tap(cc, y0, x0) + w10 * tap(cc, y0, x0 + 1) + w01 * tap(cc, y0 + 1, x0) +
                w11 * tap(cc, y0 + 1, x0 + 1);
        }
    }
    check_finite(out, "bilinear_sample");

    if (want_grad({&src, &coords})) {
        out.set_requires_grad(true);
        auto si = src.impl(), ci = coords.impl(), oi = out.impl();
        record([si, ci, oi, c, h, w, npix]() {
            const double* g = out_grad(oi);
            if (!g) return;
            double* gs = si->requires_grad ? si->ensure_grad().data() : nullptr;
            double* gc = ci->requires_grad ? ci->ensure_grad().data() : nullptr;
            const double* sd = si->data.data();
            auto tap = [&](int cc, int yy, int xx) -> double {
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;
                return sd[(static_cast<size_t>(cc) * h + yy) * w + xx];
            };
            for (size_t p = 0; p < npix; ++p) {
                const double x = ci->data[p], y = ci->data[npix + p];
                const double fx = std::floor(x), fy = std::floor(y);
                const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
                const double dx = x - fx, dy = y - fy;
                if (x0 < -1 || x0 >= w || y0 < -1 || y0 >= h) continue;
                const double w00 = (1.0 - dx) * (1.0 - dy), w10 = dx * (1.0 - dy);
                const double w01 = (1.0 - dx) * dy, w11 = dx * dy;
                double gx_acc = 0.0, gy_acc = 0.0;
                for (int cc = 0; cc < c; ++cc) {
                    const double gv = g[static_cast<size_t>(cc) * npix + p];
                    if (gv == 0.0) continue;
                    if (gs) {
                        auto bump = [&](int yy, int xx, double wt) {
                            if (yy < 0 || yy >= h || xx < 0 || xx >= w || wt == 0.0) return;
                            gs[(static_cast<size_t>(cc) * h + yy) * w + xx] += gv * wt;
                        };
                        bump(y0, x0, w00);
                        bump(y0, x0 + 1, w10);
                        bump(y0 + 1, x0, w01);
                        bump(y0 + 1, x0 + 1, w11);
                    }
                    if (gc) {
                        const double v00 = tap(cc, y0, x0), v10 = tap(cc, y0, x0 + 1);
                        const double v01 = tap(cc, y0 + 1, x0), v11 = tap(cc, y0 + 1, x0 + 1);
                        gx_acc += gv * ((1.0 - dy) * (v10 - v00) + dy * (v11 - v01));
                        gy_acc += gv * ((1.0 - dx) * (v01 - v00) + dx * (v11 - v10));
                    }
                }
                if (gc) {
                    gc[p] += gx_acc;
                    gc[npix + p] += gy_acc;
                }
            }
        });
    }
    return out;
}

Tensor dot_channels(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 3 || a.shape() != b.shape())
        throw ShapeMismatch("dot_channels: inputs must be identical C×H×W");
    const int c = a.dim(0);
    const size_t npix = a.numel() / static_cast<size_t>(c);
    Tensor out = Tensor::zeros({1, a.dim(1), a.dim(2)});
    const double* ad = a.data();
    const double* bd = b.data();
    double* od = out.data();
    for (int cc = 0; cc < c; ++cc) {
        const double* ap = ad + cc * npix;
        const double* bp = bd + cc * npix;
        for (size_t p = 0; p < npix; ++p) od[p] += ap[p] * bp[p];
    }
    check_finite(out, "dot_channels");
    if (want_grad({&a, &b})) {
        out.set_requires_grad(true);
        auto ai = a.impl(), bi = b.impl(), oi = out.impl();
        record([ai, bi, oi, c, npix]() {
            const double* g = out_grad(oi);
            if (!g) return;
            if (ai->requires_grad) {
                auto& ga = ai->ensure_grad();
                for (int cc = 0; cc < c; ++cc)
                    for (size_t p = 0; p < npix; ++p)
                        ga[cc * npix + p] += g[p] * bi->data[cc * npix + p];
            }
            if (bi->requires_grad) {
                auto& gb = bi->ensure_grad();
                for (int cc = 0; cc < c; ++cc)
                    for (size_t p = 0; p < npix; ++p)
                        gb[cc * npix + p] += g[p] * ai->data[cc * npix + p];
            }
        });
    }
    return out;
}

Tensor mul_spatial(const Tensor& x, const Tensor& gate) {
    if (x.ndim() != 3 || gate.ndim() != 3 || gate.dim(0) != 1 || gate.dim(1) != x.dim(1) ||
        gate.dim(2) != x.dim(2))
        throw ShapeMismatch("mul_spatial: x C×H×W, gate 1×H×W");
    const int c = x.dim(0);
    const size_t npix = x.numel() / static_cast<size_t>(c);
    Tensor out = Tensor::zeros(x.shape());
    const double* xd = x.data();
    const double* gd = gate.data();
    double* od = out.data();
    for (int cc = 0; cc < c; ++cc)
        for (size_t p = 0; p < npix; ++p) od[cc * npix + p] = xd[cc * npix + p] * gd[p];
    check_finite(out, "mul_spatial");
    if (want_grad({&x, &gate})) {
        out.set_requires_grad(true);
        auto xi = x.impl(), gi = gate.impl(), oi = out.impl();
        record([xi, gi, oi, c, npix]() {
            const double* g = out_grad(oi);
            if (!g) return;
            if (xi->requires_grad) {
                auto& gx = xi->ensure_grad();
                for (int cc = 0; cc < c; ++cc)
                    for (size_t p = 0; p < npix; ++p) gx[cc * npix + p] += g[cc * npix + p] * gi->data[p];
            }
            if (gi->requires_grad) {
                auto& gg = gi->ensure_grad();
                for (int cc = 0; cc < c; ++cc)
                    for (size_t p = 0; p < npix; ++p) gg[p] += g[cc * npix + p] * xi->data[cc * npix + p];
            }
        });
    }
    return out;
}

Tensor pointwise_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                           Tensor* weights_out) {
    if (q.ndim() != 3 || k.ndim() != 4 || v.ndim() != 4)
        throw ShapeMismatch("pointwise_attention: q D×H×W, k/v P×D×H×W");
    const int d = q.dim(0), h = q.dim(1), w = q.dim(2);
    const int np = k.dim(0);
    if (k.dim(1) != d || k.dim(2) != h || k.dim(3) != w || v.shape() != k.shape())
        throw ShapeMismatch("pointwise_attention: k/v shape mismatch");
    const size_t npix = static_cast<size_t>(h) * w;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    Tensor out = Tensor::zeros({d, h, w});
    auto attn = std::make_shared<std::vector<double>>(static_cast<size_t>(np) * npix);
    const double* qd = q.data();
    const double* kd = k.data();
    const double* vd = v.data();
    double* od = out.data();
    double* ad = attn->data();

    for (size_t p = 0; p < npix; ++p) {
        double mx = -1e300;
        for (int j = 0; j < np; ++j) {
            double s = 0.0;
            for (int cc = 0; cc < d; ++cc)
                s += qd[cc * npix + p] * kd[(static_cast<size_t>(j) * d + cc) * npix + p];
            s *= scale;
            ad[j * npix + p] = s;
            mx = std::max(mx, s);
        }
        double denom = 0.0;
        for (int j = 0; j < np; ++j) {
            const double e = std::exp(ad[j * npix + p] - mx);
            ad[j * npix + p] = e;
            denom += e;
        }
        for (int j = 0; j < np; ++j) {
            ad[j * npix + p] /= denom;
            const double a = ad[j * npix + p];
            for (int cc = 0; cc < d; ++cc)
                od[cc * npix + p] += a * vd[(static_cast<size_t>(j) * d + cc) * npix + p];
        }
    }
    check_finite(out, "pointwise_attention");
    if (weights_out) *weights_out = Tensor::from({np, h, w}, *attn);

    if (want_grad({&q, &k, &v})) {
        out.set_requires_grad(true);
        auto qi = q.impl(), ki = k.impl(), vi = v.impl(), oi = out.impl();
        record([qi, ki, vi, oi, attn, d, np, npix, scale]() {
            const double* g = out_grad(oi);
            if (!g) return;
            double* gq = qi->requires_grad ? qi->ensure_grad().data() : nullptr;
            double* gk = ki->requires_grad ? ki->ensure_grad().data() : nullptr;
            double* gv = vi->requires_grad ? vi->ensure_grad().data() : nullptr;
            const double* ad = attn->data();
            std::vector<double> da(static_cast<size_t>(np));
            for (size_t p = 0; p < npix; ++p) {
                double dot = 0.0;
                for (int j = 0; j < np; ++j) {
                    double acc = 0.0;
                    for (int cc = 0; cc < d; ++cc)
                        acc += g[cc * npix + p] * vi->data[(static_cast<size_t>(j) * d + cc) * npix + p];
                    da[static_cast<size_t>(j)] = acc;
                    dot += ad[j * npix + p] * acc;
                    if (gv) {
                        const double a = ad[j * npix + p];
                        for (int cc = 0; cc < d; ++cc)
                            gv[(static_cast<size_t>(j) * d + cc) * npix + p] += a * g[cc * npix + p];
                    }
                }
                for (int j = 0; j < np; ++j) {
                    const double ds = ad[j * npix + p] * (da[static_cast<size_t>(j)] - dot) * scale;
                    if (ds == 0.0) continue;
                    for (int cc = 0; cc < d; ++cc) {
                        const size_t kidx = (static_cast<size_t>(j) * d + cc) * npix + p;
                        if (gq) gq[cc * npix + p] += ds * ki->data[kidx];
                        if (gk) gk[kidx] += ds * qi->data[cc * npix + p];
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace bat
