#include <algorithm>
#include <cmath>

#include "tensor_common.hpp"

namespace bat {

using detail::check_finite;
using detail::out_grad;
using detail::record;
using detail::want_grad;

namespace {

inline int ceil_div(int a, int b) { return a > 0 ? (a + b - 1) / b : a / b; }
inline int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

struct ConvDims {
    int cin, h, w;
    int cout, cing, kh, kw;
    int ho, wo;
    int groups, stride, pad_h, pad_w;
    int cin_per_g, cout_per_g;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad_h,
                   int pad_w, int groups) {
    if (x.ndim() != 3 || w.ndim() != 4) throw ShapeMismatch("conv2d: x must be C×H×W, w O×I×kh×kw");
    if (stride < 1 || pad_h < 0 || pad_w < 0 || groups < 1)
        throw ShapeMismatch("conv2d: bad stride/pad/groups");
    ConvDims d;
    d.cin = x.dim(0);
    d.h = x.dim(1);
    d.w = x.dim(2);
    d.cout = w.dim(0);
    d.cing = w.dim(1);
    d.kh = w.dim(2);
    d.kw = w.dim(3);
    d.groups = groups;
    d.stride = stride;
    d.pad_h = pad_h;
    d.pad_w = pad_w;
    if (d.cin % groups != 0 || d.cout % groups != 0 || d.cing * groups != d.cin)
        throw ShapeMismatch("conv2d: channels inconsistent with groups");
    d.cin_per_g = d.cin / groups;
    d.cout_per_g = d.cout / groups;
    d.ho = (d.h + 2 * pad_h - d.kh) / stride + 1;
    d.wo = (d.w + 2 * pad_w - d.kw) / stride + 1;
    if (d.ho < 1 || d.wo < 1) throw ShapeMismatch("conv2d: kernel larger than padded input");
    if (b.defined() && (b.ndim() != 1 || b.dim(0) != d.cout))
        throw ShapeMismatch("conv2d: bias must be C_out");
    return d;
}

// Patch matrix for one group: row (cil,ky,kx) holds the input value each
// output pixel reads through that kernel tap, zero where the tap falls
// outside. Contiguous rows turn the convolution into a plain matrix product
// with unit-stride inner loops, which is what the per-tap loops above lack
// at small spatial sizes.
void fill_col(const double* xd, const ConvDims& d, int g, std::vector<double>& col) {
    const int p = d.ho * d.wo;
    std::fill(col.begin(), col.end(), 0.0);
    for (int cil = 0; cil < d.cin_per_g; ++cil) {
        const int ci = g * d.cin_per_g + cil;
        for (int ky = 0; ky < d.kh; ++ky)
            for (int kx = 0; kx < d.kw; ++kx) {
                double* crow = col.data() + (static_cast<size_t>(cil) * d.kh * d.kw +
                                             static_cast<size_t>(ky) * d.kw + kx) *
                                                p;
                const int xlo = std::max(0, ceil_div(d.pad_w - kx, d.stride));
                const int xhi = std::min(d.wo - 1, floor_div(d.w - 1 - kx + d.pad_w, d.stride));
                if (xlo > xhi) continue;
                const int base = -d.pad_w + kx;
                for (int oy = 0; oy < d.ho; ++oy) {
                    const int iy = oy * d.stride - d.pad_h + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    const double* xrow = xd + (static_cast<size_t>(ci) * d.h + iy) * d.w;
                    double* dst = crow + static_cast<size_t>(oy) * d.wo;
                    if (d.stride == 1) {
                        std::copy(xrow + base + xlo, xrow + base + xhi + 1, dst + xlo);
                    } else {
                        for (int ox = xlo; ox <= xhi; ++ox) dst[ox] = xrow[ox * d.stride + base];
                    }
                }
            }
    }
}

// Scatter-add of a patch-matrix gradient back onto the input plane; the
// exact adjoint of fill_col.
void scatter_col(const std::vector<double>& col, const ConvDims& d, int g, double* gx) {
    const int p = d.ho * d.wo;
    for (int cil = 0; cil < d.cin_per_g; ++cil) {
        const int ci = g * d.cin_per_g + cil;
        for (int ky = 0; ky < d.kh; ++ky)
            for (int kx = 0; kx < d.kw; ++kx) {
                const double* crow = col.data() + (static_cast<size_t>(cil) * d.kh * d.kw +
                                                   static_cast<size_t>(ky) * d.kw + kx) *
                                                      p;
                const int xlo = std::max(0, ceil_div(d.pad_w - kx, d.stride));
                const int xhi = std::min(d.wo - 1, floor_div(d.w - 1 - kx + d.pad_w, d.stride));
                if (xlo > xhi) continue;
                const int base = -d.pad_w + kx;
                for (int oy = 0; oy < d.ho; ++oy) {
                    const int iy = oy * d.stride - d.pad_h + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    double* gxrow = gx + (static_cast<size_t>(ci) * d.h + iy) * d.w;
                    const double* src = crow + static_cast<size_t>(oy) * d.wo;
                    if (d.stride == 1) {
                        for (int ox = xlo; ox <= xhi; ++ox) gxrow[ox + base] += src[ox];
                    } else {
                        for (int ox = xlo; ox <= xhi; ++ox) gxrow[ox * d.stride + base] += src[ox];
                    }
                }
            }
    }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad_h,
              int pad_w, int groups) {
    const ConvDims d = conv_dims(x, w, b, stride, pad_h, pad_w, groups);
    Tensor out = Tensor::zeros({d.cout, d.ho, d.wo});
    double* od = out.data();
    const double* xd = x.data();
    const double* wd = w.data();

    if (b.defined()) {
        const double* bd = b.data();
        for (int co = 0; co < d.cout; ++co)
            std::fill(od + static_cast<size_t>(co) * d.ho * d.wo,
                      od + static_cast<size_t>(co + 1) * d.ho * d.wo, bd[co]);
    }
    const int p = d.ho * d.wo;
    const int k = d.cin_per_g * d.kh * d.kw;
    std::vector<double> col(static_cast<size_t>(k) * p);
    for (int g = 0; g < d.groups; ++g) {
        fill_col(xd, d, g, col);
        for (int col_o = 0; col_o < d.cout_per_g; ++col_o) {
            const int co = g * d.cout_per_g + col_o;
            const double* wrow = wd + static_cast<size_t>(co) * k;
            double* orow = od + static_cast<size_t>(co) * p;
            for (int kk = 0; kk < k; ++kk) {
                const double wv = wrow[kk];
                const double* crow = col.data() + static_cast<size_t>(kk) * p;
                for (int j = 0; j < p; ++j) orow[j] += wv * crow[j];
            }
        }
    }
    check_finite(out, "conv2d");

    if (want_grad({&x, &w, &b})) {
        out.set_requires_grad(true);
        auto xi = x.impl(), wi = w.impl(), oi = out.impl();
        auto bi = b.defined() ? b.impl() : nullptr;
        record([xi, wi, bi, oi, d]() {
            const double* g = out_grad(oi);
            if (!g) return;
            if (bi && bi->requires_grad) {
                auto& gb = bi->ensure_grad();
                for (int co = 0; co < d.cout; ++co) {
                    double acc = 0.0;
                    const double* grow = g + static_cast<size_t>(co) * d.ho * d.wo;
                    for (int i = 0; i < d.ho * d.wo; ++i) acc += grow[i];
                    gb[co] += acc;
                }
            }
            const bool need_x = xi->requires_grad;
            const bool need_w = wi->requires_grad;
            if (!need_x && !need_w) return;
            double* gx = need_x ? xi->ensure_grad().data() : nullptr;
            double* gw = need_w ? wi->ensure_grad().data() : nullptr;
            const int p = d.ho * d.wo;
            const int k = d.cin_per_g * d.kh * d.kw;
            std::vector<double> col(static_cast<size_t>(k) * p);
            std::vector<double> gcol(need_x ? col.size() : 0);
            for (int grp = 0; grp < d.groups; ++grp) {
                if (need_w) fill_col(xi->data.data(), d, grp, col);
                if (need_x) std::fill(gcol.begin(), gcol.end(), 0.0);
                for (int col_o = 0; col_o < d.cout_per_g; ++col_o) {
                    const int co = grp * d.cout_per_g + col_o;
                    const double* grow = g + static_cast<size_t>(co) * p;
                    const double* wrow = wi->data.data() + static_cast<size_t>(co) * k;
                    double* gwrow = need_w ? gw + static_cast<size_t>(co) * k : nullptr;
                    for (int kk = 0; kk < k; ++kk) {
                        if (need_w) {
                            const double* crow = col.data() + static_cast<size_t>(kk) * p;
                            double acc = 0.0;
                            for (int j = 0; j < p; ++j) acc += crow[j] * grow[j];
                            gwrow[kk] += acc;
                        }
                        if (need_x) {
                            const double wv = wrow[kk];
                            double* gcrow = gcol.data() + static_cast<size_t>(kk) * p;
                            for (int j = 0; j < p; ++j) gcrow[j] += wv * grow[j];
                        }
                    }
                }
                if (need_x) scatter_col(gcol, d, grp, gx);
            }
        });
    }
    return out;
}

Tensor avg_pool2d(const Tensor& x, int k) {
    if (x.ndim() != 3) throw ShapeMismatch("avg_pool2d: x must be C×H×W");
    if (k < 1) throw ShapeMismatch("avg_pool2d: k must be >= 1");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int ho = h / k, wo = w / k;
    if (ho < 1 || wo < 1) throw ShapeMismatch("avg_pool2d: input smaller than window");
    Tensor out = Tensor::zeros({c, ho, wo});
    const double inv = 1.0 / (k * k);
    const double* xd = x.data();
    double* od = out.data();
    for (int cc = 0; cc < c; ++cc)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                double acc = 0.0;
                for (int dy = 0; dy < k; ++dy) {
                    const double* row = xd + (static_cast<size_t>(cc) * h + oy * k + dy) * w + ox * k;
                    for (int dx = 0; dx < k; ++dx) acc += row[dx];
                }
                od[(static_cast<size_t>(cc) * ho + oy) * wo + ox] = acc * inv;
            }
    check_finite(out, "avg_pool2d");
    if (want_grad({&x})) {
        out.set_requires_grad(true);
        auto xi = x.impl(), oi = out.impl();
        record([xi, oi, c, h, w, ho, wo, k, inv]() {
            const double* g = out_grad(oi);
            if (!g) return;
            auto& gx = xi->ensure_grad();
            for (int cc = 0; cc < c; ++cc)
                for (int oy = 0; oy < ho; ++oy)
                    for (int ox = 0; ox < wo; ++ox) {
                        const double gv = g[(static_cast<size_t>(cc) * ho + oy) * wo + ox] * inv;
                        for (int dy = 0; dy < k; ++dy) {
                            double* row =
                                gx.data() + (static_cast<size_t>(cc) * h + oy * k + dy) * w + ox * k;
                            for (int dx = 0; dx < k; ++dx) row[dx] += gv;
                        }
                    }
        });
    }
    return out;
}

Tensor instance_norm(const Tensor& x, double eps) {
    if (x.ndim() != 3) throw ShapeMismatch("instance_norm: x must be C×H×W");
    const int c = x.dim(0);
    const size_t plane = x.numel() / static_cast<size_t>(c);
    Tensor out = Tensor::zeros(x.shape());
    std::vector<double> inv_std(static_cast<size_t>(c));
    const double* xd = x.data();
    double* od = out.data();
    for (int cc = 0; cc < c; ++cc) {
        const double* xp = xd + cc * plane;
        double mu = 0.0;
        for (size_t i = 0; i < plane; ++i) mu += xp[i];
        mu /= static_cast<double>(plane);
        double var = 0.0;
        for (size_t i = 0; i < plane; ++i) var += (xp[i] - mu) * (xp[i] - mu);
        var /= static_cast<double>(plane);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<size_t>(cc)] = is;
        double* op = od + cc * plane;
        for (size_t i = 0; i < plane; ++i) op[i] = (xp[i] - mu) * is;
    }
    check_finite(out, "instance_norm");
    if (want_grad({&x})) {
        out.set_requires_grad(true);
        auto xi = x.impl(), oi = out.impl();
        record([xi, oi, c, plane, inv_std]() {
            const double* g = out_grad(oi);
            if (!g) return;
            auto& gx = xi->ensure_grad();
            for (int cc = 0; cc < c; ++cc) {
                const double* gp = g + cc * plane;
                const double* yp = oi->data.data() + cc * plane;
                double gmean = 0.0, gymean = 0.0;
                for (size_t i = 0; i < plane; ++i) {
                    gmean += gp[i];
                    gymean += gp[i] * yp[i];
                }
                gmean /= static_cast<double>(plane);
                gymean /= static_cast<double>(plane);
                const double is = inv_std[static_cast<size_t>(cc)];
                double* gxp = gx.data() + cc * plane;
                for (size_t i = 0; i < plane; ++i)
                    gxp[i] += is * (gp[i] - gmean - yp[i] * gymean);
            }
        });
    }
    return out;
}

Tensor convex_upsample(const Tensor& flow, const Tensor& mask_logits, int s) {
    if (flow.ndim() != 3 || flow.dim(0) != 2) throw ShapeMismatch("convex_upsample: flow must be 2×H×W");
    if (s < 1) throw BadFactor("convex_upsample: s must be >= 1");
    const int h = flow.dim(1), w = flow.dim(2);
    if (mask_logits.ndim() != 3 || mask_logits.dim(0) != 9 * s * s || mask_logits.dim(1) != h ||
        mask_logits.dim(2) != w)
        throw ShapeMismatch("convex_upsample: mask must be (9·s·s)×H×W");

    Tensor out = Tensor::zeros({2, h * s, w * s});
    const double* fd = flow.data();
    const double* md = mask_logits.data();
    double* od = out.data();
    const int wo = w * s;
    // Attention weights kept for the backward pass: (hw, s*s, 9) layout.
    auto weights = std::make_shared<std::vector<double>>(static_cast<size_t>(h) * w * s * s * 9);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int dy = 0; dy < s; ++dy) {
                for (int dx = 0; dx < s; ++dx) {
                    double logits[9];
                    double mx = -1e300;
                    for (int j = 0; j < 9; ++j) {
                        logits[j] =
                            md[((static_cast<size_t>(j) * s * s + dy * s + dx) * h + y) * w + x];
                        mx = std::max(mx, logits[j]);
                    }
                    double denom = 0.0;
                    for (int j = 0; j < 9; ++j) {
                        logits[j] = std::exp(logits[j] - mx);
                        denom += logits[j];
                    }
                    double* wp = weights->data() +
                                 ((static_cast<size_t>(y) * w + x) * s * s + dy * s + dx) * 9;
                    for (int j = 0; j < 9; ++j) wp[j] = logits[j] / denom;
                    for (int ch = 0; ch < 2; ++ch) {
                        double acc = 0.0;
                        for (int j = 0; j < 9; ++j) {
                            const int ny = y + j / 3 - 1, nx = x + j % 3 - 1;
                            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                            acc += wp[j] * fd[(static_cast<size_t>(ch) * h + ny) * w + nx];
                        }
                        od[(static_cast<size_t>(ch) * h * s + y * s + dy) * wo + x * s + dx] =
                            s * acc;
                    }
                }
            }
        }
    }
    check_finite(out, "convex_upsample");

    if (want_grad({&flow, &mask_logits})) {
        out.set_requires_grad(true);
        auto fi = flow.impl(), mi = mask_logits.impl(), oi = out.impl();
        record([fi, mi, oi, weights, h, w, s, wo]() {
            const double* g = out_grad(oi);
            if (!g) return;
            double* gf = fi->requires_grad ? fi->ensure_grad().data() : nullptr;
            double* gm = mi->requires_grad ? mi->ensure_grad().data() : nullptr;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    for (int dy = 0; dy < s; ++dy)
                        for (int dx = 0; dx < s; ++dx) {
                            const double* wp =
                                weights->data() +
                                ((static_cast<size_t>(y) * w + x) * s * s + dy * s + dx) * 9;
                            double da[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
                            for (int ch = 0; ch < 2; ++ch) {
                                const double gv =
                                    g[(static_cast<size_t>(ch) * h * s + y * s + dy) * wo + x * s +
                                      dx] *
                                    s;
                                if (gv == 0.0) continue;
                                for (int j = 0; j < 9; ++j) {
                                    const int ny = y + j / 3 - 1, nx = x + j % 3 - 1;
                                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                                    const size_t fidx = (static_cast<size_t>(ch) * h + ny) * w + nx;
                                    if (gf) gf[fidx] += gv * wp[j];
                                    da[j] += gv * fi->data[fidx];
                                }
                            }
                            if (gm) {
                                double dot = 0.0;
                                for (int j = 0; j < 9; ++j) dot += wp[j] * da[j];
                                for (int j = 0; j < 9; ++j)
                                    gm[((static_cast<size_t>(j) * s * s + dy * s + dx) * h + y) * w +
                                       x] += wp[j] * (da[j] - dot);
                            }
                        }
        });
    }
    return out;
}

}  // namespace bat
