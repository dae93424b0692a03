#include "bat/metrics.hpp"

#include <cmath>
#include <numbers>

namespace bat {

Metrics compute_metrics(const FlowField& pred, const FlowField& gt,
                        const std::vector<uint8_t>& valid) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw ShapeMismatch("compute_metrics: field sizes differ");
    const size_t npix = static_cast<size_t>(pred.width) * pred.height;
    if (!valid.empty() && valid.size() != npix)
        throw ShapeMismatch("compute_metrics: mask size mismatch");

    Metrics m;
    size_t count = 0;
    double sum_epe = 0.0, sum_ae = 0.0;
    size_t over1 = 0, over2 = 0, over3 = 0, outliers = 0;
    for (size_t i = 0; i < npix; ++i) {
        if (!valid.empty() && !valid[i]) continue;
        ++count;
        const double du = pred.uv[2 * i] - gt.uv[2 * i];
        const double dv = pred.uv[2 * i + 1] - gt.uv[2 * i + 1];
        const double epe = std::sqrt(du * du + dv * dv);
        sum_epe += epe;
        if (epe > 1.0) ++over1;
        if (epe > 2.0) ++over2;
        if (epe > 3.0) ++over3;
        const double gu = gt.uv[2 * i], gv = gt.uv[2 * i + 1];
        const double mag = std::sqrt(gu * gu + gv * gv);
        if (epe > 3.0 && epe > 0.05 * mag) ++outliers;
        const double pu = pred.uv[2 * i], pv = pred.uv[2 * i + 1];
        // Angle between (pu,pv,1) and (gu,gv,1) via atan2(|cross|, dot):
        // stable for small angles and exactly zero for identical flows,
        // where acos(dot/(|a||b|)) picks up rounding from the norms.
        const double cx = pv - gv;
        const double cy = gu - pu;
        const double cz = pu * gv - pv * gu;
        const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
        const double dot = pu * gu + pv * gv + 1.0;
        sum_ae += std::atan2(cross, dot) * 180.0 / std::numbers::pi;
    }
    if (count == 0) throw EmptyMask("compute_metrics: no valid pixels");
    const double inv = 1.0 / static_cast<double>(count);
    m.epe = sum_epe * inv;
    m.npe1 = 100.0 * static_cast<double>(over1) * inv;
    m.npe2 = 100.0 * static_cast<double>(over2) * inv;
    m.npe3 = 100.0 * static_cast<double>(over3) * inv;
    m.ae = sum_ae * inv;
    m.pct_out = 100.0 * static_cast<double>(outliers) * inv;
    return m;
}

Tensor flow_to_tensor(const FlowField& f) {
    const size_t npix = static_cast<size_t>(f.width) * f.height;
    std::vector<double> data(2 * npix);
    for (size_t i = 0; i < npix; ++i) {
        data[i] = f.uv[2 * i];
        data[npix + i] = f.uv[2 * i + 1];
    }
    return Tensor::from({2, f.height, f.width}, std::move(data));
}

FlowField tensor_to_flow(const Tensor& t, FlowResolution res) {
    if (t.ndim() != 3 || t.dim(0) != 2) throw ShapeMismatch("tensor_to_flow: expected 2×H×W");
    FlowField f;
    f.height = t.dim(1);
    f.width = t.dim(2);
    f.res = res;
    const size_t npix = static_cast<size_t>(f.width) * f.height;
    f.uv.resize(2 * npix);
    for (size_t i = 0; i < npix; ++i) {
        f.uv[2 * i] = t.data()[i];
        f.uv[2 * i + 1] = t.data()[npix + i];
    }
    return f;
}

Tensor sequence_loss(const std::vector<Tensor>& preds, const Tensor& gt, const Tensor& valid,
                     double gamma) {
    if (preds.empty()) throw ShapeMismatch("sequence_loss: no predictions");
    if (gamma <= 0.0 || gamma > 1.0) throw BadConfig("sequence_loss: gamma must be in (0, 1]");
    for (const Tensor& p : preds)
        if (p.shape() != gt.shape()) throw ShapeMismatch("sequence_loss: pred/gt shape mismatch");
    if (gt.ndim() != 3 || gt.dim(0) != 2) throw ShapeMismatch("sequence_loss: fields must be 2×H×W");

    Tensor mask = valid;
    if (!mask.defined()) mask = Tensor::full({1, gt.dim(1), gt.dim(2)}, 1.0);
    if (mask.ndim() != 3 || mask.dim(0) != 1 || mask.dim(1) != gt.dim(1) || mask.dim(2) != gt.dim(2))
        throw ShapeMismatch("sequence_loss: mask must be 1×H×W");
    double denom = 0.0;
    for (size_t i = 0; i < mask.numel(); ++i) denom += mask.data()[i];
    if (denom <= 0.0) throw EmptyMask("sequence_loss: mask sums to zero");

    const int k = static_cast<int>(preds.size());
    Tensor total = Tensor::scalar(0.0);
    for (int i = 1; i <= k; ++i) {
        const Tensor diff = abs(sub(preds[static_cast<size_t>(i - 1)], gt));
        const Tensor masked = mul_spatial(diff, mask);
        const double weight = std::pow(gamma, static_cast<double>(k - i));
        total = add(total, mul_scalar(sum(masked), weight / denom));
    }
    return total;
}

}  // namespace bat
