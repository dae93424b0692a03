#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "bat/grad_check.hpp"
#include "bat/tensor.hpp"
#include "doctest.h"

using namespace bat;

namespace {

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double scale = 1.0,
                     bool requires_grad = true) {
    std::normal_distribution<double> dist(0.0, scale);
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    std::vector<double> data(n);
    for (double& v : data) v = dist(rng);
    return Tensor::from(std::move(shape), std::move(data), requires_grad);
}

// Coords kept away from lattice points, where the bilinear derivative jumps.
Tensor random_coords(int h, int w, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> frac(0.15, 0.85);
    std::uniform_int_distribution<int> cx(0, w - 2), cy(0, h - 2);
    std::vector<double> data(static_cast<size_t>(2) * h * w);
    for (int i = 0; i < h * w; ++i) {
        data[i] = cx(rng) + frac(rng);
        data[h * w + i] = cy(rng) + frac(rng);
    }
    return Tensor::from({2, h, w}, std::move(data), true);
}

constexpr int kSeeds = 20;

}  // namespace

TEST_CASE("grad_check itself: polynomial is near-exact") {
    std::mt19937_64 rng(1);
    Tensor x = random_tensor({6}, rng);
    const GradCheckReport r = grad_check([&] { return sum(mul(x, x)); }, {x});
    CHECK(r.max_rel_err < 1e-8);
    CHECK(r.coords_checked == 6);
}

TEST_CASE("elementwise chain") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed);
        Tensor a = random_tensor({3, 4}, rng);
        Tensor b = random_tensor({3, 4}, rng);
        const auto loss = [&] {
            return sum(mul(sigmoid(a), bat::tanh(add(mul(a, b), mul_scalar(b, 0.5)))));
        };
        CHECK(grad_check(loss, {a, b}).max_rel_err < 1e-4);
    }
}

TEST_CASE("relu, abs, clamp away from kinks") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 100);
        Tensor a = random_tensor({20}, rng);
        for (size_t i = 0; i < a.numel(); ++i)
            if (std::abs(a.data()[i]) < 0.05) a.data()[i] = 0.1;
        const auto loss = [&] { return sum(add(relu(a), mul_scalar(bat::abs(a), 0.25))); };
        CHECK(grad_check(loss, {a}).max_rel_err < 1e-4);
    }
}

TEST_CASE("matmul and reductions") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 200);
        Tensor a = random_tensor({3, 4}, rng);
        Tensor b = random_tensor({4, 2}, rng);
        const auto loss = [&] { return mean(mul(matmul(a, b), matmul(a, b))); };
        CHECK(grad_check(loss, {a, b}).max_rel_err < 1e-4);
    }
}

TEST_CASE("concat, slice, reshape plumbing") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 300);
        Tensor a = random_tensor({2, 3}, rng);
        Tensor b = random_tensor({1, 3}, rng);
        const auto loss = [&] {
            const Tensor cat = concat0({a, b});
            return sum(mul(slice0(cat, 1, 3), slice0(cat, 0, 2)));
        };
        CHECK(grad_check(loss, {a, b}).max_rel_err < 1e-4);
    }
}

TEST_CASE("conv2d including stride, groups, asymmetric padding") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 400);
        Tensor x = random_tensor({4, 6, 5}, rng);
        Tensor w = random_tensor({4, 2, 3, 3}, rng, 0.5);
        Tensor b = random_tensor({4}, rng);
        const int stride = 1 + static_cast<int>(seed % 2);
        const auto loss = [&] {
            const Tensor y = conv2d(x, w, b, stride, 1, 2, 2);
            return sum(mul(y, y));
        };
        CHECK(grad_check(loss, {x, w, b}, 1e-5, 24).max_rel_err < 1e-4);
    }
}

TEST_CASE("sigmoid of conv matches finite differences") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 500);
        Tensor x = random_tensor({2, 5, 5}, rng);
        Tensor w = random_tensor({3, 2, 3, 3}, rng, 0.5);
        const auto loss = [&] { return sum(sigmoid(conv2d(x, w, Tensor(), 1, 1))); };
        CHECK(grad_check(loss, {x, w}, 1e-5, 24).max_rel_err < 1e-4);
    }
}

TEST_CASE("bilinear_sample w.r.t. source and coords") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 600);
        Tensor src = random_tensor({3, 6, 6}, rng);
        Tensor coords = random_coords(4, 4, rng);
        const auto loss = [&] {
            const Tensor y = bilinear_sample(src, coords);
            return sum(mul(y, y));
        };
        CHECK(grad_check(loss, {src, coords}, 1e-5, 24).max_rel_err < 1e-4);
    }
}

TEST_CASE("instance_norm") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 700);
        Tensor x = random_tensor({3, 4, 4}, rng);
        const auto loss = [&] {
            const Tensor y = instance_norm(x);
            return sum(mul(y, bat::tanh(y)));
        };
        CHECK(grad_check(loss, {x}, 1e-5, 24).max_rel_err < 1e-4);
    }
}

TEST_CASE("avg_pool2d") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 800);
        Tensor x = random_tensor({2, 6, 6}, rng);
        const auto loss = [&] {
            const Tensor y = avg_pool2d(x, 2);
            return sum(mul(y, y));
        };
        CHECK(grad_check(loss, {x}).max_rel_err < 1e-4);
    }
}

TEST_CASE("scale_by, dot_channels, mul_spatial") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 900);
        Tensor a = random_tensor({3, 4, 4}, rng);
        Tensor b = random_tensor({3, 4, 4}, rng);
        Tensor gate = random_tensor({1, 4, 4}, rng);
        Tensor s = random_tensor({1}, rng);
        const auto loss = [&] {
            return sum(mul_spatial(scale_by(a, s), sigmoid(dot_channels(a, mul_spatial(b, gate)))));
        };
        CHECK(grad_check(loss, {a, b, gate, s}, 1e-5, 24).max_rel_err < 1e-4);
    }
}

TEST_CASE("softmax attention composite") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 1000);
        Tensor q = random_tensor({4, 3, 3}, rng);
        Tensor k = random_tensor({5, 4, 3, 3}, rng);
        Tensor v = random_tensor({5, 4, 3, 3}, rng);
        const auto loss = [&] {
            const Tensor y = pointwise_attention(q, k, v);
            return sum(mul(y, y));
        };
        CHECK(grad_check(loss, {q, k, v}, 1e-5, 16).max_rel_err < 1e-4);
    }
}

TEST_CASE("convex_upsample w.r.t. flow and mask") {
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(seed + 1100);
        Tensor flow = random_tensor({2, 3, 3}, rng);
        Tensor mask = random_tensor({9 * 4, 3, 3}, rng);
        const auto loss = [&] {
            const Tensor y = convex_upsample(flow, mask, 2);
            return sum(mul(y, y));
        };
        CHECK(grad_check(loss, {flow, mask}, 1e-5, 16).max_rel_err < 1e-4);
    }
}
