#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "bat/tensor.hpp"
#include "doctest.h"

using namespace bat;

namespace {

Tensor random_tensor(std::vector<int> shape, uint64_t seed, bool requires_grad = false) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    std::vector<double> data(n);
    for (double& v : data) v = dist(rng);
    return Tensor::from(std::move(shape), std::move(data), requires_grad);
}

}  // namespace

TEST_CASE("elementwise ops and scalar forms") {
    const Tensor a = Tensor::from({3}, {1.0, -2.0, 3.0});
    const Tensor b = Tensor::from({3}, {0.5, 4.0, -1.0});
    CHECK(add(a, b).vec() == std::vector<double>{1.5, 2.0, 2.0});
    CHECK(sub(a, b).vec() == std::vector<double>{0.5, -6.0, 4.0});
    CHECK(mul(a, b).vec() == std::vector<double>{0.5, -8.0, -3.0});
    CHECK(add_scalar(a, 1.0).vec() == std::vector<double>{2.0, -1.0, 4.0});
    CHECK(mul_scalar(a, -2.0).vec() == std::vector<double>{-2.0, 4.0, -6.0});
    CHECK(neg(a).vec() == std::vector<double>{-1.0, 2.0, -3.0});
    CHECK(relu(a).vec() == std::vector<double>{1.0, 0.0, 3.0});
    CHECK(bat::abs(a).vec() == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(clamp_min(a, 0.5).vec() == std::vector<double>{1.0, 0.5, 3.0});
    CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
    CHECK(bat::tanh(Tensor::scalar(0.0)).item() == 0.0);
    CHECK_THROWS_AS(add(a, Tensor::from({2}, {1.0, 2.0})), ShapeMismatch);
}

TEST_CASE("reductions, reshape, concat, slice") {
    const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(sum(a).item() == 21.0);
    CHECK(mean(a).item() == 3.5);
    CHECK(reshape(a, {3, 2}).shape() == std::vector<int>{3, 2});
    CHECK_THROWS_AS(reshape(a, {4, 2}), ShapeMismatch);

    const Tensor b = Tensor::from({1, 3}, {7, 8, 9});
    const Tensor cat = concat0({a, b});
    CHECK(cat.shape() == std::vector<int>{3, 3});
    CHECK(cat.vec() == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Tensor piece = slice0(cat, 1, 3);
    CHECK(piece.shape() == std::vector<int>{2, 3});
    CHECK(piece.vec() == std::vector<double>{4, 5, 6, 7, 8, 9});
}

TEST_CASE("matmul hand case") {
    const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor b = Tensor::from({3, 2}, {7, 8, 9, 10, 11, 12});
    CHECK(matmul(a, b).vec() == std::vector<double>{58, 64, 139, 154});
}

TEST_CASE("conv2d hand case: all-ones 3x3, pad 1") {
    const Tensor x = Tensor::full({1, 3, 3}, 1.0);
    const Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
    const Tensor y = conv2d(x, w, Tensor(), 1, 1);
    REQUIRE(y.shape() == std::vector<int>{1, 3, 3});
    CHECK(y.vec() == std::vector<double>{4, 6, 4, 6, 9, 6, 4, 6, 4});
}

TEST_CASE("conv2d delta kernel is identity, zero kernel is zero") {
    const Tensor x = random_tensor({2, 5, 4}, 1);
    Tensor w = Tensor::zeros({2, 2, 3, 3});
    // Per-channel delta at the kernel centre.
    w.data()[(0 * 2 + 0) * 9 + 4] = 1.0;
    w.data()[(1 * 2 + 1) * 9 + 4] = 1.0;
    CHECK(conv2d(x, w, Tensor(), 1, 1).vec() == x.vec());
    CHECK(sum(bat::abs(conv2d(x, Tensor::zeros({3, 2, 3, 3}), Tensor(), 1, 1))).item() == 0.0);
}

TEST_CASE("conv2d linearity") {
    const Tensor x = random_tensor({3, 6, 5}, 2);
    const Tensor y = random_tensor({3, 6, 5}, 3);
    const Tensor w = random_tensor({4, 3, 3, 3}, 4);
    const Tensor lhs = conv2d(add(mul_scalar(x, 2.5), mul_scalar(y, -1.25)), w, Tensor(), 1, 1);
    const Tensor rhs =
        add(mul_scalar(conv2d(x, w, Tensor(), 1, 1), 2.5), mul_scalar(conv2d(y, w, Tensor(), 1, 1), -1.25));
    for (size_t i = 0; i < lhs.numel(); ++i)
        CHECK(lhs.data()[i] == doctest::Approx(rhs.data()[i]).epsilon(1e-10));
}

TEST_CASE("conv2d stride, asymmetric padding, groups, bias") {
    const Tensor x = random_tensor({4, 7, 6}, 5);
    const Tensor w = random_tensor({4, 2, 1, 5}, 6);  // groups=2, 1x5 kernel
    const Tensor b = random_tensor({4}, 7);
    const Tensor y = conv2d(x, w, b, 1, 0, 2, 2);
    CHECK(y.shape() == std::vector<int>{4, 7, 6});

    const Tensor ys = conv2d(random_tensor({1, 8, 8}, 8), random_tensor({1, 1, 3, 3}, 9), Tensor(), 2, 1, 1);
    CHECK(ys.shape() == std::vector<int>{1, 4, 4});

    CHECK_THROWS_AS(conv2d(x, random_tensor({4, 3, 3, 3}, 10), Tensor(), 1, 1), ShapeMismatch);
}

TEST_CASE("bilinear_sample exact at lattice points, hand midpoint, zero outside") {
    const Tensor src = Tensor::from({1, 2, 2}, {0, 1, 2, 3});
    const Tensor at_lattice = bilinear_sample(src, Tensor::from({2, 1, 1}, {1.0, 1.0}));
    CHECK(at_lattice.item() == 3.0);
    CHECK(bilinear_sample(src, Tensor::from({2, 1, 1}, {0.5, 0.5})).item() == 1.5);
    CHECK(bilinear_sample(src, Tensor::from({2, 1, 1}, {-5.0, -5.0})).item() == 0.0);
    // Bordering samples blend with zero padding.
    CHECK(bilinear_sample(src, Tensor::from({2, 1, 1}, {-0.5, 0.0})).item() == 0.0 * 0.5 + 0.0 * 0.5);
    CHECK(bilinear_sample(src, Tensor::from({2, 1, 1}, {0.0, -0.5})).item() == 0.0);
}

TEST_CASE("bilinear_sample is linear between lattice points") {
    const Tensor src = random_tensor({3, 5, 5}, 11);
    const Tensor mid = bilinear_sample(src, Tensor::from({2, 1, 1}, {2.5, 3.0}));
    const Tensor left = bilinear_sample(src, Tensor::from({2, 1, 1}, {2.0, 3.0}));
    const Tensor right = bilinear_sample(src, Tensor::from({2, 1, 1}, {3.0, 3.0}));
    for (int c = 0; c < 3; ++c)
        CHECK(mid.data()[c] == doctest::Approx(0.5 * (left.data()[c] + right.data()[c])).epsilon(1e-12));
}

TEST_CASE("backward: sum of squares") {
    Tensor x = Tensor::from({1}, {3.0}, true);
    Tape tape;
    const Tensor loss = sum(mul(x, x));
    backward(loss);
    CHECK(x.grad()[0] == 6.0);
}

TEST_CASE("backward error conditions") {
    Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
    {
        const Tensor y = mul(x, x);  // no active tape
        CHECK_THROWS_AS(backward(sum(y)), NoTape);
    }
    {
        Tape tape;
        const Tensor y = mul(x, x);
        CHECK_THROWS_AS(backward(y), NotScalar);
        const Tensor loss = sum(y);
        backward(loss);
        CHECK_THROWS_AS(backward(loss), TapeConsumed);
    }
}

TEST_CASE("constant loss leaves gradient zero") {
    Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
    x.zero_grad();
    Tape tape;
    backward(sum(Tensor::full({3}, 2.0)));
    CHECK(x.grad() == std::vector<double>{0.0, 0.0});
}

TEST_CASE("gradients accumulate across backward passes") {
    Tensor x = Tensor::from({1}, {2.0}, true);
    for (int i = 0; i < 2; ++i) {
        Tape tape;
        backward(sum(mul(x, x)));
    }
    CHECK(x.grad()[0] == 8.0);  // 4 + 4
}

TEST_CASE("non-finite results surface eagerly") {
    const Tensor huge = Tensor::full({2}, 1e308);
    CHECK_THROWS_AS(mul(huge, huge), NumericError);
}

TEST_CASE("detach copies values and blocks gradient flow") {
    Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
    x.zero_grad();
    Tape tape;
    const Tensor d = x.detach();
    CHECK_FALSE(d.requires_grad());
    backward(sum(mul(d, d)));
    CHECK(x.grad() == std::vector<double>{0.0, 0.0});
}

TEST_CASE("instance_norm standardizes per channel") {
    const Tensor x = random_tensor({2, 4, 4}, 12);
    const Tensor y = instance_norm(x);
    for (int c = 0; c < 2; ++c) {
        double m = 0.0, v = 0.0;
        for (int i = 0; i < 16; ++i) m += y.data()[c * 16 + i];
        m /= 16.0;
        for (int i = 0; i < 16; ++i) v += (y.data()[c * 16 + i] - m) * (y.data()[c * 16 + i] - m);
        v /= 16.0;
        CHECK(m == doctest::Approx(0.0).epsilon(1e-10).scale(1.0));
        // var/(var + 1e-5): unit up to the regularizing eps
        CHECK(v == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("avg_pool2d averages 2x2 blocks") {
    const Tensor x = Tensor::from({1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
    const Tensor y = avg_pool2d(x, 2);
    CHECK(y.shape() == std::vector<int>{1, 1, 2});
    CHECK(y.vec() == std::vector<double>{3.5, 5.5});
}

TEST_CASE("convex_upsample keeps constant fields constant and scales values") {
    const int s = 4;
    Tensor flow = Tensor::zeros({2, 3, 3});
    for (size_t i = 0; i < 9; ++i) flow.data()[i] = 1.25;        // u
    for (size_t i = 9; i < 18; ++i) flow.data()[i] = -0.5;       // v
    const Tensor mask = random_tensor({9 * s * s, 3, 3}, 13);
    const Tensor up = convex_upsample(flow, mask, s);
    REQUIRE(up.shape() == std::vector<int>{2, 12, 12});
    // Interior queries mix only interior neighbors, all equal.
    for (int y = s; y < 2 * s; ++y)
        for (int x = s; x < 2 * s; ++x) {
            CHECK(up.data()[static_cast<size_t>(y) * 12 + x] == doctest::Approx(s * 1.25).epsilon(1e-12));
            CHECK(up.data()[144 + static_cast<size_t>(y) * 12 + x] ==
                  doctest::Approx(s * -0.5).epsilon(1e-12));
        }
}

TEST_CASE("dot_channels and mul_spatial") {
    const Tensor a = Tensor::from({2, 1, 2}, {1, 2, 3, 4});
    const Tensor b = Tensor::from({2, 1, 2}, {5, 6, 7, 8});
    const Tensor d = dot_channels(a, b);
    CHECK(d.shape() == std::vector<int>{1, 1, 2});
    CHECK(d.vec() == std::vector<double>{1 * 5 + 3 * 7, 2 * 6 + 4 * 8});

    const Tensor m = mul_spatial(a, Tensor::from({1, 1, 2}, {2, -1}));
    CHECK(m.vec() == std::vector<double>{2, -2, 6, -4});
}

TEST_CASE("pointwise_attention weights sum to one and average identical values") {
    const Tensor q = random_tensor({4, 2, 2}, 14);
    const Tensor k = random_tensor({3, 4, 2, 2}, 15);
    const Tensor v = Tensor::full({3, 4, 2, 2}, 2.5);
    Tensor weights;
    const Tensor out = pointwise_attention(q, k, v, &weights);
    CHECK(out.shape() == std::vector<int>{4, 2, 2});
    for (size_t i = 0; i < out.numel(); ++i) CHECK(out.data()[i] == doctest::Approx(2.5).epsilon(1e-9));
    REQUIRE(weights.shape() == std::vector<int>{3, 2, 2});
    for (int p = 0; p < 4; ++p) {
        const double total = weights.data()[p] + weights.data()[4 + p] + weights.data()[8 + p];
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("sequential determinism") {
    const Tensor x = random_tensor({3, 6, 6}, 16);
    const Tensor w = random_tensor({2, 3, 3, 3}, 17);
    const Tensor y1 = conv2d(x, w, Tensor(), 1, 1);
    const Tensor y2 = conv2d(x, w, Tensor(), 1, 1);
    CHECK(y1.vec() == y2.vec());
}
