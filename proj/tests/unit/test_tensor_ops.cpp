#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "u2net/ops.hpp"
#include "u2net/rng.hpp"

using namespace u2net;
using D = double;

namespace {

Tensor<D> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<D> v(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor<D>::from_data(std::move(shape), std::move(v));
}

} // namespace

TEST_CASE("conv2d 1x1 degenerate case is x*w + b") {
    auto x = Tensor<D>::from_data({1, 1, 1, 1}, {3.0});
    auto w = Tensor<D>::from_data({1, 1, 1, 1}, {-2.0});
    auto b = Tensor<D>::from_data({1}, {0.5});
    auto y = conv2d(x, w, std::optional<Tensor<D>>(b), Conv2dOpts{});
    CHECK(y.shape() == Shape{1, 1, 1, 1});
    CHECK(y.values()[0] == doctest::Approx(-5.5).epsilon(1e-15));
}

TEST_CASE("conv2d all-ones 3x3, padding 1: center 9, corners 4") {
    auto x = Tensor<D>::full({1, 1, 3, 3}, 1.0);
    auto w = Tensor<D>::full({1, 1, 3, 3}, 1.0);
    Conv2dOpts opts;
    opts.padding = 1;
    auto y = conv2d(x, w, opts);
    CHECK(y.shape() == Shape{1, 1, 3, 3});
    CHECK(y.values()[4] == 9.0);
    CHECK(y.values()[0] == 4.0);
    CHECK(y.values()[2] == 4.0);
    CHECK(y.values()[6] == 4.0);
    CHECK(y.values()[8] == 4.0);
    CHECK(y.values()[1] == 6.0);
}

TEST_CASE("conv2d dilation 2 on center delta spreads to 9 taps, matches oracle") {
    std::vector<D> xd(25, 0.0);
    xd[12] = 1.0; // center of 5x5
    auto x = Tensor<D>::from_data({1, 1, 5, 5}, xd);
    auto w = Tensor<D>::full({1, 1, 3, 3}, 1.0);
    Conv2dOpts opts;
    opts.padding = 2;
    opts.dilation = 2;
    auto y = conv2d(x, w, opts);
    auto ref = oracle::conv2d_direct<double>(x, w, {}, 1, 2, 2);
    REQUIRE(y.shape() == ref.shape());
    for (std::int64_t i = 0; i < y.numel(); ++i)
        CHECK(y.values()[i] == ref.values()[i]);
    // Delta with all-ones dilated kernel: 1 at each reflected tap position.
    std::int64_t ones = 0;
    for (auto v : y.values()) {
        CHECK((v == 0.0 || v == 1.0));
        if (v == 1.0) ++ones;
    }
    CHECK(ones == 9);
    CHECK(y.values()[12] == 1.0);
    CHECK(y.values()[0] == 1.0);  // (2,2) offset reflected to the corner
}

TEST_CASE("conv2d with dilation 1 is bit-identical to the direct oracle") {
    Rng rng(41);
    for (int round = 0; round < 20; ++round) {
        const std::int64_t ci = rng.uniform_int(1, 4), co = rng.uniform_int(1, 4);
        const std::int64_t h = rng.uniform_int(3, 9), w = rng.uniform_int(3, 9);
        const int stride = static_cast<int>(rng.uniform_int(1, 2));
        const int padding = static_cast<int>(rng.uniform_int(0, 2));
        auto x = random_tensor({2, ci, h, w}, rng);
        auto wt = random_tensor({co, ci, 3, 3}, rng);
        auto b = random_tensor({co}, rng);
        Conv2dOpts opts;
        opts.stride = stride;
        opts.padding = padding;
        auto y = conv2d(x, wt, std::optional<Tensor<D>>(b), opts);
        auto ref = oracle::conv2d_direct(x, wt, std::optional<Tensor<D>>(b), stride, padding, 1);
        REQUIRE(y.shape() == ref.shape());
        for (std::int64_t i = 0; i < y.numel(); ++i)
            CHECK(y.values()[i] == ref.values()[i]); // exact, not approximate
    }
}

TEST_CASE("conv2d output-shape formula holds across a (stride,padding,dilation) sweep") {
    Rng rng(7);
    for (std::int64_t h = 1; h <= 16; h += 3) {
        for (std::int64_t w = 1; w <= 16; w += 3) {
            for (int stride = 1; stride <= 3; ++stride) {
                for (int padding = 0; padding <= 2; ++padding) {
                    for (int dilation = 1; dilation <= 2; ++dilation) {
                        if (h + 2 * padding < dilation * 2 + 1) continue;
                        if (w + 2 * padding < dilation * 2 + 1) continue;
                        auto x = random_tensor({1, 1, h, w}, rng);
                        auto wt = random_tensor({1, 1, 3, 3}, rng);
                        Conv2dOpts opts{stride, padding, dilation};
                        auto y = conv2d(x, wt, opts);
                        CHECK(y.dim(2) == (h + 2 * padding - dilation * 2 - 1) / stride + 1);
                        CHECK(y.dim(3) == (w + 2 * padding - dilation * 2 - 1) / stride + 1);
                    }
                }
            }
        }
    }
}

TEST_CASE("conv2d rejects bad configurations") {
    auto x = Tensor<D>::full({1, 2, 4, 4}, 1.0);
    auto w = Tensor<D>::full({1, 3, 3, 3}, 1.0); // wrong input channels
    CHECK_THROWS_AS(conv2d(x, w, Conv2dOpts{}), ConfigError);
    auto w2 = Tensor<D>::full({1, 2, 3, 3}, 1.0);
    Conv2dOpts bad_stride;
    bad_stride.stride = 0;
    CHECK_THROWS_AS(conv2d(x, w2, bad_stride), ConfigError);
    Conv2dOpts bad_dilation;
    bad_dilation.dilation = 0;
    CHECK_THROWS_AS(conv2d(x, w2, bad_dilation), ConfigError);
    Conv2dOpts too_big;
    too_big.dilation = 2; // effective 5x5 kernel on unpadded 4x4
    CHECK_THROWS_AS(conv2d(x, w2, too_big), ConfigError);
}

TEST_CASE("maxpool2 on 1..16 gives the max of each 2x2 block") {
    std::vector<D> v(16);
    for (int i = 0; i < 16; ++i) v[static_cast<std::size_t>(i)] = i + 1;
    auto y = maxpool2(Tensor<D>::from_data({1, 1, 4, 4}, v));
    CHECK(y.shape() == Shape{1, 1, 2, 2});
    CHECK(y.values()[0] == 6.0);
    CHECK(y.values()[1] == 8.0);
    CHECK(y.values()[2] == 14.0);
    CHECK(y.values()[3] == 16.0);
}

TEST_CASE("maxpool2 uses ceiling mode: 5x5 -> 3x3") {
    Rng rng(3);
    auto y = maxpool2(random_tensor({1, 1, 5, 5}, rng));
    CHECK(y.dim(2) == 3);
    CHECK(y.dim(3) == 3);
}

TEST_CASE("maxpool2 ties route the gradient to the first entry in row-major order") {
    // Window values: top-right and bottom-left tie at the maximum.
    auto x = Tensor<D>::from_data({1, 1, 2, 2}, {1.0, 5.0, 5.0, 2.0}, true);
    auto y = maxpool2(x);
    REQUIRE(y.numel() == 1);
    CHECK(y.values()[0] == 5.0);
    auto loss = weighted_sum(y, {1.0});
    loss.backward();
    CHECK(x.grad()[0] == 0.0);
    CHECK(x.grad()[1] == 1.0); // row-major first among the ties
    CHECK(x.grad()[2] == 0.0);
    CHECK(x.grad()[3] == 0.0);
}

TEST_CASE("maxpool2 equals brute-force window scan on random 7x9") {
    Rng rng(11);
    auto x = random_tensor({2, 3, 7, 9}, rng);
    auto y = maxpool2(x);
    auto ref = oracle::maxpool2_direct(x);
    REQUIRE(y.shape() == ref.shape());
    for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(y.values()[i] == ref.values()[i]);
}

TEST_CASE("upsample_bilinear keeps constants constant") {
    auto y = upsample_bilinear(Tensor<D>::full({1, 2, 3, 5}, 0.75), 7, 11);
    CHECK(y.shape() == Shape{1, 2, 7, 11});
    for (auto v : y.values()) CHECK(v == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("upsample_bilinear half-pixel mapping: [1,3] to length 4") {
    auto x = Tensor<D>::from_data({1, 1, 1, 2}, {1.0, 3.0});
    auto y = upsample_bilinear(x, 1, 4);
    REQUIRE(y.numel() == 4);
    CHECK(y.values()[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(y.values()[1] == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(y.values()[2] == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(y.values()[3] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("upsample_bilinear matches the per-pixel oracle; 2x up then 2x mean-down is a low-pass") {
    Rng rng(17);
    auto x = random_tensor({1, 1, 6, 8}, rng, 0.0, 1.0);
    auto up = upsample_bilinear(x, 12, 16);
    auto ref = oracle::upsample_bilinear_direct(x, 12, 16);
    for (std::int64_t i = 0; i < up.numel(); ++i)
        CHECK(up.values()[i] == doctest::Approx(ref.values()[i]).epsilon(1e-12));

    // Average-pool the 2x upsample back down; every output is a positive
    // blend of the source's local neighborhood, so it stays within the
    // neighborhood min/max and within 1e-6 of the oracle's round trip.
    const auto& uv = up.values();
    for (std::int64_t y = 0; y < 6; ++y)
        for (std::int64_t xx = 0; xx < 8; ++xx) {
            const double mean = (uv[(2 * y) * 16 + 2 * xx] + uv[(2 * y) * 16 + 2 * xx + 1] +
                                 uv[(2 * y + 1) * 16 + 2 * xx] + uv[(2 * y + 1) * 16 + 2 * xx + 1]) /
                                4.0;
            const auto& rv = ref.values();
            const double oracle_mean =
                (rv[(2 * y) * 16 + 2 * xx] + rv[(2 * y) * 16 + 2 * xx + 1] +
                 rv[(2 * y + 1) * 16 + 2 * xx] + rv[(2 * y + 1) * 16 + 2 * xx + 1]) /
                4.0;
            CHECK(mean == doctest::Approx(oracle_mean).epsilon(1e-6));
            double lo = 1e9, hi = -1e9;
            for (std::int64_t ny = std::max<std::int64_t>(0, y - 1);
                 ny <= std::min<std::int64_t>(5, y + 1); ++ny)
                for (std::int64_t nx = std::max<std::int64_t>(0, xx - 1);
                     nx <= std::min<std::int64_t>(7, xx + 1); ++nx) {
                    lo = std::min(lo, x.values()[ny * 8 + nx]);
                    hi = std::max(hi, x.values()[ny * 8 + nx]);
                }
            CHECK(mean >= lo - 1e-12);
            CHECK(mean <= hi + 1e-12);
        }
}

TEST_CASE("upsample to the same size is the identity") {
    Rng rng(23);
    auto x = random_tensor({1, 1, 5, 7}, rng);
    auto y = upsample_bilinear(x, 5, 7);
    for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(y.values()[i] == x.values()[i]);
}

TEST_CASE("maxpool2 after 2x bilinear upsample is the identity on constant maps") {
    for (std::int64_t h : {4, 5, 7}) {
        auto x = Tensor<D>::full({1, 1, h, h + 1}, 0.4);
        auto y = maxpool2(upsample_bilinear(x, 2 * h, 2 * (h + 1)));
        REQUIRE(y.shape() == x.shape());
        for (std::int64_t i = 0; i < y.numel(); ++i)
            CHECK(y.values()[i] == doctest::Approx(0.4).epsilon(1e-14));
    }
}

TEST_CASE("concat_channels shape arithmetic and exact slicing") {
    Rng rng(29);
    auto a = random_tensor({2, 3, 8, 8}, rng);
    auto b = random_tensor({2, 5, 8, 8}, rng);
    auto y = concat_channels(a, b);
    CHECK(y.shape() == Shape{2, 8, 8, 8});
    // Slicing the output channels recovers the inputs exactly.
    for (std::int64_t img = 0; img < 2; ++img) {
        for (std::int64_t c = 0; c < 3; ++c)
            for (std::int64_t i = 0; i < 64; ++i)
                CHECK(y.values()[(img * 8 + c) * 64 + i] == a.values()[(img * 3 + c) * 64 + i]);
        for (std::int64_t c = 0; c < 5; ++c)
            for (std::int64_t i = 0; i < 64; ++i)
                CHECK(y.values()[(img * 8 + 3 + c) * 64 + i] == b.values()[(img * 5 + c) * 64 + i]);
    }
    auto c = random_tensor({2, 3, 7, 8}, rng);
    CHECK_THROWS_AS(concat_channels(a, c), ConfigError);
}

TEST_CASE("concat with zeros then identity-on-first-block 1x1 conv recovers x") {
    Rng rng(31);
    auto x = random_tensor({1, 3, 4, 4}, rng);
    auto z = Tensor<D>::zeros({1, 2, 4, 4});
    auto cat = concat_channels(x, z);
    std::vector<D> wv(static_cast<std::size_t>(3 * 5), 0.0);
    for (int c = 0; c < 3; ++c) wv[static_cast<std::size_t>(c * 5 + c)] = 1.0;
    auto w = Tensor<D>::from_data({3, 5, 1, 1}, wv);
    auto y = conv2d(cat, w, Conv2dOpts{});
    REQUIRE(y.shape() == x.shape());
    for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(y.values()[i] == x.values()[i]);
}

TEST_CASE("elementwise basics") {
    auto s = sigmoid(Tensor<D>::from_data({1}, {0.0}));
    CHECK(s.values()[0] == doctest::Approx(0.5).epsilon(1e-15));

    auto r = relu(Tensor<D>::from_data({3}, {-1.0, 0.0, 2.0}));
    CHECK(r.values()[0] == 0.0);
    CHECK(r.values()[1] == 0.0);
    CHECK(r.values()[2] == 2.0);

    Rng rng(37);
    auto x = random_tensor({2, 2, 3, 3}, rng);
    auto nx = scale(x, -1.0);
    auto sum = add(x, nx);
    for (auto v : sum.values()) CHECK(v == 0.0);

    auto y = random_tensor({2, 2, 3, 4}, rng);
    CHECK_THROWS_AS(add(x, y), ConfigError);
}

TEST_CASE("sigmoid stays strictly inside (0,1), relu stays non-negative") {
    auto x = Tensor<D>::from_data({6}, {-1e4, -50.0, -1.0, 1.0, 50.0, 1e4});
    auto s = sigmoid(x);
    for (auto v : s.values()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    Rng rng(39);
    auto r = relu(random_tensor({100}, rng, -2.0, 2.0));
    for (auto v : r.values()) CHECK(v >= 0.0);
}

TEST_CASE("batchnorm2d normalizes per channel and applies the affine pair") {
    Rng rng(43);
    auto x = random_tensor({4, 3, 6, 6}, rng, -3.0, 5.0);
    auto bn = BatchNorm2d<D>::make(3);
    auto y = batchnorm2d(x, bn);

    const std::int64_t hw = 36, n = 4;
    for (std::int64_t c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        for (std::int64_t img = 0; img < n; ++img)
            for (std::int64_t i = 0; i < hw; ++i) mean += y.values()[(img * 3 + c) * hw + i];
        mean /= static_cast<double>(n * hw);
        for (std::int64_t img = 0; img < n; ++img)
            for (std::int64_t i = 0; i < hw; ++i) {
                const double d = y.values()[(img * 3 + c) * hw + i] - mean;
                var += d * d;
            }
        var /= static_cast<double>(n * hw);
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(std::abs(mean) < 1e-5);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }

    // gamma=2, beta=3 shifts the normalized output.
    auto bn2 = BatchNorm2d<D>::make(3);
    std::fill(bn2.gamma.values().begin(), bn2.gamma.values().end(), 2.0);
    std::fill(bn2.beta.values().begin(), bn2.beta.values().end(), 3.0);
    auto y2 = batchnorm2d(x, bn2);
    double mean2 = 0.0;
    for (std::int64_t img = 0; img < n; ++img)
        for (std::int64_t i = 0; i < hw; ++i) mean2 += y2.values()[(img * 3 + 0) * hw + i];
    mean2 /= static_cast<double>(n * hw);
    CHECK(mean2 == doctest::Approx(3.0).epsilon(1e-10));
    double var2 = 0.0;
    for (std::int64_t img = 0; img < n; ++img)
        for (std::int64_t i = 0; i < hw; ++i) {
            const double d = y2.values()[(img * 3 + 0) * hw + i] - mean2;
            var2 += d * d;
        }
    var2 /= static_cast<double>(n * hw);
    CHECK(std::sqrt(var2) == doctest::Approx(2.0).epsilon(1e-4));

    auto wrong = BatchNorm2d<D>::make(4);
    CHECK_THROWS_AS(batchnorm2d(x, wrong), ConfigError);
}

TEST_CASE("bce_loss single pixel and perfect prediction") {
    auto p = Tensor<D>::from_data({1, 1, 1, 1}, {0.5});
    auto g = Tensor<D>::from_data({1, 1, 1, 1}, {1.0});
    CHECK(bce_loss(p, g).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Rng rng(47);
    std::vector<D> gv(64);
    for (auto& v : gv) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    auto gt = Tensor<D>::from_data({1, 1, 8, 8}, gv);
    auto perfect = bce_loss(gt, gt);
    CHECK(perfect.item() >= 0.0);
    CHECK(perfect.item() <= 64.0 * -std::log(1.0 - 1e-7) + 1e-12);
}

TEST_CASE("bce_loss matches the per-pixel oracle and sum = count * mean") {
    Rng rng(53);
    std::vector<D> pv(16), gv(16);
    for (auto& v : pv) v = rng.uniform(0.02, 0.98);
    for (auto& v : gv) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    auto p = Tensor<D>::from_data({1, 1, 4, 4}, pv);
    auto g = Tensor<D>::from_data({1, 1, 4, 4}, gv);

    const double sum = bce_loss(p, g, LossReduction::sum).item();
    const double mean = bce_loss(p, g, LossReduction::mean).item();
    CHECK(sum == doctest::Approx(oracle::bce_direct(p, g, false)).epsilon(1e-12));
    CHECK(sum == 16.0 * mean); // exact: the count is a power of two

    auto g2 = Tensor<D>::from_data({1, 1, 2, 8}, gv);
    CHECK_THROWS_AS(bce_loss(p, g2), ConfigError);
}
