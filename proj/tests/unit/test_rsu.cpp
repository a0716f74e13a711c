#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "u2net/analyzer.hpp"
#include "u2net/gradcheck.hpp"
#include "u2net/rsu.hpp"

using namespace u2net;
using D = double;

namespace {

Tensor<D> random_input(Shape shape, Rng& rng) {
    std::vector<D> v(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& x : v) x = rng.uniform(0.0, 1.0);
    return Tensor<D>::from_data(std::move(shape), std::move(v));
}

void fill(Tensor<D>& t, D value) {
    std::fill(t.values().begin(), t.values().end(), value);
}

// All-ones weights, zero biases, batch norm off: positive support propagates
// exactly, which is what the receptive-field probe needs.
RsuBlock<D> probe_block(const RsuSpec& spec) {
    Rng rng(0);
    auto block = RsuBlock<D>::build(spec, rng, /*with_batchnorm=*/false);
    fill(block.conv_in().weight, 1.0);
    for (auto& e : block.encoders()) fill(e.weight, 1.0);
    fill(block.bottom().weight, 1.0);
    for (auto& d : block.decoders()) fill(d.weight, 1.0);
    return block;
}

// One-side extent of the nonzero support of the bottom map after feeding a
// centered delta.
std::int64_t probe_support(const RsuSpec& spec, std::int64_t size) {
    auto block = probe_block(spec);
    std::vector<D> xv(static_cast<std::size_t>(spec.c_in * size * size), 0.0);
    const std::int64_t center = (size / 2) * size + size / 2;
    for (std::int64_t c = 0; c < spec.c_in; ++c)
        xv[static_cast<std::size_t>(c * size * size + center)] = 1.0;
    auto x = Tensor<D>::from_data({1, spec.c_in, size, size}, xv);

    RsuTrace<D> trace;
    block.forward(x, &trace);
    const auto& bottom = trace.at("b");
    const std::int64_t bh = bottom.dim(2), bw = bottom.dim(3);
    std::int64_t lo = bw, hi = -1;
    const auto v = bottom.values();
    for (std::int64_t y = 0; y < bh; ++y)
        for (std::int64_t xpos = 0; xpos < bw; ++xpos)
            if (v[static_cast<std::size_t>(y * bw + xpos)] != 0.0) {
                lo = std::min(lo, xpos);
                hi = std::max(hi, xpos);
            }
    return hi - lo + 1;
}

} // namespace

TEST_CASE("RSU-7 builds with 6 encoder convs and reaches input/32 internally") {
    Rng rng(1);
    auto block = RsuBlock<D>::build(RsuSpec{7, 3, 2, 4, false}, rng);
    CHECK(block.encoders().size() == 6);
    CHECK(block.decoders().size() == 6);

    auto x = random_input({1, 3, 64, 64}, rng);
    RsuTrace<D> trace;
    auto y = block.forward(x, &trace);
    CHECK(y.shape() == Shape{1, 4, 64, 64});
    // e6 sits below 5 poolings: 64 / 32 = 2.
    CHECK(trace.at("e6").dim(2) == 2);
    CHECK(trace.at("e6").dim(3) == 2);
    CHECK(trace.at("b").dim(2) == 2);
}

TEST_CASE("RSU-4F keeps every internal map at the input resolution") {
    Rng rng(2);
    auto block = RsuBlock<D>::build(RsuSpec{4, 4, 2, 4, true}, rng);
    // Encoder dilations 1,2,4 and bottom 8; decoder mirror 4,2,1.
    CHECK(block.encoders()[0].dilation == 1);
    CHECK(block.encoders()[1].dilation == 2);
    CHECK(block.encoders()[2].dilation == 4);
    CHECK(block.bottom().dilation == 8);
    CHECK(block.decoders()[0].dilation == 4);
    CHECK(block.decoders()[1].dilation == 2);
    CHECK(block.decoders()[2].dilation == 1);

    auto x = random_input({1, 4, 20, 20}, rng);
    RsuTrace<D> trace;
    auto y = block.forward(x, &trace);
    CHECK(y.shape() == Shape{1, 4, 20, 20});
    for (const auto& [name, map] : trace.maps) {
        INFO(name);
        CHECK(map.dim(2) == 20);
        CHECK(map.dim(3) == 20);
    }
}

TEST_CASE("RSU-2(1,1,1) minimal block forward-passes on 1x1x4x4") {
    Rng rng(3);
    auto block = RsuBlock<D>::build(RsuSpec{2, 1, 1, 1, false}, rng);
    auto y = block.forward(random_input({1, 1, 4, 4}, rng));
    CHECK(y.shape() == Shape{1, 1, 4, 4});
}

TEST_CASE("invalid specs are rejected") {
    Rng rng(4);
    CHECK_THROWS_AS(RsuBlock<D>::build(RsuSpec{1, 1, 1, 1, false}, rng), ConfigError);
    CHECK_THROWS_AS(RsuBlock<D>::build(RsuSpec{4, 0, 1, 1, false}, rng), ConfigError);
    auto block = RsuBlock<D>::build(RsuSpec{3, 2, 2, 2, false}, rng);
    auto bad = random_input({1, 3, 8, 8}, rng);
    CHECK_THROWS_AS(block.forward(bad), ConfigError);
}

TEST_CASE("residual identity: zeroed final decoder makes the block output F1(x)") {
    Rng rng(5);
    for (bool dilated : {false, true}) {
        auto block = RsuBlock<D>::build(RsuSpec{4, 3, 2, 5, dilated}, rng);
        auto& d1 = block.decoders().back();
        fill(d1.weight, 0.0);
        fill(d1.bias, 0.0);
        fill(d1.bn->gamma, 0.0);
        fill(d1.bn->beta, 0.0);

        auto x = random_input({2, 3, 16, 16}, rng);
        RsuTrace<D> trace;
        auto y = block.forward(x, &trace);
        const auto& x0 = trace.at("x0");
        REQUIRE(y.shape() == x0.shape());
        for (std::int64_t i = 0; i < y.numel(); ++i)
            CHECK(y.values()[i] == x0.values()[i]); // exact equality
    }
}

TEST_CASE("spatial shape preservation across heights, variants and odd sizes") {
    Rng rng(6);
    for (int height : {2, 3, 4, 5}) {
        for (bool dilated : {false, true}) {
            for (std::int64_t hw : {16, 17, 31, 32}) {
                RsuSpec spec{height, 2, 2, 3, dilated};
                auto block = RsuBlock<D>::build(spec, rng);
                auto y = block.forward(random_input({1, 2, hw, hw + 1}, rng));
                INFO("L=", height, " dilated=", dilated, " hw=", hw);
                CHECK(y.dim(2) == hw);
                CHECK(y.dim(3) == hw + 1);
            }
        }
    }
}

TEST_CASE("receptive field: composition formula vs expectations") {
    CHECK(rsu_receptive_field(RsuSpec{2, 1, 1, 1, false}) == 9); // 1+2+2+4
    CHECK(rsu_receptive_field(RsuSpec{2, 1, 1, 1, true}) == 9);  // same at L=2
    // Standard and dilated variants of the same height match by design.
    for (int L : {3, 4, 5, 6, 7})
        CHECK(rsu_receptive_field(RsuSpec{L, 1, 1, 1, false}) ==
              rsu_receptive_field(RsuSpec{L, 1, 1, 1, true}));
    CHECK(rsu_receptive_field(RsuSpec{4, 1, 1, 1, true}) == 33);
}

TEST_CASE("receptive field matches the delta-probe oracle on unpooled blocks") {
    // RSU-2 (no pooling) and the dilated variants keep stride 1, so the
    // forward footprint of a delta equals the receptive field.
    struct ProbeCase {
        RsuSpec spec;
        std::int64_t input;
    };
    const ProbeCase cases[] = {
        {{2, 1, 1, 1, false}, 15},
        {{2, 2, 1, 2, false}, 15},
        {{3, 1, 1, 1, true}, 25},  // RF 17
        {{4, 1, 1, 1, true}, 41},  // RF 33
    };
    for (const auto& c : cases) {
        INFO(c.spec.str());
        CHECK(probe_support(c.spec, c.input) == rsu_receptive_field(c.spec));
    }
}

TEST_CASE("gradient check on RSU-4(2,2,2) end to end at 8x8") {
    Rng rng(8);
    auto block = std::make_shared<RsuBlock<D>>(
        RsuBlock<D>::build(RsuSpec{4, 2, 2, 2, false}, rng));
    std::vector<Tensor<D>> inputs;
    inputs.push_back(random_input({1, 2, 8, 8}, rng));
    std::vector<NamedParam<D>> params;
    block->collect_params("b", params);
    // Evaluate at a generic point (see the RSU-7 test).
    for (auto& p : params) {
        for (auto& v : p.tensor.values()) v += rng.uniform(-0.2, 0.2);
        inputs.push_back(p.tensor);
    }

    std::vector<D> target(2 * 8 * 8);
    for (auto& t : target) t = rng.bernoulli(0.5) ? 1.0 : 0.0;
    auto program = [block, target](const std::vector<Tensor<D>>& in) {
        auto gt = Tensor<D>::from_data({1, 2, 8, 8}, target);
        return bce_loss(sigmoid(block->forward(in[0])), gt, LossReduction::mean);
    };
    GradCheckReport r = grad_check(program, inputs, 1e-4, 1e-4);
    if (!r.pass) r = grad_check(program, inputs, 1e-5, 1e-4);
    INFO(r.describe());
    CHECK(r.pass);
}

TEST_CASE("parameter count from built shapes equals the analyzer's closed form") {
    Rng rng(9);
    for (const auto spec : {RsuSpec{7, 3, 32, 64, false}, RsuSpec{4, 16, 8, 16, true},
                            RsuSpec{2, 1, 1, 1, false}}) {
        auto block = RsuBlock<D>::build(spec, rng);
        std::vector<NamedParam<D>> params;
        block.collect_params("b", params);
        std::vector<NamedBuffer<D>> buffers;
        block.collect_buffers("b", buffers);
        std::int64_t values = 0;
        for (auto& p : params) values += p.tensor.numel();
        for (auto& b : buffers) values += static_cast<std::int64_t>(b.data->size());
        CHECK(values == count_params(spec).values);
    }
}
