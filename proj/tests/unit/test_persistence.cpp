#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <sstream>

#include "u2net/checkpoint.hpp"
#include "u2net/config_io.hpp"

using namespace u2net;
using F = float;

namespace {

// A genuinely small 11-stage config so fuzzing stays fast.
NetworkConfig tiny_config() {
    NetworkConfig cfg = preset_config("small");
    for (auto& s : cfg.encoders) {
        s.rsu.mid = 2;
        s.rsu.c_out = 4;
        if (s.name != "En_1") s.rsu.c_in = 4;
    }
    for (std::size_t i = 0; i < cfg.decoders.size(); ++i) {
        cfg.decoders[i].rsu.mid = 2;
        cfg.decoders[i].rsu.c_out = 4;
        cfg.decoders[i].rsu.c_in = 8;
    }
    cfg.input_size = 32;
    cfg.validate();
    return cfg;
}

std::string serialize(Network<F>& net) {
    std::ostringstream os(std::ios::binary);
    save_checkpoint(net, os);
    return os.str();
}

Network<F> deserialize(const std::string& bytes) {
    std::istringstream is(bytes, std::ios::binary);
    return load_checkpoint<F>(is);
}

Tensor<F> fixed_image(std::int64_t size) {
    Rng rng(31337);
    std::vector<F> v(static_cast<std::size_t>(3 * size * size));
    for (auto& x : v) x = static_cast<F>(rng.uniform(0.0, 1.0));
    return Tensor<F>::from_data({1, 3, size, size}, std::move(v));
}

} // namespace

TEST_CASE("config JSON round-trip is a fixed point") {
    for (const char* preset : {"full", "small"}) {
        NetworkConfig cfg = preset_config(preset);
        const std::string once = config_to_json(cfg);
        NetworkConfig parsed = config_from_json(once);
        const std::string twice = config_to_json(parsed);
        CHECK(once == twice);
    }
    CHECK_THROWS_AS(config_from_json("{not json"), DataError);
    CHECK_THROWS_AS(config_from_json("{\"input_size\": 320}"), DataError);
}

TEST_CASE("checkpoint save/load round-trips bit-exactly and reproduces outputs") {
    NetworkConfig cfg = tiny_config();
    Network<F> net = Network<F>::build(cfg, 77);

    // Push the running stats off their initialization so they round-trip too.
    net.set_training(true);
    {
        auto out = net.forward(fixed_image(32));
        (void)out;
    }
    net.set_training(false);

    const std::string bytes = serialize(net);
    Network<F> loaded = deserialize(bytes);
    loaded.set_training(false);

    auto pa = net.parameters();
    auto pb = loaded.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        REQUIRE(pa[i].name == pb[i].name);
        const auto va = pa[i].tensor.values();
        const auto vb = pb[i].tensor.values();
        REQUIRE(va.size() == vb.size());
        CHECK(std::memcmp(va.data(), vb.data(), va.size() * sizeof(F)) == 0);
    }
    auto ba = net.buffers();
    auto bb = loaded.buffers();
    REQUIRE(ba.size() == bb.size());
    for (std::size_t i = 0; i < ba.size(); ++i)
        CHECK(std::memcmp(ba[i].data->data(), bb[i].data->data(),
                          ba[i].data->size() * sizeof(F)) == 0);

    // Bit-identical forward on a fixed input.
    NoGradGuard guard;
    auto img = fixed_image(32);
    auto out_a = net.forward(img);
    auto out_b = loaded.forward(img);
    const auto va = out_a.fused_prob.values();
    const auto vb = out_b.fused_prob.values();
    CHECK(std::memcmp(va.data(), vb.data(), va.size() * sizeof(F)) == 0);

    // Serialize a second time: byte-identical stream.
    Network<F> net2 = deserialize(bytes);
    CHECK(serialize(net2) == bytes);
}

TEST_CASE("truncated checkpoints raise the truncation error, never partial networks") {
    NetworkConfig cfg = tiny_config();
    Network<F> net = Network<F>::build(cfg, 5);
    const std::string bytes = serialize(net);

    for (std::size_t keep :
         {std::size_t{0}, std::size_t{3}, std::size_t{7}, bytes.size() / 4, bytes.size() / 2,
          bytes.size() - 1}) {
        CHECK_THROWS_AS(deserialize(bytes.substr(0, keep)), CheckpointError);
    }
    try {
        deserialize(bytes.substr(0, bytes.size() / 2));
        FAIL("expected a checkpoint error");
    } catch (const CheckpointError& e) {
        CHECK(e.kind() == CheckpointError::Kind::truncated);
    }
}

TEST_CASE("bad magic and version mismatch are distinct errors") {
    NetworkConfig cfg = tiny_config();
    Network<F> net = Network<F>::build(cfg, 5);
    std::string bytes = serialize(net);

    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    try {
        deserialize(wrong_magic);
        FAIL("expected bad magic");
    } catch (const CheckpointError& e) {
        CHECK(e.kind() == CheckpointError::Kind::bad_magic);
    }

    std::string wrong_version = bytes;
    wrong_version[4] = 9;
    try {
        deserialize(wrong_version);
        FAIL("expected version mismatch");
    } catch (const CheckpointError& e) {
        CHECK(e.kind() == CheckpointError::Kind::version_mismatch);
    }
}

TEST_CASE("shape mismatch against the embedded config is its own error") {
    NetworkConfig cfg = tiny_config();
    Network<F> net = Network<F>::build(cfg, 5);
    std::string bytes = serialize(net);

    // The first entry's first dim lives right after its name/dtype/rank
    // fields; patch it to a wrong-but-plausible extent.
    const std::string cfg_json = config_to_json(net.config());
    std::size_t off = 4 + 4 + 4 + cfg_json.size() + 4; // magic, version, len, json, count
    const std::uint16_t name_len = static_cast<std::uint8_t>(bytes[off]) |
                                   (static_cast<std::uint8_t>(bytes[off + 1]) << 8);
    off += 2 + name_len + 1 + 1; // name, dtype, rank
    std::uint64_t dim = 3;       // was 4 (c_out of En_1 conv_in)
    std::memcpy(bytes.data() + off, &dim, sizeof(dim));
    try {
        deserialize(bytes);
        FAIL("expected shape mismatch");
    } catch (const CheckpointError& e) {
        CHECK((e.kind() == CheckpointError::Kind::shape_mismatch ||
               e.kind() == CheckpointError::Kind::truncated));
        CHECK(e.kind() == CheckpointError::Kind::shape_mismatch);
    }
}

TEST_CASE("fuzzed mutations never crash: typed errors or silent value changes only") {
    NetworkConfig cfg = tiny_config();
    Network<F> net = Network<F>::build(cfg, 5);
    const std::string bytes = serialize(net);
    Rng rng(2024);

    int loaded_fine = 0, typed_errors = 0;
    for (int round = 0; round < 1000; ++round) {
        std::string mutated = bytes;
        if (rng.bernoulli(0.5)) {
            // Truncate at a random offset.
            mutated.resize(static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(bytes.size()) - 1)));
        } else {
            // Flip 1..8 random bytes.
            const int flips = static_cast<int>(rng.uniform_int(1, 8));
            for (int f = 0; f < flips; ++f) {
                const auto pos = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(mutated.size()) - 1));
                mutated[pos] = static_cast<char>(rng.uniform_int(0, 255));
            }
        }
        try {
            Network<F> n = deserialize(mutated);
            ++loaded_fine; // mutation hit parameter payload only
        } catch (const CheckpointError&) {
            ++typed_errors;
        } catch (const DataError&) {
            ++typed_errors;
        }
        // anything else (bad_alloc, segfault, std exceptions) fails the test
    }
    CHECK(loaded_fine + typed_errors == 1000);
    CHECK(typed_errors > 0);
}
