#include "u2net/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "u2net/config_io.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

namespace u2net {

namespace {

using Kind = CheckpointError::Kind;

template <typename T>
constexpr std::uint8_t dtype_code() {
    if constexpr (std::is_same_v<T, float>) return 0;
    else return 1;
}

template <typename V>
void put(std::ostream& os, V value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

// Named views over everything a checkpoint stores: parameters first, then
// batch-norm buffers, in the network's deterministic listing order.
template <typename T>
struct EntryView {
    std::string name;
    Shape dims;
    T* data;
    std::int64_t count;
};

template <typename T>
std::vector<EntryView<T>> state_entries(Network<T>& net) {
    std::vector<EntryView<T>> out;
    for (auto& p : net.parameters()) {
        out.push_back({p.name, p.tensor.shape(), p.tensor.values().data(), p.tensor.numel()});
    }
    for (auto& b : net.buffers()) {
        out.push_back({b.name, Shape{static_cast<std::int64_t>(b.data->size())},
                       b.data->data(), static_cast<std::int64_t>(b.data->size())});
    }
    return out;
}

class Reader {
public:
    explicit Reader(std::string bytes) : buf_(std::move(bytes)) {}

    std::size_t remaining() const { return buf_.size() - pos_; }

    const char* take(std::size_t n, const char* what) {
        if (remaining() < n)
            throw CheckpointError(Kind::truncated,
                                  std::string("checkpoint truncated while reading ") + what);
        const char* p = buf_.data() + pos_;
        pos_ += n;
        return p;
    }

    template <typename V>
    V get(const char* what) {
        V v;
        std::memcpy(&v, take(sizeof(V), what), sizeof(V));
        return v;
    }

private:
    std::string buf_;
    std::size_t pos_ = 0;
};

} // namespace

template <typename T>
void save_checkpoint(Network<T>& net, std::ostream& os) {
    os.write("U2CK", 4);
    put<std::uint32_t>(os, kCheckpointVersion);

    const std::string cfg = config_to_json(net.config());
    put<std::uint32_t>(os, static_cast<std::uint32_t>(cfg.size()));
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

    auto entries = state_entries(net);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        put<std::uint16_t>(os, static_cast<std::uint16_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put<std::uint8_t>(os, dtype_code<T>());
        put<std::uint8_t>(os, static_cast<std::uint8_t>(e.dims.size()));
        for (auto d : e.dims) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
        os.write(reinterpret_cast<const char*>(e.data),
                 static_cast<std::streamsize>(e.count * static_cast<std::int64_t>(sizeof(T))));
    }
    if (!os) throw DataError("checkpoint write failed");
}

template <typename T>
void save_checkpoint(Network<T>& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open checkpoint for writing: " + path);
    save_checkpoint(net, os);
}

template <typename T>
Network<T> load_checkpoint(std::istream& is) {
    std::ostringstream buf;
    buf << is.rdbuf();
    Reader r(buf.str());

    char magic[4];
    std::memcpy(magic, r.take(4, "magic"), 4);
    if (std::memcmp(magic, "U2CK", 4) != 0)
        throw CheckpointError(Kind::bad_magic, "not a checkpoint file (bad magic)");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion)
        throw CheckpointError(Kind::version_mismatch,
                              "unsupported checkpoint version " + std::to_string(version));

    const auto cfg_len = r.get<std::uint32_t>("config length");
    const char* cfg_bytes = r.take(cfg_len, "config JSON");
    NetworkConfig config;
    try {
        config = config_from_json(std::string(cfg_bytes, cfg_len));
    } catch (const CheckpointError&) {
        throw;
    } catch (const DataError& e) {
        throw CheckpointError(Kind::corrupt, std::string("embedded config invalid: ") + e.what());
    } catch (const ConfigError& e) {
        throw CheckpointError(Kind::corrupt, std::string("embedded config invalid: ") + e.what());
    }

    Network<T> net;
    try {
        net = Network<T>::build(config, 0);
    } catch (const ConfigError& e) {
        throw CheckpointError(Kind::corrupt, std::string("embedded config invalid: ") + e.what());
    }
    auto entries = state_entries(net);
    std::unordered_map<std::string, EntryView<T>*> expected;
    for (auto& e : entries) expected[e.name] = &e;

    const auto count = r.get<std::uint32_t>("entry count");
    if (count != entries.size())
        throw CheckpointError(Kind::shape_mismatch,
                              "checkpoint holds " + std::to_string(count) + " entries, config needs " +
                                  std::to_string(entries.size()));

    std::vector<bool> seen(entries.size(), false);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = r.get<std::uint16_t>("name length");
        std::string name(r.take(name_len, "entry name"), name_len);
        const auto dtype = r.get<std::uint8_t>("dtype");
        if (dtype != dtype_code<T>())
            throw CheckpointError(Kind::corrupt,
                                  "entry " + name + " has dtype code " + std::to_string(dtype));
        const auto rank = r.get<std::uint8_t>("rank");
        if (rank > 8)
            throw CheckpointError(Kind::corrupt, "entry " + name + " has rank " + std::to_string(rank));
        Shape dims(rank);
        std::uint64_t total = 1;
        for (int d = 0; d < rank; ++d) {
            const auto v = r.get<std::uint64_t>("dim");
            // Bound each extent by the remaining payload so a corrupted
            // length cannot trigger a huge allocation.
            if (v == 0 || v > r.remaining())
                throw CheckpointError(Kind::corrupt, "entry " + name + " has invalid extent");
            total *= v;
            if (total > r.remaining())
                throw CheckpointError(Kind::truncated,
                                      "entry " + name + " payload exceeds file size");
            dims[static_cast<std::size_t>(d)] = static_cast<std::int64_t>(v);
        }

        auto it = expected.find(name);
        if (it == expected.end())
            throw CheckpointError(Kind::corrupt, "unexpected entry " + name);
        EntryView<T>* view = it->second;
        const auto idx = static_cast<std::size_t>(view - entries.data());
        if (seen[idx])
            throw CheckpointError(Kind::corrupt, "duplicate entry " + name);
        seen[idx] = true;
        if (dims != view->dims)
            throw CheckpointError(Kind::shape_mismatch,
                                  "entry " + name + " has shape " + shape_str(dims) +
                                      ", config expects " + shape_str(view->dims));

        const std::size_t bytes = static_cast<std::size_t>(total) * sizeof(T);
        const char* payload = r.take(bytes, ("payload of " + name).c_str());
        std::memcpy(view->data, payload, bytes);
    }
    if (r.remaining() != 0)
        throw CheckpointError(Kind::corrupt, "trailing bytes after last entry");
    return net;
}

template <typename T>
Network<T> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint: " + path);
    return load_checkpoint<T>(is);
}

template void save_checkpoint<float>(Network<float>&, std::ostream&);
template void save_checkpoint<float>(Network<float>&, const std::string&);
template void save_checkpoint<double>(Network<double>&, std::ostream&);
template void save_checkpoint<double>(Network<double>&, const std::string&);
template Network<float> load_checkpoint<float>(std::istream&);
template Network<float> load_checkpoint<float>(const std::string&);
template Network<double> load_checkpoint<double>(std::istream&);
template Network<double> load_checkpoint<double>(const std::string&);

} // namespace u2net
