#ifndef U2NET_CHECKPOINT_HPP
#define U2NET_CHECKPOINT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include "u2net/network.hpp"

namespace u2net {

// Binary checkpoint layout (all integers little-endian):
//   magic "U2CK"
//   u32 format version (currently 1)
//   u32 config length, then that many bytes of config JSON
//   u32 entry count
//   per entry:
//     u16 name length, name bytes (UTF-8)
//     u8 dtype (0 = f32, 1 = f64)
//     u8 rank
//     u64 dims[rank]
//     raw values (dims product * dtype size bytes)
// Entries cover every trainable parameter plus batch-norm running
// statistics; names are unique and the round trip is bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(Network<T>& net, std::ostream& os);
template <typename T>
void save_checkpoint(Network<T>& net, const std::string& path);

template <typename T>
Network<T> load_checkpoint(std::istream& is);
template <typename T>
Network<T> load_checkpoint(const std::string& path);

} // namespace u2net

#endif
