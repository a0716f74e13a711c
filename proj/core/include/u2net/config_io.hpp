#ifndef U2NET_CONFIG_IO_HPP
#define U2NET_CONFIG_IO_HPP

#include <string>

#include "u2net/network.hpp"

namespace u2net {

// JSON serialization of a network configuration. Parsing a serialized
// config and serializing it again is a fixed point.
std::string config_to_json(const NetworkConfig& config);
NetworkConfig config_from_json(const std::string& json_text);

void save_config(const NetworkConfig& config, const std::string& path);

// Accepts a preset name ("full", "small") or a JSON file path.
NetworkConfig load_config(const std::string& name_or_path);

} // namespace u2net

#endif
