#include "u2net/config_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace u2net {

namespace {

using nlohmann::json;

json stage_to_json(const StageSpec& s) {
    return json{{"name", s.name},
                {"height", s.rsu.height},
                {"dilated", s.rsu.dilated},
                {"in", s.rsu.c_in},
                {"mid", s.rsu.mid},
                {"out", s.rsu.c_out}};
}

StageSpec stage_from_json(const json& j) {
    StageSpec s;
    s.name = j.at("name").get<std::string>();
    s.rsu.height = j.at("height").get<int>();
    s.rsu.dilated = j.at("dilated").get<bool>();
    s.rsu.c_in = j.at("in").get<std::int64_t>();
    s.rsu.mid = j.at("mid").get<std::int64_t>();
    s.rsu.c_out = j.at("out").get<std::int64_t>();
    return s;
}

} // namespace

std::string config_to_json(const NetworkConfig& config) {
    json j;
    j["input_size"] = config.input_size;
    j["use_batchnorm"] = config.use_batchnorm;
    j["rng"] = config.rng_algorithm;
    j["encoders"] = json::array();
    for (const auto& s : config.encoders) j["encoders"].push_back(stage_to_json(s));
    j["decoders"] = json::array();
    for (const auto& s : config.decoders) j["decoders"].push_back(stage_to_json(s));
    j["side_sources"] = config.side_sources;
    return j.dump(2);
}

NetworkConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw DataError(std::string("config JSON parse error: ") + e.what());
    }
    try {
        NetworkConfig cfg;
        cfg.input_size = j.at("input_size").get<std::int64_t>();
        cfg.use_batchnorm = j.value("use_batchnorm", true);
        cfg.rng_algorithm = j.value("rng", std::string("mt19937_64"));
        for (const auto& s : j.at("encoders")) cfg.encoders.push_back(stage_from_json(s));
        for (const auto& s : j.at("decoders")) cfg.decoders.push_back(stage_from_json(s));
        cfg.side_sources = j.at("side_sources").get<std::vector<std::string>>();
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw DataError(std::string("config JSON field error: ") + e.what());
    }
}

void save_config(const NetworkConfig& config, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write config to " + path);
    os << config_to_json(config) << "\n";
}

NetworkConfig load_config(const std::string& name_or_path) {
    if (name_or_path == "full" || name_or_path == "small")
        return preset_config(name_or_path);
    std::ifstream is(name_or_path);
    if (!is) throw DataError("cannot read config " + name_or_path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return config_from_json(buf.str());
}

} // namespace u2net
