#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// End-to-end runs of the installed command-line binary (path from the
// U2NET_CLI environment variable): train -> predict -> eval, plus the
// analyze report and exit-code contract.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "synthetic.hpp"
#include "u2net/config_io.hpp"
#include "u2net/image_io.hpp"

using namespace u2net;
namespace fs = std::filesystem;

namespace {

std::string cli() {
    const char* env = std::getenv("U2NET_CLI");
    REQUIRE_MESSAGE(env != nullptr, "U2NET_CLI must point at the binary");
    return env;
}

int run(const std::string& args) {
    const std::string cmd = cli() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("train, predict and eval round-trip through the CLI") {
    TempDir dir("u2net_cli_e2e");
    const std::string images = dir.file("images");
    const std::string masks = dir.file("masks");
    auto set = testsupport::make_shape_set(4, 32, 5);
    testsupport::write_shape_set(set, images, masks);

    NetworkConfig cfg = preset_config("small");
    cfg.input_size = 32;
    save_config(cfg, dir.file("config.json"));

    const std::string ckpt = dir.file("model.ckpt");
    CHECK(run("train --config " + dir.file("config.json") + " --images " + images +
              " --masks " + masks + " --iters 3 --batch 2 --seed 1 --out " + ckpt +
              " --history " + dir.file("loss.csv")) == 0);
    CHECK(fs::exists(ckpt));
    {
        std::ifstream is(dir.file("loss.csv"));
        std::string header;
        std::getline(is, header);
        CHECK(header == "iteration,loss");
        int rows = 0;
        std::string line;
        while (std::getline(is, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 3);
    }

    const std::string preds = dir.file("preds");
    CHECK(run("predict --ckpt " + ckpt + " --input " + images + " --output " + preds) == 0);
    for (int i = 0; i < 4; ++i)
        CHECK(fs::exists(fs::path(preds) / ("shape_" + std::to_string(i) + ".png")));

    const std::string report = dir.file("report.json");
    CHECK(run("eval --pred " + preds + " --gt " + masks + " --report " + report + " --csv " +
              dir.file("per_image.csv")) == 0);
    std::ifstream is(report);
    REQUIRE(is.good());
    nlohmann::json j = nlohmann::json::parse(is);
    CHECK(j.at("n_images").get<int>() == 4);
    CHECK(j.at("pr_curve").size() == 256);
    CHECK(j.at("mae").get<double>() >= 0.0);
    CHECK(j.at("mae").get<double>() <= 1.0);

    // Evaluating the ground truth against itself is perfect.
    const std::string self_report = dir.file("self.json");
    CHECK(run("eval --pred " + masks + " --gt " + masks + " --report " + self_report) == 0);
    std::ifstream is2(self_report);
    nlohmann::json j2 = nlohmann::json::parse(is2);
    CHECK(j2.at("max_f_beta").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(j2.at("mae").get<double>() == 0.0);
    CHECK(j2.at("relax_f_boundary").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("analyze reports the documented model sizes and curve fits") {
    TempDir dir("u2net_cli_analyze");
    const std::string report = dir.file("analyze.json");
    CHECK(run("analyze --config full --size 320 --report " + report +
              " --curve 16,32,64,128,256") == 0);
    std::ifstream is(report);
    nlohmann::json j = nlohmann::json::parse(is);
    CHECK(j.at("param_mb").get<double>() == doctest::Approx(176.3).epsilon(0.03));
    CHECK(j.at("curve_fits").size() == 5);

    const std::string block_report = dir.file("block.json");
    CHECK(run("analyze --block RSU-7:3:32:64 --size 320 --report " + block_report) == 0);
}

TEST_CASE("exit codes: usage 1, data 2, numerical 3") {
    TempDir dir("u2net_cli_codes");
    CHECK(run("nonsense-subcommand") == 1);
    CHECK(run("train --config full") == 1); // missing required flags
    CHECK(run("analyze --block NOT-A-BLOCK:1:2:3 --size 64") == 1);
    CHECK(run("predict --ckpt " + dir.file("missing.ckpt") + " --input " + dir.str() +
              " --output " + dir.file("out")) == 2);
    CHECK(run("eval --pred " + dir.file("nope") + " --gt " + dir.file("nope") +
              " --report " + dir.file("r.json")) == 2);
    CHECK(run("gradcheck --cases 1 --seed 3 --inject-fault conv-backward") == 3);
    CHECK(run("gradcheck --cases 1 --seed 3") == 0);
}
