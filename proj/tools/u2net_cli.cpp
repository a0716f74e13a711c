// Command-line front end: train / predict / eval / analyze / gradcheck.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "u2net/analyzer.hpp"
#include "u2net/checkpoint.hpp"
#include "u2net/config_io.hpp"
#include "u2net/dataset.hpp"
#include "u2net/image_io.hpp"
#include "u2net/trainer.hpp"
#include "u2net/verify.hpp"

namespace {

namespace fs = std::filesystem;
using namespace u2net;

struct TrainArgs {
    std::string config;
    std::string images;
    std::string masks;
    std::int64_t iters = 1000;
    std::int64_t batch = 12;
    std::uint64_t seed = 0;
    std::string out;
    std::string loss = "mean";
    std::string history;
};

int cmd_train(const TrainArgs& a) {
    NetworkConfig config = load_config(a.config);
    Network<float> net = Network<float>::build(config, a.seed);

    PairingReport pairing = pair_dataset(a.images, a.masks);
    for (const auto& stem : pairing.unmatched_first)
        std::cerr << "warning: image without mask: " << stem << "\n";
    for (const auto& stem : pairing.unmatched_second)
        std::cerr << "warning: mask without image: " << stem << "\n";
    auto dataset = load_training_pairs<float>(pairing);

    TrainConfig cfg;
    cfg.iterations = a.iters;
    cfg.batch_size = a.batch;
    cfg.seed = a.seed;
    cfg.resize = config.input_size;
    cfg.crop = std::max<std::int64_t>(1, config.input_size * 288 / 320);
    cfg.loss_mode = a.loss == "sum" ? LossReduction::sum : LossReduction::mean;
    cfg.checkpoint_path = a.out;

    TrainResult result = train(net, dataset, cfg);
    if (!a.history.empty()) save_history_csv(result.history, a.history);
    if (!result.history.empty())
        std::cout << "final loss " << result.history.back().loss << " after "
                  << result.history.back().iteration << " iterations\n";
    std::cout << "checkpoint written to " << a.out << "\n";
    return 0;
}

int cmd_predict(const std::string& ckpt, const std::string& input, const std::string& output) {
    Network<float> net = load_checkpoint<float>(ckpt);
    net.set_training(false);

    std::vector<std::string> files;
    if (fs::is_directory(input)) {
        for (const auto& entry : fs::directory_iterator(input))
            if (entry.is_regular_file()) files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
    } else if (fs::is_regular_file(input)) {
        files.push_back(input);
    } else {
        throw DataError("no such input: " + input);
    }
    if (files.empty()) throw DataError("no input images in " + input);
    fs::create_directories(output);

    for (const auto& file : files) {
        ImageRecord rec = load_image(file);
        Tensor<float> image = image_to_tensor<float>(rec);
        Tensor<float> map = net.predict(image, rec.h, rec.w);
        const std::string out_path = (fs::path(output) / (rec.stem + ".png")).string();
        save_map(tensor_to_map(map), out_path);
        std::cout << rec.stem << " -> " << out_path << "\n";
    }
    return 0;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& report_path, const std::string& csv_path) {
    PairingReport pairing = pair_dataset(pred_dir, gt_dir);
    for (const auto& stem : pairing.unmatched_first)
        std::cerr << "warning: prediction without ground truth: " << stem << "\n";
    for (const auto& stem : pairing.unmatched_second)
        std::cerr << "warning: ground truth without prediction: " << stem << "\n";

    std::vector<std::string> notes;
    auto pairs = load_eval_pairs(pairing, &notes);
    for (const auto& n : notes) std::cerr << "note: " << n << "\n";

    MetricReport report =
        evaluate_dataset(std::move(pairs), fs::path(gt_dir).filename().string());
    report.save_json(report_path);
    if (!csv_path.empty()) report.save_csv(csv_path);

    std::cout << "images " << report.n_images << "\n"
              << "maxF_beta " << report.max_f_beta << "\n"
              << "MAE " << report.mae << "\n"
              << "wF_beta "
              << (report.weighted_f_beta ? std::to_string(*report.weighted_f_beta)
                                         : std::string("undefined"))
              << "\n"
              << "S_measure " << report.s_measure << "\n"
              << "relaxF_boundary " << report.relax_f_boundary << "\n"
              << "report written to " << report_path << "\n";
    return 0;
}

struct AnalyzeArgs {
    std::string config;
    std::string block;
    std::int64_t size = 320;
    std::string report;
    std::string curve;
    std::string curve_csv;
};

int cmd_analyze(const AnalyzeArgs& a) {
    nlohmann::json out;

    if (!a.config.empty()) {
        NetworkConfig config = load_config(a.config);
        const ParamCount params = count_params(config);
        const CostReport cost = network_flops(config, a.size, a.size);
        out["config"] = nlohmann::json::parse(config_to_json(config));
        out["param_values"] = params.values;
        out["trainable_values"] = params.trainable;
        out["param_bytes"] = params.bytes;
        out["param_mb"] = static_cast<double>(params.bytes) / 1e6;
        out["gflops"] = cost.gflops();
        out["total_macs"] = cost.total_macs;
        out["stages"] = nlohmann::json::array();
        for (const auto& row : stage_shapes(config, a.size, a.size))
            out["stages"].push_back({{"stage", row.stage},
                                     {"in", {row.in_c, row.in_h, row.in_w}},
                                     {"out", {row.out_c, row.out_h, row.out_w}}});
        std::cout << "parameters " << params.values << " (" << out["param_mb"].get<double>()
                  << " MB), " << cost.gflops() << " GFLOPs at " << a.size << "x" << a.size
                  << "\n";
    }

    if (!a.block.empty()) {
        const BlockKind kind = BlockKind::parse(a.block);
        const CostReport cost = flops(kind, a.size, a.size);
        out["block"] = nlohmann::json::parse(cost.to_json());
        std::cout << kind.str() << ": " << cost.gflops() << " GFLOPs, " << cost.total_params
                  << " params at " << a.size << "x" << a.size << "\n";
    }

    if (!a.curve.empty()) {
        std::vector<std::int64_t> m_values;
        std::stringstream ss(a.curve);
        std::string tok;
        while (std::getline(ss, tok, ',')) m_values.push_back(std::stoll(tok));

        std::vector<BlockKind> kinds;
        if (!a.block.empty()) {
            kinds.push_back(BlockKind::parse(a.block));
        } else {
            // Default comparison set: 3 -> 64 channels, as in the block
            // cost figure.
            for (const char* k : {"PLN:3:32:64", "RES:3:32:64", "DSE:3:32:64", "INC:3:32:64",
                                  "RSU-7:3:32:64"})
                kinds.push_back(BlockKind::parse(k));
        }
        const CostCurve curve = cost_curve(kinds, m_values, a.size, a.size);
        if (!a.curve_csv.empty()) {
            save_curve_csv(curve, a.curve_csv);
            std::cout << "curve written to " << a.curve_csv << "\n";
        } else {
            std::cout << curve_csv(curve);
        }
        out["curve_fits"] = nlohmann::json::array();
        for (const auto& [kind, fit] : curve.fits)
            out["curve_fits"].push_back(
                {{"kind", kind}, {"a", fit.a}, {"b", fit.b}, {"c", fit.c},
                 {"max_rel_residual", fit.max_rel_residual}});
    }

    if (a.config.empty() && a.block.empty() && a.curve.empty())
        throw ConfigError("analyze: nothing to do (give --config, --block or --curve)");

    if (!a.report.empty()) {
        std::ofstream os(a.report);
        if (!os) throw DataError("cannot write report to " + a.report);
        os << out.dump(2) << "\n";
        std::cout << "report written to " << a.report << "\n";
    }
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, int cases, const std::string& inject_fault) {
    VerifyOptions opts;
    opts.seed = seed;
    opts.cases_per_op = cases;
    if (!inject_fault.empty()) {
        if (inject_fault == "conv-backward") opts.break_conv_backward = true;
        else throw ConfigError("unknown fault '" + inject_fault + "'");
    }
    const VerifyResult result = verify_gradients(opts);
    for (const auto& op : result.ops)
        std::cout << (op.pass ? "pass" : "FAIL") << "  " << op.op << "  cases " << op.cases
                  << "  worst rel err " << op.worst_rel_err << "\n";
    if (!result.pass) {
        std::cerr << "gradient verification failed\n";
        return 3;
    }
    std::cout << "all gradient checks passed\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"U^2-Net salient object detection: training, inference, evaluation and "
                 "cost analysis"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a network on an image/mask directory pair");
    train_cmd->add_option("--config", train_args.config, "Config JSON path or preset (full|small)")
        ->required();
    train_cmd->add_option("--images", train_args.images, "Training image directory")->required();
    train_cmd->add_option("--masks", train_args.masks, "Ground-truth mask directory")->required();
    train_cmd->add_option("--iters", train_args.iters, "Training iterations");
    train_cmd->add_option("--batch", train_args.batch, "Batch size");
    train_cmd->add_option("--seed", train_args.seed, "RNG seed");
    train_cmd->add_option("--out", train_args.out, "Output checkpoint path")->required();
    train_cmd->add_option("--loss", train_args.loss, "Loss normalization: sum or mean")
        ->check(CLI::IsMember({"sum", "mean"}));
    train_cmd->add_option("--history", train_args.history, "Write iteration,loss CSV here");

    std::string predict_ckpt, predict_input, predict_output;
    auto* predict_cmd = app.add_subcommand("predict", "Write saliency maps for an image or directory");
    predict_cmd->add_option("--ckpt", predict_ckpt, "Checkpoint path")->required();
    predict_cmd->add_option("--input", predict_input, "Input image or directory")->required();
    predict_cmd->add_option("--output", predict_output, "Output directory")->required();

    std::string eval_pred, eval_gt, eval_report, eval_csv;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate predicted maps against ground truth");
    eval_cmd->add_option("--pred", eval_pred, "Prediction directory")->required();
    eval_cmd->add_option("--gt", eval_gt, "Ground-truth directory")->required();
    eval_cmd->add_option("--report", eval_report, "Output JSON report")->required();
    eval_cmd->add_option("--csv", eval_csv, "Optional per-image CSV");

    AnalyzeArgs analyze_args;
    auto* analyze_cmd = app.add_subcommand("analyze", "Parameter and FLOPs accounting");
    analyze_cmd->add_option("--config", analyze_args.config,
                            "Config JSON path or preset (full|small)");
    analyze_cmd->add_option("--block", analyze_args.block,
                            "Single block, e.g. RSU-7:3:32:64 or INC:3:32:64");
    analyze_cmd->add_option("--size", analyze_args.size, "Input height/width");
    analyze_cmd->add_option("--report", analyze_args.report, "Output JSON report");
    analyze_cmd->add_option("--curve", analyze_args.curve,
                            "Comma-separated M values for the FLOPs-vs-M curve");
    analyze_cmd->add_option("--curve-csv", analyze_args.curve_csv,
                            "Write the curve as kind,M,gflops CSV here");

    std::uint64_t gc_seed = 0;
    int gc_cases = 100;
    std::string gc_fault;
    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "Run the full primitive-op gradient verification suite");
    gradcheck_cmd->add_option("--seed", gc_seed, "RNG seed");
    gradcheck_cmd->add_option("--cases", gc_cases, "Randomized cases per op");
    gradcheck_cmd->add_option("--inject-fault", gc_fault,
                              "Self-test fixture: deliberately break a backward pass "
                              "(conv-backward)");

    try {
        app.parse(argc, argv);
        if (*train_cmd) return cmd_train(train_args);
        if (*predict_cmd) return cmd_predict(predict_ckpt, predict_input, predict_output);
        if (*eval_cmd) return cmd_eval(eval_pred, eval_gt, eval_report, eval_csv);
        if (*analyze_cmd) return cmd_analyze(analyze_args);
        if (*gradcheck_cmd) return cmd_gradcheck(gc_seed, gc_cases, gc_fault);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
