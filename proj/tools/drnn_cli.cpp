// Command-line front end. Everything goes through the C API in drnn.h.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drnn.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;
constexpr int kExitNumeric = 3;

int exit_code_for(drnn_status s) {
    switch (s) {
        case DRNN_OK: return kExitOk;
        case DRNN_ERR_VERIFY: return kExitVerify;
        case DRNN_ERR_NUMERIC: return kExitNumeric;
        case DRNN_ERR_CONFIG:
        case DRNN_ERR_IO: return kExitUsage;
    }
    return kExitUsage;
}

int report(drnn_status s) {
    if (s != DRNN_OK) std::cerr << "error: " << drnn_last_error() << "\n";
    return exit_code_for(s);
}

struct Overrides {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<uint64_t> seed;
    std::optional<std::string> task;
    std::optional<std::string> cell;
    std::optional<std::string> arch;
    std::optional<int> layers;
    std::optional<int> base;
    std::optional<int> start_exponent;
    std::optional<int> skip_length;
    std::optional<int> hidden;
    std::optional<int> iterations;
    std::optional<int> batch;
    std::optional<int> copy_T;
    std::optional<double> stop_at;

    void add_flags(CLI::App* cmd, bool with_out = true) {
        cmd->add_option("--config", config_path, "run-config JSON file");
        if (with_out) cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--task", task, "copy_memory|pixel_mnist|noisy_mnist");
        cmd->add_option("--cell", cell, "vanilla|lstm|gru");
        cmd->add_option("--arch", arch, "dilated|stacked|regular_skip");
        cmd->add_option("--layers", layers, "number of layers");
        cmd->add_option("--base", base, "dilation base M");
        cmd->add_option("--start-exponent", start_exponent, "starting exponent l0");
        cmd->add_option("--skip-length", skip_length, "skip length (regular_skip)");
        cmd->add_option("--hidden", hidden, "hidden units per layer");
        cmd->add_option("--iterations", iterations, "training iterations");
        cmd->add_option("--batch", batch, "batch size");
        cmd->add_option("--copy-T", copy_T, "copy-memory gap length T");
        cmd->add_option("--stop-at-val-loss", stop_at, "early-stop threshold");
    }

    // file config first, command-line flags win
    std::string merged_config() const {
        json j;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw std::runtime_error("cannot open config '" + config_path + "'");
            std::ostringstream text;
            text << in.rdbuf();
            j = json::parse(text.str(), nullptr, false);
            if (j.is_discarded())
                throw std::runtime_error("malformed JSON in '" + config_path + "'");
        }
        if (!j.contains("version")) j["version"] = 1;
        if (seed) j["seed"] = *seed;
        if (!j.contains("seed")) j["seed"] = 0;
        if (task) j["task"] = *task;
        if (copy_T) j["copy_T"] = *copy_T;
        if (cell) j["model"]["cell"] = *cell;
        if (arch) j["model"]["arch"] = *arch;
        if (layers) j["model"]["layers"] = *layers;
        if (base) j["model"]["base"] = *base;
        if (start_exponent) j["model"]["start_exponent"] = *start_exponent;
        if (skip_length) j["model"]["skip_length"] = *skip_length;
        if (hidden) j["model"]["hidden"] = *hidden;
        if (iterations) j["iterations"] = *iterations;
        if (batch) j["batch"] = *batch;
        if (stop_at) j["stop_at_val_loss"] = *stop_at;
        return j.dump();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dilated-RNN training engine and architecture-analysis toolkit"};
    app.require_subcommand(1);

    Overrides train_ov, eval_ov, ablate_ov;
    std::string eval_checkpoint;
    std::string analyze_spec, analyze_out = "out";
    std::optional<int> an_layers, an_base, an_start, an_period, an_skip;
    std::string an_kind = "dilated_rnn";
    int vt_max_d = 8;
    std::vector<int> vt_bases = {2, 3};
    std::string vt_report;
    std::vector<int> ablate_exponents;

    auto* train = app.add_subcommand("train", "train a model, writing metrics.csv");
    train_ov.add_flags(train);

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a task");
    eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
    eval_ov.add_flags(eval, /*with_out=*/false);

    auto* analyze = app.add_subcommand("analyze", "graph analysis of an architecture");
    analyze->add_option("--spec", analyze_spec, "arch-spec JSON file");
    analyze->add_option("--out", analyze_out, "output directory");
    analyze->add_option("--kind", an_kind,
                        "dilated_rnn|regular_skip_rnn|dilated_cnn|clockwork_rnn");
    analyze->add_option("--layers", an_layers, "number of layers");
    analyze->add_option("--base", an_base, "dilation base M");
    analyze->add_option("--start-exponent", an_start, "starting exponent l0");
    analyze->add_option("--period", an_period, "analysis period m");
    analyze->add_option("--skip", an_skip, "skip length (regular_skip_rnn)");

    auto* verify = app.add_subcommand("verify-theory", "run the capacity-theory checks");
    verify->add_option("--max-d", vt_max_d, "largest layer count to check");
    verify->add_option("--bases", vt_bases, "dilation bases to check");
    verify->add_option("--report", vt_report, "write the report here instead of stdout");

    auto* ablate = app.add_subcommand("ablate", "sweep over starting exponents");
    ablate->add_option("--start-exponents", ablate_exponents, "exponents to sweep")
        ->required();
    ablate_ov.add_flags(ablate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train->parsed()) {
            return report(drnn_train(train_ov.merged_config().c_str(),
                                     train_ov.out_dir.c_str()));
        }
        if (eval->parsed()) {
            double loss = 0.0, acc = 0.0;
            const drnn_status s = drnn_eval(eval_checkpoint.c_str(),
                                            eval_ov.merged_config().c_str(), &loss, &acc);
            if (s == DRNN_OK) std::printf("loss=%.9e accuracy=%.6f\n", loss, acc);
            return report(s);
        }
        if (analyze->parsed()) {
            std::string spec_path = analyze_spec;
            if (spec_path.empty()) {
                // compose a spec file from the flags
                json j;
                j["kind"] = an_kind;
                if (!an_layers) {
                    std::cerr << "error: analyze needs --spec or --layers\n";
                    return kExitUsage;
                }
                j["layers"] = *an_layers;
                if (an_base) j["base"] = *an_base;
                if (an_start) j["start_exponent"] = *an_start;
                if (an_period) j["period"] = *an_period;
                if (an_skip) j["skip"] = *an_skip;
                std::filesystem::create_directories(analyze_out);
                spec_path = (std::filesystem::path(analyze_out) / "arch_spec.json").string();
                std::ofstream out(spec_path);
                out << j.dump(2) << "\n";
            }
            return report(drnn_analyze(spec_path.c_str(), analyze_out.c_str()));
        }
        if (verify->parsed()) {
            return report(drnn_verify_theory(vt_max_d, vt_bases.data(), vt_bases.size(),
                                             vt_report.empty() ? nullptr
                                                               : vt_report.c_str()));
        }
        if (ablate->parsed()) {
            return report(drnn_ablate(ablate_ov.merged_config().c_str(),
                                      ablate_exponents.data(), ablate_exponents.size(),
                                      ablate_ov.out_dir.c_str()));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
