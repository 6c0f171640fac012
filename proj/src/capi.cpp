#include "drnn.h"

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "drnn/errors.hpp"
#include "drnn/train.hpp"

using nlohmann::json;

struct drnn_model {
    drnn::DilatedRnnModel impl;
};

namespace {

thread_local std::string g_last_error = "no error";

drnn_status fail(drnn_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

// maps the exception hierarchy onto the C status codes
template <typename Fn>
drnn_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const drnn::VerifyError& e) {
        return fail(DRNN_ERR_VERIFY, e.what());
    } catch (const drnn::NumericError& e) {
        return fail(DRNN_ERR_NUMERIC, e.what());
    } catch (const drnn::IoError& e) {
        return fail(DRNN_ERR_IO, e.what());
    } catch (const drnn::Error& e) {
        return fail(DRNN_ERR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return fail(DRNN_ERR_CONFIG, e.what());
    }
}

drnn::DilatedRnnModel model_from_json(const char* config_json) {
    if (!config_json) throw drnn::ConfigError("config_json is NULL");
    json j = json::parse(config_json, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw drnn::ConfigError("model config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        static const char* allowed[] = {"cell",       "arch",       "layers",
                                        "base",       "start_exponent", "skip_length",
                                        "input_dim",  "hidden",     "num_classes",
                                        "seed"};
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw drnn::ConfigError("unknown key '" + key + "' in model config");
    }
    const auto cell = drnn::cell_kind_from_name(j.value("cell", "vanilla"));
    const auto arch = drnn::arch_kind_from_name(j.value("arch", "dilated"));
    const int layers = j.value("layers", 1);
    const int input_dim = j.value("input_dim", 1);
    const int hidden = j.value("hidden", 10);
    const int classes = j.value("num_classes", 10);
    drnn::Rng rng(j.value("seed", uint64_t{0}));
    if (arch == drnn::ArchKind::Dilated) {
        const auto sched = drnn::DilationSchedule::exponential(
            layers, j.value("base", 2), j.value("start_exponent", 0));
        return drnn::build_model(cell, sched, input_dim, hidden, classes, rng);
    }
    const auto bk = arch == drnn::ArchKind::RegularSkip
                        ? drnn::BaselineKind::RegularSkip
                        : (layers == 1 ? drnn::BaselineKind::Single
                                       : drnn::BaselineKind::Stacked);
    return drnn::build_baseline(bk, cell, layers, j.value("skip_length", 0), input_dim,
                                hidden, classes, rng);
}

}  // namespace

extern "C" {

const char* drnn_last_error(void) { return g_last_error.c_str(); }

drnn_status drnn_model_create(const char* config_json, drnn_model** out) {
    return guarded([&]() -> drnn_status {
        if (!out) throw drnn::ConfigError("out handle is NULL");
        auto* m = new drnn_model{model_from_json(config_json)};
        *out = m;
        return DRNN_OK;
    });
}

drnn_status drnn_model_load(const char* path, drnn_model** out) {
    return guarded([&]() -> drnn_status {
        if (!out || !path) throw drnn::ConfigError("NULL argument to drnn_model_load");
        auto* m = new drnn_model{drnn::load_checkpoint(path)};
        *out = m;
        return DRNN_OK;
    });
}

drnn_status drnn_model_save(const drnn_model* model, const char* path) {
    return guarded([&]() -> drnn_status {
        if (!model || !path) throw drnn::ConfigError("NULL argument to drnn_model_save");
        drnn::save_checkpoint(model->impl, path);
        return DRNN_OK;
    });
}

long long drnn_model_param_count(const drnn_model* model) {
    return model ? model->impl.param_count() : -1;
}

void drnn_model_free(drnn_model* model) { delete model; }

drnn_status drnn_train(const char* config_json, const char* out_dir) {
    return guarded([&]() -> drnn_status {
        if (!config_json || !out_dir)
            throw drnn::ConfigError("NULL argument to drnn_train");
        const drnn::RunConfig cfg = drnn::parse_run_config(config_json);
        drnn::run_training(cfg, out_dir);
        return DRNN_OK;
    });
}

drnn_status drnn_eval(const char* checkpoint_path, const char* config_json,
                      double* loss, double* accuracy) {
    return guarded([&]() -> drnn_status {
        if (!checkpoint_path || !config_json)
            throw drnn::ConfigError("NULL argument to drnn_eval");
        const drnn::RunConfig cfg = drnn::parse_run_config(config_json);
        const drnn::EvalResult r = drnn::evaluate_checkpoint(checkpoint_path, cfg);
        if (loss) *loss = r.loss;
        if (accuracy) *accuracy = r.accuracy;
        return DRNN_OK;
    });
}

drnn_status drnn_analyze(const char* spec_path, const char* out_dir) {
    return guarded([&]() -> drnn_status {
        if (!spec_path || !out_dir)
            throw drnn::ConfigError("NULL argument to drnn_analyze");
        std::ifstream in(spec_path);
        if (!in) throw drnn::IoError("cannot open arch spec '" + std::string(spec_path) + "'");
        std::ostringstream text;
        text << in.rdbuf();
        const drnn::ArchSpec spec = drnn::parse_arch_spec(text.str());
        drnn::run_analysis(spec, out_dir);
        return DRNN_OK;
    });
}

drnn_status drnn_verify_theory(int max_d, const int* bases, size_t num_bases,
                               const char* report_path) {
    return guarded([&]() -> drnn_status {
        drnn::TheoryOptions opts;
        if (max_d > 0) opts.max_d = max_d;
        if (bases && num_bases > 0) opts.bases.assign(bases, bases + num_bases);
        bool ok;
        if (report_path) {
            std::ofstream out(report_path);
            if (!out)
                throw drnn::IoError("cannot open report '" + std::string(report_path) + "'");
            ok = drnn::run_theory_suite(opts, out);
        } else {
            ok = drnn::run_theory_suite(opts, std::cout);
        }
        if (!ok) throw drnn::VerifyError("theory verification found a counterexample");
        return DRNN_OK;
    });
}

drnn_status drnn_ablate(const char* config_json, const int* start_exponents,
                        size_t num_exponents, const char* out_dir) {
    return guarded([&]() -> drnn_status {
        if (!config_json || !start_exponents || !out_dir || num_exponents == 0)
            throw drnn::ConfigError("NULL or empty argument to drnn_ablate");
        const drnn::RunConfig cfg = drnn::parse_run_config(config_json);
        std::vector<int> exps(start_exponents, start_exponents + num_exponents);
        drnn::run_ablation(cfg, exps, out_dir);
        return DRNN_OK;
    });
}

}  // extern "C"
