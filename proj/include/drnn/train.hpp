#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "drnn/graph.hpp"
#include "drnn/model.hpp"
#include "drnn/tasks.hpp"

namespace drnn {

enum class TaskKind { CopyMemory, PixelMnist, NoisyMnist };

const char* task_kind_name(TaskKind k);
TaskKind task_kind_from_name(const std::string& name);

struct RunConfig {
    TaskKind task = TaskKind::CopyMemory;
    // task parameters
    int copy_T = 100;
    int pad_to_T = 0;          // noisy mnist
    bool permute = false;      // permuted pixel mnist
    std::string mnist_images;
    std::string mnist_labels;
    // model
    CellKind cell = CellKind::Vanilla;
    ArchKind arch = ArchKind::Dilated;
    int layers = 1;
    int base = 2;
    int start_exponent = 0;
    int skip_length = 0;       // regular-skip baseline
    int hidden = 10;
    // optimizer
    double lr = 0.001;
    double decay = 0.9;
    double epsilon = 1e-8;
    // run
    int batch = 128;
    int iterations = 1000;
    int eval_every = 100;
    std::optional<double> stop_at_val_loss;
    uint64_t seed = 0;
};

// Strict parse: unknown keys and missing required fields are ConfigErrors.
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

// Gathers masked positions, runs softmax cross entropy, scatters per-timestep
// logit gradients back (empty Matrix at timesteps with no masked entry).
struct MaskedLoss {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<Matrix> dlogits;  // [t] B x C or empty
};

MaskedLoss masked_softmax_loss(const SequenceActivations& acts, const TaskBatch& batch);

struct TrainResult {
    int iterations_run = 0;
    double final_train_loss = 0.0;
    double best_val_loss = 0.0;
    double final_val_loss = 0.0;
    double final_val_accuracy = 0.0;
    double wall_seconds = 0.0;
    std::string metrics_path;
    std::string checkpoint_path;
};

// Trains per the config, writing metrics.csv and the best-validation
// checkpoint under out_dir. Fully determined by (config, seed) except the
// wall-clock seconds column.
TrainResult run_training(const RunConfig& cfg, const std::string& out_dir);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

EvalResult evaluate_model(const DilatedRnnModel& model, const TaskBatch& batch);
EvalResult evaluate_checkpoint(const std::string& checkpoint_path, const RunConfig& task_cfg);

// Architecture analysis: writes analysis.csv (n,max_d) and summary.txt.
struct AnalysisOutput {
    std::string table_path;
    std::string summary_path;
    Rational mean_oracle;
    bool mean_finite = true;
};

ArchSpec parse_arch_spec(const std::string& json_text);
AnalysisOutput run_analysis(const ArchSpec& spec, const std::string& out_dir);

// Capacity-theory verification suites (digit-path formula, closed-form mean
// recurrent lengths, schedule optimality, recurrent-edge counts, CNN horizon,
// clockwork comparison). Returns true when everything passes; inject_fault
// deliberately corrupts one expected ranking to prove failures are caught.
struct TheoryOptions {
    int max_d = 8;
    std::vector<int> bases = {2, 3};
    int max_period = 512;
    bool inject_fault = false;
};

bool run_theory_suite(const TheoryOptions& opts, std::ostream& report);

// Sweep over starting exponents: each config drops l0 bottom layers and
// starts dilations at base^l0 (fusion head attached). Writes per-config
// metrics plus sweep.csv.
struct AblationRow {
    int start_exponent = 0;
    int layers = 0;
    double wall_seconds = 0.0;
    double final_val_loss = 0.0;
    double final_val_accuracy = 0.0;
};

std::vector<AblationRow> run_ablation(const RunConfig& base_cfg,
                                      const std::vector<int>& start_exponents,
                                      const std::string& out_dir);

}  // namespace drnn
