#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drnn/cells.hpp"

namespace drnn {

// Per-layer dilations s(l) = M^(l-1+l0). Baselines use custom schedules.
struct DilationSchedule {
    int num_layers = 0;
    int base = 2;
    int start_exponent = 0;
    std::vector<int> dilations;

    static DilationSchedule exponential(int num_layers, int base, int start_exponent);
    static DilationSchedule uniform(int num_layers, int dilation);

    int max_dilation() const { return dilations.empty() ? 0 : dilations.back(); }
    void validate() const;
};

enum class ArchKind { Dilated, Stacked, RegularSkip };

const char* arch_kind_name(ArchKind k);
ArchKind arch_kind_from_name(const std::string& name);

// 1-by-window linear map over consecutive top-layer outputs, one per phase of
// the starting dilation. taps[k] maps the output k steps back.
struct FusionHead {
    int window = 0;
    std::vector<Parameter> taps;  // window matrices, H x H
};

struct DilatedRnnModel {
    CellKind cell = CellKind::Vanilla;
    ArchKind arch = ArchKind::Dilated;
    DilationSchedule schedule;
    int skip_length = 0;  // regular-skip baseline only
    int input_dim = 0;
    int hidden_dim = 0;
    int num_classes = 0;

    std::vector<CellParams> layers;
    std::optional<FusionHead> fusion;
    Parameter readout_w;  // H x C
    Parameter readout_b;  // 1 x C

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    long long param_count() const;
    void zero_grads();
};

// Standard-normal weights, zero biases (LSTM forget offset applied on top).
// A fusion head is attached iff schedule.start_exponent > 0.
DilatedRnnModel build_model(CellKind cell, const DilationSchedule& schedule,
                            int input_dim, int hidden_dim, int num_classes, Rng& rng);

enum class BaselineKind { Single, Stacked, RegularSkip };

// single: one dilation-1 layer; stacked: dilation 1 everywhere; regular_skip:
// every layer has both the t-1 edge and a skip edge of uniform length.
DilatedRnnModel build_baseline(BaselineKind kind, CellKind cell, int num_layers,
                               int skip_length, int input_dim, int hidden_dim,
                               int num_classes, Rng& rng);

struct SequenceActivations {
    int T = 0;
    int batch = 0;
    std::vector<std::vector<StepCache>> caches;  // [layer][t]
    std::vector<Matrix> fused;                   // pre-readout features (fusion models only)
    std::vector<Matrix> logits;                  // [t] B x C

    const Matrix& hidden(int layer, int t) const { return caches[layer][t].h_out; }
};

// Sequential forward: layer l at time t consumes layer l-1's output at t and
// its own state at t-s(l), zero state below t=0.
SequenceActivations forward(const DilatedRnnModel& model,
                            const std::vector<Matrix>& inputs);

// Same computation reorganized per layer into s(l) interleaved phase
// subsequences, each run as a dilation-1 recurrence with shared weights.
// Outputs are bit-identical to forward().
SequenceActivations forward_interleaved(const DilatedRnnModel& model,
                                        const std::vector<Matrix>& inputs);

// Like forward(), but materializes the fusion/readout heads only at timesteps
// where head_at_t[t] is nonzero; logits (and fused) stay empty elsewhere.
// Hidden states match forward() exactly. Training uses this so head cost
// scales with the loss mask, not the sequence length.
SequenceActivations forward_heads_at(const DilatedRnnModel& model,
                                     const std::vector<Matrix>& inputs,
                                     const std::vector<uint8_t>& head_at_t);

// BPTT. dlogits[t] is B x C (or empty when no loss attaches at t); gradients
// accumulate into all Parameters.
void backward(DilatedRnnModel& model, const SequenceActivations& acts,
              const std::vector<Matrix>& dlogits);

// Self-describing binary checkpoint; round-trips bit-exactly.
void save_checkpoint(const DilatedRnnModel& model, const std::string& path);
DilatedRnnModel load_checkpoint(const std::string& path);

}  // namespace drnn
