#include "drnn/model.hpp"

#include <cmath>

#include <cstdint>
#include <cstring>
#include <fstream>

#include "drnn/errors.hpp"

namespace drnn {

DilationSchedule DilationSchedule::exponential(int num_layers, int base, int start_exponent) {
    if (num_layers < 1) throw ConfigError("schedule: need at least one layer");
    if (base < 2) throw ConfigError("schedule: base must be >= 2");
    if (start_exponent < 0) throw ConfigError("schedule: start exponent must be >= 0");
    DilationSchedule s;
    s.num_layers = num_layers;
    s.base = base;
    s.start_exponent = start_exponent;
    int d = 1;
    for (int e = 0; e < start_exponent; ++e) d *= base;
    for (int l = 0; l < num_layers; ++l) {
        s.dilations.push_back(d);
        d *= base;
    }
    return s;
}

DilationSchedule DilationSchedule::uniform(int num_layers, int dilation) {
    if (num_layers < 1) throw ConfigError("schedule: need at least one layer");
    DilationSchedule s;
    s.num_layers = num_layers;
    s.base = 2;
    s.start_exponent = 0;
    s.dilations.assign(num_layers, dilation);
    return s;
}

void DilationSchedule::validate() const {
    if (num_layers < 1 || static_cast<int>(dilations.size()) != num_layers)
        throw ConfigError("schedule: dilation count must match layer count");
    for (int i = 0; i < num_layers; ++i) {
        if (dilations[i] < 1) throw ConfigError("schedule: dilations must be positive");
        if (i > 0) {
            if (dilations[i] < dilations[i - 1])
                throw ConfigError("schedule: dilations must be non-decreasing");
            if (dilations[i] % dilations[i - 1] != 0)
                throw ConfigError("schedule: each dilation must divide the next");
        }
    }
}

const char* arch_kind_name(ArchKind k) {
    switch (k) {
        case ArchKind::Dilated: return "dilated";
        case ArchKind::Stacked: return "stacked";
        case ArchKind::RegularSkip: return "regular_skip";
    }
    return "?";
}

ArchKind arch_kind_from_name(const std::string& name) {
    if (name == "dilated") return ArchKind::Dilated;
    if (name == "stacked" || name == "single") return ArchKind::Stacked;
    if (name == "regular_skip") return ArchKind::RegularSkip;
    throw ConfigError("unknown architecture kind '" + name + "'");
}

std::vector<Parameter*> DilatedRnnModel::parameters() {
    std::vector<Parameter*> ps;
    for (auto& layer : layers)
        for (Parameter* p : layer.parameters()) ps.push_back(p);
    if (fusion)
        for (auto& tap : fusion->taps) ps.push_back(&tap);
    ps.push_back(&readout_w);
    ps.push_back(&readout_b);
    return ps;
}

std::vector<const Parameter*> DilatedRnnModel::parameters() const {
    std::vector<const Parameter*> ps;
    for (const auto& layer : layers)
        for (const Parameter* p : layer.parameters()) ps.push_back(p);
    if (fusion)
        for (const auto& tap : fusion->taps) ps.push_back(&tap);
    ps.push_back(&readout_w);
    ps.push_back(&readout_b);
    return ps;
}

long long DilatedRnnModel::param_count() const {
    long long n = 0;
    for (const Parameter* p : parameters()) n += p->count();
    return n;
}

void DilatedRnnModel::zero_grads() {
    for (Parameter* p : parameters()) p->zero_grad();
}

DilatedRnnModel build_model(CellKind cell, const DilationSchedule& schedule,
                            int input_dim, int hidden_dim, int num_classes, Rng& rng) {
    schedule.validate();
    if (input_dim < 1 || hidden_dim < 1 || num_classes < 1)
        throw ConfigError("build_model: dimensions must be positive");
    DilatedRnnModel m;
    m.cell = cell;
    m.arch = ArchKind::Dilated;
    m.schedule = schedule;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.num_classes = num_classes;
    for (int l = 0; l < schedule.num_layers; ++l) {
        const int in = l == 0 ? input_dim : hidden_dim;
        m.layers.push_back(CellParams::init(cell, in, hidden_dim, false, rng,
                                            "layer" + std::to_string(l)));
    }
    if (schedule.start_exponent > 0) {
        FusionHead f;
        f.window = schedule.dilations.front();
        for (int k = 0; k < f.window; ++k) {
            Matrix tap = standard_normal(hidden_dim, hidden_dim, rng);
            const double s = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
            for (std::size_t q = 0; q < tap.size(); ++q) tap.data()[q] *= s;
            f.taps.emplace_back("fusion.tap" + std::to_string(k), std::move(tap));
        }
        m.fusion = std::move(f);
    }
    {
        Matrix w = standard_normal(hidden_dim, num_classes, rng);
        const double s = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
        for (std::size_t q = 0; q < w.size(); ++q) w.data()[q] *= s;
        m.readout_w = Parameter("readout.w", std::move(w));
    }
    m.readout_b = Parameter("readout.b", Matrix(1, num_classes));
    return m;
}

DilatedRnnModel build_baseline(BaselineKind kind, CellKind cell, int num_layers,
                               int skip_length, int input_dim, int hidden_dim,
                               int num_classes, Rng& rng) {
    if (input_dim < 1 || hidden_dim < 1 || num_classes < 1)
        throw ConfigError("build_baseline: dimensions must be positive");
    DilatedRnnModel m;
    m.cell = cell;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.num_classes = num_classes;
    const bool skip = kind == BaselineKind::RegularSkip;
    if (skip) {
        if (skip_length < 1)
            throw ConfigError("build_baseline: regular_skip needs a positive skip length");
        m.arch = ArchKind::RegularSkip;
        m.skip_length = skip_length;
    } else {
        m.arch = ArchKind::Stacked;
        if (kind == BaselineKind::Single) num_layers = 1;
    }
    m.schedule = DilationSchedule::uniform(num_layers, 1);
    for (int l = 0; l < num_layers; ++l) {
        const int in = l == 0 ? input_dim : hidden_dim;
        m.layers.push_back(CellParams::init(cell, in, hidden_dim, skip, rng,
                                            "layer" + std::to_string(l)));
    }
    {
        Matrix w = standard_normal(hidden_dim, num_classes, rng);
        const double s = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
        for (std::size_t q = 0; q < w.size(); ++q) w.data()[q] *= s;
        m.readout_w = Parameter("readout.w", std::move(w));
    }
    m.readout_b = Parameter("readout.b", Matrix(1, num_classes));
    return m;
}

namespace {

CellState state_at(const DilatedRnnModel& model, const std::vector<StepCache>& caches,
                   int t, int batch) {
    if (t < 0) return CellState::zero(model.cell, batch, model.hidden_dim);
    CellState s;
    s.hidden = caches[t].h_out;
    if (model.cell == CellKind::LSTM) s.memory = caches[t].c_out;
    return s;
}

void run_layer_sequential(const DilatedRnnModel& model, int layer,
                          const std::vector<Matrix>* inputs,
                          SequenceActivations& acts) {
    const CellParams& params = model.layers[layer];
    const int T = acts.T;
    const int s = model.schedule.dilations[layer];
    auto& caches = acts.caches[layer];
    auto input_at = [&](int t) -> const Matrix& {
        return layer == 0 ? (*inputs)[t] : acts.caches[layer - 1][t].h_out;
    };
    if (model.arch == ArchKind::RegularSkip) {
        const int skip = model.skip_length;
        for (int t = 0; t < T; ++t) {
            CellState prev = state_at(model, caches, t - 1, acts.batch);
            CellState skipped = state_at(model, caches, t - skip, acts.batch);
            skip_cell_step(params, input_at(t), prev, skipped, &caches[t]);
        }
    } else {
        for (int t = 0; t < T; ++t) {
            CellState rec = state_at(model, caches, t - s, acts.batch);
            cell_step(params, input_at(t), rec, &caches[t]);
        }
    }
}

void run_layer_interleaved(const DilatedRnnModel& model, int layer,
                           const std::vector<Matrix>* inputs,
                           SequenceActivations& acts) {
    const CellParams& params = model.layers[layer];
    const int T = acts.T;
    const int s = model.schedule.dilations[layer];
    auto& caches = acts.caches[layer];
    auto input_at = [&](int t) -> const Matrix& {
        return layer == 0 ? (*inputs)[t] : acts.caches[layer - 1][t].h_out;
    };
    // each phase is an independent dilation-1 chain over times p, p+s, ...
    for (int phase = 0; phase < s; ++phase) {
        CellState state = CellState::zero(model.cell, acts.batch, model.hidden_dim);
        for (int t = phase; t < T; t += s)
            state = cell_step(params, input_at(t), state, &caches[t]);
    }
}

void apply_heads(const DilatedRnnModel& model, SequenceActivations& acts,
                 const std::vector<uint8_t>* head_at_t) {
    const int top = model.schedule.num_layers - 1;
    const int T = acts.T;
    acts.logits.resize(T);
    if (model.fusion) {
        acts.fused.resize(T);
        const FusionHead& f = *model.fusion;
        for (int t = 0; t < T; ++t) {
            if (head_at_t && !(*head_at_t)[t]) continue;
            Matrix fused(acts.batch, model.hidden_dim);
            for (int k = 0; k < f.window; ++k)
                if (t - k >= 0)
                    add_inplace(fused, matmul(acts.hidden(top, t - k), f.taps[k].value));
            acts.fused[t] = std::move(fused);
        }
    }
    for (int t = 0; t < T; ++t) {
        if (head_at_t && !(*head_at_t)[t]) continue;
        const Matrix& feat = model.fusion ? acts.fused[t] : acts.hidden(top, t);
        Matrix logits = matmul(feat, model.readout_w.value);
        add_row_inplace(logits, model.readout_b.value);
        acts.logits[t] = std::move(logits);
    }
}

SequenceActivations run_forward(const DilatedRnnModel& model,
                                const std::vector<Matrix>& inputs, bool interleaved,
                                const std::vector<uint8_t>* head_at_t = nullptr) {
    if (inputs.empty()) throw DimensionError("forward: need at least one timestep");
    SequenceActivations acts;
    acts.T = static_cast<int>(inputs.size());
    acts.batch = inputs[0].rows();
    for (const Matrix& x : inputs)
        if (x.rows() != acts.batch || x.cols() != model.input_dim)
            throw DimensionError("forward: inconsistent input shapes");
    acts.caches.assign(model.schedule.num_layers, std::vector<StepCache>(acts.T));
    for (int l = 0; l < model.schedule.num_layers; ++l) {
        // the regular-skip recurrence couples strides 1 and s, so it cannot
        // be split into independent phases; its layers always run sequentially
        if (interleaved && model.arch != ArchKind::RegularSkip)
            run_layer_interleaved(model, l, &inputs, acts);
        else
            run_layer_sequential(model, l, &inputs, acts);
    }
    apply_heads(model, acts, head_at_t);
    return acts;
}

}  // namespace

SequenceActivations forward(const DilatedRnnModel& model, const std::vector<Matrix>& inputs) {
    return run_forward(model, inputs, false);
}

SequenceActivations forward_interleaved(const DilatedRnnModel& model,
                                        const std::vector<Matrix>& inputs) {
    return run_forward(model, inputs, true);
}

SequenceActivations forward_heads_at(const DilatedRnnModel& model,
                                     const std::vector<Matrix>& inputs,
                                     const std::vector<uint8_t>& head_at_t) {
    if (head_at_t.size() != inputs.size())
        throw DimensionError("forward_heads_at: mask length must equal T");
    return run_forward(model, inputs, false, &head_at_t);
}

void backward(DilatedRnnModel& model, const SequenceActivations& acts,
              const std::vector<Matrix>& dlogits) {
    const int L = model.schedule.num_layers;
    const int T = acts.T;
    const int top = L - 1;
    if (static_cast<int>(dlogits.size()) != T)
        throw DimensionError("backward: dlogits length must equal T");
    if (static_cast<int>(acts.caches.size()) != L || acts.caches[0].size() != static_cast<size_t>(T))
        throw ConfigError("backward: activations do not match this model");

    std::vector<std::vector<Matrix>> dh(L);
    std::vector<std::vector<Matrix>> dc(L);
    const bool lstm = model.cell == CellKind::LSTM;
    for (int l = 0; l < L; ++l) {
        dh[l].assign(T, Matrix(acts.batch, model.hidden_dim));
        if (lstm) dc[l].assign(T, Matrix(acts.batch, model.hidden_dim));
    }

    // readout (and fusion) path
    for (int t = 0; t < T; ++t) {
        if (dlogits[t].empty()) continue;
        const Matrix& feat = model.fusion ? acts.fused[t] : acts.hidden(top, t);
        add_inplace(model.readout_w.grad, matmul_tn(feat, dlogits[t]));
        add_inplace(model.readout_b.grad, col_sum(dlogits[t]));
        Matrix dfeat = matmul_nt(dlogits[t], model.readout_w.value);
        if (model.fusion) {
            FusionHead& f = *model.fusion;
            for (int k = 0; k < f.window; ++k) {
                if (t - k < 0) continue;
                add_inplace(f.taps[k].grad, matmul_tn(acts.hidden(top, t - k), dfeat));
                add_inplace(dh[top][t - k], matmul_nt(dfeat, f.taps[k].value));
            }
        } else {
            add_inplace(dh[top][t], dfeat);
        }
    }

    for (int l = top; l >= 0; --l) {
        const int s = model.schedule.dilations[l];
        for (int t = T - 1; t >= 0; --t) {
            const Matrix* dc_in = lstm ? &dc[l][t] : nullptr;
            StepGrads g = cell_backward(model.layers[l], acts.caches[l][t], dh[l][t], dc_in);
            if (model.arch == ArchKind::RegularSkip) {
                if (t - 1 >= 0) {
                    add_inplace(dh[l][t - 1], g.dh1);
                    if (lstm) add_inplace(dc[l][t - 1], g.dc_prev);
                }
                if (t - model.skip_length >= 0)
                    add_inplace(dh[l][t - model.skip_length], g.dh2);
            } else {
                if (t - s >= 0) {
                    add_inplace(dh[l][t - s], g.dh1);
                    if (lstm) add_inplace(dc[l][t - s], g.dc_prev);
                }
            }
            if (l > 0) add_inplace(dh[l - 1][t], g.dx);
        }
    }
}

namespace {

constexpr char kMagic[8] = {'D', 'R', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& os, uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint32_t read_u32(std::istream& is, const char* what) {
    uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
        throw IoError(std::string("checkpoint: truncated reading ") + what);
    return v;
}

uint64_t read_u64(std::istream& is, const char* what) {
    uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
        throw IoError(std::string("checkpoint: truncated reading ") + what);
    return v;
}

}  // namespace

void save_checkpoint(const DilatedRnnModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof kMagic);
    write_u32(os, kVersion);
    write_u32(os, static_cast<uint32_t>(model.cell));
    write_u32(os, static_cast<uint32_t>(model.arch));
    write_u32(os, static_cast<uint32_t>(model.schedule.num_layers));
    write_u32(os, static_cast<uint32_t>(model.schedule.base));
    write_u32(os, static_cast<uint32_t>(model.schedule.start_exponent));
    write_u32(os, static_cast<uint32_t>(model.skip_length));
    write_u32(os, static_cast<uint32_t>(model.input_dim));
    write_u32(os, static_cast<uint32_t>(model.hidden_dim));
    write_u32(os, static_cast<uint32_t>(model.num_classes));
    for (int d : model.schedule.dilations) write_u32(os, static_cast<uint32_t>(d));
    for (const Parameter* p : model.parameters()) {
        write_u64(os, p->value.size());
        os.write(reinterpret_cast<const char*>(p->value.data()),
                 static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    }
    if (!os) throw IoError("checkpoint: write failed for '" + path + "'");
}

DilatedRnnModel load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw IoError("checkpoint: bad magic in '" + path + "'");
    if (read_u32(is, "version") != kVersion)
        throw IoError("checkpoint: unsupported version");
    const CellKind cell = static_cast<CellKind>(read_u32(is, "cell"));
    const ArchKind arch = static_cast<ArchKind>(read_u32(is, "arch"));
    const int layers = static_cast<int>(read_u32(is, "layers"));
    const int base = static_cast<int>(read_u32(is, "base"));
    const int start_exp = static_cast<int>(read_u32(is, "start_exponent"));
    const int skip_length = static_cast<int>(read_u32(is, "skip_length"));
    const int input_dim = static_cast<int>(read_u32(is, "input_dim"));
    const int hidden = static_cast<int>(read_u32(is, "hidden_dim"));
    const int classes = static_cast<int>(read_u32(is, "num_classes"));
    std::vector<int> dilations(layers);
    for (int& d : dilations) d = static_cast<int>(read_u32(is, "dilation"));

    Rng rng(0);  // values are overwritten below
    DilatedRnnModel model;
    if (arch == ArchKind::Dilated) {
        DilationSchedule sched = DilationSchedule::exponential(layers, base, start_exp);
        if (sched.dilations != dilations)
            throw IoError("checkpoint: stored dilations disagree with schedule fields");
        model = build_model(cell, sched, input_dim, hidden, classes, rng);
    } else {
        const BaselineKind bk = arch == ArchKind::RegularSkip ? BaselineKind::RegularSkip
                                                              : BaselineKind::Stacked;
        model = build_baseline(bk, cell, layers, skip_length, input_dim, hidden, classes, rng);
    }
    for (Parameter* p : model.parameters()) {
        const uint64_t n = read_u64(is, p->name.c_str());
        if (n != p->value.size())
            throw IoError("checkpoint: size mismatch for parameter '" + p->name + "'");
        if (!is.read(reinterpret_cast<char*>(p->value.data()),
                     static_cast<std::streamsize>(n * sizeof(double))))
            throw IoError("checkpoint: truncated reading parameter '" + p->name + "'");
    }
    return model;
}

}  // namespace drnn
