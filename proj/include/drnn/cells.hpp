#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drnn/matrix.hpp"
#include "drnn/rng.hpp"

namespace drnn {

enum class CellKind { Vanilla, LSTM, GRU };

const char* cell_kind_name(CellKind k);
CellKind cell_kind_from_name(const std::string& name);

// gate blocks per kind: vanilla 1, GRU 3 (r,z,n), LSTM 4 (i,f,g,o)
int gate_count(CellKind k);

// Weights of one recurrent layer. w_rec_skip (the second recurrent matrix of
// the regular-skip baseline) is present only when the cell takes two
// recurrent inputs.
struct CellParams {
    CellKind kind = CellKind::Vanilla;
    int input_dim = 0;
    int hidden_dim = 0;

    Parameter w_in;    // input_dim x G*H
    Parameter w_rec;   // H x G*H
    std::optional<Parameter> w_rec_skip;  // H x G*H
    Parameter bias;    // 1 x G*H

    static CellParams init(CellKind kind, int input_dim, int hidden_dim,
                           bool with_skip_weights, Rng& rng,
                           const std::string& name_prefix,
                           bool lstm_forget_offset = true);

    bool has_skip_weights() const { return w_rec_skip.has_value(); }
    long long param_count() const;
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
};

struct CellState {
    Matrix hidden;                 // B x H
    std::optional<Matrix> memory;  // LSTM cell state, B x H

    static CellState zero(CellKind kind, int batch, int hidden_dim);
};

// Forward activations one backward step needs. h2 is empty unless the step
// had a second recurrent input.
struct StepCache {
    Matrix x;
    Matrix h1;
    Matrix h2;
    Matrix c_prev;              // LSTM
    Matrix g1, g2, g3, g4;      // vanilla: g1=h_out; LSTM: i,f,g,o; GRU: r,z,n
    Matrix v_n;                 // GRU: recurrent preactivation of the candidate
    Matrix c_out;               // LSTM
    Matrix h_out;
};

// One step of the dilated recurrence: the only recurrent input is the state
// s timesteps back, supplied by the caller as recurrent_in.
CellState cell_step(const CellParams& params, const Matrix& x,
                    const CellState& recurrent_in, StepCache* cache = nullptr);

// Regular-skip step: preactivations add w_rec*prev.hidden + w_rec_skip*skipped.hidden.
// LSTM memory and the GRU leak term follow prev.
CellState skip_cell_step(const CellParams& params, const Matrix& x,
                         const CellState& prev, const CellState& skipped,
                         StepCache* cache = nullptr);

struct StepGrads {
    Matrix dx;
    Matrix dh1;
    Matrix dh2;      // empty unless the step used a skip input
    Matrix dc_prev;  // LSTM
};

// Analytic backward of one step; weight gradients accumulate additively into
// params (weight sharing across time relies on this). dc_out may be null for
// non-LSTM cells or when no memory gradient flows in.
StepGrads cell_backward(CellParams& params, const StepCache& cache,
                        const Matrix& dh_out, const Matrix* dc_out = nullptr);

}  // namespace drnn
