#include "drnn/cells.hpp"

#include <cmath>

#include "drnn/errors.hpp"

namespace drnn {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double tanh_(double x) { return std::tanh(x); }

void check_step_shapes(const CellParams& p, const Matrix& x, const Matrix& h) {
    if (x.cols() != p.input_dim)
        throw DimensionError("cell_step: input has " + std::to_string(x.cols()) +
                             " columns, expected " + std::to_string(p.input_dim));
    if (h.cols() != p.hidden_dim || h.rows() != x.rows())
        throw DimensionError("cell_step: recurrent state shape mismatch");
}

// preactivations z = x*Wx + h1*Wr [+ h2*Wr'] + b, B x G*H
Matrix preactivations(const CellParams& p, const Matrix& x, const Matrix& h1,
                      const Matrix* h2) {
    Matrix z = matmul(x, p.w_in.value);
    add_inplace(z, matmul(h1, p.w_rec.value));
    if (h2) add_inplace(z, matmul(*h2, p.w_rec_skip->value));
    add_row_inplace(z, p.bias.value);
    return z;
}

CellState step_impl(const CellParams& p, const Matrix& x, const Matrix& h1,
                    const Matrix* h2, const Matrix* c_prev, StepCache* cache) {
    check_step_shapes(p, x, h1);
    const int H = p.hidden_dim;
    CellState out;
    if (cache) {
        cache->x = x;
        cache->h1 = h1;
        cache->h2 = h2 ? *h2 : Matrix();
    }
    switch (p.kind) {
        case CellKind::Vanilla: {
            Matrix z = preactivations(p, x, h1, h2);
            out.hidden = apply(z, tanh_);
            if (cache) cache->h_out = out.hidden;
            break;
        }
        case CellKind::LSTM: {
            Matrix z = preactivations(p, x, h1, h2);
            Matrix i = apply(col_block(z, 0, H), sigmoid);
            Matrix f = apply(col_block(z, 1, H), sigmoid);
            Matrix g = apply(col_block(z, 2, H), tanh_);
            Matrix o = apply(col_block(z, 3, H), sigmoid);
            Matrix c = add(hadamard(f, *c_prev), hadamard(i, g));
            out.hidden = hadamard(o, apply(c, tanh_));
            out.memory = c;
            if (cache) {
                cache->c_prev = *c_prev;
                cache->g1 = std::move(i);
                cache->g2 = std::move(f);
                cache->g3 = std::move(g);
                cache->g4 = std::move(o);
                cache->c_out = *out.memory;
                cache->h_out = out.hidden;
            }
            break;
        }
        case CellKind::GRU: {
            Matrix u = matmul(x, p.w_in.value);
            add_row_inplace(u, p.bias.value);
            Matrix v = matmul(h1, p.w_rec.value);
            if (h2) add_inplace(v, matmul(*h2, p.w_rec_skip->value));
            Matrix r = apply(add(col_block(u, 0, H), col_block(v, 0, H)), sigmoid);
            Matrix zg = apply(add(col_block(u, 1, H), col_block(v, 1, H)), sigmoid);
            Matrix v_n = col_block(v, 2, H);
            Matrix n = apply(add(col_block(u, 2, H), hadamard(r, v_n)), tanh_);
            // h' = (1-z).n + z.h1
            Matrix hnew(n.rows(), H);
            for (int b = 0; b < n.rows(); ++b)
                for (int j = 0; j < H; ++j)
                    hnew(b, j) = (1.0 - zg(b, j)) * n(b, j) + zg(b, j) * h1(b, j);
            out.hidden = hnew;
            if (cache) {
                cache->g1 = std::move(r);
                cache->g2 = std::move(zg);
                cache->g3 = std::move(n);
                cache->v_n = std::move(v_n);
                cache->h_out = out.hidden;
            }
            break;
        }
    }
    return out;
}

}  // namespace

const char* cell_kind_name(CellKind k) {
    switch (k) {
        case CellKind::Vanilla: return "vanilla";
        case CellKind::LSTM: return "lstm";
        case CellKind::GRU: return "gru";
    }
    return "?";
}

CellKind cell_kind_from_name(const std::string& name) {
    if (name == "vanilla") return CellKind::Vanilla;
    if (name == "lstm") return CellKind::LSTM;
    if (name == "gru") return CellKind::GRU;
    throw ConfigError("unknown cell kind '" + name + "'");
}

int gate_count(CellKind k) {
    switch (k) {
        case CellKind::Vanilla: return 1;
        case CellKind::LSTM: return 4;
        case CellKind::GRU: return 3;
    }
    return 0;
}

CellParams CellParams::init(CellKind kind, int input_dim, int hidden_dim,
                            bool with_skip_weights, Rng& rng,
                            const std::string& name_prefix, bool lstm_forget_offset) {
    if (input_dim <= 0 || hidden_dim <= 0)
        throw ConfigError("cell dimensions must be positive");
    const int G = gate_count(kind);
    CellParams p;
    p.kind = kind;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    // standard-normal draws scaled by 1/sqrt(fan-in); unscaled N(0,1) weights
    // saturate deep tanh stacks and training never leaves the plateau
    const auto scaled = [&rng](int rows, int cols) {
        Matrix w = standard_normal(rows, cols, rng);
        const double s = 1.0 / std::sqrt(static_cast<double>(rows));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) w(i, j) *= s;
        return w;
    };
    p.w_in = Parameter(name_prefix + ".w_in", scaled(input_dim, G * hidden_dim));
    p.w_rec = Parameter(name_prefix + ".w_rec", scaled(hidden_dim, G * hidden_dim));
    if (with_skip_weights)
        p.w_rec_skip = Parameter(name_prefix + ".w_rec_skip",
                                 scaled(hidden_dim, G * hidden_dim));
    Matrix b(1, G * hidden_dim);
    if (kind == CellKind::LSTM && lstm_forget_offset)
        for (int j = 0; j < hidden_dim; ++j) b(0, hidden_dim + j) = 1.0;
    p.bias = Parameter(name_prefix + ".bias", b);
    return p;
}

long long CellParams::param_count() const {
    long long n = w_in.count() + w_rec.count() + bias.count();
    if (w_rec_skip) n += w_rec_skip->count();
    return n;
}

std::vector<Parameter*> CellParams::parameters() {
    std::vector<Parameter*> ps{&w_in, &w_rec};
    if (w_rec_skip) ps.push_back(&*w_rec_skip);
    ps.push_back(&bias);
    return ps;
}

std::vector<const Parameter*> CellParams::parameters() const {
    std::vector<const Parameter*> ps{&w_in, &w_rec};
    if (w_rec_skip) ps.push_back(&*w_rec_skip);
    ps.push_back(&bias);
    return ps;
}

CellState CellState::zero(CellKind kind, int batch, int hidden_dim) {
    CellState s;
    s.hidden = Matrix(batch, hidden_dim);
    if (kind == CellKind::LSTM) s.memory = Matrix(batch, hidden_dim);
    return s;
}

CellState cell_step(const CellParams& params, const Matrix& x,
                    const CellState& recurrent_in, StepCache* cache) {
    const Matrix* c = recurrent_in.memory ? &*recurrent_in.memory : nullptr;
    if (params.kind == CellKind::LSTM && !c)
        throw ConfigError("cell_step: LSTM state requires memory");
    return step_impl(params, x, recurrent_in.hidden, nullptr, c, cache);
}

CellState skip_cell_step(const CellParams& params, const Matrix& x,
                         const CellState& prev, const CellState& skipped,
                         StepCache* cache) {
    if (!params.has_skip_weights())
        throw ConfigError("skip_cell_step: cell has no skip weights");
    const Matrix* c = prev.memory ? &*prev.memory : nullptr;
    if (params.kind == CellKind::LSTM && !c)
        throw ConfigError("skip_cell_step: LSTM state requires memory");
    return step_impl(params, x, prev.hidden, &skipped.hidden, c, cache);
}

StepGrads cell_backward(CellParams& params, const StepCache& cache,
                        const Matrix& dh_out, const Matrix* dc_out) {
    const int H = params.hidden_dim;
    const int B = dh_out.rows();
    if (dh_out.cols() != H || cache.h_out.rows() != B)
        throw DimensionError("cell_backward: upstream gradient shape mismatch");
    const bool has_skip = !cache.h2.empty();

    StepGrads out;
    Matrix dz;  // gradient at the joint preactivations, B x G*H
    Matrix dv;  // GRU only: gradient at the recurrent preactivations

    switch (params.kind) {
        case CellKind::Vanilla: {
            dz = Matrix(B, H);
            for (int b = 0; b < B; ++b)
                for (int j = 0; j < H; ++j) {
                    const double h = cache.h_out(b, j);
                    dz(b, j) = dh_out(b, j) * (1.0 - h * h);
                }
            break;
        }
        case CellKind::LSTM: {
            const Matrix& i = cache.g1;
            const Matrix& f = cache.g2;
            const Matrix& g = cache.g3;
            const Matrix& o = cache.g4;
            dz = Matrix(B, 4 * H);
            out.dc_prev = Matrix(B, H);
            for (int b = 0; b < B; ++b)
                for (int j = 0; j < H; ++j) {
                    const double tc = std::tanh(cache.c_out(b, j));
                    const double dO = dh_out(b, j) * tc;
                    double dC = dh_out(b, j) * o(b, j) * (1.0 - tc * tc);
                    if (dc_out) dC += (*dc_out)(b, j);
                    const double dI = dC * g(b, j);
                    const double dF = dC * cache.c_prev(b, j);
                    const double dG = dC * i(b, j);
                    out.dc_prev(b, j) = dC * f(b, j);
                    dz(b, 0 * H + j) = dI * i(b, j) * (1.0 - i(b, j));
                    dz(b, 1 * H + j) = dF * f(b, j) * (1.0 - f(b, j));
                    dz(b, 2 * H + j) = dG * (1.0 - g(b, j) * g(b, j));
                    dz(b, 3 * H + j) = dO * o(b, j) * (1.0 - o(b, j));
                }
            break;
        }
        case CellKind::GRU: {
            const Matrix& r = cache.g1;
            const Matrix& zg = cache.g2;
            const Matrix& n = cache.g3;
            dz = Matrix(B, 3 * H);  // gradient at u = x*Wx + b
            dv = Matrix(B, 3 * H);  // gradient at v = h1*Wr [+ h2*Wr']
            out.dh1 = Matrix(B, H);
            for (int b = 0; b < B; ++b)
                for (int j = 0; j < H; ++j) {
                    const double dZg = dh_out(b, j) * (cache.h1(b, j) - n(b, j));
                    const double dN = dh_out(b, j) * (1.0 - zg(b, j));
                    const double dAn = dN * (1.0 - n(b, j) * n(b, j));
                    const double dR = dAn * cache.v_n(b, j);
                    const double duR = dR * r(b, j) * (1.0 - r(b, j));
                    const double duZ = dZg * zg(b, j) * (1.0 - zg(b, j));
                    dz(b, 0 * H + j) = duR;
                    dz(b, 1 * H + j) = duZ;
                    dz(b, 2 * H + j) = dAn;
                    dv(b, 0 * H + j) = duR;
                    dv(b, 1 * H + j) = duZ;
                    dv(b, 2 * H + j) = dAn * r(b, j);
                    out.dh1(b, j) = dh_out(b, j) * zg(b, j);  // leak path
                }
            break;
        }
    }

    const Matrix& drec = params.kind == CellKind::GRU ? dv : dz;
    add_inplace(params.w_in.grad, matmul_tn(cache.x, dz));
    add_inplace(params.bias.grad, col_sum(dz));
    add_inplace(params.w_rec.grad, matmul_tn(cache.h1, drec));
    out.dx = matmul_nt(dz, params.w_in.value);
    if (out.dh1.empty())
        out.dh1 = matmul_nt(drec, params.w_rec.value);
    else
        add_inplace(out.dh1, matmul_nt(drec, params.w_rec.value));
    if (has_skip) {
        add_inplace(params.w_rec_skip->grad, matmul_tn(cache.h2, drec));
        out.dh2 = matmul_nt(drec, params.w_rec_skip->value);
    }
    return out;
}

}  // namespace drnn
