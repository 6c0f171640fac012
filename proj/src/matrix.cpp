#include "drnn/matrix.hpp"

#include <cmath>
#include <cstring>

#include "drnn/errors.hpp"

namespace drnn {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0)
        throw DimensionError("matrix shape must be non-negative");
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::filled(int rows, int cols, double v) {
    Matrix m(rows, cols);
    m.fill(v);
    return m;
}

void Matrix::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions disagree");
    Matrix c(a.rows(), b.cols());
    const int n = a.rows(), k = a.cols(), m = b.cols();
    // ikj order: for each output entry the k-sum still accumulates
    // left-to-right, so results are identical to the naive ijk loop.
    for (int i = 0; i < n; ++i) {
        const double* arow = a.data() + static_cast<std::size_t>(i) * k;
        double* crow = c.data() + static_cast<std::size_t>(i) * m;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b.data() + static_cast<std::size_t>(p) * m;
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("matmul_tn: inner dimensions disagree");
    Matrix c(a.cols(), b.cols());
    const int n = a.cols(), k = a.rows(), m = b.cols();
    for (int p = 0; p < k; ++p) {
        const double* arow = a.data() + static_cast<std::size_t>(p) * n;
        const double* brow = b.data() + static_cast<std::size_t>(p) * m;
        for (int i = 0; i < n; ++i) {
            const double av = arow[i];
            double* crow = c.data() + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("matmul_nt: inner dimensions disagree");
    Matrix c(a.rows(), b.rows());
    const int n = a.rows(), k = a.cols(), m = b.rows();
    for (int i = 0; i < n; ++i) {
        const double* arow = a.data() + static_cast<std::size_t>(i) * k;
        double* crow = c.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* brow = b.data() + static_cast<std::size_t>(j) * k;
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] = s;
        }
    }
    return c;
}

static void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch");
}

void add_inplace(Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add_inplace");
    double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

void axpy_inplace(Matrix& a, double s, const Matrix& b) {
    require_same_shape(a, b, "axpy_inplace");
    double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] += s * pb[i];
}

Matrix add(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    add_inplace(c, b);
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix c = a;
    double* pc = c.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < c.size(); ++i) pc[i] -= pb[i];
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix c = a;
    double* pc = c.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < c.size(); ++i) pc[i] *= pb[i];
    return c;
}

void add_row_inplace(Matrix& a, const Matrix& row) {
    if (row.rows() != 1 || row.cols() != a.cols())
        throw DimensionError("add_row_inplace: row must be 1 x cols");
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) a(i, j) += row(0, j);
}

Matrix col_sum(const Matrix& a) {
    Matrix s(1, a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) s(0, j) += a(i, j);
    return s;
}

Matrix apply(const Matrix& a, double (*f)(double)) {
    Matrix c = a;
    double* pc = c.data();
    for (std::size_t i = 0; i < c.size(); ++i) pc[i] = f(pc[i]);
    return c;
}

Matrix col_block(const Matrix& a, int block, int width) {
    Matrix c(a.rows(), width);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < width; ++j) c(i, j) = a(i, block * width + j);
    return c;
}

void add_col_block(Matrix& dst, int block, int width, const Matrix& src) {
    if (src.rows() != dst.rows() || src.cols() != width)
        throw DimensionError("add_col_block: shape mismatch");
    for (int i = 0; i < dst.rows(); ++i)
        for (int j = 0; j < width; ++j) dst(i, block * width + j) += src(i, j);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(pa[i] - pb[i]));
    return m;
}

Matrix standard_normal(int rows, int cols, Rng& rng) {
    if (rows <= 0 || cols <= 0)
        throw DimensionError("standard_normal: shape must be positive");
    Matrix m(rows, cols);
    double* p = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) p[i] = rng.normal();
    return m;
}

Parameter::Parameter(std::string n, Matrix v)
    : name(std::move(n)),
      value(std::move(v)),
      grad(value.rows(), value.cols()),
      rms(value.rows(), value.cols()) {}

void rmsprop_step(Parameter& p, double lr, double decay, double epsilon) {
    if (lr <= 0.0) throw ConfigError("rmsprop: lr must be positive");
    if (decay < 0.0 || decay >= 1.0) throw ConfigError("rmsprop: decay must be in [0,1)");
    if (epsilon <= 0.0) throw ConfigError("rmsprop: epsilon must be positive");
    if (!p.grad.all_finite())
        throw NumericError("rmsprop: non-finite gradient in parameter '" + p.name + "'");
    double* v = p.value.data();
    double* g = p.grad.data();
    double* a = p.rms.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
        a[i] = decay * a[i] + (1.0 - decay) * g[i] * g[i];
        v[i] -= lr * g[i] / std::sqrt(a[i] + epsilon);
        g[i] = 0.0;
    }
}

SoftmaxResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != logits.rows())
        throw DimensionError("softmax_cross_entropy: one label per row required");
    const int n = logits.rows(), c = logits.cols();
    SoftmaxResult out;
    out.dlogits = Matrix(n, c);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= c)
            throw IndexError("softmax_cross_entropy: label out of range");
        double mx = logits(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, logits(i, j));
        double z = 0.0;
        for (int j = 0; j < c; ++j) z += std::exp(logits(i, j) - mx);
        const double logz = std::log(z) + mx;
        total += logz - logits(i, labels[i]);
        for (int j = 0; j < c; ++j)
            out.dlogits(i, j) = std::exp(logits(i, j) - logz) / n;
        out.dlogits(i, labels[i]) -= 1.0 / n;
    }
    out.loss = total / n;
    return out;
}

double finite_diff_check(const std::function<double()>& f,
                         const std::vector<Parameter*>& params, double h) {
    if (h <= 0.0) throw ConfigError("finite_diff_check: h must be positive");
    double worst = 0.0;
    for (Parameter* p : params) {
        double* v = p->value.data();
        const double* g = p->grad.data();
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = v[i];
            v[i] = saved + h;
            const double fp = f();
            v[i] = saved - h;
            const double fm = f();
            v[i] = saved;
            const double numeric = (fp - fm) / (2.0 * h);
            const double denom = std::max(1e-12, std::fabs(g[i]) + std::fabs(numeric));
            worst = std::max(worst, std::fabs(g[i] - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace drnn
