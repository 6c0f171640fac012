#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drnn/rng.hpp"

namespace drnn {

// Dense row-major matrix of doubles. All exported operations keep entries
// finite and use a fixed accumulation order so results are bit-reproducible.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols);  // zero-filled

    static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }
    static Matrix identity(int n);
    static Matrix filled(int rows, int cols, double v);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool all_finite() const;
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    void fill(double v);

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// c = a * b, left-to-right accumulation over the inner index
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// c = a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

void add_inplace(Matrix& a, const Matrix& b);         // a += b
void axpy_inplace(Matrix& a, double s, const Matrix& b);  // a += s*b
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
void add_row_inplace(Matrix& a, const Matrix& row);   // broadcast 1xC row over all rows
Matrix col_sum(const Matrix& a);                      // 1xC column sums
Matrix apply(const Matrix& a, double (*f)(double));
Matrix col_block(const Matrix& a, int block, int width);  // columns [block*width, (block+1)*width)
void add_col_block(Matrix& dst, int block, int width, const Matrix& src);
double max_abs_diff(const Matrix& a, const Matrix& b);

// i.i.d. N(0,1) entries drawn row-major from rng (Box-Muller)
Matrix standard_normal(int rows, int cols, Rng& rng);

// Trainable tensor: value, gradient accumulator, RMSProp second-moment state.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix rms;

    Parameter() = default;
    Parameter(std::string n, Matrix v);

    void zero_grad() { grad.fill(0.0); }
    long long count() const { return static_cast<long long>(value.size()); }
};

// acc <- decay*acc + (1-decay)*grad^2; value <- value - lr*grad/sqrt(acc+eps);
// grad is zeroed afterwards. Throws NumericError on non-finite gradients.
void rmsprop_step(Parameter& p, double lr, double decay, double epsilon);

struct SoftmaxResult {
    double loss = 0.0;
    Matrix dlogits;  // (softmax - onehot) / rows
};

// Mean negative log-likelihood over rows; labels[r] indexes the true class.
SoftmaxResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// Central-difference check of the analytic gradients already accumulated in
// params.grad against f evaluated at perturbed parameter values. Returns the
// max over coordinates of |analytic-numeric| / max(1e-12, |analytic|+|numeric|).
double finite_diff_check(const std::function<double()>& f,
                         const std::vector<Parameter*>& params, double h);

}  // namespace drnn
