#pragma once

#include <cstddef>
#include <vector>

#include "core/error.hpp"

namespace nnas {

using Vec = std::vector<double>;

// Dense row-major matrix of 64-bit floats.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    Vec column(std::size_t j) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct EigenDecomposition {
    Vec eigenvalues;  // descending
    Mat eigenvectors; // column i pairs with eigenvalues[i]
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Sweeps until the off-diagonal Frobenius norm falls below tol * ||a||_F
// (at most 100 sweeps). Eigenvalues come back sorted descending with
// column-orthonormal eigenvectors; each eigenvector is sign-normalized so
// that its first component larger than 1e-12 in magnitude is positive.
EigenDecomposition sym_eig(const Mat& a, double tol = 1e-11);

// Minimum-norm residual solution of phi * c = y (n >= k) via Householder QR.
// Throws ErrorKind::Numeric when the estimated condition number of phi
// (max |R_jj| / min |R_jj|) exceeds 1e12.
Vec lstsq(const Mat& phi, const Vec& y);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
Vec matvec(const Mat& a, const Vec& x);
Vec matvec_transposed(const Mat& a, const Vec& x);
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
double frobenius_norm(const Mat& a);
bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

} // namespace nnas
