#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mdn {

// Row-major dense matrix of 64-bit floats. The whole engine runs in double
// precision: the margin meta-gradient is a difference of small quantities and
// single precision does not survive the finite-difference checks.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const DenseMatrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

bool all_finite(const DenseMatrix& m);
bool all_finite(const std::vector<double>& v);

// Throws ShapeError mentioning `what` when shapes disagree.
void require_shape(const DenseMatrix& m, std::size_t rows, std::size_t cols,
                   const std::string& what);

// C = A * B
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// C = A * B^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
// C = A^T * B
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);

void add_row_vector(DenseMatrix& m, const std::vector<double>& v);
std::vector<double> column_sums(const DenseMatrix& m);
void scale(DenseMatrix& m, double s);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace mdn
