#include "mdn/matrix.hpp"

#include <cmath>
#include <cstdlib>

#include "mdn/errors.hpp"

namespace mdn {

bool all_finite(const DenseMatrix& m) { return all_finite(m.data); }

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void require_shape(const DenseMatrix& m, std::size_t rows, std::size_t cols,
                   const std::string& what) {
    if (m.rows != rows || m.cols != cols) {
        throw ShapeError(what + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows) + "x" +
                         std::to_string(m.cols));
    }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols) + " vs " +
                         std::to_string(b.rows));
    }
    DenseMatrix c(a.rows, b.cols);
    // i-k-j order keeps the inner loop contiguous in both b and c.
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.cols) {
        throw ShapeError("matmul_nt: inner dimensions " + std::to_string(a.cols) + " vs " +
                         std::to_string(b.cols));
    }
    DenseMatrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows) {
        throw ShapeError("matmul_tn: inner dimensions " + std::to_string(a.rows) + " vs " +
                         std::to_string(b.rows));
    }
    DenseMatrix c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row_ptr(k);
        const double* brow = b.row_ptr(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

void add_row_vector(DenseMatrix& m, const std::vector<double>& v) {
    if (v.size() != m.cols) {
        throw ShapeError("add_row_vector: vector length " + std::to_string(v.size()) +
                         " vs " + std::to_string(m.cols) + " columns");
    }
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += v[j];
    }
}

std::vector<double> column_sums(const DenseMatrix& m) {
    std::vector<double> s(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols; ++j) s[j] += row[j];
    }
    return s;
}

void scale(DenseMatrix& m, double s) {
    for (double& x : m.data) x *= s;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("max_abs_diff: shape mismatch");
    }
    double mx = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        mx = std::max(mx, std::abs(a.data[i] - b.data[i]));
    }
    return mx;
}

}  // namespace mdn
