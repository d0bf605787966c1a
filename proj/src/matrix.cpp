#include "uqcast/matrix.hpp"

#include <cmath>
#include <stdexcept>

#include "uqcast/errors.hpp"

namespace uqcast {

Matrix::Matrix(int rows, int cols, std::initializer_list<double> values)
    : rows_(rows), cols_(cols), data_(values) {
    if (data_.size() != size_t(rows) * cols)
        throw ShapeError("matrix init list has " + std::to_string(data_.size()) +
                         " entries, expected " + std::to_string(size_t(rows) * cols));
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::filled(int rows, int cols, double v) {
    Matrix m(rows, cols);
    for (double& x : m.data_) x = v;
    return m;
}

Matrix Matrix::column(const std::vector<double>& v) {
    Matrix m(int(v.size()), 1);
    m.data_ = v;
    return m;
}

std::string Matrix::shape_str() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

bool Matrix::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return std::sqrt(s);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions differ, " + a.shape_str() + " x " +
                         b.shape_str());
    Matrix out(a.rows(), b.cols());
    const int n = a.rows(), k = a.cols(), m = b.cols();
    for (int i = 0; i < n; ++i) {
        double* orow = &out(i, 0);
        for (int p = 0; p < k; ++p) {
            const double aip = a(i, p);
            const double* brow = &b(p, 0);
            for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw ShapeError("matmul_nt: inner dimensions differ, " + a.shape_str() + " x " +
                         b.shape_str() + "^T");
    Matrix out(a.rows(), b.rows());
    const int n = a.rows(), k = a.cols(), m = b.rows();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            const double* arow = &a(i, 0);
            const double* brow = &b(j, 0);
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            out(i, j) = s;
        }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw ShapeError("matmul_tn: inner dimensions differ, " + a.shape_str() + "^T x " +
                         b.shape_str());
    Matrix out(a.cols(), b.cols());
    const int n = a.cols(), k = a.rows(), m = b.cols();
    for (int p = 0; p < k; ++p) {
        const double* arow = &a(p, 0);
        const double* brow = &b(p, 0);
        for (int i = 0; i < n; ++i) {
            double* orow = &out(i, 0);
            const double aip = arow[i];
            for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
        }
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.raw()[i] += b.raw()[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.raw()[i] -= b.raw()[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.raw()[i] *= b.raw()[i];
    return out;
}

Matrix scale(const Matrix& a, double c) {
    Matrix out = a;
    for (double& x : out.raw()) x *= c;
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

} // namespace uqcast
