#include "omicscl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "omicscl/kernels.hpp"

namespace omicscl {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("matrix data length " + std::to_string(data_.size()) + " != " +
                             std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::row_vector(std::span<const double> v) {
    return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

Matrix Matrix::column_vector(std::span<const double> v) {
    return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

double Matrix::item() const {
    if (rows_ != 1 || cols_ != 1) throw DimensionError("item() on non-scalar " + shape_str());
    return data_[0];
}

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= rows_) throw DimensionError("row index out of range");
        std::copy_n(data_.data() + idx[i] * cols_, cols_, out.data() + i * cols_);
    }
    return out;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_str() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                             b.shape_str());
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + a.shape_str() + " x " + b.shape_str());
    }
    return kernels::gemm(a, b);
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix out = a;
    for (auto& v : out.values()) v *= s;
    return out;
}

Matrix row_l2_normalize(const Matrix& m, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("row_l2_normalize: eps must be > 0");
    Matrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = out.row(r);
        double ss = 0.0;
        for (double v : row) ss += v * v;
        const double denom = std::max(std::sqrt(ss), eps);
        for (double& v : row) v /= denom;
    }
    return out;
}

Matrix hconcat(std::span<const Matrix> blocks) {
    if (blocks.empty()) return {};
    const std::size_t rows = blocks.front().rows();
    std::size_t cols = 0;
    for (const auto& b : blocks) {
        if (b.rows() != rows) throw DimensionError("hconcat: row count mismatch");
        cols += b.cols();
    }
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t off = 0;
        for (const auto& b : blocks) {
            auto src = b.row(r);
            std::copy(src.begin(), src.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(off));
            off += b.cols();
        }
    }
    return out;
}

std::vector<double> column_means(const Matrix& m) {
    std::vector<double> mean(m.cols(), 0.0);
    if (m.rows() == 0) return mean;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += m(r, c);
    for (auto& v : mean) v /= static_cast<double>(m.rows());
    return mean;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace omicscl
