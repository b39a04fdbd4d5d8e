#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "popfolio/errors.hpp"

namespace popfolio {

// Dense row-major matrix. Sizes here are tiny (feature dims <= ~20,
// populations <= 64), so there is no call for an external LA library.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data_.data() + r * cols_, cols_);
    }
    std::span<double> row(std::size_t r) {
        return std::span<double>(data_.data() + r * cols_, cols_);
    }

    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
    if (m.cols() != x.size()) throw ContractError("matvec: dimension mismatch");
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), x);
    return out;
}

// Solve (A)x = b for symmetric positive-definite A via Cholesky.
// Throws DataError when A is not positive definite (e.g. a singular
// normal-equations system with zero ridge).
std::vector<double> solve_spd(const Matrix& a, std::span<const double> b);

// Ridge regression with intercept: centers X and y, solves
// (Xc'Xc + lambda I) w = Xc'yc, returns (w, b) with b = ybar - w.xbar.
struct RidgeFit {
    std::vector<double> weights;
    double intercept = 0.0;
};
RidgeFit ridge_fit(const Matrix& x, std::span<const double> y, double lambda);

} // namespace popfolio
