#include "popfolio/linalg.hpp"

#include <cmath>

namespace popfolio {

std::vector<double> solve_spd(const Matrix& a, std::span<const double> b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw ContractError("solve_spd: shape mismatch");

    // Lower-triangular Cholesky factor, in place on a copy.
    Matrix l(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s))
                    throw DataError("solve_spd: matrix not positive definite (singular system)");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }

    // Forward then backward substitution.
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

RidgeFit ridge_fit(const Matrix& x, std::span<const double> y, double lambda) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (y.size() != n) throw ContractError("ridge_fit: row count mismatch");
    if (n == 0) throw ContractError("ridge_fit: empty design matrix");

    std::vector<double> xbar(d, 0.0);
    double ybar = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        ybar += y[r];
        for (std::size_t c = 0; c < d; ++c) xbar[c] += x(r, c);
    }
    ybar /= static_cast<double>(n);
    for (auto& v : xbar) v /= static_cast<double>(n);

    Matrix gram(d, d, 0.0);
    std::vector<double> rhs(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double yc = y[r] - ybar;
        for (std::size_t i = 0; i < d; ++i) {
            const double xi = x(r, i) - xbar[i];
            rhs[i] += xi * yc;
            for (std::size_t j = 0; j <= i; ++j) gram(i, j) += xi * (x(r, j) - xbar[j]);
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) gram(i, j) = gram(j, i);
        gram(i, i) += lambda;
    }

    RidgeFit fit;
    fit.weights = solve_spd(gram, rhs);
    fit.intercept = ybar - dot(fit.weights, xbar);
    return fit;
}

} // namespace popfolio
