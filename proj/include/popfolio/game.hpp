#pragma once

#include <span>
#include <vector>

#include "popfolio/linalg.hpp"
#include "popfolio/policy.hpp"

namespace popfolio {

// Antisymmetric head-to-head payoff matrix, A_ij = mean_pnl_i - mean_pnl_j.
struct PayoffMatrix {
    Matrix a;

    std::size_t size() const { return a.rows(); }
    double max_abs() const;
};

struct MetaStrategy {
    std::vector<double> m; // simplex weights
    double eta = 0.25;
};

struct PsroResult {
    MetaStrategy final_strategy;
    MetaStrategy averaged_strategy; // uniform average of iterates (post-update)
    std::vector<double> gap_trace;  // Nash gap of each iterate
    double averaged_gap = 0.0;
};

PayoffMatrix build_payoff(std::span<const double> mean_pnls); // K >= 2

// v = A m; m'_k prop. m_k exp(eta v_k), exponent clamped at +-50.
MetaStrategy mw_step(const PayoffMatrix& a, const MetaStrategy& m);

// max_i (Am)_i - m'Am, clipped at 0.
double nash_gap(const PayoffMatrix& a, std::span<const double> m);

// Multiplicative weights from uniform. With eta = sqrt(2 log K / (T G^2))
// the averaged strategy's gap obeys G sqrt(2 log K / T).
PsroResult psro_solve(const PayoffMatrix& a, double eta, int iterations);

// The learning-rate that makes the textbook regret bound hold.
double theoretical_eta(std::size_t k, int iterations, double payoff_bound);

SignalSeries ensemble_signal(const MetaStrategy& m, std::span<const SignalSeries> signals);
std::vector<double> ensemble_values(std::span<const double> m,
                                    const std::vector<std::vector<double>>& signal_values);

} // namespace popfolio
