#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "popfolio/errors.hpp"
#include "popfolio/linalg.hpp"
#include "popfolio/rng.hpp"

namespace popfolio {

// ---- metric primitives -----------------------------------------------------
// Conventions (the paper leaves them open): sample std uses n-1, Sharpe
// annualizes by sqrt(252), zero-variance Sharpe is defined as 0.

double mean_of(std::span<const double> x);
double stddev(std::span<const double> x);              // n-1; 0 when n < 2
double sharpe(std::span<const double> x);              // mean/std * sqrt(252)
double downside_deviation(std::span<const double> x);  // std of negative days * sqrt(252)
double max_drawdown(std::span<const double> x);        // <= 0, on compounded equity
double cvar_tail(std::span<const double> x, double alpha); // mean of worst floor(a n) (>=1) days
double beta_vs(std::span<const double> x, std::span<const double> bench); // Cov/Var, 0 if Var=0
double cumulative_return(std::span<const double> x);
double annualized_return(std::span<const double> x);

struct MetricSet {
    double excess_sharpe = 0.0;
    double excess_cum_return = 0.0; // prod(1+pnl)/prod(1+bench) - 1
    double mean_excess_1d = 0.0;
    double excess_cvar = 0.0;
    double excess_worst_day = 0.0;
    double beta = 0.0;
    double max_drawdown = 0.0;
    double down_dev = 0.0;
    double annualized_return = 0.0;
};

MetricSet compute_metrics(std::span<const double> pnl, std::span<const double> bench,
                          double alpha_cvar);

// ---- selection -------------------------------------------------------------

struct SelectionWeights {
    double lambda1 = 1.0;   // excess-CVaR shortfall
    double lambda2 = 1.0;   // excess worst-day shortfall
    double lambda3 = 2.0;   // constraint violation
    double lambda_std = 0.5;
    double lambda_min = 1.0;
};

double selection_score(const MetricSet& m, double violation, const SelectionWeights& w);

// R = mean(s_w) - l_std * std(s_w) - l_min * |min(0, min_w s_w)|
double robust_score(std::span<const double> window_sharpes, const SelectionWeights& w);

// ---- data-snooping test suite ----------------------------------------------

struct TestResult {
    std::string method;
    double statistic = 0.0;
    double p_value = 1.0;
    int n_bootstrap = 0;
    double lag_or_block = 0.0;
};

int default_newey_west_lag(std::size_t n);

// One-sided (upper tail) HAC t-test with Bartlett weights.
TestResult newey_west_test(std::span<const double> diff, int lag);

struct BootstrapConfig {
    double mean_block = 10.0;
    int n_boot = 2000;
    std::uint64_t seed = 12345;
};

// Geometric block length with mean `mean_block` (restart prob 1/mean_block).
std::size_t sample_block_length(Rng& rng, double mean_block);

// One resampled index stream of length n, wrap-around continuation.
std::vector<std::size_t> stationary_bootstrap_indices(std::size_t n, double mean_block, Rng& rng);

// Stationary-bootstrap test of mean(diff) > 0 with White-style recentering.
TestResult stationary_bootstrap_test(std::span<const double> diff, const BootstrapConfig& cfg);

// T_WRC = sqrt(T) max_j mean(d_j); bootstrap distribution of
// sqrt(T) max_j (mean*(d_j) - mean(d_j)).
TestResult wrc_test(const Matrix& diffs, const BootstrapConfig& cfg);

// Studentized max with zero floor; per-model sigma from the original sample.
TestResult spa_lite_test(const Matrix& diffs, const BootstrapConfig& cfg);

// Benjamini-Hochberg step-up q-values, returned in input order.
std::vector<double> fdr_adjust(std::span<const double> pvals);

double normal_cdf(double x);

} // namespace popfolio
