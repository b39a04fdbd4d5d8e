#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popfolio/errors.hpp"

namespace popfolio {

struct TailDelever {
    double drawdown_trigger = -0.10; // scale while running drawdown is below this
    double scale_factor = 0.5;
};

struct ExecutionConfig {
    double tc_bps = 3.0;            // linear cost, c_tc = bps / 10000
    double lambda_risk = 0.01;
    double lambda_imp = 0.0002;
    double lambda_cap = 0.0001;
    int rebalance_days = 14;
    double smoothing_alpha = 0.5;   // p_new = (1-a) p_old + a * signal
    std::optional<double> vol_target;      // annualized; disabled when absent
    std::optional<TailDelever> tail_delever;

    void validate() const;
};

struct PnLSeries {
    std::vector<double> pnl;        // daily strategy return
    std::vector<double> positions;  // executed p_t
    std::vector<double> turnover;   // |p_t - p_{t-1}|, p_{-1} = 0

    double mean_pnl() const;
};

struct StressScenario {
    std::string name = "base";
    double tc_mult = 1.0;
    double impact_mult = 1.0;
    double capacity_mult = 1.0;
};

struct ScaleGrid {
    double lo = 0.5;
    double hi = 1.6;
    int steps = 12;

    std::vector<double> points() const;
};

struct ScaleObjectiveWeights {
    double lambda_cvar = 1.0;
    double lambda_down = 0.5;
    double lambda_to = 0.1;
    double alpha_cvar = 0.05;
};

// Target position updates only on rebalance dates (t = 0, k, 2k, ...),
// exponential smoothing toward the signal; held in between.
std::vector<double> schedule_positions(std::span<const double> signal,
                                       const ExecutionConfig& cfg);

// Vol-target then tail-delever scaling on an already scheduled position
// path. sigma is the trailing 20d market vol series (not annualized);
// the drawdown feedback uses the full cost model via the same PnL step.
std::vector<double> apply_overlays(std::span<const double> positions,
                                   std::span<const double> market_returns,
                                   std::span<const double> sigma,
                                   const ExecutionConfig& cfg);

// pi_t = p_{t-1} r_t - c_tc u_t - l_risk |p_{t-1}| sigma_t
//        - l_imp u_t^2 - l_cap |p_{t-1}|^2 (1 + sigma_t)
PnLSeries daily_pnl(std::span<const double> positions, std::span<const double> market_returns,
                    std::span<const double> sigma, const ExecutionConfig& cfg);

// Full pipeline: schedule -> overlays -> pnl. Positions start flat.
PnLSeries run_execution(std::span<const double> signal, std::span<const double> market_returns,
                        std::span<const double> sigma, const ExecutionConfig& cfg);

// Grid search over signal scale; J(s) = mean excess - cvar/downside/turnover
// penalties; ties break toward the smaller scale.
double optimize_scale(std::span<const double> signal, std::span<const double> market_returns,
                      std::span<const double> bench_returns, std::span<const double> sigma,
                      const ExecutionConfig& cfg, const ScaleGrid& grid,
                      const ScaleObjectiveWeights& w);

ExecutionConfig scaled_costs(const ExecutionConfig& cfg, const StressScenario& sc);

// Reruns the PnL on a fixed executed position path under scenario cost
// multipliers (positions are not re-derived, so cost monotonicity holds).
PnLSeries run_stress(std::span<const double> positions, std::span<const double> market_returns,
                     std::span<const double> sigma, const ExecutionConfig& cfg,
                     const StressScenario& scenario);

std::vector<StressScenario> default_stress_scenarios();

} // namespace popfolio
