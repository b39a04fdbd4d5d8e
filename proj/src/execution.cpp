#include "popfolio/execution.hpp"

#include <algorithm>
#include <cmath>

#include "popfolio/stats.hpp"

namespace popfolio {

void ExecutionConfig::validate() const {
    if (tc_bps < 0.0 || lambda_risk < 0.0 || lambda_imp < 0.0 || lambda_cap < 0.0)
        throw ConfigError("execution penalty weights must be >= 0");
    if (rebalance_days < 1) throw ConfigError("rebalance_days must be >= 1");
    if (smoothing_alpha < 0.0 || smoothing_alpha > 1.0)
        throw ConfigError("smoothing_alpha must be in [0, 1]");
    if (vol_target && *vol_target <= 0.0) throw ConfigError("vol_target must be > 0");
}

double PnLSeries::mean_pnl() const {
    if (pnl.empty()) return 0.0;
    double s = 0.0;
    for (double v : pnl) s += v;
    return s / static_cast<double>(pnl.size());
}

std::vector<double> ScaleGrid::points() const {
    if (steps < 1) throw ConfigError("scale grid needs at least 1 step");
    std::vector<double> pts(steps);
    if (steps == 1) {
        pts[0] = lo;
        return pts;
    }
    for (int i = 0; i < steps; ++i)
        pts[i] = lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
    return pts;
}

std::vector<double> schedule_positions(std::span<const double> signal,
                                       const ExecutionConfig& cfg) {
    cfg.validate();
    std::vector<double> p(signal.size(), 0.0);
    double prev = 0.0;
    for (std::size_t t = 0; t < signal.size(); ++t) {
        if (t % static_cast<std::size_t>(cfg.rebalance_days) == 0)
            prev = (1.0 - cfg.smoothing_alpha) * prev + cfg.smoothing_alpha * signal[t];
        p[t] = prev;
    }
    return p;
}

namespace {

double pnl_step(double p_prev, double p_now, double r, double sig, const ExecutionConfig& cfg) {
    const double u = std::abs(p_now - p_prev);
    return p_prev * r - (cfg.tc_bps / 10000.0) * u - cfg.lambda_risk * std::abs(p_prev) * sig -
           cfg.lambda_imp * u * u - cfg.lambda_cap * p_prev * p_prev * (1.0 + sig);
}

} // namespace

std::vector<double> apply_overlays(std::span<const double> positions,
                                   std::span<const double> market_returns,
                                   std::span<const double> sigma, const ExecutionConfig& cfg) {
    cfg.validate();
    if (positions.size() != market_returns.size() || positions.size() != sigma.size())
        throw ContractError("apply_overlays: length mismatch");
    std::vector<double> out(positions.begin(), positions.end());
    if (!cfg.vol_target && !cfg.tail_delever) return out;

    if (cfg.vol_target) {
        for (std::size_t t = 0; t < out.size(); ++t) {
            const double ann = sigma[t] * std::sqrt(252.0);
            if (ann > *cfg.vol_target) out[t] *= *cfg.vol_target / ann;
        }
    }

    if (cfg.tail_delever) {
        const auto& td = *cfg.tail_delever;
        double equity = 1.0, peak = 1.0, p_prev = 0.0;
        for (std::size_t t = 0; t < out.size(); ++t) {
            const double drawdown = equity / peak - 1.0; // through t-1: trailing only
            if (drawdown < td.drawdown_trigger) out[t] *= td.scale_factor;
            equity *= 1.0 + pnl_step(p_prev, out[t], market_returns[t], sigma[t], cfg);
            peak = std::max(peak, equity);
            p_prev = out[t];
        }
    }
    return out;
}

PnLSeries daily_pnl(std::span<const double> positions, std::span<const double> market_returns,
                    std::span<const double> sigma, const ExecutionConfig& cfg) {
    if (positions.size() != market_returns.size() || positions.size() != sigma.size())
        throw ContractError("daily_pnl: length mismatch");
    PnLSeries out;
    const std::size_t T = positions.size();
    out.pnl.resize(T);
    out.positions.assign(positions.begin(), positions.end());
    out.turnover.resize(T);
    double p_prev = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        out.turnover[t] = std::abs(positions[t] - p_prev);
        out.pnl[t] = pnl_step(p_prev, positions[t], market_returns[t], sigma[t], cfg);
        p_prev = positions[t];
    }
    return out;
}

PnLSeries run_execution(std::span<const double> signal, std::span<const double> market_returns,
                        std::span<const double> sigma, const ExecutionConfig& cfg) {
    const auto scheduled = schedule_positions(signal, cfg);
    const auto overlaid = apply_overlays(scheduled, market_returns, sigma, cfg);
    return daily_pnl(overlaid, market_returns, sigma, cfg);
}

double optimize_scale(std::span<const double> signal, std::span<const double> market_returns,
                      std::span<const double> bench_returns, std::span<const double> sigma,
                      const ExecutionConfig& cfg, const ScaleGrid& grid,
                      const ScaleObjectiveWeights& w) {
    if (signal.size() != bench_returns.size())
        throw ContractError("optimize_scale: benchmark length mismatch");
    const auto pts = grid.points();
    if (pts.empty()) throw ConfigError("optimize_scale: empty grid");

    double best_s = pts.front();
    double best_j = -std::numeric_limits<double>::infinity();
    std::vector<double> scaled(signal.size());
    for (const double s : pts) {
        for (std::size_t t = 0; t < signal.size(); ++t) scaled[t] = s * signal[t];
        const PnLSeries pnl = run_execution(scaled, market_returns, sigma, cfg);

        std::vector<double> excess(pnl.pnl.size());
        for (std::size_t t = 0; t < excess.size(); ++t) excess[t] = pnl.pnl[t] - bench_returns[t];
        const double cvar = cvar_tail(excess, w.alpha_cvar);
        double turn = 0.0;
        for (double u : pnl.turnover) turn += u;
        turn /= static_cast<double>(pnl.turnover.size());

        const double j = mean_of(excess) - w.lambda_cvar * std::abs(std::min(0.0, cvar)) -
                         w.lambda_down * downside_deviation(excess) - w.lambda_to * turn;
        if (j > best_j) {
            best_j = j;
            best_s = s;
        }
    }
    return best_s;
}

ExecutionConfig scaled_costs(const ExecutionConfig& cfg, const StressScenario& sc) {
    if (sc.tc_mult < 0.0 || sc.impact_mult < 0.0 || sc.capacity_mult < 0.0 ||
        !std::isfinite(sc.tc_mult) || !std::isfinite(sc.impact_mult) ||
        !std::isfinite(sc.capacity_mult))
        throw ConfigError("stress multipliers must be finite and >= 0");
    ExecutionConfig out = cfg;
    out.tc_bps *= sc.tc_mult;
    out.lambda_imp *= sc.impact_mult;
    out.lambda_cap *= sc.capacity_mult;
    return out;
}

PnLSeries run_stress(std::span<const double> positions, std::span<const double> market_returns,
                     std::span<const double> sigma, const ExecutionConfig& cfg,
                     const StressScenario& scenario) {
    return daily_pnl(positions, market_returns, sigma, scaled_costs(cfg, scenario));
}

std::vector<StressScenario> default_stress_scenarios() {
    return {{"base", 1.0, 1.0, 1.0},
            {"tc_x3", 3.0, 1.0, 1.0},
            {"capacity_x3", 1.0, 1.0, 3.0},
            {"all_x2", 2.0, 2.0, 2.0},
            {"all_x3", 3.0, 3.0, 3.0}};
}

} // namespace popfolio
