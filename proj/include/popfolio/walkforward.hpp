#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "popfolio/execution.hpp"
#include "popfolio/features.hpp"
#include "popfolio/game.hpp"
#include "popfolio/league.hpp"
#include "popfolio/panel.hpp"
#include "popfolio/policy.hpp"
#include "popfolio/population.hpp"
#include "popfolio/signalproc.hpp"
#include "popfolio/stats.hpp"

namespace popfolio {

struct WalkForwardConfig {
    int train_days = 252;
    int test_days = 21;
    int step_days = 21;
    int max_windows = 120;
    double val_fraction = 0.2;
    int generation_patience = 2;
    int round_patience = 2;
    bool ensemble_checkpoints = false; // average the top-3 checkpoints by val S
    std::uint64_t seed = 7;

    void validate() const;
};

struct PsroConfig {
    int iterations = 50;
    double eta = 0.25;
};

enum class BrMethod { Ridge, RlHybrid };

// Everything the per-window training loop needs, resolved from RunConfig.
struct TrainingConfig {
    SignalBounds bounds;
    ExecutionConfig exec;
    UtilityWeights utility;
    FitnessWeights fitness_weights;
    EvolutionConfig evolution;
    PsroConfig psro;
    bool league_enabled = true;
    BrMethod br_method = BrMethod::RlHybrid;
    BRConfig br;
    bool risk_head = true;

    bool neutralize_enabled = true;
    NeutralizeConfig neutralize;
    std::vector<std::string> neutralize_factors{"beta_60", "mkt_ret_20"};
    bool amplify_enabled = true;
    AmplifyConfig amplify;
    bool gate_enabled = true;
    GateConfig gate;
    bool fq_enabled = true;
    FeatureQualityConfig fq;
    bool scaleopt_enabled = true;
    ScaleGrid scale_grid;
    ScaleObjectiveWeights scale_weights;
    SelectionWeights selection;
};

// Feature-date-aligned working set; every series is trailing-only.
struct MarketData {
    std::vector<std::string> dates;
    std::vector<std::string> feature_names;
    Matrix features; // standardized, [t x d]
    std::vector<Regime> regimes;
    std::vector<double> market_returns; // equal-weight traded sleeve
    std::vector<double> bench_returns;
    std::vector<double> sigma20; // trailing 20d std of market returns
};

MarketData build_market_data(const PricePanel& panel, const FeatureConfig& fcfg,
                             const RegimeThresholds& rth);

struct WindowRange {
    std::size_t start = 0;
    std::size_t fit_end = 0;
    std::size_t val_end = 0;
    std::size_t test_end = 0;
};

// Window w starts at w*step_days; train = train_days split by floor(0.8 ...)
// into fit/validation; test = the next test_days, non-overlapping.
std::vector<WindowRange> make_windows(std::size_t n_dates, const WalkForwardConfig& cfg);

// Sealed data view: any read at or past the test slice throws until the
// checkpoint is frozen.
class WindowView {
public:
    WindowView(const MarketData& md, WindowRange r);

    const WindowRange& range() const { return range_; }
    std::size_t dim() const { return md_->features.cols(); }
    const std::vector<std::string>& feature_names() const { return md_->feature_names; }

    const std::string& date(std::size_t i) const;
    std::span<const double> features_at(std::size_t i) const;
    Regime regime(std::size_t i) const;
    double market_return(std::size_t i) const;
    double bench_return(std::size_t i) const;
    double sigma(std::size_t i) const;

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

private:
    void check(std::size_t i) const;
    const MarketData* md_;
    WindowRange range_;
    bool frozen_ = false;
};

// Produces the processed signal for [range.start, upto); reads only data
// below `upto` so trailing warm-ups stay inside the window.
using SignalFn = std::function<std::vector<double>(const WindowView&, std::size_t upto)>;

struct WindowOutcome {
    SignalFn make_signal;
    std::string checkpoint_id;
    double validation_score = 0.0;
    std::vector<double> gap_trace;
    nlohmann::ordered_json diagnostics;
};

class WindowDriver {
public:
    virtual ~WindowDriver() = default;
    virtual WindowOutcome run(WindowView& view, std::uint64_t seed) = 0;
};

// The full population/PSRO/league/evolution training loop.
class EngineDriver : public WindowDriver {
public:
    EngineDriver(TrainingConfig cfg, WalkForwardConfig wf);
    WindowOutcome run(WindowView& view, std::uint64_t seed) override;

private:
    TrainingConfig cfg_;
    WalkForwardConfig wf_;
};

struct WindowResult {
    int index = 0;
    std::string train_start, val_start, test_start, test_end;
    std::string checkpoint_id;
    double validation_score = 0.0;
    MetricSet test_metrics;
    double hit_ratio = 0.0;
    double nash_gap_final = 0.0;
    std::vector<std::string> test_dates;
    std::vector<double> test_pnl, test_bench, test_positions;
    nlohmann::ordered_json diagnostics;
};

WindowResult run_window(const MarketData& md, const WindowRange& r, WindowDriver& driver,
                        const TrainingConfig& tc, std::uint64_t seed, int index);

struct WalkForwardReport {
    std::vector<WindowResult> windows;
    double mean_ex_sharpe = 0.0;
    double std_ex_sharpe = 0.0;
    double robust = 0.0;
    double mean_beta = 0.0;
    double pos_ratio = 0.0;
    double stitched_excess_sharpe = 0.0;
    double cum_return = 0.0;
    double ann_return = 0.0;
    double bench_cum_return = 0.0;
    double bench_ann_return = 0.0;
    std::vector<std::string> oos_dates;
    std::vector<double> oos_pnl, oos_bench, oos_positions;
    std::vector<double> oos_market, oos_sigma; // stress rerun inputs
};

WalkForwardReport aggregate(std::vector<WindowResult> results, const SelectionWeights& w);

WalkForwardReport run_walk_forward(const MarketData& md, const WalkForwardConfig& wf,
                                   const TrainingConfig& tc, WindowDriver& driver, int jobs = 1);

struct CrossBenchmarkRow {
    std::string benchmark;
    double excess_sharpe = 0.0;
    double excess_cum_return = 0.0;
    double mean_excess_1d = 0.0;
};

std::vector<CrossBenchmarkRow> cross_benchmark_eval(
    std::span<const double> oos_pnl,
    const std::vector<std::pair<std::string, std::vector<double>>>& benchmarks,
    double alpha_cvar);

} // namespace popfolio
