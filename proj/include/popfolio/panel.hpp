#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popfolio/errors.hpp"
#include "popfolio/linalg.hpp"

namespace popfolio {

// Aligned daily close/volume panel. Complete-case by construction: every
// (date, symbol) cell is filled, dates strictly increasing, closes > 0.
struct PricePanel {
    std::vector<std::string> dates;    // ISO-8601, ascending
    std::vector<std::string> symbols;
    Matrix close;                      // [date x symbol]
    Matrix volume;                     // [date x symbol]
    std::string benchmark_symbol;

    std::size_t benchmark_index() const;
    std::size_t symbol_index(const std::string& sym) const;
    void validate() const; // throws DataError on a broken invariant
};

// Simple daily returns, clipped to +/-20%.
struct ReturnPanel {
    std::vector<std::string> dates;      // one fewer than the panel
    std::vector<std::string> symbols;
    Matrix returns;                      // [date x symbol]
    std::vector<double> benchmark_returns;
    std::size_t benchmark_index = 0;

    // Equal-weight mean over non-benchmark symbols (the traded sleeve).
    // Falls back to the benchmark column when it is the only symbol.
    std::vector<double> universe_returns() const;
};

inline constexpr double kReturnClip = 0.20;

struct UniverseFilter {
    int min_history_days = 252;
    double min_median_price = 5.0;
    int max_symbols = 39;
};

// Piecewise drift/vol override for the market symbols, [start_day, end_day).
struct SyntheticSegment {
    int start_day = 0;
    int end_day = 0;
    double drift = 0.0;
    double vol = 0.0;
};

struct SyntheticSpec {
    int n_symbols = 8;           // traded symbols, benchmark excluded
    int horizon_days = 1000;
    std::string start_date = "2010-01-04";
    std::string benchmark_symbol = "BENCH";
    double drift = 0.0;          // per-day baseline for market symbols
    double vol = 0.01;
    double factor_loading = 0.6; // correlation of symbols through one market factor
    double benchmark_drift = 0.0;
    double benchmark_vol = 0.008;
    double start_price = 100.0;
    std::vector<SyntheticSegment> segments;
};

// CSV schema: header "date,symbol,close,volume", ISO dates, no quoting.
// Alignment: the benchmark's dates define the calendar; symbols without
// data on every calendar date are dropped (complete-case drop).
PricePanel load_panel(const std::string& path, const std::string& benchmark);
void save_panel(const PricePanel& panel, const std::string& path);

ReturnPanel compute_returns(const PricePanel& panel);

// Keeps symbols with enough history and median close above the floor,
// caps the universe at max_symbols by descending median dollar volume.
// The benchmark is always retained.
PricePanel filter_universe(const PricePanel& panel, const UniverseFilter& f);

// Geometric random walk with a shared market factor and scheduled
// drift/vol segments. Byte-identical output for a given (spec, seed).
PricePanel generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

} // namespace popfolio
