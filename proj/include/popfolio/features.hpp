#pragma once

#include <string>
#include <vector>

#include "popfolio/linalg.hpp"
#include "popfolio/panel.hpp"

namespace popfolio {

enum class Regime : int { Bull = 0, Bear = 1, Sideways = 2, Shock = 3 };
inline constexpr int kNumRegimes = 4;

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

struct RegimeThresholds {
    double theta_bull = 0.0008;   // 20-day mean daily return
    double theta_bear = -0.0008;
    double kappa_shock = 1.75;    // sigma_t > kappa * long-run sigma
};

struct RegimeSeries {
    std::vector<std::string> dates;
    std::vector<Regime> labels;
    std::vector<double> bar_r;      // 20-day mean market return
    std::vector<double> sigma;      // 20-day market volatility
    std::vector<double> sigma_bar;  // expanding mean of sigma
};

struct FeatureConfig {
    std::vector<int> windows{5, 20, 60};
    int std_window = 60;      // trailing standardization window
    double std_floor = 1e-8;
};

// Trailing-only standardized features. values(t, j) uses data at dates <= t
// only; warm-up dates are dropped.
struct FeatureMatrix {
    std::vector<std::string> dates;
    std::vector<std::string> feature_names;
    Matrix values; // [date x d]
};

FeatureMatrix build_features(const ReturnPanel& returns, const PricePanel& panel,
                             const FeatureConfig& cfg);

// Directional labels take precedence; SHOCK splits the residual band with
// SIDEWAYS. Needs >= 20 days of market returns.
RegimeSeries classify_regime(const ReturnPanel& returns, const RegimeThresholds& th);

} // namespace popfolio
