#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popfolio/features.hpp"
#include "popfolio/rng.hpp"

namespace popfolio {

struct RiskHead {
    std::vector<double> w_r;
    double b_r = 0.0;
    std::array<double, kNumRegimes> c_r{};
    double ell_min = 0.5;
    double ell_max = 1.5;
};

// Linear direction head with regime bias, tanh squashing with a floored
// temperature, and an optional sigmoid leverage (risk) head.
struct AgentPolicy {
    std::string id;
    std::vector<double> w;
    double b = 0.0;
    std::array<double, kNumRegimes> c{};
    double tau = 0.5;
    std::optional<RiskHead> risk_head;

    void validate() const;
};

struct SignalBounds {
    double lo = 0.0;
    double hi = 1.0;
    bool long_only = true;
};

struct SignalSeries {
    std::vector<std::string> dates;
    std::vector<double> values;
};

inline constexpr double kTemperatureFloor = 0.15;

double base_score(const AgentPolicy& agent, std::span<const double> x, Regime z);
double base_signal(double score, double tau);
double apply_risk_head(const AgentPolicy& agent, double s_tilde, std::span<const double> x, Regime z);

// Full per-date composition: score -> tanh -> risk head -> clip to bounds.
// Long-only clips negatives up to bounds.lo; signed mode clips to [-hi, hi].
double agent_signal_at(const AgentPolicy& agent, std::span<const double> x, Regime z,
                       const SignalBounds& bounds);

SignalSeries emit_signal(const AgentPolicy& agent, const FeatureMatrix& feats,
                         const RegimeSeries& regimes, const SignalBounds& bounds);

// Neutral-behavior initialization: w ~ U[-0.1, 0.1], biases 0, tau = 0.5,
// risk head with zero weights and leverage range [0.5, 1.5] (ell == 1).
AgentPolicy init_agent(std::size_t dims, bool with_risk_head, const std::string& id, Rng& rng);

} // namespace popfolio
