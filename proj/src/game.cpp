#include "popfolio/game.hpp"

#include <algorithm>
#include <cmath>

namespace popfolio {

double PayoffMatrix::max_abs() const {
    double g = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) g = std::max(g, std::abs(a(i, j)));
    return g;
}

PayoffMatrix build_payoff(std::span<const double> mean_pnls) {
    const std::size_t k = mean_pnls.size();
    if (k < 2) throw ContractError("build_payoff: need at least 2 agents");
    PayoffMatrix p;
    p.a = Matrix(k, k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) p.a(i, j) = mean_pnls[i] - mean_pnls[j];
    return p;
}

MetaStrategy mw_step(const PayoffMatrix& a, const MetaStrategy& m) {
    const std::size_t k = a.size();
    if (m.m.size() != k) throw ContractError("mw_step: strategy size mismatch");
    const std::vector<double> v = matvec(a.a, m.m);

    MetaStrategy out = m;
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double e = std::clamp(m.eta * v[i], -50.0, 50.0);
        out.m[i] = m.m[i] * std::exp(e);
        total += out.m[i];
    }
    if (total <= 0.0) { // all mass vanished; fall back to uniform
        for (auto& w : out.m) w = 1.0 / static_cast<double>(k);
        return out;
    }
    for (auto& w : out.m) w /= total;
    return out;
}

double nash_gap(const PayoffMatrix& a, std::span<const double> m) {
    if (m.size() != a.size()) throw ContractError("nash_gap: strategy size mismatch");
    const std::vector<double> am = matvec(a.a, m);
    const double best = *std::max_element(am.begin(), am.end());
    const double value = dot(std::span<const double>(am), m);
    return std::max(0.0, best - value);
}

double theoretical_eta(std::size_t k, int iterations, double payoff_bound) {
    if (payoff_bound <= 0.0 || k < 2) return 0.0;
    return std::sqrt(2.0 * std::log(static_cast<double>(k)) /
                     (static_cast<double>(iterations) * payoff_bound * payoff_bound));
}

PsroResult psro_solve(const PayoffMatrix& a, double eta, int iterations) {
    if (iterations < 1) throw ContractError("psro_solve: iterations must be >= 1");
    const std::size_t k = a.size();

    PsroResult res;
    MetaStrategy m;
    m.eta = eta;
    m.m.assign(k, 1.0 / static_cast<double>(k));
    std::vector<double> avg(k, 0.0);

    res.gap_trace.reserve(iterations);
    for (int t = 0; t < iterations; ++t) {
        if (k > 1) m = mw_step(a, m);
        for (std::size_t i = 0; i < k; ++i) avg[i] += m.m[i];
        res.gap_trace.push_back(nash_gap(a, m.m));
    }
    for (auto& v : avg) v /= static_cast<double>(iterations);

    res.final_strategy = m;
    res.averaged_strategy.eta = eta;
    res.averaged_strategy.m = avg;
    res.averaged_gap = nash_gap(a, avg);
    return res;
}

SignalSeries ensemble_signal(const MetaStrategy& m, std::span<const SignalSeries> signals) {
    if (signals.size() != m.m.size())
        throw ContractError("ensemble_signal: weight/signal count mismatch");
    if (signals.empty()) throw ContractError("ensemble_signal: no signals");
    SignalSeries out;
    out.dates = signals[0].dates;
    out.values.assign(out.dates.size(), 0.0);
    for (std::size_t kk = 0; kk < signals.size(); ++kk) {
        const auto& s = signals[kk];
        if (s.dates.size() != out.dates.size())
            throw ContractError("ensemble_signal: date misalignment");
        for (std::size_t t = 0; t < out.values.size(); ++t) {
            if (s.dates[t] != out.dates[t])
                throw ContractError("ensemble_signal: date misalignment at " + s.dates[t]);
            out.values[t] += m.m[kk] * s.values[t];
        }
    }
    return out;
}

std::vector<double> ensemble_values(std::span<const double> m,
                                    const std::vector<std::vector<double>>& signal_values) {
    if (m.size() != signal_values.size())
        throw ContractError("ensemble_values: weight/signal count mismatch");
    if (signal_values.empty()) throw ContractError("ensemble_values: no signals");
    std::vector<double> out(signal_values[0].size(), 0.0);
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (signal_values[k].size() != out.size())
            throw ContractError("ensemble_values: length misalignment");
        for (std::size_t t = 0; t < out.size(); ++t) out[t] += m[k] * signal_values[k][t];
    }
    return out;
}

} // namespace popfolio
