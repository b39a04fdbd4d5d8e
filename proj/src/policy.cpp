#include "popfolio/policy.hpp"

#include <algorithm>
#include <cmath>

#include "popfolio/errors.hpp"

namespace popfolio {

void AgentPolicy::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(tau > 0.0)) throw ContractError("agent tau must be > 0");
    if (!finite(b) || !finite(tau)) throw ContractError("agent parameters must be finite");
    for (double v : w)
        if (!finite(v)) throw ContractError("agent weights must be finite");
    for (double v : c)
        if (!finite(v)) throw ContractError("agent regime biases must be finite");
    if (risk_head) {
        const auto& rh = *risk_head;
        if (!(rh.ell_min >= 0.0) || !(rh.ell_max >= rh.ell_min))
            throw ContractError("risk head requires 0 <= ell_min <= ell_max");
        for (double v : rh.w_r)
            if (!finite(v)) throw ContractError("risk-head weights must be finite");
    }
}

double base_score(const AgentPolicy& agent, std::span<const double> x, Regime z) {
    if (x.size() != agent.w.size())
        throw ContractError("base_score: feature dimension mismatch");
    double a = agent.b + agent.c[static_cast<int>(z)];
    for (std::size_t i = 0; i < x.size(); ++i) a += agent.w[i] * x[i];
    return a;
}

double base_signal(double score, double tau) {
    return std::tanh(score / std::max(kTemperatureFloor, tau));
}

namespace {
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
} // namespace

double apply_risk_head(const AgentPolicy& agent, double s_tilde, std::span<const double> x,
                       Regime z) {
    if (!agent.risk_head) throw ContractError("apply_risk_head: agent has no risk head");
    const auto& rh = *agent.risk_head;
    if (x.size() != rh.w_r.size())
        throw ContractError("apply_risk_head: feature dimension mismatch");
    double logit = rh.b_r + rh.c_r[static_cast<int>(z)];
    for (std::size_t i = 0; i < x.size(); ++i) logit += rh.w_r[i] * x[i];
    const double ell = rh.ell_min + (rh.ell_max - rh.ell_min) * sigmoid(logit);
    const double sgn = (s_tilde > 0.0) - (s_tilde < 0.0);
    return sgn * std::abs(s_tilde) * ell;
}

double agent_signal_at(const AgentPolicy& agent, std::span<const double> x, Regime z,
                       const SignalBounds& bounds) {
    double s = base_signal(base_score(agent, x, z), agent.tau);
    if (agent.risk_head) s = apply_risk_head(agent, s, x, z);
    if (bounds.long_only) return std::clamp(s, bounds.lo, bounds.hi);
    return std::clamp(s, -bounds.hi, bounds.hi);
}

SignalSeries emit_signal(const AgentPolicy& agent, const FeatureMatrix& feats,
                         const RegimeSeries& regimes, const SignalBounds& bounds) {
    if (feats.dates.size() != regimes.dates.size())
        throw ContractError("emit_signal: feature/regime date misalignment");
    SignalSeries out;
    out.dates = feats.dates;
    out.values.resize(feats.dates.size());
    for (std::size_t t = 0; t < feats.dates.size(); ++t) {
        if (feats.dates[t] != regimes.dates[t])
            throw ContractError("emit_signal: feature/regime date misalignment at " +
                                feats.dates[t]);
        out.values[t] = agent_signal_at(agent, feats.values.row(t), regimes.labels[t], bounds);
    }
    return out;
}

AgentPolicy init_agent(std::size_t dims, bool with_risk_head, const std::string& id, Rng& rng) {
    AgentPolicy a;
    a.id = id;
    a.w.resize(dims);
    for (auto& v : a.w) v = rng.uniform(-0.1, 0.1);
    a.b = 0.0;
    a.c.fill(0.0);
    a.tau = 0.5;
    if (with_risk_head) {
        RiskHead rh;
        rh.w_r.assign(dims, 0.0);
        rh.b_r = 0.0;
        rh.c_r.fill(0.0);
        rh.ell_min = 0.5;
        rh.ell_max = 1.5;
        a.risk_head = rh;
    }
    return a;
}

} // namespace popfolio
