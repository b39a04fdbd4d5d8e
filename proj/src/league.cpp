#include "popfolio/league.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "popfolio/linalg.hpp"
#include "popfolio/rng.hpp"

namespace popfolio {

const std::vector<double> QTable::zeros_(64, 0.0);

double QTable::get(Key s, std::size_t a) const {
    auto it = table_.find(s);
    return it == table_.end() ? 0.0 : it->second[a];
}

std::span<const double> QTable::row(Key s, std::size_t n_actions) const {
    auto it = table_.find(s);
    if (it == table_.end()) return std::span<const double>(zeros_.data(), n_actions);
    return std::span<const double>(it->second.data(), n_actions);
}

double QTable::max_value(Key s, std::size_t n_actions) const {
    const auto r = row(s, n_actions);
    return *std::max_element(r.begin(), r.end());
}

std::size_t QTable::greedy_action(Key s, std::size_t n_actions) const {
    const auto r = row(s, n_actions);
    return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

void QTable::update(Key s, std::size_t a, double r, Key s_next, std::size_t n_actions,
                    double learn_rate, double gamma) {
    auto it = table_.find(s);
    if (it == table_.end()) it = table_.emplace(s, std::vector<double>(n_actions, 0.0)).first;
    const double target = r + gamma * max_value(s_next, n_actions);
    it->second[a] += learn_rate * (target - it->second[a]);
}

double QTable::max_abs_value() const {
    double m = 0.0;
    for (const auto& [k, row] : table_)
        for (double v : row) m = std::max(m, std::abs(v));
    return m;
}

double forward_return(std::span<const double> returns, std::size_t t, int h) {
    if (t + static_cast<std::size_t>(h) >= returns.size())
        throw ContractError("forward_return: insufficient future data");
    double acc = 1.0;
    for (int u = 1; u <= h; ++u) acc *= 1.0 + returns[t + u];
    return acc - 1.0;
}

double rl_br_reward(double position, double pi, double r_fwd, double opp_pnl_window,
                    double opp_pnl_next, const RlConfig& cfg) {
    return pi + cfg.omega_h * (position * r_fwd - opp_pnl_window) - opp_pnl_next -
           cfg.lambda_pos * std::abs(position);
}

namespace {

double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

std::size_t training_rows(const BRTrainingData& d) {
    const std::size_t n = d.features->rows();
    if (d.regimes.size() != n || d.returns.size() != n || d.opponent_signal.size() != n)
        throw ContractError("best-response training data misaligned");
    return n;
}

std::array<double, kNumRegimes> regime_residual_bias(const BRTrainingData& data,
                                                     std::span<const double> targets,
                                                     const RidgeFit& fit) {
    std::array<double, kNumRegimes> sum{}, cnt{};
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const double pred = fit.intercept + dot(std::span<const double>(fit.weights),
                                                data.features->row(t));
        const int z = static_cast<int>(data.regimes[t]);
        sum[z] += targets[t] - pred;
        cnt[z] += 1.0;
    }
    std::array<double, kNumRegimes> bias{};
    for (int z = 0; z < kNumRegimes; ++z) bias[z] = cnt[z] > 0.0 ? sum[z] / cnt[z] : 0.0;
    return bias;
}

} // namespace

AgentPolicy ridge_br(const BRTrainingData& data, const BRConfig& cfg, const AgentPolicy& tmpl,
                     const std::string& id) {
    const std::size_t n = training_rows(data);
    const std::size_t d = data.features->cols();
    const std::size_t h = static_cast<std::size_t>(cfg.horizon_h);
    if (n <= d + h) throw DataError("ridge_br: training split too short for horizon");

    const std::size_t rows = n - h;
    Matrix x(rows, d);
    std::vector<double> y(rows);
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t j = 0; j < d; ++j) x(t, j) = (*data.features)(t, j);
        const double r_fwd = forward_return(data.returns, t, cfg.horizon_h);
        y[t] = std::clamp(sign_of(r_fwd) - data.opponent_signal[t], -cfg.clip_bound,
                          cfg.clip_bound);
    }
    const RidgeFit fit = ridge_fit(x, y, cfg.ridge_lambda);

    AgentPolicy out = tmpl; // regime biases and risk head carried over
    out.id = id;
    out.w.resize(d);
    for (std::size_t j = 0; j < d; ++j)
        out.w[j] = cfg.blend_weight * fit.weights[j] + (1.0 - cfg.blend_weight) * tmpl.w[j];
    out.b = cfg.blend_weight * fit.intercept + (1.0 - cfg.blend_weight) * tmpl.b;
    out.validate();
    return out;
}

double Pca2::project1(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mean[i]) * axis1[i];
    return s;
}

double Pca2::project2(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mean[i]) * axis2[i];
    return s;
}

Pca2 fit_pca2(const Matrix& features) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (n == 0 || d == 0) throw ContractError("fit_pca2: empty feature matrix");

    Pca2 out;
    out.mean.assign(d, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t j = 0; j < d; ++j) out.mean[j] += features(t, j);
    for (auto& v : out.mean) v /= static_cast<double>(n);

    Matrix cov(d, d, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                cov(i, j) += (features(t, i) - out.mean[i]) * (features(t, j) - out.mean[j]);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            cov(i, j) /= static_cast<double>(n);
            cov(j, i) = cov(i, j);
        }

    auto power_iter = [&](const Matrix& m) {
        std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
        for (int it = 0; it < 200; ++it) {
            std::vector<double> nv = matvec(m, v);
            double norm = std::sqrt(dot(std::span<const double>(nv), std::span<const double>(nv)));
            if (norm < 1e-15) return v; // degenerate direction; keep the start vector
            for (auto& x : nv) x /= norm;
            v = std::move(nv);
        }
        return v;
    };

    out.axis1 = power_iter(cov);
    const std::vector<double> cv = matvec(cov, out.axis1);
    const double lambda1 = dot(std::span<const double>(cv), std::span<const double>(out.axis1));
    Matrix deflated = cov;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            deflated(i, j) -= lambda1 * out.axis1[i] * out.axis1[j];
    out.axis2 = power_iter(deflated);
    return out;
}

namespace {

std::vector<double> quantile_edges(std::vector<double> vals, int bins) {
    std::sort(vals.begin(), vals.end());
    std::vector<double> edges;
    for (int k = 1; k < bins; ++k) {
        const std::size_t idx = std::min(vals.size() - 1, vals.size() * k / bins);
        edges.push_back(vals[idx]);
    }
    return edges;
}

std::size_t bin_of(double v, const std::vector<double>& edges) {
    std::size_t b = 0;
    for (double e : edges)
        if (v > e) ++b;
    return b;
}

double exec_pnl_step(double p_prev, double p_now, double r, double sig,
                     const ExecutionConfig& cfg) {
    const double u = std::abs(p_now - p_prev);
    return p_prev * r - (cfg.tc_bps / 10000.0) * u - cfg.lambda_risk * std::abs(p_prev) * sig -
           cfg.lambda_imp * u * u - cfg.lambda_cap * p_prev * p_prev * (1.0 + sig);
}

} // namespace

RlBrResult train_rl_br(const BRTrainingData& data, const BRConfig& cfg,
                       const ExecutionConfig& exec, const SignalBounds& bounds,
                       const AgentPolicy& tmpl, std::uint64_t seed, const std::string& id) {
    const std::size_t n = training_rows(data);
    const std::size_t h = static_cast<std::size_t>(cfg.horizon_h);
    const RlConfig& rl = cfg.rl;
    if (rl.episodes < 1) throw ConfigError("rl episodes must be >= 1");
    if (n < h + 3) throw DataError("train_rl_br: training split too short for horizon");

    const std::size_t n_pos = rl.position_actions.size();
    const std::size_t n_lev = rl.leverage_actions.size();
    const std::size_t n_actions = n_pos * n_lev;
    if (n_actions == 0 || n_actions > 64) throw ConfigError("rl action grid size out of range");

    auto realized_position = [&](std::size_t a) {
        const double raw = rl.position_actions[a % n_pos] * rl.leverage_actions[a / n_pos];
        if (bounds.long_only) return std::clamp(raw, bounds.lo, bounds.hi);
        return std::clamp(raw, -bounds.hi, bounds.hi);
    };

    // State discretization: terciles of the first two principal feature
    // directions, a uniform position bin, and opponent-signal terciles.
    const Pca2 pca = fit_pca2(*data.features);
    std::vector<double> p1(n), p2(n);
    for (std::size_t t = 0; t < n; ++t) {
        p1[t] = pca.project1(data.features->row(t));
        p2[t] = pca.project2(data.features->row(t));
    }
    const auto e1 = quantile_edges(p1, rl.state_bins);
    const auto e2 = quantile_edges(p2, rl.state_bins);
    const auto eo = quantile_edges(
        std::vector<double>(data.opponent_signal.begin(), data.opponent_signal.end()), 3);

    const double pos_lo = bounds.long_only ? bounds.lo : -bounds.hi;
    const double pos_span = std::max(1e-12, bounds.hi - pos_lo);
    auto pos_bin = [&](double p) {
        const auto b = static_cast<std::size_t>(std::floor((p - pos_lo) / pos_span * 5.0));
        return std::min<std::size_t>(b, 4);
    };
    auto state_key = [&](std::size_t t, double p_prev) -> QTable::Key {
        const std::size_t b1 = bin_of(p1[t], e1);
        const std::size_t b2 = bin_of(p2[t], e2);
        const std::size_t bo = bin_of(data.opponent_signal[t], eo);
        return (((b1 * 8 + b2) * 8 + pos_bin(p_prev)) * 8 + bo);
    };

    // Opponent book: its signal traded directly, same cost model.
    std::vector<double> opp_pnl(n, 0.0);
    {
        double prev = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            opp_pnl[t] = exec_pnl_step(prev, data.opponent_signal[t], data.returns[t],
                                       data.sigma[t], exec);
            prev = data.opponent_signal[t];
        }
    }
    std::vector<double> opp_window(n, 0.0); // sum of opp pnl over (t, t+h]
    for (std::size_t t = 0; t + h < n; ++t) {
        double s = 0.0;
        for (std::size_t u = t + 1; u <= t + h; ++u) s += opp_pnl[u];
        opp_window[t] = s;
    }

    QTable q;
    Rng rng(derive_seed(seed, 0x716c6561726eULL)); // "qlearn" stream
    RlBrResult res;
    res.episode_rewards.reserve(rl.episodes);
    const std::size_t t_last = n - h - 2; // needs r_fwd at t and opp pnl at t+1

    for (int ep = 0; ep < rl.episodes; ++ep) {
        double p_prev = 0.0;
        double total = 0.0;
        for (std::size_t t = 0; t <= t_last; ++t) {
            const QTable::Key s = state_key(t, p_prev);
            std::size_t a;
            if (rng.uniform01() < rl.epsilon_explore)
                a = static_cast<std::size_t>(rng.uniform_int(n_actions));
            else
                a = q.greedy_action(s, n_actions);
            const double p_now = realized_position(a);

            const double pi = exec_pnl_step(p_prev, p_now, data.returns[t], data.sigma[t], exec);
            const double r_fwd = forward_return(data.returns, t, cfg.horizon_h);
            const double r = rl_br_reward(p_now, pi, r_fwd, opp_window[t], opp_pnl[t + 1], rl);
            res.reward_max_abs = std::max(res.reward_max_abs, std::abs(r));
            total += r;

            const QTable::Key s_next = state_key(t + 1, p_now);
            q.update(s, a, r, s_next, n_actions, rl.learn_rate, rl.gamma_discount);
            p_prev = p_now;
        }
        res.episode_rewards.push_back(total);
    }
    res.q_max_abs = q.max_abs_value();

    // Greedy rollout over the split, then distill into a linear policy by
    // ridge-fitting pre-tanh targets with per-regime residual biases.
    res.greedy_positions.resize(n);
    {
        double p_prev = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t a = q.greedy_action(state_key(t, p_prev), n_actions);
            res.greedy_positions[t] = realized_position(a);
            p_prev = res.greedy_positions[t];
        }
    }
    const double tau_eff = std::max(kTemperatureFloor, tmpl.tau);
    std::vector<double> targets(n);
    for (std::size_t t = 0; t < n; ++t)
        targets[t] = std::atanh(std::clamp(res.greedy_positions[t], -0.999, 0.999)) * tau_eff;

    const RidgeFit fit = ridge_fit(*data.features, targets, cfg.ridge_lambda);
    AgentPolicy agent = tmpl;
    agent.id = id;
    agent.w = fit.weights;
    agent.b = fit.intercept;
    agent.c = regime_residual_bias(data, targets, fit);
    agent.validate();
    res.agent = std::move(agent);
    return res;
}

void inject_br(std::vector<AgentPolicy>& population, const AgentPolicy& br_agent,
               std::span<const double> fitness_values, std::size_t n_protected) {
    const std::size_t K = population.size();
    if (fitness_values.size() != K) throw ContractError("inject_br: fitness size mismatch");
    if (K < 2) throw ContractError("inject_br: population too small");

    const auto order = fitness_ranking(fitness_values);
    std::vector<bool> protected_slot(K, false);
    const std::size_t shield = std::min(std::max<std::size_t>(n_protected, 1), K - 1);
    for (std::size_t r = 0; r < shield; ++r) protected_slot[order[r]] = true;

    std::size_t victim = K;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < K; ++i) {
        if (protected_slot[i]) continue;
        if (fitness_values[i] <= worst) { // ties evict the higher index
            worst = fitness_values[i];
            victim = i;
        }
    }
    population[victim] = br_agent;
}

} // namespace popfolio
