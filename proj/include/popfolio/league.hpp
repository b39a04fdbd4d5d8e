#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "popfolio/execution.hpp"
#include "popfolio/game.hpp"
#include "popfolio/policy.hpp"

namespace popfolio {

struct RlConfig {
    int episodes = 24;
    double gamma_discount = 0.9;
    double learn_rate = 0.1;
    double epsilon_explore = 0.2;
    double omega_h = 0.5;       // forward-return shaping weight
    double lambda_pos = 0.001;  // position penalty
    std::vector<double> position_actions{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> leverage_actions{0.5, 1.0, 1.5};
    int state_bins = 3;
};

struct BRConfig {
    int horizon_h = 21;
    double ridge_lambda = 1.0;
    double blend_weight = 0.5;
    double clip_bound = 1.0;
    RlConfig rl;
};

// Discretized state -> action values; unseen states read as all zeros.
class QTable {
public:
    using Key = std::uint64_t;

    double get(Key s, std::size_t a) const;
    std::span<const double> row(Key s, std::size_t n_actions) const;
    void update(Key s, std::size_t a, double r, Key s_next, std::size_t n_actions,
                double learn_rate, double gamma);
    std::size_t greedy_action(Key s, std::size_t n_actions) const;
    double max_value(Key s, std::size_t n_actions) const;
    double max_abs_value() const;
    std::size_t size() const { return table_.size(); }

private:
    std::map<Key, std::vector<double>> table_;
    static const std::vector<double> zeros_;
};

// R_t^{(h)} = prod_{u=1..h} (1 + r_{t+u}) - 1.
double forward_return(std::span<const double> returns, std::size_t t, int h);

// r = pi + omega_h (p * R_fwd - opp_window_pnl) - opp_next_pnl - lambda_pos |p|
double rl_br_reward(double position, double pi, double r_fwd, double opp_pnl_window,
                    double opp_pnl_next, const RlConfig& cfg);

// Slice of the training data a best response trains on.
struct BRTrainingData {
    const Matrix* features = nullptr;          // [t x d], weighted
    std::span<const Regime> regimes;
    std::span<const double> returns;           // market returns, same axis
    std::span<const double> sigma;
    std::span<const double> opponent_signal;   // ensemble under current m
};

// Fit y_t = clip(sign(R^(h)) - s_opp) by ridge; blend (w, b) with the
// template; regime biases and risk head copied from the template.
AgentPolicy ridge_br(const BRTrainingData& data, const BRConfig& cfg, const AgentPolicy& tmpl,
                     const std::string& id);

struct RlBrResult {
    AgentPolicy agent;
    std::vector<double> episode_rewards;
    double q_max_abs = 0.0;
    double reward_max_abs = 0.0;
    std::vector<double> greedy_positions; // training-split greedy rollout
};

// Tabular Q-learning over discrete position x leverage actions; the greedy
// policy is distilled back into a linear AgentPolicy (regime-wise biases).
RlBrResult train_rl_br(const BRTrainingData& data, const BRConfig& cfg,
                       const ExecutionConfig& exec, const SignalBounds& bounds,
                       const AgentPolicy& tmpl, std::uint64_t seed, const std::string& id);

// Replace the lowest-fitness slot outside the protected elite; fitness ties
// evict the higher index.
void inject_br(std::vector<AgentPolicy>& population, const AgentPolicy& br_agent,
               std::span<const double> fitness_values, std::size_t n_protected);

// Top principal directions of the (train-split) feature matrix, by power
// iteration with deterministic start; used for RL state binning.
struct Pca2 {
    std::vector<double> axis1;
    std::vector<double> axis2;
    std::vector<double> mean;

    double project1(std::span<const double> x) const;
    double project2(std::span<const double> x) const;
};
Pca2 fit_pca2(const Matrix& features);

} // namespace popfolio
