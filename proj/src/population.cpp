#include "popfolio/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace popfolio {

double constraint_violation(std::span<const double> pnl, std::span<const double> bench,
                            const UtilityWeights& w) {
    if (pnl.size() != bench.size()) throw ContractError("constraint_violation: length mismatch");
    std::vector<double> excess(pnl.size());
    for (std::size_t i = 0; i < pnl.size(); ++i) excess[i] = pnl[i] - bench[i];
    const double cvar = cvar_tail(excess, w.alpha_cvar);
    const double worst = *std::min_element(excess.begin(), excess.end());
    return std::max(0.0, w.cvar_floor - cvar) + std::max(0.0, w.worst_floor - worst);
}

double strategy_utility(std::span<const double> pnl, std::span<const double> bench,
                        const UtilityWeights& w) {
    if (pnl.size() != bench.size() || pnl.size() < 2)
        throw ContractError("strategy_utility: need aligned series of length >= 2");
    std::vector<double> excess(pnl.size());
    for (std::size_t i = 0; i < pnl.size(); ++i) excess[i] = pnl[i] - bench[i];

    const double cvar = cvar_tail(excess, w.alpha_cvar);
    const double worst = *std::min_element(excess.begin(), excess.end());
    const double violation = constraint_violation(pnl, bench, w);

    return sharpe(pnl) + w.lambda_ex * sharpe(excess) - w.lambda_down * downside_deviation(pnl) -
           w.lambda_dd * std::abs(max_drawdown(pnl)) -
           w.lambda_cvar * std::abs(std::min(0.0, cvar)) -
           w.lambda_worst * std::abs(std::min(0.0, worst)) - w.lambda_con * violation;
}

namespace {

double abs_corr(const std::vector<double>& a, const std::vector<double>& b) {
    const double sa = stddev(a), sb = stddev(b);
    if (sa <= 0.0 || sb <= 0.0) return 0.0;
    const double ma = mean_of(a), mb = mean_of(b);
    double cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - ma) * (b[i] - mb);
    cov /= static_cast<double>(a.size() - 1);
    return std::abs(cov / (sa * sb));
}

} // namespace

double diversity_score(const std::vector<std::vector<double>>& signals, std::size_t k) {
    const std::size_t K = signals.size();
    if (K < 2) throw ContractError("diversity_score: need K >= 2");
    if (k >= K) throw ContractError("diversity_score: index out of range");
    double acc = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
        if (j == k) continue;
        if (signals[j].size() != signals[k].size())
            throw ContractError("diversity_score: signal length mismatch");
        acc += abs_corr(signals[k], signals[j]);
    }
    return 1.0 - acc / static_cast<double>(K - 1);
}

std::vector<double> fitness(std::span<const double> am, std::span<const double> utility,
                            std::span<const double> diversity, std::span<const double> league,
                            std::span<const double> beta, const FitnessWeights& w) {
    const std::size_t K = am.size();
    if (utility.size() != K || diversity.size() != K || league.size() != K || beta.size() != K)
        throw ContractError("fitness: vector length mismatch");
    std::vector<double> f(K);
    for (std::size_t k = 0; k < K; ++k)
        f[k] = am[k] + utility[k] + w.lambda_div * diversity[k] + w.lambda_league * league[k] -
               w.lambda_beta * std::abs(beta[k] - w.beta_target);
    return f;
}

std::size_t elite_count(const EvolutionConfig& cfg) {
    const auto n = static_cast<std::size_t>(
        std::ceil(cfg.elite_fraction * static_cast<double>(cfg.population_size)));
    return std::clamp<std::size_t>(n, 1, static_cast<std::size_t>(cfg.population_size));
}

std::vector<std::size_t> fitness_ranking(std::span<const double> fitness_values) {
    std::vector<std::size_t> order(fitness_values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return fitness_values[a] > fitness_values[b];
    });
    return order;
}

std::vector<AgentPolicy> evolve_step(const std::vector<AgentPolicy>& population,
                                     std::span<const double> fitness_values,
                                     const EvolutionConfig& cfg, Rng& rng,
                                     std::uint64_t id_counter_start) {
    const std::size_t K = population.size();
    if (K != static_cast<std::size_t>(cfg.population_size) || fitness_values.size() != K)
        throw ContractError("evolve_step: population/fitness size mismatch");

    const std::size_t n_elite = elite_count(cfg);
    const auto order = fitness_ranking(fitness_values);
    std::vector<bool> is_elite(K, false);
    for (std::size_t r = 0; r < n_elite; ++r) is_elite[order[r]] = true;

    std::vector<AgentPolicy> next = population;
    std::uint64_t id_counter = id_counter_start;
    std::size_t parent_cursor = 0;
    for (std::size_t i = 0; i < K; ++i) {
        if (is_elite[i]) continue;
        AgentPolicy child = population[order[parent_cursor % n_elite]];
        ++parent_cursor;

        for (auto& v : child.w) v += cfg.mutation_scale * rng.normal();
        child.b += cfg.mutation_scale * rng.normal();
        for (auto& v : child.c) v += cfg.mutation_scale * rng.normal();
        child.tau = std::max(0.01, child.tau + cfg.mutation_scale * rng.normal());
        if (child.risk_head) {
            auto& rh = *child.risk_head;
            for (auto& v : rh.w_r) v += cfg.mutation_scale * rng.normal();
            rh.b_r += cfg.mutation_scale * rng.normal();
            for (auto& v : rh.c_r) v += cfg.mutation_scale * rng.normal();
        }
        child.id = "agent_" + std::to_string(id_counter++);
        next[i] = std::move(child);
    }
    return next;
}

} // namespace popfolio
