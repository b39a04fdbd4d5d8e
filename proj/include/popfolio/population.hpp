#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "popfolio/execution.hpp"
#include "popfolio/policy.hpp"
#include "popfolio/stats.hpp"

namespace popfolio {

struct UtilityWeights {
    double lambda_ex = 1.0;
    double lambda_down = 0.5;
    double lambda_dd = 0.5;
    double lambda_cvar = 1.0;
    double lambda_worst = 1.0;
    double lambda_con = 2.0;
    double alpha_cvar = 0.05;
    double cvar_floor = -0.03;   // c*_cvar
    double worst_floor = -0.05;  // c*_worst
};

struct FitnessWeights {
    double lambda_div = 0.2;
    double lambda_league = 0.2;
    double lambda_beta = 0.25;
    double beta_target = 0.55;
};

struct EvolutionConfig {
    int population_size = 16;
    double elite_fraction = 0.25;
    double mutation_scale = 0.05;
    int generations_per_round = 4;
    int tournament_rounds = 5;
};

// U = SR + l_ex SR(excess) - l_down DownDev - l_dd |MDD|
//     - l_cvar |min(0, CVaR(excess))| - l_worst |min(0, worst excess day)|
//     - l_con Violation
double strategy_utility(std::span<const double> pnl, std::span<const double> bench,
                        const UtilityWeights& w);

// max(0, c*_cvar - CVaR) + max(0, c*_worst - worst excess day); >= 0.
double constraint_violation(std::span<const double> pnl, std::span<const double> bench,
                            const UtilityWeights& w);

// D_k = 1 - mean over j != k of |Corr(s_k, s_j)|; zero-variance pairs
// contribute 0 correlation.
double diversity_score(const std::vector<std::vector<double>>& signals, std::size_t k);

// F_k = (Am)_k + U_k + l_div D_k + l_league L_k - l_beta |beta_k - beta*|
std::vector<double> fitness(std::span<const double> am, std::span<const double> utility,
                            std::span<const double> diversity, std::span<const double> league,
                            std::span<const double> beta, const FitnessWeights& w);

// In-place elitist replacement: the top ceil(ef*K) slots by fitness keep
// their agents unchanged; every other slot receives a mutated elite copy.
std::vector<AgentPolicy> evolve_step(const std::vector<AgentPolicy>& population,
                                     std::span<const double> fitness_values,
                                     const EvolutionConfig& cfg, Rng& rng,
                                     std::uint64_t id_counter_start);

std::size_t elite_count(const EvolutionConfig& cfg);

// Sorted indices by descending fitness; ties keep the lower index first.
std::vector<std::size_t> fitness_ranking(std::span<const double> fitness_values);

} // namespace popfolio
