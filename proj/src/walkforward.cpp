#include "popfolio/walkforward.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace popfolio {

void WalkForwardConfig::validate() const {
    if (!(train_days > test_days && test_days >= 1))
        throw ConfigError("walkforward requires train_days > test_days >= 1");
    if (step_days < 1 || max_windows < 1) throw ConfigError("step_days/max_windows must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("val_fraction must be in (0, 1)");
    if (generation_patience < 0 || round_patience < 0)
        throw ConfigError("patience must be >= 0");
}

MarketData build_market_data(const PricePanel& panel, const FeatureConfig& fcfg,
                             const RegimeThresholds& rth) {
    const ReturnPanel rp = compute_returns(panel);
    const FeatureMatrix fm = build_features(rp, panel, fcfg);
    const RegimeSeries rs = classify_regime(rp, rth);

    const std::size_t warmup = rp.dates.size() - fm.dates.size();
    const std::size_t regime_off = rp.dates.size() - rs.dates.size();
    if (warmup < regime_off)
        throw ContractError("feature warm-up shorter than regime warm-up");

    const std::vector<double> mkt = rp.universe_returns();

    MarketData md;
    md.dates = fm.dates;
    md.feature_names = fm.feature_names;
    md.features = fm.values;
    const std::size_t T = fm.dates.size();
    md.regimes.resize(T);
    md.market_returns.resize(T);
    md.bench_returns.resize(T);
    md.sigma20.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t ri = warmup + t; // index on the return axis
        md.regimes[t] = rs.labels[ri - regime_off];
        md.market_returns[t] = mkt[ri];
        md.bench_returns[t] = rp.benchmark_returns[ri];
        // trailing 20d std including the current day
        double m = 0.0;
        for (int k = 0; k < 20; ++k) m += mkt[ri - k];
        m /= 20.0;
        double s = 0.0;
        for (int k = 0; k < 20; ++k) s += (mkt[ri - k] - m) * (mkt[ri - k] - m);
        md.sigma20[t] = std::sqrt(s / 19.0);
    }
    return md;
}

std::vector<WindowRange> make_windows(std::size_t n_dates, const WalkForwardConfig& cfg) {
    cfg.validate();
    const std::size_t train = static_cast<std::size_t>(cfg.train_days);
    const std::size_t test = static_cast<std::size_t>(cfg.test_days);
    const std::size_t fit =
        static_cast<std::size_t>(std::floor((1.0 - cfg.val_fraction) * cfg.train_days));
    if (fit == 0 || fit >= train) throw ConfigError("val_fraction leaves an empty split");

    std::vector<WindowRange> out;
    for (int w = 0; w < cfg.max_windows; ++w) {
        const std::size_t start = static_cast<std::size_t>(w) * cfg.step_days;
        if (start + train + test > n_dates) break;
        out.push_back({start, start + fit, start + train, start + train + test});
    }
    if (out.empty())
        throw DataError("not enough dates for a single walk-forward window (" +
                        std::to_string(n_dates) + " available, " +
                        std::to_string(train + test) + " needed)");
    return out;
}

WindowView::WindowView(const MarketData& md, WindowRange r) : md_(&md), range_(r) {
    if (!(r.start < r.fit_end && r.fit_end < r.val_end && r.val_end < r.test_end) ||
        r.test_end > md.dates.size())
        throw ContractError("window range out of bounds");
}

void WindowView::check(std::size_t i) const {
    if (i >= range_.test_end || i < range_.start)
        throw ContractError("window view access outside the window");
    if (!frozen_ && i >= range_.val_end)
        throw ContractError("test-slice access before checkpoint freeze");
}

const std::string& WindowView::date(std::size_t i) const { check(i); return md_->dates[i]; }
std::span<const double> WindowView::features_at(std::size_t i) const {
    check(i);
    return md_->features.row(i);
}
Regime WindowView::regime(std::size_t i) const { check(i); return md_->regimes[i]; }
double WindowView::market_return(std::size_t i) const { check(i); return md_->market_returns[i]; }
double WindowView::bench_return(std::size_t i) const { check(i); return md_->bench_returns[i]; }
double WindowView::sigma(std::size_t i) const { check(i); return md_->sigma20[i]; }

namespace {

// A frozen candidate: population snapshot, meta weights, signal-processing
// state fitted on the fit split, and the optimized scale.
struct Checkpoint {
    std::string id;
    std::vector<AgentPolicy> population;
    std::vector<double> meta;
    std::vector<double> fitness_values;
    std::vector<double> neutralize_beta, neutralize_means;
    double scale = 1.0;
    double validation_score = -std::numeric_limits<double>::infinity();
    std::vector<double> gap_trace;
    double averaged_gap = 0.0;
};

std::vector<std::size_t> factor_columns(const TrainingConfig& tc,
                                        const std::vector<std::string>& names) {
    std::vector<std::size_t> cols;
    for (const auto& want : tc.neutralize_factors)
        for (std::size_t j = 0; j < names.size(); ++j)
            if (names[j] == want) cols.push_back(j);
    if (cols.empty() && !names.empty()) cols.push_back(0);
    return cols;
}

// Weighted feature row cache for [start, upto).
struct WindowFeatures {
    Matrix weighted;       // rows relative to range.start
    Matrix factors;        // neutralization factor columns (unweighted)
    std::vector<Regime> regimes;
    std::vector<double> market, bench, sigma;

    static WindowFeatures build(const WindowView& view, const TrainingConfig& tc,
                                std::span<const double> fq_weights, std::size_t upto) {
        const std::size_t start = view.range().start;
        const std::size_t n = upto - start;
        const std::size_t d = view.dim();
        const auto fcols = factor_columns(tc, view.feature_names());

        WindowFeatures wf;
        wf.weighted = Matrix(n, d);
        wf.factors = Matrix(n, fcols.size());
        wf.regimes.resize(n);
        wf.market.resize(n);
        wf.bench.resize(n);
        wf.sigma.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            const auto row = view.features_at(start + t);
            for (std::size_t j = 0; j < d; ++j) wf.weighted(t, j) = row[j] * fq_weights[j];
            for (std::size_t j = 0; j < fcols.size(); ++j) wf.factors(t, j) = row[fcols[j]];
            wf.regimes[t] = view.regime(start + t);
            wf.market[t] = view.market_return(start + t);
            wf.bench[t] = view.bench_return(start + t);
            wf.sigma[t] = view.sigma(start + t);
        }
        return wf;
    }
};

std::vector<double> agent_signal_values(const AgentPolicy& agent, const WindowFeatures& wf,
                                        const SignalBounds& bounds) {
    std::vector<double> s(wf.weighted.rows());
    for (std::size_t t = 0; t < s.size(); ++t)
        s[t] = agent_signal_at(agent, wf.weighted.row(t), wf.regimes[t], bounds);
    return s;
}

// Ensemble -> neutralize -> amplify -> gate -> scale, on rows [0, n).
std::vector<double> processed_candidate_signal(const Checkpoint& cp, const TrainingConfig& tc,
                                               const WindowFeatures& wf) {
    std::vector<std::vector<double>> signals(cp.population.size());
    for (std::size_t k = 0; k < cp.population.size(); ++k)
        signals[k] = agent_signal_values(cp.population[k], wf, tc.bounds);
    std::vector<double> s = ensemble_values(cp.meta, signals);

    if (tc.neutralize_enabled && !cp.neutralize_beta.empty())
        s = apply_neutralization(s, wf.factors, cp.neutralize_beta, cp.neutralize_means,
                                 tc.neutralize.omega);
    if (tc.amplify_enabled) s = amplify_signal(s, tc.amplify);
    if (tc.gate_enabled) {
        const auto conf = trailing_rank_confidence(s, tc.gate.confidence_window);
        s = quality_gate(s, conf, tc.gate);
    }
    for (auto& v : s) v *= cp.scale;
    return s;
}

struct SliceEval {
    MetricSet metrics;
    double violation = 0.0;
    double score = 0.0;
    PnLSeries pnl;
};

SliceEval evaluate_slice(std::span<const double> signal, const WindowFeatures& wf,
                         std::size_t from, std::size_t to, const TrainingConfig& tc) {
    const std::span<const double> sig(signal.data() + from, to - from);
    const std::span<const double> mkt(wf.market.data() + from, to - from);
    const std::span<const double> ben(wf.bench.data() + from, to - from);
    const std::span<const double> sg(wf.sigma.data() + from, to - from);

    SliceEval ev;
    ev.pnl = run_execution(sig, mkt, sg, tc.exec);
    ev.metrics = compute_metrics(ev.pnl.pnl, ben, tc.utility.alpha_cvar);
    ev.violation = constraint_violation(ev.pnl.pnl, ben, tc.utility);
    ev.score = selection_score(ev.metrics, ev.violation, tc.selection);
    return ev;
}

} // namespace

EngineDriver::EngineDriver(TrainingConfig cfg, WalkForwardConfig wf)
    : cfg_(std::move(cfg)), wf_(std::move(wf)) {}

WindowOutcome EngineDriver::run(WindowView& view, std::uint64_t seed) {
    const TrainingConfig& tc = cfg_;
    const WindowRange r = view.range();
    const std::size_t fit_len = r.fit_end - r.start;
    const std::size_t val_len = r.val_end - r.start;
    const std::size_t d = view.dim();
    Rng rng(derive_seed(seed, 0x656e67696eULL)); // "engin" stream

    // Feature-quality weights, frozen from the fit split.
    std::vector<double> fq_weights(d, 1.0);
    {
        WindowFeatures raw = WindowFeatures::build(view, tc, fq_weights, r.fit_end);
        if (tc.fq_enabled)
            fq_weights = feature_quality_weights(raw.weighted, raw.market, raw.regimes, tc.fq);
    }
    const WindowFeatures wf = WindowFeatures::build(view, tc, fq_weights, r.val_end);

    const std::size_t K = static_cast<std::size_t>(tc.evolution.population_size);
    std::vector<AgentPolicy> population;
    population.reserve(K);
    std::uint64_t id_counter = 0;
    for (std::size_t k = 0; k < K; ++k)
        population.push_back(
            init_agent(d, tc.risk_head, "agent_" + std::to_string(id_counter++), rng));

    Checkpoint best;
    std::vector<Checkpoint> top; // for checkpoint-ensemble mode
    std::vector<double> last_fitness(K, 0.0);
    std::vector<double> br_episode_rewards;
    int bad_rounds = 0;
    int generations_run = 0;
    std::vector<double> meta_weights(K, 1.0 / static_cast<double>(K));

    for (int round = 0; round < tc.evolution.tournament_rounds; ++round) {
        const double round_start_best = best.validation_score;
        int bad_gens = 0;

        for (int gen = 0; gen < tc.evolution.generations_per_round; ++gen) {
            ++generations_run;

            // Evaluate the population on the fit split.
            std::vector<std::vector<double>> signals(K), fit_signals(K);
            std::vector<double> mean_pnls(K), utility(K), betas(K);
            std::vector<PnLSeries> fit_pnls(K);
            for (std::size_t k = 0; k < K; ++k) {
                signals[k] = agent_signal_values(population[k], wf, tc.bounds);
                fit_signals[k].assign(signals[k].begin(), signals[k].begin() + fit_len);
                fit_pnls[k] = run_execution(
                    fit_signals[k], std::span<const double>(wf.market.data(), fit_len),
                    std::span<const double>(wf.sigma.data(), fit_len), tc.exec);
                mean_pnls[k] = fit_pnls[k].mean_pnl();
                utility[k] =
                    strategy_utility(fit_pnls[k].pnl,
                                     std::span<const double>(wf.bench.data(), fit_len), tc.utility);
                betas[k] = beta_vs(fit_pnls[k].pnl,
                                   std::span<const double>(wf.bench.data(), fit_len));
            }

            const PayoffMatrix payoff = build_payoff(mean_pnls);
            const PsroResult psro = psro_solve(payoff, tc.psro.eta, tc.psro.iterations);
            meta_weights = psro.final_strategy.m;

            // Ensemble book on the fit split for the league-advantage term.
            const std::vector<double> ens_fit = ensemble_values(meta_weights, fit_signals);
            const PnLSeries ens_pnl = run_execution(
                ens_fit, std::span<const double>(wf.market.data(), fit_len),
                std::span<const double>(wf.sigma.data(), fit_len), tc.exec);
            const double ens_mean = ens_pnl.mean_pnl();

            std::vector<double> diversity(K, 0.0), league(K, 0.0);
            const auto am = matvec(payoff.a, meta_weights);
            for (std::size_t k = 0; k < K; ++k) {
                diversity[k] = diversity_score(fit_signals, k);
                league[k] = mean_pnls[k] - ens_mean;
            }
            last_fitness =
                fitness(am, utility, diversity, league, betas, tc.fitness_weights);

            // Candidate: processed ensemble, scale optimized on the fit split.
            Checkpoint cand;
            cand.id = "w_r" + std::to_string(round) + "_g" + std::to_string(gen);
            cand.population = population;
            cand.meta = meta_weights;
            cand.fitness_values = last_fitness;
            cand.gap_trace = psro.gap_trace;
            cand.averaged_gap = psro.averaged_gap;

            std::vector<double> s = ensemble_values(meta_weights, signals);
            if (tc.neutralize_enabled) {
                Matrix fit_factors(fit_len, wf.factors.cols());
                for (std::size_t t = 0; t < fit_len; ++t)
                    for (std::size_t j = 0; j < wf.factors.cols(); ++j)
                        fit_factors(t, j) = wf.factors(t, j);
                const auto neu = factor_neutralize(
                    std::span<const double>(s.data(), fit_len), fit_factors, tc.neutralize);
                cand.neutralize_beta = neu.beta_hat;
                cand.neutralize_means = neu.col_means;
                s = apply_neutralization(s, wf.factors, cand.neutralize_beta,
                                         cand.neutralize_means, tc.neutralize.omega);
            }
            if (tc.amplify_enabled) s = amplify_signal(s, tc.amplify);
            if (tc.gate_enabled) {
                const auto conf = trailing_rank_confidence(s, tc.gate.confidence_window);
                s = quality_gate(s, conf, tc.gate);
            }
            cand.scale = 1.0;
            if (tc.scaleopt_enabled)
                cand.scale = optimize_scale(
                    std::span<const double>(s.data(), fit_len),
                    std::span<const double>(wf.market.data(), fit_len),
                    std::span<const double>(wf.bench.data(), fit_len),
                    std::span<const double>(wf.sigma.data(), fit_len), tc.exec, tc.scale_grid,
                    tc.scale_weights);
            for (auto& v : s) v *= cand.scale;

            const SliceEval val = evaluate_slice(s, wf, fit_len, val_len, tc);
            cand.validation_score = val.score;

            const bool improved = cand.validation_score > best.validation_score;
            if (improved) best = cand;
            if (wf_.ensemble_checkpoints) {
                top.push_back(cand);
                std::stable_sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
                    return a.validation_score > b.validation_score;
                });
                if (top.size() > 3) top.resize(3);
            }

            population = evolve_step(population, last_fitness, tc.evolution, rng, id_counter);
            id_counter += K;

            bad_gens = improved ? 0 : bad_gens + 1;
            if (bad_gens >= wf_.generation_patience) break;
        }

        const bool round_improved = best.validation_score > round_start_best;
        bad_rounds = round_improved ? 0 : bad_rounds + 1;
        if (bad_rounds >= wf_.round_patience) break;

        if (tc.league_enabled && round + 1 < tc.evolution.tournament_rounds) {
            BRTrainingData data;
            Matrix fit_feats(fit_len, d);
            for (std::size_t t = 0; t < fit_len; ++t)
                for (std::size_t j = 0; j < d; ++j) fit_feats(t, j) = wf.weighted(t, j);
            std::vector<std::vector<double>> fit_signals(K);
            for (std::size_t k = 0; k < K; ++k) {
                auto s = agent_signal_values(population[k], wf, tc.bounds);
                fit_signals[k].assign(s.begin(), s.begin() + fit_len);
            }
            const std::vector<double> opp = ensemble_values(meta_weights, fit_signals);
            data.features = &fit_feats;
            data.regimes = std::span<const Regime>(wf.regimes.data(), fit_len);
            data.returns = std::span<const double>(wf.market.data(), fit_len);
            data.sigma = std::span<const double>(wf.sigma.data(), fit_len);
            data.opponent_signal = opp;

            const AgentPolicy& tmpl = population[fitness_ranking(last_fitness)[0]];
            const std::string br_id = "br_r" + std::to_string(round);
            AgentPolicy br;
            if (tc.br_method == BrMethod::Ridge) {
                br = ridge_br(data, tc.br, tmpl, br_id);
            } else {
                auto rl = train_rl_br(data, tc.br, tc.exec, tc.bounds, tmpl,
                                      derive_seed(seed, 0x6272ULL, round), br_id);
                br = rl.agent;
                br_episode_rewards = rl.episode_rewards;
            }
            inject_br(population, br, last_fitness, elite_count(tc.evolution));
        }
    }

    if (best.population.empty())
        throw ContractError("engine produced no checkpoint");

    // Checkpoint-ensemble mode averages the top-3 candidates' signals.
    std::vector<Checkpoint> selected;
    if (wf_.ensemble_checkpoints && !top.empty()) selected = top;
    else selected = {best};

    WindowOutcome out;
    out.checkpoint_id = best.id;
    out.validation_score = best.validation_score;
    out.gap_trace = best.gap_trace;

    const TrainingConfig tc_copy = tc;
    const auto fq_copy = fq_weights;
    out.make_signal = [selected, tc_copy, fq_copy](const WindowView& v,
                                                   std::size_t upto) -> std::vector<double> {
        const WindowFeatures wfull = WindowFeatures::build(v, tc_copy, fq_copy, upto);
        std::vector<double> acc;
        for (const auto& cp : selected) {
            auto s = processed_candidate_signal(cp, tc_copy, wfull);
            if (acc.empty()) acc.assign(s.size(), 0.0);
            for (std::size_t t = 0; t < s.size(); ++t) acc[t] += s[t];
        }
        for (auto& v2 : acc) v2 /= static_cast<double>(selected.size());
        return acc;
    };

    nlohmann::ordered_json diag;
    diag["checkpoint"] = {{"id", best.id},
                          {"scale", best.scale},
                          {"validation_score", best.validation_score},
                          {"meta", best.meta},
                          {"fitness", best.fitness_values},
                          {"neutralize_beta", best.neutralize_beta}};
    nlohmann::ordered_json pop = nlohmann::ordered_json::array();
    for (const auto& a : best.population) {
        nlohmann::ordered_json ja{{"id", a.id}, {"w", a.w}, {"b", a.b},
                                  {"c", a.c},   {"tau", a.tau}};
        if (a.risk_head)
            ja["risk_head"] = {{"w_r", a.risk_head->w_r}, {"b_r", a.risk_head->b_r},
                               {"c_r", a.risk_head->c_r}, {"ell_min", a.risk_head->ell_min},
                               {"ell_max", a.risk_head->ell_max}};
        pop.push_back(ja);
    }
    diag["checkpoint"]["population"] = pop;
    diag["gap_trace"] = best.gap_trace;
    diag["averaged_gap"] = best.averaged_gap;
    diag["fq_weights"] = fq_weights;
    diag["br_episode_rewards"] = br_episode_rewards;
    diag["generations_run"] = generations_run;
    out.diagnostics = diag;
    return out;
}

WindowResult run_window(const MarketData& md, const WindowRange& r, WindowDriver& driver,
                        const TrainingConfig& tc, std::uint64_t seed, int index) {
    WindowView view(md, r);
    WindowOutcome outcome = driver.run(view, derive_seed(seed, static_cast<std::uint64_t>(index)));
    view.freeze(); // checkpoint is now fixed; the test slice may be read

    const std::vector<double> signal = outcome.make_signal(view, r.test_end);
    const std::size_t test_off = r.val_end - r.start;
    const std::size_t test_len = r.test_end - r.val_end;
    if (signal.size() != r.test_end - r.start)
        throw ContractError("window signal has wrong length");

    std::vector<double> mkt(test_len), ben(test_len), sg(test_len);
    for (std::size_t t = 0; t < test_len; ++t) {
        mkt[t] = md.market_returns[r.val_end + t];
        ben[t] = md.bench_returns[r.val_end + t];
        sg[t] = md.sigma20[r.val_end + t];
    }
    const std::span<const double> test_sig(signal.data() + test_off, test_len);
    const PnLSeries pnl = run_execution(test_sig, mkt, sg, tc.exec);

    WindowResult res;
    res.index = index;
    res.train_start = md.dates[r.start];
    res.val_start = md.dates[r.fit_end];
    res.test_start = md.dates[r.val_end];
    res.test_end = md.dates[r.test_end - 1];
    res.checkpoint_id = outcome.checkpoint_id;
    res.validation_score = outcome.validation_score;
    res.test_metrics = compute_metrics(pnl.pnl, ben, tc.utility.alpha_cvar);
    res.diagnostics = std::move(outcome.diagnostics);
    if (!outcome.gap_trace.empty()) res.nash_gap_final = outcome.gap_trace.back();

    double hits = 0.0;
    for (std::size_t t = 0; t < test_len; ++t) {
        const double ex = mkt[t] - ben[t];
        const auto sgn = [](double v) { return (v > 0.0) - (v < 0.0); };
        if (sgn(pnl.positions[t]) == sgn(ex)) hits += 1.0;
    }
    res.hit_ratio = hits / static_cast<double>(test_len);

    res.test_dates.assign(md.dates.begin() + r.val_end, md.dates.begin() + r.test_end);
    res.test_pnl = pnl.pnl;
    res.test_bench = ben;
    res.test_positions = pnl.positions;
    return res;
}

WalkForwardReport aggregate(std::vector<WindowResult> results, const SelectionWeights& w) {
    if (results.empty()) throw ContractError("aggregate: no windows");
    WalkForwardReport rep;

    std::vector<double> sharpes, betas;
    for (const auto& r : results) {
        sharpes.push_back(r.test_metrics.excess_sharpe);
        betas.push_back(r.test_metrics.beta);
        rep.oos_dates.insert(rep.oos_dates.end(), r.test_dates.begin(), r.test_dates.end());
        rep.oos_pnl.insert(rep.oos_pnl.end(), r.test_pnl.begin(), r.test_pnl.end());
        rep.oos_bench.insert(rep.oos_bench.end(), r.test_bench.begin(), r.test_bench.end());
        rep.oos_positions.insert(rep.oos_positions.end(), r.test_positions.begin(),
                                 r.test_positions.end());
    }
    rep.mean_ex_sharpe = mean_of(sharpes);
    rep.std_ex_sharpe = stddev(sharpes);
    rep.robust = robust_score(sharpes, w);
    rep.mean_beta = mean_of(betas);
    double pos = 0.0;
    for (double s : sharpes) pos += (s > 0.0) ? 1.0 : 0.0;
    rep.pos_ratio = pos / static_cast<double>(sharpes.size());

    std::vector<double> excess(rep.oos_pnl.size());
    for (std::size_t i = 0; i < excess.size(); ++i) excess[i] = rep.oos_pnl[i] - rep.oos_bench[i];
    rep.stitched_excess_sharpe = sharpe(excess);
    rep.cum_return = cumulative_return(rep.oos_pnl);
    rep.ann_return = annualized_return(rep.oos_pnl);
    rep.bench_cum_return = cumulative_return(rep.oos_bench);
    rep.bench_ann_return = annualized_return(rep.oos_bench);
    rep.windows = std::move(results);
    return rep;
}

WalkForwardReport run_walk_forward(const MarketData& md, const WalkForwardConfig& wf,
                                   const TrainingConfig& tc, WindowDriver& driver, int jobs) {
    const auto windows = make_windows(md.dates.size(), wf);
    std::vector<WindowResult> results(windows.size());

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(windows.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < windows.size(); ++i)
            results[i] = run_window(md, windows[i], driver, tc, wf.seed, static_cast<int>(i));
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex err_mutex;
        std::exception_ptr first_error;
        auto work = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= windows.size()) return;
                try {
                    results[i] =
                        run_window(md, windows[i], driver, tc, wf.seed, static_cast<int>(i));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    // Collect the stress-rerun inputs on the stitched OOS axis.
    WalkForwardReport rep = aggregate(std::move(results), tc.selection);
    rep.oos_market.reserve(rep.oos_dates.size());
    rep.oos_sigma.reserve(rep.oos_dates.size());
    for (const auto& w : windows)
        for (std::size_t i = w.val_end; i < w.test_end; ++i) {
            rep.oos_market.push_back(md.market_returns[i]);
            rep.oos_sigma.push_back(md.sigma20[i]);
        }
    return rep;
}

std::vector<CrossBenchmarkRow> cross_benchmark_eval(
    std::span<const double> oos_pnl,
    const std::vector<std::pair<std::string, std::vector<double>>>& benchmarks,
    double alpha_cvar) {
    std::vector<CrossBenchmarkRow> rows;
    for (const auto& [name, bench] : benchmarks) {
        if (bench.size() != oos_pnl.size())
            throw DataError("benchmark '" + name + "' does not cover the OOS dates");
        const MetricSet m = compute_metrics(oos_pnl, bench, alpha_cvar);
        rows.push_back({name, m.excess_sharpe, m.excess_cum_return, m.mean_excess_1d});
    }
    return rows;
}

} // namespace popfolio
