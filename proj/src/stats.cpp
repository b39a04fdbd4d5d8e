#include "popfolio/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace popfolio {

double mean_of(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double sharpe(std::span<const double> x) {
    const double sd = stddev(x);
    if (sd <= 0.0) return 0.0;
    return mean_of(x) / sd * std::sqrt(252.0);
}

double downside_deviation(std::span<const double> x) {
    std::vector<double> neg;
    for (double v : x)
        if (v < 0.0) neg.push_back(v);
    return stddev(neg) * std::sqrt(252.0);
}

double max_drawdown(std::span<const double> x) {
    double equity = 1.0, peak = 1.0, worst = 0.0;
    for (double v : x) {
        equity *= 1.0 + v;
        peak = std::max(peak, equity);
        worst = std::min(worst, equity / peak - 1.0);
    }
    return worst;
}

double cvar_tail(std::span<const double> x, double alpha) {
    if (x.empty()) return 0.0;
    if (!(alpha > 0.0 && alpha < 1.0)) throw ContractError("cvar alpha must be in (0,1)");
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(alpha * sorted.size())));
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += sorted[i];
    return s / static_cast<double>(k);
}

double beta_vs(std::span<const double> x, std::span<const double> bench) {
    if (x.size() != bench.size()) throw ContractError("beta_vs: length mismatch");
    if (x.size() < 2) return 0.0;
    const double mx = mean_of(x), mb = mean_of(bench);
    double cov = 0.0, var = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (x[i] - mx) * (bench[i] - mb);
        var += (bench[i] - mb) * (bench[i] - mb);
    }
    return var > 0.0 ? cov / var : 0.0;
}

double cumulative_return(std::span<const double> x) {
    double acc = 1.0;
    for (double v : x) acc *= 1.0 + v;
    return acc - 1.0;
}

double annualized_return(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double total = 1.0 + cumulative_return(x);
    if (total <= 0.0) return -1.0;
    return std::pow(total, 252.0 / static_cast<double>(x.size())) - 1.0;
}

MetricSet compute_metrics(std::span<const double> pnl, std::span<const double> bench,
                          double alpha_cvar) {
    if (pnl.size() != bench.size()) throw ContractError("compute_metrics: length mismatch");
    if (pnl.empty()) throw ContractError("compute_metrics: empty series");
    std::vector<double> excess(pnl.size());
    for (std::size_t i = 0; i < pnl.size(); ++i) excess[i] = pnl[i] - bench[i];

    MetricSet m;
    m.excess_sharpe = sharpe(excess);
    m.excess_cum_return = (1.0 + cumulative_return(pnl)) / (1.0 + cumulative_return(bench)) - 1.0;
    m.mean_excess_1d = mean_of(excess);
    m.excess_cvar = cvar_tail(excess, alpha_cvar);
    m.excess_worst_day = *std::min_element(excess.begin(), excess.end());
    m.beta = beta_vs(pnl, bench);
    m.max_drawdown = max_drawdown(pnl);
    m.down_dev = downside_deviation(pnl);
    m.annualized_return = annualized_return(pnl);
    return m;
}

double selection_score(const MetricSet& m, double violation, const SelectionWeights& w) {
    return m.excess_sharpe - w.lambda1 * std::abs(std::min(0.0, m.excess_cvar)) -
           w.lambda2 * std::abs(std::min(0.0, m.excess_worst_day)) - w.lambda3 * violation;
}

double robust_score(std::span<const double> window_sharpes, const SelectionWeights& w) {
    if (window_sharpes.empty()) throw ContractError("robust_score: no windows");
    const double worst = *std::min_element(window_sharpes.begin(), window_sharpes.end());
    return mean_of(window_sharpes) - w.lambda_std * stddev(window_sharpes) -
           w.lambda_min * std::abs(std::min(0.0, worst));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

int default_newey_west_lag(std::size_t n) {
    return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
}

TestResult newey_west_test(std::span<const double> diff, int lag) {
    const std::size_t T = diff.size();
    if (static_cast<int>(T) <= lag + 2) throw ContractError("newey_west_test: series too short");
    const double m = mean_of(diff);

    auto gamma = [&](int l) {
        double s = 0.0;
        for (std::size_t t = static_cast<std::size_t>(l); t < T; ++t)
            s += (diff[t] - m) * (diff[t - l] - m);
        return s / static_cast<double>(T);
    };
    double hac = gamma(0);
    for (int l = 1; l <= lag; ++l) {
        const double w = 1.0 - static_cast<double>(l) / (lag + 1);
        hac += 2.0 * w * gamma(l);
    }
    hac = std::max(hac, 0.0);

    TestResult res;
    res.method = "NeweyWest";
    res.lag_or_block = lag;
    res.statistic = hac > 0.0 ? m / std::sqrt(hac / static_cast<double>(T)) : 0.0;
    res.p_value = 1.0 - normal_cdf(res.statistic);
    return res;
}

std::size_t sample_block_length(Rng& rng, double mean_block) {
    if (mean_block < 1.0) throw ContractError("mean_block must be >= 1");
    const double p = 1.0 / mean_block;
    std::size_t len = 1;
    while (rng.uniform01() >= p) ++len;
    return len;
}

std::vector<std::size_t> stationary_bootstrap_indices(std::size_t n, double mean_block, Rng& rng) {
    if (mean_block < 1.0) throw ContractError("mean_block must be >= 1");
    std::vector<std::size_t> idx(n);
    const double p = 1.0 / mean_block;
    std::size_t pos = rng.uniform_int(n);
    for (std::size_t k = 0; k < n; ++k) {
        idx[k] = pos;
        if (rng.uniform01() < p) pos = rng.uniform_int(n);
        else pos = (pos + 1) % n;
    }
    return idx;
}

namespace {

// Mid-p bootstrap p-value: ties at the observed statistic count half.
double bootstrap_p(const std::vector<double>& stats, double observed) {
    double greater = 0.0, equal = 0.0;
    for (double s : stats) {
        if (s > observed) greater += 1.0;
        else if (s == observed) equal += 1.0;
    }
    return (greater + 0.5 * equal) / static_cast<double>(stats.size());
}

} // namespace

TestResult stationary_bootstrap_test(std::span<const double> diff, const BootstrapConfig& cfg) {
    const std::size_t T = diff.size();
    if (T < 2) throw ContractError("stationary_bootstrap_test: series too short");
    const double observed = mean_of(diff);

    std::vector<double> stats(cfg.n_boot);
    for (int b = 0; b < cfg.n_boot; ++b) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(b)));
        const auto idx = stationary_bootstrap_indices(T, cfg.mean_block, rng);
        double s = 0.0;
        for (std::size_t i : idx) s += diff[i];
        stats[b] = s / static_cast<double>(T) - observed; // recentered at the null
    }

    TestResult res;
    res.method = "StationaryBootstrap";
    res.statistic = observed;
    res.n_bootstrap = cfg.n_boot;
    res.lag_or_block = cfg.mean_block;
    res.p_value = bootstrap_p(stats, observed);
    return res;
}

TestResult wrc_test(const Matrix& diffs, const BootstrapConfig& cfg) {
    const std::size_t T = diffs.rows();
    const std::size_t J = diffs.cols();
    if (J < 1 || T < 2) throw ContractError("wrc_test: need J >= 1 and T >= 2");
    const double sqT = std::sqrt(static_cast<double>(T));

    std::vector<double> dbar(J, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < J; ++j) dbar[j] += diffs(t, j);
    for (auto& v : dbar) v /= static_cast<double>(T);
    const double observed = sqT * *std::max_element(dbar.begin(), dbar.end());

    std::vector<double> stats(cfg.n_boot);
    for (int b = 0; b < cfg.n_boot; ++b) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(b)));
        const auto idx = stationary_bootstrap_indices(T, cfg.mean_block, rng);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < J; ++j) {
            double s = 0.0;
            for (std::size_t i : idx) s += diffs(i, j);
            best = std::max(best, sqT * (s / static_cast<double>(T) - dbar[j]));
        }
        stats[b] = best;
    }

    TestResult res;
    res.method = "WRC";
    res.statistic = observed;
    res.n_bootstrap = cfg.n_boot;
    res.lag_or_block = cfg.mean_block;
    res.p_value = bootstrap_p(stats, observed);
    return res;
}

TestResult spa_lite_test(const Matrix& diffs, const BootstrapConfig& cfg) {
    const std::size_t T = diffs.rows();
    const std::size_t J = diffs.cols();
    if (J < 1 || T < 2) throw ContractError("spa_lite_test: need J >= 1 and T >= 2");
    const double sqT = std::sqrt(static_cast<double>(T));

    std::vector<double> dbar(J, 0.0), sig(J, 0.0);
    std::vector<std::size_t> live;
    for (std::size_t j = 0; j < J; ++j) {
        std::vector<double> col(T);
        for (std::size_t t = 0; t < T; ++t) col[t] = diffs(t, j);
        dbar[j] = mean_of(col);
        sig[j] = stddev(col);
        if (sig[j] > 0.0) live.push_back(j); // zero-variance models excluded
    }
    if (live.empty()) throw DataError("spa_lite_test: all models have zero variance");

    auto stat_of = [&](const std::vector<double>& means) {
        double best = 0.0;
        for (std::size_t j : live)
            best = std::max(best, std::max(0.0, sqT * means[j] / sig[j]));
        return best;
    };
    const double observed = stat_of(dbar);

    std::vector<double> stats(cfg.n_boot);
    std::vector<double> centered(J);
    for (int b = 0; b < cfg.n_boot; ++b) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(b)));
        const auto idx = stationary_bootstrap_indices(T, cfg.mean_block, rng);
        for (std::size_t j = 0; j < J; ++j) {
            double s = 0.0;
            for (std::size_t i : idx) s += diffs(i, j);
            centered[j] = s / static_cast<double>(T) - dbar[j];
        }
        stats[b] = stat_of(centered);
    }

    TestResult res;
    res.method = "SPA-lite";
    res.statistic = observed;
    res.n_bootstrap = cfg.n_boot;
    res.lag_or_block = cfg.mean_block;
    res.p_value = bootstrap_p(stats, observed);
    return res;
}

std::vector<double> fdr_adjust(std::span<const double> pvals) {
    const std::size_t m = pvals.size();
    for (double p : pvals)
        if (p < 0.0 || p > 1.0) throw ContractError("fdr_adjust: p-values must be in [0,1]");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });

    std::vector<double> q(m, 0.0);
    double running = 1.0;
    for (std::size_t rank = m; rank-- > 0;) {
        const std::size_t i = order[rank];
        const double adj = pvals[i] * static_cast<double>(m) / static_cast<double>(rank + 1);
        running = std::min(running, adj);
        q[i] = running;
    }
    return q;
}

} // namespace popfolio
