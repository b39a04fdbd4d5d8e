#include "popfolio/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace popfolio {

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Bull: return "BULL";
        case Regime::Bear: return "BEAR";
        case Regime::Sideways: return "SIDEWAYS";
        case Regime::Shock: return "SHOCK";
    }
    return "?";
}

Regime regime_from_name(const std::string& name) {
    if (name == "BULL") return Regime::Bull;
    if (name == "BEAR") return Regime::Bear;
    if (name == "SIDEWAYS") return Regime::Sideways;
    if (name == "SHOCK") return Regime::Shock;
    throw ContractError("unknown regime label: " + name);
}

namespace {

// Direct windowed sums: O(T*w) but exact and trivially lookahead-free.
double window_mean(const std::vector<double>& x, std::size_t t, int w) {
    double s = 0.0;
    for (int k = 0; k < w; ++k) s += x[t - k];
    return s / w;
}

double window_std(const std::vector<double>& x, std::size_t t, int w) {
    if (w < 2) return 0.0;
    const double m = window_mean(x, t, w);
    double s = 0.0;
    for (int k = 0; k < w; ++k) {
        const double d = x[t - k] - m;
        s += d * d;
    }
    return std::sqrt(s / (w - 1));
}

double window_cumret(const Matrix& r, std::size_t t, int w, std::size_t col) {
    double acc = 1.0;
    for (int k = 0; k < w; ++k) acc *= 1.0 + r(t - k, col);
    return acc - 1.0;
}

} // namespace

FeatureMatrix build_features(const ReturnPanel& returns, const PricePanel& panel,
                             const FeatureConfig& cfg) {
    const std::size_t T = returns.dates.size();
    const std::size_t N = returns.symbols.size();
    if (panel.dates.size() != T + 1)
        throw ContractError("build_features: panel and return panel are misaligned");

    int max_w = cfg.std_window;
    for (int w : cfg.windows) max_w = std::max(max_w, w);
    const std::size_t raw_start = static_cast<std::size_t>(max_w - 1);
    const std::size_t warmup = raw_start + static_cast<std::size_t>(cfg.std_window - 1);
    if (T <= warmup)
        throw DataError("horizon shorter than feature warm-up (" + std::to_string(warmup + 1) +
                        " return days needed, have " + std::to_string(T) + ")");

    const std::vector<double> mkt = returns.universe_returns();
    const std::vector<double>& bench = returns.benchmark_returns;
    const std::size_t bench_col = returns.benchmark_index;

    std::vector<std::size_t> traded;
    for (std::size_t i = 0; i < N; ++i)
        if (i != bench_col || N == 1) traded.push_back(i);

    // Market volume per return date (panel row t+1).
    std::vector<double> mkt_volume(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double v = 0.0;
        for (std::size_t i : traded) v += panel.volume(t + 1, i);
        mkt_volume[t] = v;
    }

    std::vector<std::string> names;
    for (int w : cfg.windows) names.push_back("mkt_ret_" + std::to_string(w));
    for (int w : cfg.windows) names.push_back("mkt_vol_" + std::to_string(w));
    names.insert(names.end(), {"breadth_20", "disp_20", "skew_60", "kurt_60", "excess_20",
                               "beta_60", "volume_z_20", "ls_mom_20", "ls_vol_20"});
    const std::size_t d = names.size();

    Matrix raw(T, d, 0.0);
    for (std::size_t t = raw_start; t < T; ++t) {
        std::size_t j = 0;
        for (int w : cfg.windows) raw(t, j++) = window_mean(mkt, t, w);
        for (int w : cfg.windows) raw(t, j++) = window_std(mkt, t, w);

        // Cross-sectional breadth and dispersion of trailing 20d cumulative returns.
        std::vector<double> cr20(traded.size());
        for (std::size_t k = 0; k < traded.size(); ++k)
            cr20[k] = window_cumret(returns.returns, t, 20, traded[k]);
        double up = 0.0;
        for (double c : cr20) up += (c > 0.0) ? 1.0 : 0.0;
        raw(t, j++) = up / static_cast<double>(cr20.size());
        if (cr20.size() >= 2) {
            const double m = std::accumulate(cr20.begin(), cr20.end(), 0.0) / cr20.size();
            double s = 0.0;
            for (double c : cr20) s += (c - m) * (c - m);
            raw(t, j++) = std::sqrt(s / (cr20.size() - 1));
        } else {
            raw(t, j++) = 0.0;
        }

        // Higher moments of the market return over 60 days.
        {
            const int w = 60;
            const double m = window_mean(mkt, t, w);
            double m2 = 0.0, m3 = 0.0, m4 = 0.0;
            for (int k = 0; k < w; ++k) {
                const double e = mkt[t - k] - m;
                m2 += e * e;
                m3 += e * e * e;
                m4 += e * e * e * e;
            }
            m2 /= w; m3 /= w; m4 /= w;
            raw(t, j++) = (m2 > 1e-18) ? m3 / std::pow(m2, 1.5) : 0.0;
            raw(t, j++) = (m2 > 1e-18) ? m4 / (m2 * m2) - 3.0 : 0.0;
        }

        raw(t, j++) = window_mean(mkt, t, 20) - window_mean(bench, t, 20);

        // Rolling beta of market on benchmark over 60 days.
        {
            const int w = 60;
            const double mu = window_mean(mkt, t, w);
            const double mb = window_mean(bench, t, w);
            double cov = 0.0, var = 0.0;
            for (int k = 0; k < w; ++k) {
                const double eb = bench[t - k] - mb;
                cov += (mkt[t - k] - mu) * eb;
                var += eb * eb;
            }
            raw(t, j++) = (var > 1e-18) ? cov / var : 0.0;
        }

        // Volume z-score vs trailing 20 days.
        {
            const double m = window_mean(mkt_volume, t, 20);
            const double s = window_std(mkt_volume, t, 20);
            raw(t, j++) = (mkt_volume[t] - m) / std::max(s, cfg.std_floor);
        }

        // Long-short spreads: rank by trailing stats through t-1, spread of
        // today's returns between the top and bottom half.
        {
            const std::size_t n = traded.size();
            const std::size_t half = n / 2;
            if (half >= 1 && n >= 2) {
                std::vector<double> mom(n), vol(n);
                for (std::size_t k = 0; k < n; ++k) {
                    mom[k] = window_cumret(returns.returns, t - 1, 20, traded[k]);
                    std::vector<double> col(20);
                    for (int u = 0; u < 20; ++u) col[u] = returns.returns(t - 1 - u, traded[k]);
                    const double m = std::accumulate(col.begin(), col.end(), 0.0) / 20.0;
                    double s = 0.0;
                    for (double c : col) s += (c - m) * (c - m);
                    vol[k] = std::sqrt(s / 19.0);
                }
                auto spread = [&](const std::vector<double>& key, bool high_is_long) {
                    std::vector<std::size_t> order(n);
                    std::iota(order.begin(), order.end(), 0);
                    std::stable_sort(order.begin(), order.end(),
                                     [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
                    double top = 0.0, bot = 0.0;
                    for (std::size_t k = 0; k < half; ++k) {
                        top += returns.returns(t, traded[order[k]]);
                        bot += returns.returns(t, traded[order[n - 1 - k]]);
                    }
                    const double s = (top - bot) / static_cast<double>(half);
                    return high_is_long ? s : -s;
                };
                raw(t, j++) = spread(mom, true);   // momentum winners minus losers
                raw(t, j++) = spread(vol, false);  // low vol minus high vol
            } else {
                raw(t, j++) = 0.0;
                raw(t, j++) = 0.0;
            }
        }
    }

    FeatureMatrix fm;
    fm.feature_names = names;
    fm.dates.assign(returns.dates.begin() + warmup, returns.dates.end());
    fm.values = Matrix(T - warmup, d);
    std::vector<double> col(T);
    for (std::size_t jf = 0; jf < d; ++jf) {
        for (std::size_t t = 0; t < T; ++t) col[t] = raw(t, jf);
        for (std::size_t t = warmup; t < T; ++t) {
            const double m = window_mean(col, t, cfg.std_window);
            const double s = window_std(col, t, cfg.std_window);
            fm.values(t - warmup, jf) = (col[t] - m) / std::max(s, cfg.std_floor);
        }
    }
    return fm;
}

RegimeSeries classify_regime(const ReturnPanel& returns, const RegimeThresholds& th) {
    if (!(th.theta_bear < th.theta_bull)) throw ConfigError("theta_bear must be < theta_bull");
    if (!(th.kappa_shock > 1.0)) throw ConfigError("kappa_shock must be > 1");
    const std::size_t T = returns.dates.size();
    const int w = 20;
    if (T < static_cast<std::size_t>(w)) throw DataError("need >= 20 days of returns for regimes");

    const std::vector<double> mkt = returns.universe_returns();
    RegimeSeries rs;
    rs.dates.assign(returns.dates.begin() + (w - 1), returns.dates.end());
    const std::size_t n = T - (w - 1);
    rs.labels.resize(n);
    rs.bar_r.resize(n);
    rs.sigma.resize(n);
    rs.sigma_bar.resize(n);

    double sigma_sum = 0.0;
    for (std::size_t t = w - 1; t < T; ++t) {
        const std::size_t k = t - (w - 1);
        rs.bar_r[k] = window_mean(mkt, t, w);
        rs.sigma[k] = window_std(mkt, t, w);
        sigma_sum += rs.sigma[k];
        rs.sigma_bar[k] = sigma_sum / static_cast<double>(k + 1);

        if (rs.bar_r[k] >= th.theta_bull) rs.labels[k] = Regime::Bull;
        else if (rs.bar_r[k] <= th.theta_bear) rs.labels[k] = Regime::Bear;
        else if (rs.sigma[k] > th.kappa_shock * rs.sigma_bar[k]) rs.labels[k] = Regime::Shock;
        else rs.labels[k] = Regime::Sideways;
    }
    return rs;
}

} // namespace popfolio
