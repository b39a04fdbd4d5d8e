#include "popfolio/signalproc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "popfolio/league.hpp"
#include "popfolio/stats.hpp"

namespace popfolio {

NeutralizeOutcome factor_neutralize(std::span<const double> signal, const Matrix& factors,
                                    const NeutralizeConfig& cfg) {
    if (factors.rows() != signal.size())
        throw ContractError("factor_neutralize: factor/signal misalignment");
    if (factors.cols() == 0) throw ContractError("factor_neutralize: no factor columns");
    if (cfg.omega < 0.0 || cfg.omega > 1.0) throw ConfigError("neutralize omega must be in [0,1]");

    const std::size_t n = signal.size();
    const std::size_t f = factors.cols();
    const double sbar = mean_of(signal);

    NeutralizeOutcome out;
    out.col_means.assign(f, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t j = 0; j < f; ++j) out.col_means[j] += factors(t, j);
    for (auto& v : out.col_means) v /= static_cast<double>(n);

    Matrix gram(f, f, 0.0);
    std::vector<double> rhs(f, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const double yc = signal[t] - sbar;
        for (std::size_t i = 0; i < f; ++i) {
            const double fi = factors(t, i) - out.col_means[i];
            rhs[i] += fi * yc;
            for (std::size_t j = 0; j <= i; ++j)
                gram(i, j) += fi * (factors(t, j) - out.col_means[j]);
        }
    }
    for (std::size_t i = 0; i < f; ++i) {
        for (std::size_t j = i + 1; j < f; ++j) gram(i, j) = gram(j, i);
        gram(i, i) += cfg.lambda_neu;
    }

    out.beta_hat = solve_spd(gram, rhs);
    out.signal = apply_neutralization(signal, factors, out.beta_hat, out.col_means, cfg.omega);
    return out;
}

std::vector<double> apply_neutralization(std::span<const double> signal, const Matrix& factors,
                                         std::span<const double> beta_hat,
                                         std::span<const double> col_means, double omega) {
    if (factors.rows() != signal.size() || factors.cols() != beta_hat.size() ||
        col_means.size() != beta_hat.size())
        throw ContractError("apply_neutralization: shape mismatch");
    std::vector<double> out(signal.begin(), signal.end());
    for (std::size_t t = 0; t < out.size(); ++t) {
        double proj = 0.0;
        for (std::size_t j = 0; j < beta_hat.size(); ++j)
            proj += beta_hat[j] * (factors(t, j) - col_means[j]);
        out[t] -= omega * proj;
    }
    return out;
}

double amplify_one(double s, const AmplifyConfig& cfg) {
    const double m = std::max(std::abs(s) - cfg.tau, 0.0);
    const double sgn = (s > 0.0) - (s < 0.0);
    return s + (cfg.gain - 1.0) * sgn * std::pow(m, cfg.gamma_amp);
}

std::vector<double> amplify_signal(std::span<const double> signal, const AmplifyConfig& cfg) {
    if (cfg.tau < 0.0 || cfg.gamma_amp <= 0.0 || cfg.gain < 1.0)
        throw ConfigError("amplify config out of range");
    std::vector<double> out(signal.size());
    for (std::size_t t = 0; t < signal.size(); ++t) out[t] = amplify_one(signal[t], cfg);
    return out;
}

std::vector<double> quality_gate(std::span<const double> signal,
                                 std::span<const double> confidence, const GateConfig& cfg) {
    if (signal.size() != confidence.size())
        throw ContractError("quality_gate: confidence misalignment");
    if (cfg.q_min <= 0.0 || cfg.q_min > 1.0 || cfg.nu <= 0.0)
        throw ConfigError("gate config out of range");
    std::vector<double> out(signal.size());
    for (std::size_t t = 0; t < signal.size(); ++t) {
        const double c = std::clamp(confidence[t], 0.0, 1.0);
        const double q = cfg.q_min + (1.0 - cfg.q_min) * std::pow(c, cfg.nu);
        out[t] = q * signal[t];
    }
    return out;
}

std::vector<double> trailing_rank_confidence(std::span<const double> signal, int window) {
    std::vector<double> conf(signal.size(), 0.5);
    for (std::size_t t = 0; t < signal.size(); ++t) {
        const std::size_t w = std::min<std::size_t>(t + 1, static_cast<std::size_t>(window));
        if (w < 2) continue;
        const double cur = std::abs(signal[t]);
        double below = 0.0;
        for (std::size_t k = 0; k < w; ++k)
            if (std::abs(signal[t - k]) < cur) below += 1.0;
        conf[t] = below / static_cast<double>(w - 1);
        conf[t] = std::min(conf[t], 1.0);
    }
    return conf;
}

namespace {

double abs_corr_guarded(std::span<const double> a, std::span<const double> b, int min_samples) {
    if (a.size() != b.size() || a.size() < static_cast<std::size_t>(min_samples)) return 0.0;
    const double sa = stddev(a), sb = stddev(b);
    if (sa <= 0.0 || sb <= 0.0) return 0.0;
    const double ma = mean_of(a), mb = mean_of(b);
    double cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - ma) * (b[i] - mb);
    cov /= static_cast<double>(a.size() - 1);
    return std::abs(cov / (sa * sb));
}

} // namespace

std::vector<double> feature_quality_weights(const Matrix& features,
                                            std::span<const double> returns,
                                            std::span<const Regime> regimes,
                                            const FeatureQualityConfig& cfg) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (returns.size() != n || regimes.size() != n)
        throw ContractError("feature_quality_weights: input misalignment");

    const std::size_t h = static_cast<std::size_t>(cfg.horizon_h);
    std::vector<double> q(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> f1, r1, fh, rh;
        std::vector<std::vector<double>> freg(kNumRegimes), rreg(kNumRegimes);
        for (std::size_t t = 0; t + 1 < n; ++t) {
            f1.push_back(features(t, j));
            r1.push_back(returns[t + 1]);
            freg[static_cast<int>(regimes[t])].push_back(features(t, j));
            rreg[static_cast<int>(regimes[t])].push_back(returns[t + 1]);
        }
        for (std::size_t t = 0; t + h < n; ++t) {
            fh.push_back(features(t, j));
            rh.push_back(forward_return(returns, t, cfg.horizon_h));
        }

        const double c1 = abs_corr_guarded(f1, r1, cfg.min_samples);
        const double ch = abs_corr_guarded(fh, rh, cfg.min_samples);
        double creg = 0.0;
        int n_reg = 0;
        for (int z = 0; z < kNumRegimes; ++z) {
            if (freg[z].empty()) continue;
            creg += abs_corr_guarded(freg[z], rreg[z], cfg.min_samples);
            ++n_reg;
        }
        if (n_reg > 0) creg /= n_reg;

        q[j] = (1.0 - cfg.omega_r) * (0.7 * c1 + 0.3 * ch) + cfg.omega_r * creg;
    }

    std::vector<double> positive;
    for (double v : q)
        if (v > 0.0) positive.push_back(v);
    std::vector<double> w(d, 1.0);
    if (positive.empty()) return w; // degenerate: all-zero quality keeps unit weights

    std::sort(positive.begin(), positive.end());
    const std::size_t m = positive.size();
    const double med = (m % 2 == 1) ? positive[m / 2] : 0.5 * (positive[m / 2 - 1] + positive[m / 2]);
    for (std::size_t j = 0; j < d; ++j) {
        const double ratio = std::clamp(q[j] / (med + cfg.epsilon), 0.4, 2.5);
        w[j] = (1.0 - cfg.alpha_fq) + cfg.alpha_fq * ratio;
    }
    return w;
}

} // namespace popfolio
