#pragma once

#include <span>
#include <vector>

#include "popfolio/features.hpp"
#include "popfolio/linalg.hpp"

namespace popfolio {

struct NeutralizeConfig {
    double omega = 0.3;       // subtraction strength
    double lambda_neu = 1e-6; // ridge on the factor regression
};

struct AmplifyConfig {
    double tau = 0.1;     // hinge threshold
    double gamma_amp = 1.6;
    double gain = 1.5;
};

struct GateConfig {
    double q_min = 0.3;
    double nu = 2.0;
    int confidence_window = 60; // trailing rank window for default confidence
};

struct FeatureQualityConfig {
    double alpha_fq = 0.5;  // blend toward the quality tilt
    double omega_r = 0.3;   // regime-conditional share
    double epsilon = 1e-9;
    int horizon_h = 21;
    int min_samples = 30;   // correlation guard; fewer observations -> C = 0
};

// Factor columns are centered internally, so at omega=1, lambda=0 the
// residual is exactly orthogonal to every factor. The fitted beta and the
// centering means are returned so the projection can be applied later to
// out-of-sample rows without touching their statistics.
struct NeutralizeOutcome {
    std::vector<double> signal;
    std::vector<double> beta_hat;
    std::vector<double> col_means;
};
NeutralizeOutcome factor_neutralize(std::span<const double> signal, const Matrix& factors,
                                    const NeutralizeConfig& cfg);

// Applies a previously fitted beta with frozen centering means.
std::vector<double> apply_neutralization(std::span<const double> signal, const Matrix& factors,
                                         std::span<const double> beta_hat,
                                         std::span<const double> col_means, double omega);

// s_amp = s + (g-1) sign(s) max(|s|-tau, 0)^gamma
std::vector<double> amplify_signal(std::span<const double> signal, const AmplifyConfig& cfg);
double amplify_one(double s, const AmplifyConfig& cfg);

// q = q_min + (1-q_min) c^nu; s_gate = q s
std::vector<double> quality_gate(std::span<const double> signal,
                                 std::span<const double> confidence, const GateConfig& cfg);

// Default confidence: |s| rank-normalized over the trailing window.
std::vector<double> trailing_rank_confidence(std::span<const double> signal, int window);

// Q_j from 1-day, h-day, and regime-conditional |corr| with forward returns;
// w_j = (1-a) + a clip(Q_j / (median(Q>0) + eps), 0.4, 2.5).
std::vector<double> feature_quality_weights(const Matrix& features,
                                            std::span<const double> returns,
                                            std::span<const Regime> regimes,
                                            const FeatureQualityConfig& cfg);

} // namespace popfolio
