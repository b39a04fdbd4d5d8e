#include "popfolio/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "popfolio/textio.hpp"

namespace popfolio {

BaselineKind baseline_kind_from_name(const std::string& name) {
    if (name == "buy_and_hold") return BaselineKind::BuyAndHold;
    if (name == "panel_ridge") return BaselineKind::PanelRidge;
    if (name == "dqn_lite") return BaselineKind::DqnLite;
    if (name == "random_signal") return BaselineKind::RandomSignal;
    if (name == "zero_signal") return BaselineKind::ZeroSignal;
    throw ConfigError("unknown baseline kind: " + name);
}

const char* baseline_kind_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::BuyAndHold: return "buy_and_hold";
        case BaselineKind::PanelRidge: return "panel_ridge";
        case BaselineKind::DqnLite: return "dqn_lite";
        case BaselineKind::RandomSignal: return "random_signal";
        case BaselineKind::ZeroSignal: return "zero_signal";
    }
    return "?";
}

BaselineDriver::BaselineDriver(BaselineSpec spec, TrainingConfig cfg)
    : spec_(spec), cfg_(std::move(cfg)) {}

namespace {

// Hash-based per-date uniform draw so a date's value never depends on the
// window layout or on how much trailing data exists.
double date_uniform(std::uint64_t seed, const std::string& date) {
    const std::uint64_t h = mix_seed(seed ^ fnv1a64(date.data(), date.size()));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double signal_floor(const SignalBounds& b) { return b.long_only ? b.lo : 0.0; }

} // namespace

WindowOutcome BaselineDriver::run(WindowView& view, std::uint64_t seed) {
    const WindowRange r = view.range();
    const std::size_t fit_len = r.fit_end - r.start;
    const SignalBounds bounds = cfg_.bounds;
    const BaselineSpec spec = spec_;
    const TrainingConfig tc = cfg_;

    WindowOutcome out;
    out.checkpoint_id = baseline_kind_name(spec.kind);

    switch (spec.kind) {
        case BaselineKind::BuyAndHold: {
            const double level = std::clamp(1.0, bounds.lo, bounds.hi);
            out.make_signal = [level, r](const WindowView&, std::size_t upto) {
                return std::vector<double>(upto - r.start, level);
            };
            break;
        }
        case BaselineKind::ZeroSignal: {
            const double level = signal_floor(bounds);
            out.make_signal = [level, r](const WindowView&, std::size_t upto) {
                return std::vector<double>(upto - r.start, level);
            };
            break;
        }
        case BaselineKind::RandomSignal: {
            const std::uint64_t s = derive_seed(seed, 0x72616e64ULL); // "rand"
            out.make_signal = [s, bounds, r](const WindowView& v, std::size_t upto) {
                std::vector<double> sig(upto - r.start);
                for (std::size_t t = 0; t < sig.size(); ++t)
                    sig[t] = bounds.lo +
                             (bounds.hi - bounds.lo) * date_uniform(s, v.date(r.start + t));
                return sig;
            };
            break;
        }
        case BaselineKind::PanelRidge: {
            // Ridge of next-day market return on features, fit split only.
            const std::size_t d = view.dim();
            Matrix x(fit_len - 1, d);
            std::vector<double> y(fit_len - 1);
            for (std::size_t t = 0; t + 1 < fit_len; ++t) {
                const auto row = view.features_at(r.start + t);
                for (std::size_t j = 0; j < d; ++j) x(t, j) = row[j];
                y[t] = view.market_return(r.start + t + 1);
            }
            const RidgeFit fit = ridge_fit(x, y, spec.ridge_lambda);

            // Scale so the 90th percentile fit-split |prediction| maps to hi.
            std::vector<double> absp(fit_len - 1);
            for (std::size_t t = 0; t + 1 < fit_len; ++t)
                absp[t] = std::abs(fit.intercept + dot(std::span<const double>(fit.weights),
                                                       x.row(t)));
            std::sort(absp.begin(), absp.end());
            const double q90 = absp[static_cast<std::size_t>(0.9 * (absp.size() - 1))];
            const double gain = q90 > 1e-12 ? bounds.hi / q90 : 0.0;

            out.make_signal = [fit, gain, bounds, r](const WindowView& v, std::size_t upto) {
                std::vector<double> sig(upto - r.start);
                for (std::size_t t = 0; t < sig.size(); ++t) {
                    const double pred =
                        fit.intercept + dot(std::span<const double>(fit.weights),
                                            v.features_at(r.start + t));
                    const double raw = gain * pred;
                    sig[t] = bounds.long_only ? std::clamp(raw, bounds.lo, bounds.hi)
                                              : std::clamp(raw, -bounds.hi, bounds.hi);
                }
                return sig;
            };
            break;
        }
        case BaselineKind::DqnLite: {
            // The league's tabular Q-learner run standalone against a flat
            // opponent, distilled into a policy for the whole window.
            Matrix fit_feats(fit_len, view.dim());
            std::vector<Regime> regimes(fit_len);
            std::vector<double> mkt(fit_len), sg(fit_len);
            for (std::size_t t = 0; t < fit_len; ++t) {
                const auto row = view.features_at(r.start + t);
                for (std::size_t j = 0; j < view.dim(); ++j) fit_feats(t, j) = row[j];
                regimes[t] = view.regime(r.start + t);
                mkt[t] = view.market_return(r.start + t);
                sg[t] = view.sigma(r.start + t);
            }
            const std::vector<double> opp(fit_len, 0.0);
            BRTrainingData data;
            data.features = &fit_feats;
            data.regimes = regimes;
            data.returns = mkt;
            data.sigma = sg;
            data.opponent_signal = opp;

            BRConfig br = tc.br;
            br.rl.episodes = spec.dqn_episodes;
            Rng rng(derive_seed(seed, 0x64716eULL)); // "dqn"
            const AgentPolicy tmpl = init_agent(view.dim(), false, "dqn_template", rng);
            const auto rl = train_rl_br(data, br, tc.exec, bounds, tmpl,
                                        derive_seed(seed, 0x64716eULL, 1), "dqn_lite");
            const AgentPolicy agent = rl.agent;
            out.diagnostics["br_episode_rewards"] = rl.episode_rewards;

            out.make_signal = [agent, bounds, r](const WindowView& v, std::size_t upto) {
                std::vector<double> sig(upto - r.start);
                for (std::size_t t = 0; t < sig.size(); ++t)
                    sig[t] = agent_signal_at(agent, v.features_at(r.start + t),
                                             v.regime(r.start + t), bounds);
                return sig;
            };
            break;
        }
    }

    // Validation selection score, for schema parity with the engine.
    {
        const std::size_t val_len = r.val_end - r.start;
        const auto sig = out.make_signal(view, r.val_end);
        std::vector<double> mkt(val_len), ben(val_len), sg(val_len);
        for (std::size_t t = 0; t < val_len; ++t) {
            mkt[t] = view.market_return(r.start + t);
            ben[t] = view.bench_return(r.start + t);
            sg[t] = view.sigma(r.start + t);
        }
        const std::size_t fit_off = r.fit_end - r.start;
        const std::span<const double> vsig(sig.data() + fit_off, val_len - fit_off);
        const std::span<const double> vmkt(mkt.data() + fit_off, val_len - fit_off);
        const std::span<const double> vben(ben.data() + fit_off, val_len - fit_off);
        const std::span<const double> vsg(sg.data() + fit_off, val_len - fit_off);
        const PnLSeries pnl = run_execution(vsig, vmkt, vsg, tc.exec);
        const MetricSet m = compute_metrics(pnl.pnl, vben, tc.utility.alpha_cvar);
        const double viol = constraint_violation(pnl.pnl, vben, tc.utility);
        out.validation_score = selection_score(m, viol, tc.selection);
    }
    return out;
}

} // namespace popfolio
