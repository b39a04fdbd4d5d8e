#pragma once

#include <string>

#include "popfolio/walkforward.hpp"

namespace popfolio {

enum class BaselineKind { BuyAndHold, PanelRidge, DqnLite, RandomSignal, ZeroSignal };

BaselineKind baseline_kind_from_name(const std::string& name);
const char* baseline_kind_name(BaselineKind k);

struct BaselineSpec {
    BaselineKind kind = BaselineKind::BuyAndHold;
    double ridge_lambda = 1.0; // panel_ridge
    int dqn_episodes = 24;     // dqn_lite
};

// Reference strategies run through the identical window/execution/metric
// stack as the engine.
class BaselineDriver : public WindowDriver {
public:
    BaselineDriver(BaselineSpec spec, TrainingConfig cfg);
    WindowOutcome run(WindowView& view, std::uint64_t seed) override;

private:
    BaselineSpec spec_;
    TrainingConfig cfg_;
};

} // namespace popfolio
