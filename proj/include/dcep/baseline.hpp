#pragma once

#include "dcep/config_io.hpp"
#include "dcep/params.hpp"
#include "dcep/plant.hpp"

namespace dcep {

/// Tuning knobs for the rule-based controller: a price-reactive TES heuristic
/// on the chilled-water loop and bound-restoring rules on the cooling-water
/// loop.
struct BaselineConfig {
    double price_dev_threshold = 0.05;  // fires the TES rule at +/-5% off the average price
    double tw_step = 10.0;              // kg/s per rule firing
    double lw_step = 10.0;
    double cw_step = 20.0;
    double oa_step = 0.05;
    double tower_overshoot = 1.1;       // accept capacity up to this factor above the need
    double eta_hat = 1.2;               // assumed q_cond/q_ch for the return-temperature rule
    int tau = 24;                       // price moving-average window, steps
    int rule_iter_cap = 1000;
    double T_cwr_deadband = 4.0;        // back off m_cw when the prediction has this much margin

    static BaselineConfig from_config(const KeyValueFile& kv);
    void to_config(KeyValueFile& kv) const;
};

/// Warm-start memory; single-owner, one instance per simulation.
struct BaselineState {
    ControlInput prev{};
    bool initialized = false;

    /// Call after the step when the applied command differs from the one this
    /// controller proposed (e.g. during exploration), so the warm start always
    /// reflects what actually ran.
    void note_applied(const ControlInput& u) {
        prev = u;
        initialized = true;
    }
};

/// One decision of the rule-based controller. Deterministic, never throws for
/// in-range arguments; the internal rule loops are hard-capped and raise a
/// DefectError if the cap is ever hit.
ControlInput baseline_step(const PlantState& x, const Disturbance& w, double rho, double rho_bar,
                           BaselineState& state, const BaselineConfig& cfg, const PlantParams& p);

}  // namespace dcep
