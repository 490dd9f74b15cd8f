#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dcep/simulate.hpp"

namespace dcep {

struct MpcConfig {
    int T_plan = 144;        // planning horizon, steps
    int window = 12;         // filter window (even, >= 2)
    int replan_interval = 1; // steps between plan refreshes
    double r1 = 1.0e3, r2 = 1.0, r3 = 1.0;
    NlpConfig solver = horizon_solver_defaults();

    void validate() const;
    static MpcConfig from_config(const KeyValueFile& kv);
    void to_config(KeyValueFile& kv) const;

    static NlpConfig horizon_solver_defaults();
};

/// Windowed-mean rounding of a (real or integer) signal to an integer signal:
/// growing head windows, centered middle windows of w+1 samples, shrinking
/// tail windows, each mean rounded up. Windows are clipped to the signal; w
/// must be even and n >= w.
std::vector<int> moving_average_round(const std::vector<double>& x, int w);

/// Freezes every index whose trailing (w+1)-sample window is switch-free, then
/// replaces each maximal unfrozen run by the rounded-up mean of the original
/// entries in that run.
std::vector<int> reduce_switching(const std::vector<int>& x, int w);

/// Number of adjacent pairs that differ.
long count_switches(const std::vector<int>& x);

struct HorizonForecast {
    std::vector<double> T_oawb, q_L_ref, rho;
    int size() const { return static_cast<int>(rho.size()); }
};

/// Slice of a scenario starting at step k, padded by holding the last row.
HorizonForecast forecast_slice(const Scenario& sc, int k, int length);

struct RelaxedSolution {
    Eigen::VectorXd vars;       // scaled stacked decision vector
    std::vector<int> tw_sign;   // +1 charge branch, -1 discharge branch per step
    double objective = 0.0;
    SolveReport report;
    std::vector<double> n_ch_trace;
};

class MpcSolveFailure : public std::runtime_error {
public:
    MpcSolveFailure(const std::string& what, SolveReport rep)
        : std::runtime_error(what), report(std::move(rep)) {}
    SolveReport report;
};

struct HorizonPlan {
    std::vector<ControlInput> inputs;
    std::vector<PlantState> states;    // predicted state after each step
    std::vector<PlantOutputs> outputs; // predicted rates and powers
    std::vector<double> n_ch_relaxed;
    std::vector<int> n_ch_fixed;
    double relaxed_objective = 0.0;
    double final_objective = 0.0;
    bool feasible = false;
    double eq_residual_norm = 0.0;
    double tracking_gap = 0.0;  // worst relative load shortfall over the plan
};

/// Step 1: chiller count relaxed to a continuous variable, full-horizon NLP.
RelaxedSolution solve_relaxed_horizon(const PlantState& x0, const HorizonForecast& fc,
                                      const MpcConfig& cfg, const PlantParams& p,
                                      const RelaxedSolution* warm = nullptr);

/// Step 3: the same horizon problem with the chiller counts pinned.
HorizonPlan resolve_fixed_integers(const PlantState& x0, const HorizonForecast& fc,
                                   const std::vector<int>& n_ch_fixed, const MpcConfig& cfg,
                                   const PlantParams& p, const RelaxedSolution* warm = nullptr);

/// Full relax -> round -> re-solve pipeline.
HorizonPlan plan_horizon(const PlantState& x0, const HorizonForecast& fc, const MpcConfig& cfg,
                         const PlantParams& p, const RelaxedSolution* warm = nullptr,
                         RelaxedSolution* relaxed_out = nullptr);

void save_plan_csv(const HorizonPlan& plan, const std::string& path);

class MpcController : public Controller {
public:
    MpcController(MpcConfig cfg, PlantParams params) : cfg_(cfg), params_(std::move(params)) {
        cfg_.validate();
    }
    std::string name() const override { return "mpc"; }
    ControlInput decide(const PlantState& x, const Scenario& sc, int k) override;
    const HorizonPlan& last_plan() const { return plan_; }

private:
    MpcConfig cfg_;
    PlantParams params_;
    HorizonPlan plan_;
    std::optional<RelaxedSolution> warm_;
    int plan_origin_ = -1;
};

}  // namespace dcep
