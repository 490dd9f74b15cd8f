#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dcep/baseline.hpp"
#include "dcep/params.hpp"
#include "dcep/plant.hpp"
#include "dcep/scenario.hpp"

namespace dcep {

/// Supervisory controller interface: one command per step, given the measured
/// plant state and the scenario row (controllers read only what a real
/// deployment could: current measurements, prices, and forecasts for MPC).
class Controller {
public:
    virtual ~Controller() = default;
    virtual std::string name() const = 0;
    virtual ControlInput decide(const PlantState& x, const Scenario& sc, int k) = 0;
};

class BaselineController : public Controller {
public:
    BaselineController(BaselineConfig cfg, PlantParams params)
        : cfg_(cfg), params_(std::move(params)) {}
    std::string name() const override { return "baseline"; }
    ControlInput decide(const PlantState& x, const Scenario& sc, int k) override;
    BaselineState& state() { return state_; }

private:
    BaselineConfig cfg_;
    PlantParams params_;
    BaselineState state_;
};

struct TrajectoryRow {
    int k = 0;
    PlantState x;        // state at the beginning of the step
    PlantOutputs out;    // realized rates, powers and cost of the step
    ControlInput u;
    double T_oawb = 0, q_L_ref = 0, rho = 0, rho_bar = 0;
    double decide_seconds = 0;
};

struct RunReport {
    std::string name;
    double total_cost = 0.0;   // sum of per-step electricity cost
    double e_rmse = 0.0;       // load-tracking RMSE, kW
    long n_switch = 0;         // summed magnitude of chiller count changes
    double timing_mean_s = 0.0, timing_std_s = 0.0;  // controller compute time
    int repaired_steps = 0;    // commands that needed clamping into the box
    int fallback_steps = 0;    // steps rescued by the rule-based fallback
    std::vector<TrajectoryRow> trajectory;
};

/// Runs the plant under a controller for the whole scenario. A command that
/// fails the step projection is retried once through the rule-based fallback;
/// a second failure propagates.
RunReport simulate(Controller& controller, const Scenario& sc, const PlantState& x0,
                   const PlantParams& params, const NlpConfig& step_solver = default_step_solver());

/// Trajectory CSV: k, the eight state fields, the ten output fields, then the
/// command, disturbances, prices and controller timing.
void save_trajectory_csv(const RunReport& report, const std::string& path);

long sum_abs_switches(const std::vector<int>& n_ch);

}  // namespace dcep
