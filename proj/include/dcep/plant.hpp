#pragma once

#include <Eigen/Core>
#include <array>

#include "dcep/common.hpp"
#include "dcep/nlp.hpp"
#include "dcep/params.hpp"

namespace dcep {

/// Physical plant state: loop temperatures plus the warm/cold tank fractions.
/// The two fractions are stored redundantly and always sum to one.
struct PlantState {
    double T_lwr = 12.5;   // load water return, degC
    double S_tww = 0.5;    // warm tank fraction
    double S_twc = 0.5;    // cold tank fraction
    double T_twc = 7.0;    // cold tank temperature
    double T_tww = 13.0;   // warm tank temperature
    double T_chws = 7.0;   // chilled water supply
    double T_cwr = 32.0;   // cooling water return (condenser outlet)
    double T_cws = 29.0;   // cooling water supply (tower outlet)

    PlantState() = default;
    /// S_tww is derived as 1 - S_twc.
    PlantState(double T_lwr_, double S_twc_, double T_twc_, double T_tww_, double T_chws_,
               double T_cwr_, double T_cws_);

    void validate(const PlantParams& p) const;  // throws std::invalid_argument

    Eigen::Matrix<double, 8, 1> to_vector() const;
    static PlantState from_vector(const Eigen::Matrix<double, 8, 1>& v);
};

/// Supervisory command: four continuous flowrates plus the active chiller
/// count. m_tw > 0 charges the tank, m_tw < 0 discharges it.
struct ControlInput {
    double m_lw = 60.0;
    double m_tw = 0.0;
    int n_ch = 2;
    double m_cw = 160.0;
    double m_oa = 4.0;

    void validate(const PlantParams& p) const;
};

struct Disturbance {
    double T_oawb = 26.0;    // ambient wet bulb, degC
    double q_L_ref = 1313.0;  // required cooling load, kW

    void validate() const;
};

struct PlantOutputs {
    double q_L = 0, q_ch = 0, q_ct = 0, q_cond = 0;
    double P_ch = 0, P_chw_pump = 0, P_cw_pump = 0, P_ct = 0, P_tot = 0;
    double c_E = 0;  // filled by the harness once a price is known
};

/// State-dependent admissible bounds for the TES flow command: the commanded
/// charge/discharge may not push a tank fraction outside [S_min, S_max].
struct InputBox {
    double m_lw_lo, m_lw_hi;
    double m_tw_lo, m_tw_hi;
    double m_cw_lo, m_cw_hi;
    double m_oa_lo, m_oa_hi;
};
InputBox admissible_input_box(const PlantState& x, const PlantParams& p);

/// Clamp a command into the admissible box and raise n_ch to whatever the
/// bypass valve needs (n_ch*m_indv >= m_lw + m_tw); with every chiller off the
/// supply flow is forced to zero by pinning m_tw = -m_lw.
ControlInput repair_input(const ControlInput& u, const PlantState& x, const PlantParams& p);

// ---------------------------------------------------------------------------
// Electric power models
// ---------------------------------------------------------------------------

/// Chiller electric power. Temperatures are handed in degC and converted to
/// kelvin internally; the result is clamped below at zero.
double chiller_power(double T_cws_C, double T_chws_C, double q_ch, const PlantParams& p);

/// Pump power a1*ln(1 + a2*m) + a3*m + a4, clamped below at zero.
double pump_power(double m, const std::array<double, 4>& coeffs);

/// Tower fan power lambda * m_oa^3.
double fan_power(double m_oa, double lambda);

/// Evaporative capacity of the cooling tower; zero when the return water is
/// no warmer than the ambient wet bulb, and zero at zero airflow.
double tower_capacity(double m_cw, double m_oa, double T_cwr, double T_oawb,
                      const PlantParams& p);

// ---------------------------------------------------------------------------
// One-step constraint set
// ---------------------------------------------------------------------------

/// Candidate decision vector for one plant step:
/// [x_{k+1} (8 fields in state order), q_L, q_ch, q_ct].
inline constexpr int kStepDecisionSize = 11;

// Equality residual rows, in the documented order.
enum EqRow : int {
    kEqLoadSupplyMix = 0,   // supply temperature mixing (definition row)
    kEqLoadReturn = 1,      // load water return heat balance
    kEqFracCold = 2,        // cold tank fraction update
    kEqFracWarm = 3,        // warm tank fraction update
    kEqTankWarm = 4,        // warm tank temperature
    kEqTankCold = 5,        // cold tank temperature
    kEqSupplyMix = 6,       // supply water temperature/flow (definition row)
    kEqReturnMix = 7,       // return water mixing (definition row)
    kEqBypass = 8,          // bypass flow balance (definition row)
    kEqChwReturnMix = 9,    // chiller return mixing (definition row)
    kEqEvaporator = 10,     // evaporator heat balance
    kEqCondenserLoad = 11,  // condenser thermal load (definition row)
    kEqCondenserRise = 12,  // cooling water return temperature rise
    kEqTowerReject = 13,    // tower heat rejection
    kEqRowCount = 14,
};

// Inequality slack rows (>= 0 when satisfied), in the documented order.
enum IneqRow : int {
    kIneqLoadLo = 0,        // q_L >= 0
    kIneqLoadHi = 1,        // q_L <= q_L_ref
    kIneqReturnTemp = 2,    // T_lwr' <= T_lwr_max
    kIneqChillerLo = 3,     // q_ch >= 0
    kIneqChillerHi = 4,     // q_ch <= n_ch*q_ch_indv
    kIneqChwSupplyLo = 5,   // T_chws' >= T_chws_min
    kIneqChwSupplyHi = 6,   // T_chws' <= T_chws_max
    kIneqBypass = 7,        // m_bp >= 0
    kIneqCondReturn = 8,    // T_cwr' <= T_cwr_max
    kIneqApproach = 9,      // T_cws' >= T_oawb + approach
    kIneqTowerLo = 10,      // q_ct >= 0
    kIneqTowerHi = 11,      // q_ct <= tower capacity
    kIneqRowCount = 12,
};

struct ConstraintEval {
    Eigen::VectorXd eq;    // kEqRowCount residuals, zero when satisfied
    Eigen::VectorXd ineq;  // kIneqRowCount slacks, nonnegative when satisfied
};

/// Evaluates every model equation and capacity constraint at a candidate z.
/// Throws StructuralInfeasibility when n_ch == 0 and supply flow is demanded.
ConstraintEval eval_constraints(const Eigen::VectorXd& z, const PlantState& x,
                                const ControlInput& u, const Disturbance& w,
                                const PlantParams& p);

// ---------------------------------------------------------------------------
// Plant step
// ---------------------------------------------------------------------------

struct PlantStepResult {
    PlantState next;
    PlantOutputs outputs;
    SolveReport report;
    /// True when the step either met the load reference (1e-3 relative) or a
    /// capacity bound provably capped it.
    bool load_check_ok = true;
};

/// Raised when the step projection fails to converge; carries the report so
/// callers can inspect the final residual norms.
class PlantStepFailure : public std::runtime_error {
public:
    PlantStepFailure(const std::string& what, SolveReport rep)
        : std::runtime_error(what), report(std::move(rep)) {}
    SolveReport report;
};

/// Solver settings used for the one-step projection (tighter than the general
/// defaults so per-step heat balances close to ~1e-8).
NlpConfig default_step_solver();

/// Advances the plant one step by projecting onto the model equations and
/// capacity limits, preferring load tracking over setpoint comfort.
PlantStepResult plant_step(const PlantState& x, const ControlInput& u, const Disturbance& w,
                           const PlantParams& p, const NlpConfig& solver = default_step_solver());

/// Electricity cost of one step at price rho ($/kWh), P_tot in kW, t_s in s.
inline double electricity_cost(double P_tot, double rho, double t_s) {
    return rho * P_tot * (t_s / 3600.0);
}

}  // namespace dcep
