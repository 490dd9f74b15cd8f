#pragma once

#include <array>
#include <string>

#include "dcep/config_io.hpp"

namespace dcep {

/// Physical and empirical constants of the plant. Units are SI throughout:
/// temperatures degC, flowrates kg/s, thermal/electric rates kW, specific heat
/// kJ/(kg K), time s. Defaults describe a seven-chiller plant with a
/// stratified-tank storage sized for roughly nine hours of full-rate charging,
/// tuned so chiller COP is about 5.5 and whole-plant COP sits in the 4-6 band
/// at nominal conditions. Every field can be overridden from a config file.
struct PlantParams {
    // Water and storage
    double C_pw = 4.186;     // specific heat of water
    double M_TES = 1.0e6;    // total tank water mass, kg
    double t_s = 600.0;      // control/simulation timestep, s

    // Chillers (identical units)
    double m_indv = 25.0;    // evaporator flow per active chiller, kg/s
    double q_ch_indv = 600.0;  // cooling capacity per chiller, kW
    int n_ch_max = 7;

    // Input box
    double m_lw_min = 20.0, m_lw_max = 350.0;
    double m_tw_min = -30.0, m_tw_max = 30.0;
    double m_cw_min = 20.0, m_cw_max = 300.0;
    double m_oa_min = 0.5, m_oa_max = 10.0;

    // State bounds
    double T_lwr_max = 16.0;
    double T_chws_min = 4.0, T_chws_max = 12.0;
    double T_cwr_max = 38.0;
    double S_min = 0.05, S_max = 0.95;
    double approach_min = 1.0;  // tower supply must stay this far above wet bulb

    // Setpoints
    double T_chws_set = 7.0;
    double T_cws_set = 29.0;

    // Projection weights (load tracking dominates setpoint comfort)
    double r1 = 1.0e3, r2 = 1.0, r3 = 1.0;

    // Chiller electric power: (Tcws/Tchws - 1)*q_ch - beta1 + beta2*Tcws - beta3*Tcws/Tchws,
    // temperatures in kelvin inside the ratio.
    double beta1 = 97.0, beta2 = 1.2, beta3 = 120.0;
    double eta1 = 0.95;  // fraction of compressor power rejected at the condenser

    // Pump power a1*ln(1+a2*m) + a3*m + a4
    std::array<double, 4> alpha = {8.0, 0.05, 0.08, 0.0};   // chilled-water pumps
    std::array<double, 4> gamma = {10.0, 0.04, 0.10, 0.0};  // cooling-water pumps

    // Tower fan power lambda*m_oa^3
    double lambda = 0.35;

    // Tower capacity c1*m_cw^c3 / (1 + c2*(m_cw/m_oa)^c3) * (T_cwr - T_oawb)
    double c1 = 2.6, c2 = 0.01, c3 = 1.0;

    void validate() const;

    static PlantParams from_config(const KeyValueFile& kv);
    void to_config(KeyValueFile& kv) const;

    static PlantParams load(const std::string& path);
    void save(const std::string& path) const;
};

}  // namespace dcep
