#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dcep {

/// Exogenous inputs for a closed-loop run: uniformly spaced rows of wet-bulb
/// temperature, cooling load reference and electricity price, plus the derived
/// backward moving average of the price.
///
/// CSV schema (UTF-8, '.' decimal, header row, comma separated):
///   timestamp_s,T_oawb_C,q_L_ref_kW,price_usd_per_kWh
struct Scenario {
    double t_s = 600.0;
    int tau = 24;  // price moving-average window, steps
    std::vector<double> t;  // seconds from start
    std::vector<double> T_oawb;
    std::vector<double> q_L_ref;
    std::vector<double> rho;
    std::vector<double> rho_bar;  // derived

    int size() const { return static_cast<int>(t.size()); }

    /// Uniform spacing, positive prices, length >= tau.
    void validate() const;

    /// Backward mean over the last tau samples; while fewer than tau samples
    /// exist, the mean of everything seen so far.
    void recompute_rho_bar();

    static Scenario load_csv(const std::string& path, double t_s = 600.0, int tau = 24);
    void save_csv(const std::string& path) const;

    /// Deterministic synthetic profile: diurnal load around a 1313 kW mean,
    /// tropical wet-bulb swing, and a weekday two-peak price shape, all with
    /// smooth seeded noise. profile is "week" (weekday/weekend modulation) or
    /// "flat" (every day alike).
    static Scenario synth(std::uint64_t seed, int days, const std::string& profile = "week",
                          double t_s = 600.0, int tau = 24);
};

}  // namespace dcep
