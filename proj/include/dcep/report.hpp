#pragma once

#include <string>
#include <vector>

#include "dcep/simulate.hpp"

namespace dcep {

/// Reads back a trajectory CSV written by save_trajectory_csv and rebuilds the
/// run metrics from its rows.
RunReport load_trajectory_csv(const std::string& path, const std::string& name);

/// Comparison table: one row per run with cost, savings against the run named
/// "baseline" (when present), tracking RMSE, switch count and timing.
void write_comparison_csv(const std::vector<RunReport>& runs, const std::string& path);

/// Static SVG time-series: per-run power vs price, tank charge vs price,
/// chiller count vs price, and load tracking. Files land in out_dir.
void write_report(const std::vector<RunReport>& runs, const std::string& out_dir);

}  // namespace dcep
