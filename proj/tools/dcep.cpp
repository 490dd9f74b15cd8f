#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "dcep/mpc.hpp"
#include "dcep/report.hpp"
#include "dcep/rl.hpp"

namespace fs = std::filesystem;
using namespace dcep;

namespace {

struct CommonOpts {
    std::string config_path;
    KeyValueFile kv;

    void load() {
        if (!config_path.empty()) kv = KeyValueFile::load(config_path);
    }
    PlantParams params() const { return PlantParams::from_config(kv); }
};

Scenario load_or_fail(const std::string& path, const PlantParams& p, int tau) {
    return Scenario::load_csv(path, p.t_s, tau);
}

int run_synth(const std::string& out, std::uint64_t seed, int days, const std::string& profile) {
    Scenario sc = Scenario::synth(seed, days, profile);
    sc.save_csv(out);
    std::cout << "wrote " << out << " (" << sc.size() << " steps)\n";
    return 0;
}

int run_simulate(CommonOpts& opts, const std::string& controller, const std::string& scenario_path,
                 const std::string& theta_path, const std::string& out_dir, int t_plan, int window,
                 int replan) {
    PlantParams p = opts.params();
    BaselineConfig bc = BaselineConfig::from_config(opts.kv);
    Scenario sc = load_or_fail(scenario_path, p, bc.tau);
    PlantState x0;

    std::unique_ptr<Controller> ctl;
    if (controller == "baseline") {
        ctl = std::make_unique<BaselineController>(bc, p);
    } else if (controller == "rl") {
        if (theta_path.empty()) throw std::runtime_error("--theta is required for the rl controller");
        Eigen::VectorXd theta = load_theta_csv(theta_path);
        ctl = std::make_unique<RlController>(theta, BasisSpec::standard(), p);
    } else if (controller == "mpc") {
        MpcConfig mc = MpcConfig::from_config(opts.kv);
        if (t_plan > 0) mc.T_plan = t_plan;
        if (window > 0) mc.window = window;
        if (replan > 0) mc.replan_interval = replan;
        mc.validate();
        ctl = std::make_unique<MpcController>(mc, p);
    } else {
        throw std::runtime_error("unknown controller: " + controller);
    }

    RunReport rep = simulate(*ctl, sc, x0, p);
    fs::create_directories(out_dir);
    save_trajectory_csv(rep, out_dir + "/trajectory_" + controller + ".csv");
    write_comparison_csv({rep}, out_dir + "/summary_" + controller + ".csv");
    std::cout << controller << ": cost $" << rep.total_cost << ", e_rmse " << rep.e_rmse
              << " kW, switches " << rep.n_switch << ", mean compute " << rep.timing_mean_s
              << " s\n";
    return 0;
}

int run_train(CommonOpts& opts, const std::string& scenario_path, const std::string& eval_path,
              const std::string& out_dir, int n_pol, long seed) {
    PlantParams p = opts.params();
    BaselineConfig bc = BaselineConfig::from_config(opts.kv);
    TrainingConfig tc = TrainingConfig::from_config(opts.kv);
    if (n_pol > 0) tc.N_pol = n_pol;
    if (seed >= 0) tc.seed = static_cast<std::uint64_t>(seed);

    Scenario sc = scenario_path.empty() ? Scenario::synth(tc.seed + 100, 3, "week")
                                        : load_or_fail(scenario_path, p, bc.tau);
    Scenario eval_sc = eval_path.empty() ? Scenario::synth(tc.seed + 200, 1, "week")
                                         : load_or_fail(eval_path, p, bc.tau);

    BasisSpec spec = BasisSpec::standard();
    PlantState x0;
    TrainResult res = train(sc, x0, p, spec, tc, bc);

    fs::create_directories(out_dir);
    spec.save(out_dir + "/basis.csv");
    for (size_t j = 0; j < res.thetas.size(); ++j)
        save_theta_csv(res.thetas[j], out_dir + "/theta_" + std::to_string(j) + ".csv");
    {
        std::ofstream log(out_dir + "/training_log.csv");
        log << "j,theta_delta,rollout_cost\n";
        log.precision(12);
        for (size_t j = 0; j < res.delta_norm.size(); ++j)
            log << j << ',' << res.delta_norm[j] << ',' << res.rollout_cost[j] << '\n';
    }
    std::vector<double> costs;
    int best = select_best_policy(res.thetas, eval_sc, x0, p, spec, tc.kappa,
                                  greedy_solver_config(), default_step_solver(), &costs);
    save_theta_csv(res.thetas[best], out_dir + "/theta_best.csv");
    {
        std::ofstream f(out_dir + "/selection.csv");
        f << "j,eval_stage_cost\n";
        f.precision(12);
        for (size_t j = 0; j < costs.size(); ++j) f << j << ',' << costs[j] << '\n';
        f << "# best," << best << '\n';
    }
    std::cout << "trained " << tc.N_pol << " iterations; best policy is iterate " << best
              << " (written to theta_best.csv)\n";
    return 0;
}

int run_mpc_plan(CommonOpts& opts, const std::string& scenario_path, const std::string& out,
                 int horizon, int window, int start) {
    PlantParams p = opts.params();
    MpcConfig mc = MpcConfig::from_config(opts.kv);
    if (horizon > 0) mc.T_plan = horizon;
    if (window > 0) mc.window = window;
    mc.validate();
    Scenario sc = load_or_fail(scenario_path, p, 24);
    HorizonForecast fc = forecast_slice(sc, start, mc.T_plan);
    PlantState x0;
    HorizonPlan plan = plan_horizon(x0, fc, mc, p);
    save_plan_csv(plan, out);
    std::cout << "plan written to " << out << " (relaxed objective " << plan.relaxed_objective
              << ", final " << plan.final_objective << ", feasible " << plan.feasible << ")\n";
    return 0;
}

int run_report(const std::vector<std::string>& run_specs, const std::string& out_dir) {
    std::vector<RunReport> runs;
    for (const auto& spec : run_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--run expects name=trajectory.csv, got " + spec);
        runs.push_back(load_trajectory_csv(spec.substr(eq + 1), spec.substr(0, eq)));
    }
    fs::create_directories(out_dir);
    write_report(runs, out_dir);
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"District cooling plant simulator and controller benchmark"};
    app.require_subcommand(1);

    CommonOpts opts;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic scenario CSV");
    std::string synth_out = "scenario.csv", synth_profile = "week";
    std::uint64_t synth_seed = 7;
    int synth_days = 7;
    synth->add_option("--out", synth_out);
    synth->add_option("--seed", synth_seed);
    synth->add_option("--days", synth_days);
    synth->add_option("--profile", synth_profile);

    // simulate
    auto* sim = app.add_subcommand("simulate", "closed-loop run of one controller");
    std::string sim_ctl = "baseline", sim_scenario, sim_theta, sim_out = "out";
    int sim_tplan = 0, sim_window = 0, sim_replan = 0;
    sim->add_option("--controller", sim_ctl)->check(CLI::IsMember({"baseline", "rl", "mpc"}));
    sim->add_option("--scenario", sim_scenario)->required();
    sim->add_option("--theta", sim_theta);
    sim->add_option("--out-dir", sim_out);
    sim->add_option("--t-plan", sim_tplan);
    sim->add_option("--window", sim_window);
    sim->add_option("--replan", sim_replan);
    sim->add_option("--config", opts.config_path);

    // train
    auto* tr = app.add_subcommand("train", "policy iteration on a training scenario");
    std::string tr_scenario, tr_eval, tr_out = "train_out";
    int tr_npol = 0;
    long tr_seed = -1;
    tr->add_option("--scenario", tr_scenario);
    tr->add_option("--eval-scenario", tr_eval);
    tr->add_option("--out-dir", tr_out);
    tr->add_option("--n-pol", tr_npol);
    tr->add_option("--seed", tr_seed);
    tr->add_option("--config", opts.config_path);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "closed-loop evaluation of one theta file");
    std::string ev_theta, ev_scenario, ev_out = "out";
    ev->add_option("--theta", ev_theta)->required();
    ev->add_option("--scenario", ev_scenario)->required();
    ev->add_option("--out-dir", ev_out);
    ev->add_option("--config", opts.config_path);

    // mpc plan dump
    auto* mp = app.add_subcommand("mpc", "solve one horizon plan and dump it");
    std::string mp_scenario, mp_out = "plan.csv";
    int mp_horizon = 0, mp_window = 0, mp_start = 0;
    mp->add_option("--scenario", mp_scenario)->required();
    mp->add_option("--out", mp_out);
    mp->add_option("--horizon", mp_horizon);
    mp->add_option("--window", mp_window);
    mp->add_option("--start-step", mp_start);
    mp->add_option("--config", opts.config_path);

    // report
    auto* rp = app.add_subcommand("report", "comparison table and plots from trajectories");
    std::vector<std::string> rp_runs;
    std::string rp_out = "report";
    rp->add_option("--run", rp_runs)->required();
    rp->add_option("--out-dir", rp_out);

    CLI11_PARSE(app, argc, argv);

    try {
        opts.load();
        if (*synth) return run_synth(synth_out, synth_seed, synth_days, synth_profile);
        if (*sim)
            return run_simulate(opts, sim_ctl, sim_scenario, sim_theta, sim_out, sim_tplan,
                                sim_window, sim_replan);
        if (*tr) return run_train(opts, tr_scenario, tr_eval, tr_out, tr_npol, tr_seed);
        if (*ev) return run_simulate(opts, "rl", ev_scenario, ev_theta, ev_out, 0, 0, 0);
        if (*mp) return run_mpc_plan(opts, mp_scenario, mp_out, mp_horizon, mp_window, mp_start);
        if (*rp) return run_report(rp_runs, rp_out);
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", e.what()}, {"type", typeid(e).name()}};
        std::cerr << err.dump() << std::endl;
        return 1;
    }
    return 0;
}
