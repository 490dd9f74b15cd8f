#include "dcep/simulate.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dcep {

ControlInput BaselineController::decide(const PlantState& x, const Scenario& sc, int k) {
    Disturbance w{sc.T_oawb[k], sc.q_L_ref[k]};
    return baseline_step(x, w, sc.rho[k], sc.rho_bar[k], state_, cfg_, params_);
}

long sum_abs_switches(const std::vector<int>& n_ch) {
    long s = 0;
    for (size_t k = 0; k + 1 < n_ch.size(); ++k) s += std::labs(n_ch[k + 1] - n_ch[k]);
    return s;
}

RunReport simulate(Controller& controller, const Scenario& sc, const PlantState& x0,
                   const PlantParams& params, const NlpConfig& step_solver) {
    sc.validate();
    RunReport rep;
    rep.name = controller.name();
    rep.trajectory.reserve(sc.size());

    BaselineConfig fb_cfg;
    fb_cfg.tau = sc.tau;
    BaselineState fb_state;

    PlantState x = x0;
    double sq_err_sum = 0.0;
    double t_sum = 0.0, t_sq_sum = 0.0;
    std::vector<int> n_trace;
    n_trace.reserve(sc.size());

    for (int k = 0; k < sc.size(); ++k) {
        Disturbance w{sc.T_oawb[k], sc.q_L_ref[k]};

        auto t0 = std::chrono::steady_clock::now();
        ControlInput u_raw = controller.decide(x, sc, k);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        ControlInput u = repair_input(u_raw, x, params);
        bool changed = u.n_ch != u_raw.n_ch || std::abs(u.m_lw - u_raw.m_lw) > 1e-9 ||
                       std::abs(u.m_tw - u_raw.m_tw) > 1e-9 ||
                       std::abs(u.m_cw - u_raw.m_cw) > 1e-9 ||
                       std::abs(u.m_oa - u_raw.m_oa) > 1e-9;
        if (changed) ++rep.repaired_steps;

        PlantStepResult step;
        try {
            step = plant_step(x, u, w, params, step_solver);
        } catch (const std::exception&) {
            // One rescue attempt through the rule-based controller.
            fb_state.note_applied(u);
            ControlInput u_fb =
                repair_input(baseline_step(x, w, sc.rho[k], sc.rho_bar[k], fb_state, fb_cfg, params),
                             x, params);
            step = plant_step(x, u_fb, w, params, step_solver);
            u = u_fb;
            ++rep.fallback_steps;
        }

        step.outputs.c_E = electricity_cost(step.outputs.P_tot, sc.rho[k], params.t_s);
        rep.total_cost += step.outputs.c_E;
        double err = sc.q_L_ref[k] - step.outputs.q_L;
        sq_err_sum += err * err;
        t_sum += secs;
        t_sq_sum += secs * secs;
        n_trace.push_back(u.n_ch);

        TrajectoryRow row;
        row.k = k;
        row.x = x;
        row.out = step.outputs;
        row.u = u;
        row.T_oawb = sc.T_oawb[k];
        row.q_L_ref = sc.q_L_ref[k];
        row.rho = sc.rho[k];
        row.rho_bar = sc.rho_bar[k];
        row.decide_seconds = secs;
        rep.trajectory.push_back(row);

        x = step.next;
    }

    int n = sc.size();
    rep.e_rmse = n > 1 ? std::sqrt(sq_err_sum / (n - 1)) : 0.0;
    rep.n_switch = sum_abs_switches(n_trace);
    rep.timing_mean_s = t_sum / n;
    double var = n > 1 ? (t_sq_sum - n * rep.timing_mean_s * rep.timing_mean_s) / (n - 1) : 0.0;
    rep.timing_std_s = std::sqrt(std::max(0.0, var));
    return rep;
}

void save_trajectory_csv(const RunReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write trajectory: " + path);
    f << "k,T_lwr,S_tww,S_twc,T_twc,T_tww,T_chws,T_cwr,T_cws,"
         "q_L,q_ch,q_ct,q_cond,P_ch,P_chw_pump,P_cw_pump,P_ct,P_tot,c_E,"
         "m_lw,m_tw,n_ch,m_cw,m_oa,T_oawb,q_L_ref,rho,rho_bar,decide_seconds\n";
    f.precision(12);
    for (const auto& r : report.trajectory) {
        const PlantState& x = r.x;
        const PlantOutputs& o = r.out;
        f << r.k << ',' << x.T_lwr << ',' << x.S_tww << ',' << x.S_twc << ',' << x.T_twc << ','
          << x.T_tww << ',' << x.T_chws << ',' << x.T_cwr << ',' << x.T_cws << ',' << o.q_L << ','
          << o.q_ch << ',' << o.q_ct << ',' << o.q_cond << ',' << o.P_ch << ',' << o.P_chw_pump
          << ',' << o.P_cw_pump << ',' << o.P_ct << ',' << o.P_tot << ',' << o.c_E << ','
          << r.u.m_lw << ',' << r.u.m_tw << ',' << r.u.n_ch << ',' << r.u.m_cw << ',' << r.u.m_oa
          << ',' << r.T_oawb << ',' << r.q_L_ref << ',' << r.rho << ',' << r.rho_bar << ','
          << r.decide_seconds << '\n';
    }
}

}  // namespace dcep
