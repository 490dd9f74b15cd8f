#include "dcep/baseline.hpp"

#include <algorithm>
#include <cmath>

namespace dcep {

BaselineConfig BaselineConfig::from_config(const KeyValueFile& kv) {
    BaselineConfig c;
    if (auto v = kv.get_double("baseline.price_dev_threshold")) c.price_dev_threshold = *v;
    if (auto v = kv.get_double("baseline.tw_step")) c.tw_step = *v;
    if (auto v = kv.get_double("baseline.lw_step")) c.lw_step = *v;
    if (auto v = kv.get_double("baseline.cw_step")) c.cw_step = *v;
    if (auto v = kv.get_double("baseline.oa_step")) c.oa_step = *v;
    if (auto v = kv.get_double("baseline.tower_overshoot")) c.tower_overshoot = *v;
    if (auto v = kv.get_double("baseline.eta_hat")) c.eta_hat = *v;
    if (auto v = kv.get_int("baseline.tau")) c.tau = static_cast<int>(*v);
    if (auto v = kv.get_int("baseline.rule_iter_cap")) c.rule_iter_cap = static_cast<int>(*v);
    if (auto v = kv.get_double("baseline.T_cwr_deadband")) c.T_cwr_deadband = *v;
    if (!(c.price_dev_threshold > 0 && c.price_dev_threshold < 1))
        throw std::invalid_argument("baseline.price_dev_threshold must be in (0,1)");
    for (double s : {c.tw_step, c.lw_step, c.cw_step, c.oa_step})
        if (!(s > 0)) throw std::invalid_argument("baseline increments must be positive");
    return c;
}

void BaselineConfig::to_config(KeyValueFile& kv) const {
    kv.set_double("baseline.price_dev_threshold", price_dev_threshold);
    kv.set_double("baseline.tw_step", tw_step);
    kv.set_double("baseline.lw_step", lw_step);
    kv.set_double("baseline.cw_step", cw_step);
    kv.set_double("baseline.oa_step", oa_step);
    kv.set_double("baseline.tower_overshoot", tower_overshoot);
    kv.set_double("baseline.eta_hat", eta_hat);
    kv.set_int("baseline.tau", tau);
    kv.set_int("baseline.rule_iter_cap", rule_iter_cap);
    kv.set_double("baseline.T_cwr_deadband", T_cwr_deadband);
}

namespace {

struct ChwPrediction {
    double T_lwr1, T_chws1, S_twc1;
};

// One-step-ahead estimate assuming no bypass flow and chillers at rated
// capacity (q_ch = n_ch * q_ch_indv).
ChwPrediction predict_chw(const PlantState& x, double m_lw, double m_tw, int n_ch,
                          const Disturbance& w, const PlantParams& p) {
    double T_sw = x.T_chws;
    double T_lws = T_sw + std::min(m_tw, 0.0) / m_lw * (T_sw - x.T_twc);
    ChwPrediction out;
    out.T_lwr1 = T_lws + w.q_L_ref / (p.C_pw * m_lw);
    out.S_twc1 = x.S_twc + p.t_s * m_tw / p.M_TES;
    double m_sw = std::max(m_lw + m_tw, 1e-6);
    double T_rw = m_tw > 0 ? x.T_lwr + m_tw / m_sw * (x.T_tww - x.T_lwr) : x.T_lwr;
    out.T_chws1 = n_ch >= 1 ? T_rw - n_ch * p.q_ch_indv / (p.C_pw * m_sw) : T_rw;
    return out;
}

}  // namespace

ControlInput baseline_step(const PlantState& x, const Disturbance& w, double rho, double rho_bar,
                           BaselineState& state, const BaselineConfig& cfg,
                           const PlantParams& p) {
    if (!state.initialized) {
        // Cold start: mid-box flows, chiller count sized to the current load.
        state.prev.m_lw = 0.5 * (p.m_lw_min + p.m_lw_max);
        state.prev.m_tw = 0.0;
        state.prev.m_cw = 0.5 * (p.m_cw_min + p.m_cw_max);
        state.prev.m_oa = 0.5 * (p.m_oa_min + p.m_oa_max);
        state.prev.n_ch =
            clamp(static_cast<int>(std::ceil(w.q_L_ref / p.q_ch_indv)), 0, p.n_ch_max);
        state.initialized = true;
    }

    InputBox box = admissible_input_box(x, p);
    ControlInput u = state.prev;
    u.m_lw = clamp(u.m_lw, box.m_lw_lo, box.m_lw_hi);
    u.m_tw = clamp(u.m_tw, box.m_tw_lo, box.m_tw_hi);
    u.m_cw = clamp(u.m_cw, box.m_cw_lo, box.m_cw_hi);
    u.m_oa = clamp(u.m_oa, box.m_oa_lo, box.m_oa_hi);
    u.n_ch = clamp(u.n_ch, 0, p.n_ch_max);

    // --- Chilled water loop -------------------------------------------------
    if (rho < (1.0 - cfg.price_dev_threshold) * rho_bar)
        u.m_tw += cfg.tw_step;  // cheap electricity: charge the tank
    else if (rho > (1.0 + cfg.price_dev_threshold) * rho_bar)
        u.m_tw -= cfg.tw_step;  // expensive: discharge
    u.m_tw = clamp(u.m_tw, box.m_tw_lo, box.m_tw_hi);

    int it = 0;
    for (; it < cfg.rule_iter_cap; ++it) {
        ChwPrediction pred = predict_chw(x, u.m_lw, u.m_tw, u.n_ch, w, p);
        bool ok = true;
        if (pred.T_lwr1 > p.T_lwr_max && u.m_lw < box.m_lw_hi) {
            u.m_lw = std::min(u.m_lw + cfg.lw_step, box.m_lw_hi);
            ok = false;
        }
        if (pred.S_twc1 > p.S_max && u.m_tw > box.m_tw_lo) {
            u.m_tw = std::max(u.m_tw - cfg.tw_step, box.m_tw_lo);
            ok = false;
        } else if (pred.S_twc1 < p.S_min && u.m_tw < box.m_tw_hi) {
            u.m_tw = std::min(u.m_tw + cfg.tw_step, box.m_tw_hi);
            ok = false;
        }
        if (pred.T_chws1 > p.T_chws_max && u.n_ch < p.n_ch_max) {
            u.n_ch += 1;
            ok = false;
        } else if (pred.T_chws1 < p.T_chws_min) {
            // Over-cooling at rated capacity: shed a chiller, or push more flow
            // through when already at a single unit.
            if (u.n_ch > 1) {
                u.n_ch -= 1;
                ok = false;
            } else if (u.m_lw < box.m_lw_hi) {
                u.m_lw = std::min(u.m_lw + cfg.lw_step, box.m_lw_hi);
                ok = false;
            }
        }
        if (ok) break;
    }
    if (it >= cfg.rule_iter_cap)
        throw DefectError("baseline chilled-water rule loop exceeded its iteration cap");

    // Bypass feasibility fixes the minimum chiller count.
    double m_sw = u.m_lw + u.m_tw;
    int n_min = static_cast<int>(std::ceil(m_sw / p.m_indv - 1e-12));
    u.n_ch = std::max(u.n_ch, std::max(0, n_min));
    if (u.n_ch > p.n_ch_max) {
        u.n_ch = p.n_ch_max;
        u.m_lw = clamp(u.n_ch * p.m_indv - u.m_tw, box.m_lw_lo, box.m_lw_hi);
        m_sw = u.m_lw + u.m_tw;
    }
    if (u.n_ch == 0 && m_sw > 0) u.n_ch = 1;

    // --- Cooling water loop -------------------------------------------------
    double q_cond_hat = cfg.eta_hat * u.n_ch * p.q_ch_indv;
    int last_dir = 0;
    for (it = 0; it < cfg.rule_iter_cap; ++it) {
        double T_cwr1 = x.T_cws + q_cond_hat / (p.C_pw * u.m_cw);
        if (T_cwr1 > p.T_cwr_max && u.m_cw < box.m_cw_hi && last_dir >= 0) {
            u.m_cw = std::min(u.m_cw + cfg.cw_step, box.m_cw_hi);
            last_dir = 1;
        } else if (T_cwr1 < p.T_cwr_max - cfg.T_cwr_deadband && u.m_cw > box.m_cw_lo &&
                   last_dir <= 0) {
            u.m_cw = std::max(u.m_cw - cfg.cw_step, box.m_cw_lo);
            last_dir = -1;
        } else {
            break;
        }
    }
    if (it >= cfg.rule_iter_cap)
        throw DefectError("baseline cooling-water rule loop exceeded its iteration cap");

    double q_ct_set = p.C_pw * u.m_cw * (x.T_cwr - p.T_cws_set);
    if (q_ct_set > 0) {
        last_dir = 0;
        for (it = 0; it < cfg.rule_iter_cap; ++it) {
            double q_ct_ub = tower_capacity(u.m_cw, u.m_oa, x.T_cwr, w.T_oawb, p);
            if (q_ct_ub < q_ct_set) {
                if (u.m_oa < box.m_oa_hi && last_dir >= 0) {
                    u.m_oa = std::min(u.m_oa + cfg.oa_step, box.m_oa_hi);
                    last_dir = 1;
                } else if (u.m_cw < box.m_cw_hi) {
                    // Airflow saturated: lean on the pumps instead.
                    u.m_cw = std::min(u.m_cw + cfg.cw_step, box.m_cw_hi);
                    q_ct_set = p.C_pw * u.m_cw * (x.T_cwr - p.T_cws_set);
                } else {
                    break;
                }
            } else if (q_ct_ub > cfg.tower_overshoot * q_ct_set) {
                if (u.m_oa > box.m_oa_lo && last_dir <= 0) {
                    u.m_oa = std::max(u.m_oa - cfg.oa_step, box.m_oa_lo);
                    last_dir = -1;
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        if (it >= cfg.rule_iter_cap)
            throw DefectError("baseline tower rule loop exceeded its iteration cap");
    } else {
        u.m_oa = box.m_oa_lo;  // no rejection needed; idle the fan
    }

    state.prev = u;
    return u;
}

}  // namespace dcep
