#include "dcep/params.hpp"

#include <algorithm>
#include <stdexcept>

namespace dcep {

void PlantParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("PlantParams.") + name + " must be > 0");
    };
    positive(C_pw, "C_pw");
    positive(M_TES, "M_TES");
    positive(t_s, "t_s");
    positive(m_indv, "m_indv");
    positive(q_ch_indv, "q_ch_indv");
    positive(c3, "c3");
    if (n_ch_max < 1) throw std::invalid_argument("PlantParams.n_ch_max must be >= 1");
    if (m_lw_min <= 0 || m_lw_max < m_lw_min) throw std::invalid_argument("bad m_lw bounds");
    if (m_cw_min <= 0 || m_cw_max < m_cw_min) throw std::invalid_argument("bad m_cw bounds");
    if (m_oa_min < 0 || m_oa_max < m_oa_min) throw std::invalid_argument("bad m_oa bounds");
    if (m_tw_max < m_tw_min) throw std::invalid_argument("bad m_tw bounds");
    if (!(S_min > 0 && S_max < 1 && S_min < S_max)) throw std::invalid_argument("bad S bounds");
    if (!(T_chws_min < T_chws_max)) throw std::invalid_argument("bad T_chws bounds");
    if (r1 < 10.0 * std::max(r2, r3))
        throw std::invalid_argument("projection weight r1 must dominate: r1 >= 10*max(r2,r3)");
}

namespace {

void put(KeyValueFile& kv, const std::string& key, double v) { kv.set_double(key, v); }

double get_or(const KeyValueFile& kv, const std::string& key, double fallback) {
    auto v = kv.get_double(key);
    return v ? *v : fallback;
}

}  // namespace

PlantParams PlantParams::from_config(const KeyValueFile& kv) {
    PlantParams p;
    p.C_pw = get_or(kv, "plant.C_pw", p.C_pw);
    p.M_TES = get_or(kv, "plant.M_TES", p.M_TES);
    p.t_s = get_or(kv, "plant.t_s", p.t_s);
    p.m_indv = get_or(kv, "plant.m_indv", p.m_indv);
    p.q_ch_indv = get_or(kv, "plant.q_ch_indv", p.q_ch_indv);
    if (auto v = kv.get_int("plant.n_ch_max")) p.n_ch_max = static_cast<int>(*v);
    p.m_lw_min = get_or(kv, "plant.m_lw_min", p.m_lw_min);
    p.m_lw_max = get_or(kv, "plant.m_lw_max", p.m_lw_max);
    p.m_tw_min = get_or(kv, "plant.m_tw_min", p.m_tw_min);
    p.m_tw_max = get_or(kv, "plant.m_tw_max", p.m_tw_max);
    p.m_cw_min = get_or(kv, "plant.m_cw_min", p.m_cw_min);
    p.m_cw_max = get_or(kv, "plant.m_cw_max", p.m_cw_max);
    p.m_oa_min = get_or(kv, "plant.m_oa_min", p.m_oa_min);
    p.m_oa_max = get_or(kv, "plant.m_oa_max", p.m_oa_max);
    p.T_lwr_max = get_or(kv, "plant.T_lwr_max", p.T_lwr_max);
    p.T_chws_min = get_or(kv, "plant.T_chws_min", p.T_chws_min);
    p.T_chws_max = get_or(kv, "plant.T_chws_max", p.T_chws_max);
    p.T_cwr_max = get_or(kv, "plant.T_cwr_max", p.T_cwr_max);
    p.S_min = get_or(kv, "plant.S_min", p.S_min);
    p.S_max = get_or(kv, "plant.S_max", p.S_max);
    p.approach_min = get_or(kv, "plant.approach_min", p.approach_min);
    p.T_chws_set = get_or(kv, "plant.T_chws_set", p.T_chws_set);
    p.T_cws_set = get_or(kv, "plant.T_cws_set", p.T_cws_set);
    p.r1 = get_or(kv, "plant.r1", p.r1);
    p.r2 = get_or(kv, "plant.r2", p.r2);
    p.r3 = get_or(kv, "plant.r3", p.r3);
    p.beta1 = get_or(kv, "plant.beta1", p.beta1);
    p.beta2 = get_or(kv, "plant.beta2", p.beta2);
    p.beta3 = get_or(kv, "plant.beta3", p.beta3);
    p.eta1 = get_or(kv, "plant.eta1", p.eta1);
    for (int i = 0; i < 4; ++i) {
        p.alpha[i] = get_or(kv, "plant.alpha" + std::to_string(i + 1), p.alpha[i]);
        p.gamma[i] = get_or(kv, "plant.gamma" + std::to_string(i + 1), p.gamma[i]);
    }
    p.lambda = get_or(kv, "plant.lambda", p.lambda);
    p.c1 = get_or(kv, "plant.c1", p.c1);
    p.c2 = get_or(kv, "plant.c2", p.c2);
    p.c3 = get_or(kv, "plant.c3", p.c3);
    p.validate();
    return p;
}

void PlantParams::to_config(KeyValueFile& kv) const {
    put(kv, "plant.C_pw", C_pw);
    put(kv, "plant.M_TES", M_TES);
    put(kv, "plant.t_s", t_s);
    put(kv, "plant.m_indv", m_indv);
    put(kv, "plant.q_ch_indv", q_ch_indv);
    kv.set_int("plant.n_ch_max", n_ch_max);
    put(kv, "plant.m_lw_min", m_lw_min);
    put(kv, "plant.m_lw_max", m_lw_max);
    put(kv, "plant.m_tw_min", m_tw_min);
    put(kv, "plant.m_tw_max", m_tw_max);
    put(kv, "plant.m_cw_min", m_cw_min);
    put(kv, "plant.m_cw_max", m_cw_max);
    put(kv, "plant.m_oa_min", m_oa_min);
    put(kv, "plant.m_oa_max", m_oa_max);
    put(kv, "plant.T_lwr_max", T_lwr_max);
    put(kv, "plant.T_chws_min", T_chws_min);
    put(kv, "plant.T_chws_max", T_chws_max);
    put(kv, "plant.T_cwr_max", T_cwr_max);
    put(kv, "plant.S_min", S_min);
    put(kv, "plant.S_max", S_max);
    put(kv, "plant.approach_min", approach_min);
    put(kv, "plant.T_chws_set", T_chws_set);
    put(kv, "plant.T_cws_set", T_cws_set);
    put(kv, "plant.r1", r1);
    put(kv, "plant.r2", r2);
    put(kv, "plant.r3", r3);
    put(kv, "plant.beta1", beta1);
    put(kv, "plant.beta2", beta2);
    put(kv, "plant.beta3", beta3);
    put(kv, "plant.eta1", eta1);
    for (int i = 0; i < 4; ++i) {
        put(kv, "plant.alpha" + std::to_string(i + 1), alpha[i]);
        put(kv, "plant.gamma" + std::to_string(i + 1), gamma[i]);
    }
    put(kv, "plant.lambda", lambda);
    put(kv, "plant.c1", c1);
    put(kv, "plant.c2", c2);
    put(kv, "plant.c3", c3);
}

PlantParams PlantParams::load(const std::string& path) {
    return from_config(KeyValueFile::load(path));
}

void PlantParams::save(const std::string& path) const {
    KeyValueFile kv;
    to_config(kv);
    kv.save(path);
}

}  // namespace dcep
