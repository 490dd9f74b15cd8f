#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dcep/baseline.hpp"

using namespace dcep;

namespace {

BaselineState steady_state_for(const PlantState& x, const Disturbance& w, const PlantParams& p,
                               const BaselineConfig& cfg) {
    // Run the rules to a fixed point at flat prices so "no rule fires" below.
    BaselineState st;
    ControlInput u{};
    for (int i = 0; i < 50; ++i) u = baseline_step(x, w, 0.08, 0.08, st, cfg, p);
    return st;
}

}  // namespace

TEST_CASE("no rule fires at flat prices and in-bound predictions") {
    PlantParams p;
    BaselineConfig cfg;
    PlantState x;
    Disturbance w{26, 1313};
    BaselineState st = steady_state_for(x, w, p, cfg);
    ControlInput before = st.prev;
    ControlInput out = baseline_step(x, w, 0.08, 0.08, st, cfg, p);
    CHECK(out.m_lw == doctest::Approx(before.m_lw));
    CHECK(out.m_tw == doctest::Approx(before.m_tw));
    CHECK(out.n_ch == before.n_ch);
    CHECK(out.m_cw == doctest::Approx(before.m_cw));
    CHECK(out.m_oa == doctest::Approx(before.m_oa));
}

TEST_CASE("cheap electricity charges the tank by exactly one increment") {
    PlantParams p;
    BaselineConfig cfg;
    PlantState x;
    Disturbance w{26, 1313};
    BaselineState st = steady_state_for(x, w, p, cfg);
    double tw_before = st.prev.m_tw;
    ControlInput out = baseline_step(x, w, 0.94 * 0.08, 0.08, st, cfg, p);
    CHECK(out.m_tw == doctest::Approx(tw_before + cfg.tw_step));

    BaselineState st2 = steady_state_for(x, w, p, cfg);
    double tw2 = st2.prev.m_tw;
    ControlInput out2 = baseline_step(x, w, 1.06 * 0.08, 0.08, st2, cfg, p);
    CHECK(out2.m_tw == doctest::Approx(tw2 - cfg.tw_step));
}

TEST_CASE("near-full tank throttles further charging") {
    PlantParams p;
    BaselineConfig cfg;
    // One step of full charge would overshoot S_max.
    double S = p.S_max - 0.5 * p.t_s * cfg.tw_step / p.M_TES;
    PlantState x(12.5, S, 7, 13, 7, 32, 29);
    Disturbance w{26, 1313};
    BaselineState st;
    baseline_step(x, w, 0.08, 0.08, st, cfg, p);  // initialize memory
    st.prev.m_tw = 25.0;                          // pretend it was charging hard
    ControlInput out = baseline_step(x, w, 0.05, 0.08, st, cfg, p);
    double S_next = x.S_twc + p.t_s * out.m_tw / p.M_TES;
    CHECK(S_next <= p.S_max + 1e-12);
}

TEST_CASE("output always lands inside the admissible box") {
    PlantParams p;
    BaselineConfig cfg;
    PlantState x;
    BaselineState st;
    double rho_bar = 0.08;
    for (int k = 0; k < 200; ++k) {
        double rho = 0.03 + 0.1 * ((k * 7919) % 100) / 100.0;
        Disturbance w{24.0 + (k % 40) * 0.1, 300.0 + (k * 131) % 3000};
        ControlInput u = baseline_step(x, w, rho, rho_bar, st, cfg, p);
        InputBox box = admissible_input_box(x, p);
        CHECK(u.m_lw >= box.m_lw_lo - 1e-9);
        CHECK(u.m_lw <= box.m_lw_hi + 1e-9);
        CHECK(u.m_tw >= box.m_tw_lo - 1e-9);
        CHECK(u.m_tw <= box.m_tw_hi + 1e-9);
        CHECK(u.m_cw >= box.m_cw_lo - 1e-9);
        CHECK(u.m_cw <= box.m_cw_hi + 1e-9);
        CHECK(u.m_oa >= box.m_oa_lo - 1e-9);
        CHECK(u.m_oa <= box.m_oa_hi + 1e-9);
        CHECK(u.n_ch >= 0);
        CHECK(u.n_ch <= p.n_ch_max);
        // Bypass feasibility.
        CHECK(u.n_ch * p.m_indv >= u.m_lw + u.m_tw - 1e-9);
    }
}

TEST_CASE("deterministic for identical arguments") {
    PlantParams p;
    BaselineConfig cfg;
    PlantState x;
    Disturbance w{26, 1500};
    BaselineState a, b;
    ControlInput u1 = baseline_step(x, w, 0.1, 0.08, a, cfg, p);
    ControlInput u2 = baseline_step(x, w, 0.1, 0.08, b, cfg, p);
    CHECK(u1.m_lw == u2.m_lw);
    CHECK(u1.m_tw == u2.m_tw);
    CHECK(u1.n_ch == u2.n_ch);
    CHECK(u1.m_cw == u2.m_cw);
    CHECK(u1.m_oa == u2.m_oa);
}

TEST_CASE("rising load brings more chillers online") {
    PlantParams p;
    BaselineConfig cfg;
    PlantState x;
    BaselineState st;
    Disturbance low{26, 600};
    ControlInput u_low = baseline_step(x, low, 0.08, 0.08, st, cfg, p);
    // Same memory, much larger load: the prediction rules must scale up.
    Disturbance high{26, 3200};
    ControlInput u_high = baseline_step(x, high, 0.08, 0.08, st, cfg, p);
    CHECK(u_high.n_ch >= u_low.n_ch);
    CHECK(u_high.m_lw >= u_low.m_lw - 1e-9);
}

TEST_CASE("config round trip") {
    BaselineConfig cfg;
    KeyValueFile kv;
    cfg.to_config(kv);
    BaselineConfig back = BaselineConfig::from_config(kv);
    CHECK(back.tw_step == doctest::Approx(cfg.tw_step));
    CHECK(back.tower_overshoot == doctest::Approx(cfg.tower_overshoot));
    CHECK(back.tau == cfg.tau);

    KeyValueFile bad;
    bad.set_double("baseline.price_dev_threshold", 1.5);
    CHECK_THROWS(BaselineConfig::from_config(bad));
}
