#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dcep/plant.hpp"

using namespace dcep;
using Eigen::VectorXd;

namespace oracle {

// Straight-line transcription of the one-step equations, coded separately
// from the library path so the two can cross-check each other.
struct Res {
    std::array<double, 14> eq{};
    std::array<double, 12> ineq{};
};

double chiller_power_ref(double T_cws, double T_chws, double q_ch, const PlantParams& p) {
    double a = T_cws + 273.15, b = T_chws + 273.15;
    double v = (a / b - 1.0) * q_ch - p.beta1 + p.beta2 * a - p.beta3 * (a / b);
    return v > 0 ? v : 0.0;
}

Res eval(const VectorXd& z, const PlantState& x, const ControlInput& u, const Disturbance& w,
         const PlantParams& p) {
    Res r;
    double T_sw = x.T_chws;
    double m_sw = u.m_lw + u.m_tw;
    double mneg = u.m_tw < 0 ? u.m_tw : 0.0;
    double mpos = u.m_tw > 0 ? u.m_tw : 0.0;
    double T_lws = T_sw + mneg / u.m_lw * (T_sw - x.T_twc);
    double m_chw = u.n_ch * p.m_indv;
    double m_bp = m_chw - m_sw;
    double T_rw = u.m_tw > 0 ? x.T_lwr + mpos / m_sw * (x.T_tww - x.T_lwr) : x.T_lwr;
    double T_chwr = u.n_ch > 0 ? T_rw + m_bp / m_chw * (x.T_chws - T_rw) : x.T_chws;

    r.eq[0] = 0.0;
    r.eq[1] = z[0] - (T_lws + z[8] / (p.C_pw * u.m_lw));
    r.eq[2] = z[2] - (x.S_twc + p.t_s * u.m_tw / p.M_TES);
    r.eq[3] = z[1] - (x.S_tww - p.t_s * u.m_tw / p.M_TES);
    r.eq[4] = z[4] - (x.T_tww + p.t_s * mneg / (p.M_TES * x.S_tww - p.t_s * u.m_tw) *
                                    (x.T_tww - x.T_lwr));
    r.eq[5] = z[3] - (x.T_twc + p.t_s * mpos / (p.M_TES * x.S_twc + p.t_s * u.m_tw) *
                                    (T_sw - x.T_twc));
    r.eq[6] = 0.0;
    r.eq[7] = 0.0;
    r.eq[8] = 0.0;
    r.eq[9] = 0.0;
    r.eq[10] = u.n_ch > 0 ? z[5] - (T_chwr - z[9] / (p.C_pw * m_chw)) : z[5] - x.T_chws;
    r.eq[11] = 0.0;
    double P_ch = u.n_ch > 0 ? chiller_power_ref(x.T_cws, x.T_chws, z[9], p) : 0.0;
    double q_cond = z[9] + p.eta1 * P_ch;
    r.eq[12] = z[6] - (x.T_cws + q_cond / (p.C_pw * u.m_cw));
    r.eq[13] = z[7] - (x.T_cwr - z[10] / (p.C_pw * u.m_cw));

    double cap = 0.0;
    if (u.m_oa > 0 && x.T_cwr > w.T_oawb)
        cap = p.c1 * std::pow(u.m_cw, p.c3) /
              (1.0 + p.c2 * std::pow(u.m_cw / u.m_oa, p.c3)) * (x.T_cwr - w.T_oawb);
    r.ineq[0] = z[8];
    r.ineq[1] = w.q_L_ref - z[8];
    r.ineq[2] = p.T_lwr_max - z[0];
    r.ineq[3] = z[9];
    r.ineq[4] = u.n_ch * p.q_ch_indv - z[9];
    r.ineq[5] = z[5] - p.T_chws_min;
    r.ineq[6] = p.T_chws_max - z[5];
    r.ineq[7] = m_bp;
    r.ineq[8] = p.T_cwr_max - z[6];
    r.ineq[9] = z[7] - (w.T_oawb + p.approach_min);
    r.ineq[10] = z[10];
    r.ineq[11] = cap - z[10];
    return r;
}

}  // namespace oracle

TEST_CASE("chiller power model") {
    PlantParams p;
    SUBCASE("zero load with zero offsets") {
        p.beta1 = p.beta2 = p.beta3 = 0;
        CHECK(chiller_power(29, 7, 0, p) == doctest::Approx(0.0));
    }
    SUBCASE("equal temperatures kill the lift term") {
        p.beta1 = p.beta2 = p.beta3 = 0;
        CHECK(chiller_power(15, 15, 1000, p) == doctest::Approx(0.0));
    }
    SUBCASE("direct evaluation at nominal conditions") {
        double R = (29.0 + 273.15) / (7.0 + 273.15);
        double expect = (R - 1.0) * 1000.0 - p.beta1 + p.beta2 * (29.0 + 273.15) - p.beta3 * R;
        CHECK(chiller_power(29, 7, 1000, p) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(expect > 0);
    }
    SUBCASE("clamped below at zero") {
        p.beta1 = 1e6;
        CHECK(chiller_power(29, 7, 100, p) == 0.0);
    }
    SUBCASE("non-finite input rejected") {
        CHECK_THROWS_AS(chiller_power(std::nan(""), 7, 10, p), std::invalid_argument);
        CHECK_THROWS_AS(chiller_power(29, 7, -1, p), std::invalid_argument);
    }
}

TEST_CASE("pump power model") {
    CHECK(pump_power(0, {5, 1, 2, 0}) == doctest::Approx(0.0));
    CHECK(pump_power(5, {0, 1, 2, 3}) == doctest::Approx(13.0));
    CHECK(pump_power(std::exp(1.0) - 1.0, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(pump_power(2.0, {1, -1, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(pump_power(-1.0, {1, 1, 0, 0}), std::invalid_argument);

    // Nondecreasing in flow for nonnegative coefficients.
    std::array<double, 4> c{8, 0.05, 0.08, 0};
    double prev = pump_power(0, c);
    for (double m = 5; m <= 300; m += 5) {
        double v = pump_power(m, c);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("fan power model") {
    CHECK(fan_power(0, 0.35) == doctest::Approx(0.0));
    CHECK(fan_power(3, 2) == doctest::Approx(54.0));
    CHECK(fan_power(1, 1) == doctest::Approx(1.0));
    // Strictly increasing in airflow.
    double prev = -1;
    for (double m = 0; m <= 10; m += 0.25) {
        double v = fan_power(m, 0.35);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("tower capacity model") {
    PlantParams p;
    SUBCASE("zero driving temperature difference") {
        CHECK(tower_capacity(100, 5, 26, 26, p) == doctest::Approx(0.0));
        CHECK(tower_capacity(100, 5, 20, 26, p) == doctest::Approx(0.0));
    }
    SUBCASE("direct evaluation") {
        p.c1 = 1;
        p.c2 = 0;
        p.c3 = 1;
        CHECK(tower_capacity(10, 5, 31, 26, p) == doctest::Approx(50.0));
    }
    SUBCASE("infinite air resistance limit") {
        p.c2 = 1e9;
        double cap = tower_capacity(100, 5, 31, 26, p);
        double unthrottled = p.c1 * 100 * 5.0;
        CHECK(cap <= 1e-6 * unthrottled);
    }
    SUBCASE("no airflow means no capacity") {
        CHECK(tower_capacity(100, 0, 31, 26, p) == doctest::Approx(0.0));
    }
}

namespace {

PlantState random_state(std::mt19937_64& rng, const PlantParams& p) {
    std::uniform_real_distribution<double> u01(0, 1);
    double S = p.S_min + u01(rng) * (p.S_max - p.S_min);
    double T_twc = 5 + 3 * u01(rng);
    double T_tww = 11 + 4 * u01(rng);
    double T_chws = p.T_chws_min + u01(rng) * (p.T_chws_max - p.T_chws_min);
    double T_lwr = 10 + 5.5 * u01(rng);
    double T_cwr = 29 + 8 * u01(rng);
    double T_cws = 26 + 5 * u01(rng);
    return PlantState(T_lwr, S, T_twc, T_tww, T_chws, T_cwr, T_cws);
}

ControlInput random_input(std::mt19937_64& rng, const PlantState& x, const PlantParams& p) {
    std::uniform_real_distribution<double> u01(0, 1);
    ControlInput u;
    u.n_ch = 1 + static_cast<int>(u01(rng) * p.n_ch_max);
    u.n_ch = std::min(u.n_ch, p.n_ch_max);
    InputBox box = admissible_input_box(x, p);
    u.m_lw = box.m_lw_lo + u01(rng) * (box.m_lw_hi - box.m_lw_lo);
    u.m_tw = box.m_tw_lo + u01(rng) * (box.m_tw_hi - box.m_tw_lo);
    u.m_cw = box.m_cw_lo + u01(rng) * (box.m_cw_hi - box.m_cw_lo);
    u.m_oa = box.m_oa_lo + u01(rng) * (box.m_oa_hi - box.m_oa_lo);
    return u;
}

}  // namespace

TEST_CASE("constraint evaluation matches the duplicate transcription") {
    PlantParams p;
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u01(0, 1);
    for (int trial = 0; trial < 500; ++trial) {
        PlantState x = random_state(rng, p);
        ControlInput u = random_input(rng, x, p);
        Disturbance w{22 + 5 * u01(rng), 4000 * u01(rng)};
        VectorXd z(11);
        for (int i = 0; i < 11; ++i) z[i] = u01(rng);
        z[0] = 10 + 6 * z[0];
        z[1] = 0.05 + 0.9 * z[1];
        z[2] = 0.05 + 0.9 * z[2];
        z[3] = 4 + 6 * z[3];
        z[4] = 10 + 6 * z[4];
        z[5] = 4 + 8 * z[5];
        z[6] = 28 + 10 * z[6];
        z[7] = 26 + 6 * z[7];
        z[8] *= 4000;
        z[9] *= 4200;
        z[10] *= 3000;

        ConstraintEval got = eval_constraints(z, x, u, w, p);
        oracle::Res want = oracle::eval(z, x, u, w, p);
        for (int i = 0; i < 14; ++i)
            CHECK(got.eq[i] == doctest::Approx(want.eq[i]).epsilon(1e-12).scale(1.0));
        for (int i = 0; i < 12; ++i)
            CHECK(got.ineq[i] == doctest::Approx(want.ineq[i]).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("constructed feasible point has zero residuals") {
    PlantParams p;
    PlantState x;
    ControlInput u{100, 10, 5, 160, 5};
    Disturbance w{26, 1313};

    // Forward-evaluate the equations with feasible thermal rates.
    double q_L = w.q_L_ref;
    double q_ch = 1500;
    double q_ct = 1200;
    double m_chw = u.n_ch * p.m_indv;
    double m_sw = u.m_lw + u.m_tw;
    double m_bp = m_chw - m_sw;
    double T_rw = x.T_lwr + u.m_tw / m_sw * (x.T_tww - x.T_lwr);
    double T_chwr = T_rw + m_bp / m_chw * (x.T_chws - T_rw);
    double P_ch = chiller_power(x.T_cws, x.T_chws, q_ch, p);
    VectorXd z(11);
    z[0] = x.T_chws + q_L / (p.C_pw * u.m_lw);
    z[2] = x.S_twc + p.t_s * u.m_tw / p.M_TES;
    z[1] = 1.0 - z[2];
    z[4] = x.T_tww;  // charging: warm tank temperature holds
    z[3] = x.T_twc + p.t_s * u.m_tw / (p.M_TES * x.S_twc + p.t_s * u.m_tw) * (x.T_chws - x.T_twc);
    z[5] = T_chwr - q_ch / (p.C_pw * m_chw);
    z[6] = x.T_cws + (q_ch + p.eta1 * P_ch) / (p.C_pw * u.m_cw);
    z[7] = x.T_cwr - q_ct / (p.C_pw * u.m_cw);
    z[8] = q_L;
    z[9] = q_ch;
    z[10] = q_ct;

    ConstraintEval ev = eval_constraints(z, x, u, w, p);
    for (int i = 0; i < ev.eq.size(); ++i) CHECK(std::abs(ev.eq[i]) < 1e-10);
}

TEST_CASE("zero TES flow freezes the tank fractions") {
    PlantParams p;
    PlantState x;
    ControlInput u{100, 0, 5, 160, 5};
    Disturbance w{26, 1313};
    VectorXd z = VectorXd::Zero(11);
    z[1] = x.S_tww;
    z[2] = x.S_twc;
    ConstraintEval ev = eval_constraints(z, x, u, w, p);
    CHECK(ev.eq[kEqFracCold] == doctest::Approx(0.0));
    CHECK(ev.eq[kEqFracWarm] == doctest::Approx(0.0));
}

TEST_CASE("all chillers off with supply flow is structurally infeasible") {
    PlantParams p;
    PlantState x;
    ControlInput u{100, 0, 0, 160, 5};
    Disturbance w{26, 0};
    VectorXd z = VectorXd::Zero(11);
    CHECK_THROWS_AS(eval_constraints(z, x, u, w, p), StructuralInfeasibility);
    CHECK_THROWS_AS(plant_step(x, u, w, p), StructuralInfeasibility);
}

TEST_CASE("idle plant follows pure mixing") {
    PlantParams p;
    PlantState x;
    // All chillers off: tank discharge must carry the (zero) supply demand.
    ControlInput u{25, -25, 0, 160, 2};
    Disturbance w{26, 0};
    PlantStepResult r = plant_step(x, u, w, p);
    CHECK(r.outputs.q_L == doctest::Approx(0.0).scale(1.0));
    CHECK(r.outputs.q_ch == doctest::Approx(0.0).scale(1.0));
    CHECK(r.outputs.P_ch == doctest::Approx(0.0));
    CHECK(r.next.T_chws == doctest::Approx(x.T_chws));
    // Discharge moves cold water to the load and warm return into the tank.
    CHECK(r.next.S_twc < x.S_twc);
    CHECK(r.next.S_twc + r.next.S_tww == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("moderate load is met exactly") {
    PlantParams p;
    PlantState x;
    ControlInput u{75, 0, 4, 160, 5};
    Disturbance w{26, 1500};
    PlantStepResult r = plant_step(x, u, w, p);
    CHECK(r.report.converged);
    CHECK(r.outputs.q_L == doctest::Approx(w.q_L_ref).epsilon(1e-3));
    CHECK(r.load_check_ok);
}

TEST_CASE("over-capacity load saturates the chillers and sheds load") {
    PlantParams p;
    PlantState x(15.5, 0.5, 7, 13, 7, 32, 29);
    ControlInput u{25, 0, 1, 120, 5};
    Disturbance w{26, 2500};
    PlantStepResult r = plant_step(x, u, w, p);
    CHECK(r.report.converged);
    CHECK(r.outputs.q_ch == doctest::Approx(u.n_ch * p.q_ch_indv).epsilon(1e-6));
    CHECK(r.outputs.q_L < w.q_L_ref);
    CHECK(r.load_check_ok);  // shortfall explained by the return-temperature cap
}

TEST_CASE("step invariants on random in-box commands") {
    PlantParams p;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u01(0, 1);
    int accepted = 0;
    for (int trial = 0; trial < 60; ++trial) {
        PlantState x = random_state(rng, p);
        ControlInput u = repair_input(random_input(rng, x, p), x, p);
        Disturbance w{22 + 5 * u01(rng), 300 + 2200 * u01(rng)};
        PlantStepResult r;
        try {
            r = plant_step(x, u, w, p);
        } catch (const std::exception&) {
            continue;  // infeasible corner; rejection is allowed, silence is not
        }
        ++accepted;
        // Mass conservation to machine precision.
        CHECK(r.next.S_twc + r.next.S_tww == doctest::Approx(1.0).epsilon(1e-15));
        // Exact tank fraction update while bounds are inactive.
        CHECK(r.next.S_twc - x.S_twc == doctest::Approx(p.t_s * u.m_tw / p.M_TES).epsilon(1e-12));
        // Evaporator balance.
        if (u.n_ch > 0) {
            double m_chw = u.n_ch * p.m_indv;
            double m_sw = u.m_lw + u.m_tw;
            double T_rw = u.m_tw > 0 ? x.T_lwr + u.m_tw / m_sw * (x.T_tww - x.T_lwr) : x.T_lwr;
            double T_chwr = T_rw + (m_chw - m_sw) / m_chw * (x.T_chws - T_rw);
            double lhs = p.C_pw * m_chw * (T_chwr - r.next.T_chws);
            CHECK(lhs == doctest::Approx(r.outputs.q_ch).epsilon(1e-6).scale(1.0));
        }
        // Condenser balance against the exact power model.
        double want_cond = r.outputs.q_ch +
                           p.eta1 * (u.n_ch > 0 ? chiller_power(x.T_cws, x.T_chws, r.outputs.q_ch, p)
                                                : 0.0);
        CHECK(r.outputs.q_cond == doctest::Approx(want_cond).epsilon(1e-9));
        // Every inequality slack within tolerance.
        VectorXd z(11);
        z.head<8>() = r.next.to_vector();
        z[8] = r.outputs.q_L;
        z[9] = r.outputs.q_ch;
        z[10] = r.outputs.q_ct;
        ConstraintEval ev = eval_constraints(z, x, u, w, p);
        for (int i = 0; i < ev.ineq.size(); ++i) {
            if (i == kIneqApproach && x.T_cwr < w.T_oawb + p.approach_min) continue;
            CHECK(ev.ineq[i] >= -1e-6);
        }
        // Power aggregate is exact by construction.
        CHECK(r.outputs.P_tot ==
              doctest::Approx(r.outputs.P_ch + r.outputs.P_ct + r.outputs.P_chw_pump +
                              r.outputs.P_cw_pump));
    }
    CHECK(accepted >= 45);  // the generator should rarely hit infeasible corners
}

TEST_CASE("achieved load is monotone in the reference") {
    PlantParams p;
    PlantState x;
    ControlInput u{90, 0, 4, 160, 5};
    double prev = -1;
    for (double ref : {0.0, 400.0, 900.0, 1400.0, 2000.0, 2800.0, 3600.0}) {
        PlantStepResult r = plant_step(x, u, Disturbance{26, ref}, p);
        CHECK(r.outputs.q_L >= prev - 1e-6);
        prev = r.outputs.q_L;
    }
}

TEST_CASE("input repair respects the admissible box and bypass") {
    PlantParams p;
    PlantState x;
    ControlInput u{340, 25, 1, 500, 20};
    ControlInput r = repair_input(u, x, p);
    CHECK(r.m_cw <= p.m_cw_max);
    CHECK(r.m_oa <= p.m_oa_max);
    CHECK(r.n_ch * p.m_indv >= r.m_lw + r.m_tw - 1e-9);
    CHECK(r.n_ch <= p.n_ch_max);

    // With every chiller off the supply is pinned to the tank discharge.
    ControlInput v{30, 0, 0, 100, 5};
    ControlInput rv = repair_input(v, x, p);
    if (rv.n_ch == 0) CHECK(rv.m_lw + rv.m_tw == doctest::Approx(0.0));

    // An empty tank cannot serve the load chiller-free.
    PlantState empty(12.5, p.S_min, 7, 13, 7, 32, 29);
    ControlInput re = repair_input(v, empty, p);
    CHECK(re.n_ch >= 1);
}
