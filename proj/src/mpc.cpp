#include "dcep/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dcep/dual.hpp"

namespace dcep {

using Eigen::VectorXd;

NlpConfig MpcConfig::horizon_solver_defaults() {
    NlpConfig c;
    c.eq_tol = 1e-6;
    c.grad_tol = 2e-4;
    c.max_outer = 40;
    c.max_inner = 800;
    c.mu0 = 10.0;
    c.lbfgs_mem = 20;
    return c;
}

void MpcConfig::validate() const {
    if (window < 2 || window % 2 != 0)
        throw std::invalid_argument("mpc window must be even and >= 2");
    if (T_plan < window) throw std::invalid_argument("mpc horizon must be at least the window");
    if (replan_interval < 1) throw std::invalid_argument("mpc replan interval must be >= 1");
}

MpcConfig MpcConfig::from_config(const KeyValueFile& kv) {
    MpcConfig c;
    if (auto v = kv.get_int("mpc.T_plan")) c.T_plan = static_cast<int>(*v);
    if (auto v = kv.get_int("mpc.window")) c.window = static_cast<int>(*v);
    if (auto v = kv.get_int("mpc.replan_interval")) c.replan_interval = static_cast<int>(*v);
    if (auto v = kv.get_double("mpc.r1")) c.r1 = *v;
    if (auto v = kv.get_double("mpc.r2")) c.r2 = *v;
    if (auto v = kv.get_double("mpc.r3")) c.r3 = *v;
    c.solver = NlpConfig::from_config(kv, "mpc.solver");
    NlpConfig defaults = horizon_solver_defaults();
    if (!kv.has("mpc.solver.eq_tol")) c.solver.eq_tol = defaults.eq_tol;
    if (!kv.has("mpc.solver.grad_tol")) c.solver.grad_tol = defaults.grad_tol;
    if (!kv.has("mpc.solver.max_outer")) c.solver.max_outer = defaults.max_outer;
    if (!kv.has("mpc.solver.max_inner")) c.solver.max_inner = defaults.max_inner;
    if (!kv.has("mpc.solver.lbfgs_mem")) c.solver.lbfgs_mem = defaults.lbfgs_mem;
    c.validate();
    return c;
}

void MpcConfig::to_config(KeyValueFile& kv) const {
    kv.set_int("mpc.T_plan", T_plan);
    kv.set_int("mpc.window", window);
    kv.set_int("mpc.replan_interval", replan_interval);
    kv.set_double("mpc.r1", r1);
    kv.set_double("mpc.r2", r2);
    kv.set_double("mpc.r3", r3);
}

// ---------------------------------------------------------------------------
// Integer repair
// ---------------------------------------------------------------------------

std::vector<int> moving_average_round(const std::vector<double>& x, int w) {
    const int n = static_cast<int>(x.size());
    if (w < 2 || w % 2 != 0) throw std::invalid_argument("window must be even and >= 2");
    if (n < w) throw std::invalid_argument("signal shorter than window");
    auto cmean = [&](int lo, int hi) {
        lo = std::max(lo, 0);
        hi = std::min(hi, n);
        double s = 0.0;
        for (int i = lo; i < hi; ++i) s += x[i];
        return s / (hi - lo);
    };
    std::vector<int> xd(n);
    // Growing head windows, then centered windows, then shrinking tail
    // windows; later passes overwrite the overlap, which is the normative
    // order of this filter.
    for (int i = 0; i < w; ++i) xd[i] = static_cast<int>(std::ceil(cmean(0, i + w / 2 + 1)));
    for (int i = w / 2; i < n - w / 2; ++i)
        xd[i] = static_cast<int>(std::ceil(cmean(i - w / 2, i + w / 2 + 1)));
    for (int i = n - w / 2; i < n; ++i)
        xd[i] = static_cast<int>(std::ceil(cmean(i - w / 2, n)));
    return xd;
}

long count_switches(const std::vector<int>& x) {
    long c = 0;
    for (size_t i = 0; i + 1 < x.size(); ++i) c += x[i] != x[i + 1] ? 1 : 0;
    return c;
}

std::vector<int> reduce_switching(const std::vector<int>& x, int w) {
    const int n = static_cast<int>(x.size());
    if (n == 0) return {};
    std::vector<char> frozen(n, 0);
    for (int i = 0; i < n; ++i) {
        int lo = std::max(0, i - w);
        bool quiet = true;
        for (int t = lo; t + 1 <= i && quiet; ++t) quiet = x[t] == x[t + 1];
        frozen[i] = quiet ? 1 : 0;
    }
    std::vector<int> out(x);
    int i = 0;
    while (i < n) {
        if (frozen[i]) {
            ++i;
            continue;
        }
        int j = i;
        double sum = 0.0;
        while (j < n && !frozen[j]) sum += x[j++];
        int y = static_cast<int>(std::ceil(sum / (j - i)));
        for (int t = i; t < j; ++t) out[t] = y;
        i = j;
    }
    return out;
}

HorizonForecast forecast_slice(const Scenario& sc, int k, int length) {
    HorizonForecast fc;
    fc.T_oawb.reserve(length);
    fc.q_L_ref.reserve(length);
    fc.rho.reserve(length);
    for (int i = 0; i < length; ++i) {
        int kk = std::min(k + i, sc.size() - 1);
        fc.T_oawb.push_back(sc.T_oawb[kk]);
        fc.q_L_ref.push_back(sc.q_L_ref[kk]);
        fc.rho.push_back(sc.rho[kk]);
    }
    return fc;
}

// ---------------------------------------------------------------------------
// Horizon transcription
// ---------------------------------------------------------------------------

namespace {

constexpr int NV = 20;  // per-step variables
constexpr int NE = 12;  // per-step equality rows
constexpr int NLOC = 28;  // 8 previous-state + 20 block locals

// Per-step variable offsets.
enum : int {
    vMlw = 0,
    vMtw = 1,
    vNc = 2,
    vMcw = 3,
    vMoa = 4,
    vState = 5,   // 8 entries, state order
    vQl = 13,
    vQch = 14,
    vQct = 15,
    vTchwr = 16,
    vMbp = 17,
    vSqch = 18,
    vSct = 19,
};

struct HorizonModel {
    const PlantParams* p = nullptr;
    HorizonForecast fc;
    double r1 = 0, r2 = 0, r3 = 0;
    PlantState x0;
    int T = 0;
    std::vector<int> sign;        // +1 charge branch, -1 discharge branch
    std::vector<char> hold_chws;  // pinned-zero steps hold the supply temperature
    std::vector<double> n_fixed;  // empty for the relaxed problem
    std::array<double, NV> vscale{};
    std::array<double, NE> escale{};
    double pch_eps = 1e-3, cap_eps = 1e-2;

    void init_scales() {
        vscale = {100, 30, 1, 100, 5, 10, 0.5, 0.5, 10, 10, 10, 10, 10,
                  1000, 1000, 1000, 10, 100, 1000, 1000};
        double mfull = p->n_ch_max * p->m_indv;
        escale = {1, 1, 1, 1, 1, 1.0 / mfull, 1.0 / (p->C_pw * mfull), 1, 1,
                  1.0 / 50.0, 1.0 / p->q_ch_indv, 1.0 / 1000.0};
    }

    int nvars() const { return T * NV; }
    int neq() const { return T * NE; }

    template <class S>
    void step_eval(int k, const S* s, const S* b, S* eq, S* cost) const {
        using std::exp;
        using std::log;
        using std::pow;
        const PlantParams& par = *p;
        const double ts = par.t_s, M = par.M_TES, C = par.C_pw;
        const S& T_lwr = s[0];
        const S& S_tww = s[1];
        const S& S_twc = s[2];
        const S& T_twc = s[3];
        const S& T_tww = s[4];
        const S& T_chws = s[5];
        const S& T_cwr = s[6];
        const S& T_cws = s[7];
        const S& m_lw = b[vMlw];
        const S& m_tw = b[vMtw];
        const S& n_c = b[vNc];
        const S& m_cw = b[vMcw];
        const S& m_oa = b[vMoa];
        const S* x1 = b + vState;
        const S& q_L = b[vQl];
        const S& q_ch = b[vQch];
        const S& q_ct = b[vQct];
        const S& T_chwr = b[vTchwr];
        const S& m_bp = b[vMbp];

        bool charging = sign[k] > 0;
        S mtw_pos = charging ? m_tw : S(0.0);
        S mtw_neg = charging ? S(0.0) : m_tw;
        S m_sw = m_lw + m_tw;
        S m_chw = n_c * par.m_indv;

        S T_lws = T_chws + mtw_neg / m_lw * (T_chws - T_twc);

        eq[0] = (x1[2] - S_twc - ts * m_tw / M) * escale[0];
        eq[1] = (x1[1] - S_tww + ts * m_tw / M) * escale[1];
        eq[2] = (x1[4] - T_tww - ts * mtw_neg / (M * S_tww - ts * m_tw) * (T_tww - T_lwr)) *
                escale[2];
        eq[3] = (x1[3] - T_twc - ts * mtw_pos / (M * S_twc + ts * m_tw) * (T_chws - T_twc)) *
                escale[3];
        eq[4] = (x1[0] - T_lws - q_L / (C * m_lw)) * escale[4];
        eq[5] = (m_chw * T_chwr - (m_sw * T_lwr + mtw_pos * (T_tww - T_lwr)) - m_bp * T_chws) *
                escale[5];
        if (hold_chws[k])
            eq[6] = (x1[5] - T_chws) * escale[3];
        else
            eq[6] = (C * m_chw * (T_chwr - x1[5]) - q_ch) * escale[6];

        S Tcws_K = T_cws + kCelsiusToKelvin;
        S Tchws_K = T_chws + kCelsiusToKelvin;
        S ratio = Tcws_K / Tchws_K;
        S gate = 1.0 - exp(-6.0 * n_c);
        S p_ch = smooth_relu((ratio - 1.0) * q_ch +
                                 gate * (-par.beta1 + par.beta2 * Tcws_K - par.beta3 * ratio),
                             pch_eps);
        S q_cond = q_ch + par.eta1 * p_ch;
        eq[7] = (x1[6] - T_cws - q_cond / (C * m_cw)) * escale[7];
        eq[8] = (x1[7] - T_cwr + q_ct / (C * m_cw)) * escale[8];
        eq[9] = (n_c * par.m_indv - m_sw - m_bp) * escale[9];
        eq[10] = (q_ch + b[vSqch] - n_c * par.q_ch_indv) * escale[10];

        S eff = par.c1 * pow(m_cw, par.c3) / (1.0 + par.c2 * pow(m_cw / m_oa, par.c3));
        S cap_tower = eff * (T_cwr - fc.T_oawb[k]);
        S cap_approach = C * m_cw * (T_cwr - fc.T_oawb[k] - par.approach_min);
        S cap = smooth_relu(smooth_min(cap_tower, cap_approach, cap_eps), cap_eps);
        eq[11] = (q_ct + b[vSct] - cap) * escale[11];

        if (cost) {
            S pump_ch = par.alpha[0] * log(1.0 + par.alpha[1] * m_chw) + par.alpha[2] * m_chw +
                        par.alpha[3];
            S pump_cw = par.gamma[0] * log(1.0 + par.gamma[1] * m_cw) + par.gamma[2] * m_cw +
                        par.gamma[3];
            S p_fan = par.lambda * m_oa * m_oa * m_oa;
            S p_tot = p_ch + pump_ch + pump_cw + p_fan;
            S dq = (q_L - fc.q_L_ref[k]) / 1000.0;
            S d2 = x1[5] - par.T_chws_set;
            S d3 = x1[7] - par.T_cws_set;
            *cost = fc.rho[k] * (ts / 3600.0) * p_tot + r1 * dq * dq + r2 * d2 * d2 + r3 * d3 * d3;
        }
    }

    void gather_raw(const VectorXd& vhat, int k, double* s, double* b) const {
        if (k == 0) {
            Eigen::Matrix<double, 8, 1> xv = x0.to_vector();
            for (int i = 0; i < 8; ++i) s[i] = xv[i];
        } else {
            int base = (k - 1) * NV;
            for (int i = 0; i < 8; ++i) s[i] = vhat[base + vState + i] * vscale[vState + i];
        }
        int base = k * NV;
        for (int i = 0; i < NV; ++i) b[i] = vhat[base + i] * vscale[i];
    }

    template <class Fn>
    void with_duals(const VectorXd& vhat, int k, Fn&& fn) const {
        using D = FDual<NLOC>;
        D s[8], b[NV];
        if (k == 0) {
            Eigen::Matrix<double, 8, 1> xv = x0.to_vector();
            for (int i = 0; i < 8; ++i) s[i] = D(xv[i]);
        } else {
            int base = (k - 1) * NV;
            for (int i = 0; i < 8; ++i)
                s[i] = D::seed(vhat[base + vState + i] * vscale[vState + i], i);
        }
        int base = k * NV;
        for (int i = 0; i < NV; ++i) b[i] = D::seed(vhat[base + i] * vscale[i], 8 + i);
        fn(s, b);
    }

    // Scatter one local derivative array into the global gradient.
    void scatter(int k, const std::array<double, NLOC>& g, VectorXd& out, double w = 1.0) const {
        if (k > 0) {
            int base = (k - 1) * NV;
            for (int i = 0; i < 8; ++i) out[base + vState + i] += w * g[i] * vscale[vState + i];
        }
        int base = k * NV;
        for (int i = 0; i < NV; ++i) out[base + i] += w * g[8 + i] * vscale[i];
    }

    double objective(const VectorXd& vhat, VectorXd* grad) const {
        double total = 0.0;
        if (grad) grad->setZero(nvars());
        for (int k = 0; k < T; ++k) {
            if (grad) {
                with_duals(vhat, k, [&](const FDual<NLOC>* s, const FDual<NLOC>* b) {
                    FDual<NLOC> eq[NE], cost;
                    step_eval(k, s, b, eq, &cost);
                    total += cost.v;
                    scatter(k, cost.g, *grad);
                });
            } else {
                double s[8], b[NV], eq[NE], cost;
                gather_raw(vhat, k, s, b);
                step_eval(k, s, b, eq, &cost);
                total += cost;
            }
        }
        return total;
    }

    void equality(const VectorXd& vhat, VectorXd& c) const {
        c.resize(neq());
        double s[8], b[NV], eq[NE];
        for (int k = 0; k < T; ++k) {
            gather_raw(vhat, k, s, b);
            step_eval(k, s, b, eq, static_cast<double*>(nullptr));
            for (int r = 0; r < NE; ++r) c[k * NE + r] = eq[r];
        }
    }

    void jtprod(const VectorXd& vhat, const VectorXd& y, VectorXd& out) const {
        out.setZero(nvars());
        for (int k = 0; k < T; ++k) {
            with_duals(vhat, k, [&](const FDual<NLOC>* s, const FDual<NLOC>* b) {
                FDual<NLOC> eq[NE];
                step_eval(k, s, b, eq, static_cast<FDual<NLOC>*>(nullptr));
                for (int r = 0; r < NE; ++r) scatter(k, eq[r].g, out, y[k * NE + r]);
            });
        }
    }

    void boxes(VectorXd& lo, VectorXd& hi) const {
        lo.resize(nvars());
        hi.resize(nvars());
        const PlantParams& par = *p;
        for (int k = 0; k < T; ++k) {
            int base = k * NV;
            auto set = [&](int i, double l, double h) {
                lo[base + i] = l / vscale[i];
                hi[base + i] = h / vscale[i];
            };
            set(vMlw, par.m_lw_min, par.m_lw_max);
            if (sign[k] > 0)
                set(vMtw, 0.0, par.m_tw_max);
            else
                set(vMtw, par.m_tw_min, 0.0);
            if (n_fixed.empty())
                set(vNc, 0.0, par.n_ch_max);
            else
                set(vNc, n_fixed[k], n_fixed[k]);
            set(vMcw, par.m_cw_min, par.m_cw_max);
            set(vMoa, par.m_oa_min, par.m_oa_max);
            set(vState + 0, 0.0, par.T_lwr_max);
            set(vState + 1, par.S_min, par.S_max);
            set(vState + 2, par.S_min, par.S_max);
            set(vState + 3, 0.0, 50.0);
            set(vState + 4, 0.0, 50.0);
            set(vState + 5, par.T_chws_min, par.T_chws_max);
            set(vState + 6, 0.0, par.T_cwr_max);
            set(vState + 7, 0.0, 50.0);
            set(vQl, 0.0, fc.q_L_ref[k]);
            set(vQch, 0.0, par.n_ch_max * par.q_ch_indv);
            set(vQct, 0.0, 5e4);
            set(vTchwr, 0.0, 50.0);
            set(vMbp, 0.0, 600.0);
            set(vSqch, 0.0, par.n_ch_max * par.q_ch_indv);
            set(vSct, 0.0, 5e4);
        }
    }
};

NlpProblem build_problem(const HorizonModel& model, const VectorXd& start) {
    NlpProblem prob;
    prob.n = model.nvars();
    prob.m = model.neq();
    prob.objective = [&model](const VectorXd& v, VectorXd* g) { return model.objective(v, g); };
    prob.equality = [&model](const VectorXd& v, VectorXd& c) { model.equality(v, c); };
    prob.eq_jacobian_tprod = [&model](const VectorXd& v, const VectorXd& y, VectorXd& out) {
        model.jtprod(v, y, out);
    };
    model.boxes(prob.lower, prob.upper);
    prob.x0 = start.cwiseMax(prob.lower).cwiseMin(prob.upper);
    return prob;
}

// Scaled stacked start built by simulating the rule-based controller forward.
VectorXd cold_start(HorizonModel& model, const PlantState& x0, const PlantParams& p) {
    VectorXd v = VectorXd::Zero(model.nvars());
    BaselineConfig bc;
    BaselineState bl;
    PlantState x = x0;
    double rho_run = 0.0;
    NlpConfig step_cfg = default_step_solver();
    for (int k = 0; k < model.T; ++k) {
        rho_run += model.fc.rho[k];
        double rho_bar = rho_run / (k + 1);
        Disturbance w{model.fc.T_oawb[k], model.fc.q_L_ref[k]};
        ControlInput u;
        PlantStepResult step;
        bool stepped = false;
        try {
            u = repair_input(baseline_step(x, w, model.fc.rho[k], rho_bar, bl, bc, p), x, p);
            step = plant_step(x, u, w, p, step_cfg);
            stepped = true;
        } catch (const std::exception&) {
            u = repair_input(ControlInput{}, x, p);
        }
        int base = k * NV;
        auto put = [&](int i, double raw) { v[base + i] = raw / model.vscale[i]; };
        put(vMlw, u.m_lw);
        put(vMtw, u.m_tw);
        put(vNc, u.n_ch);
        put(vMcw, u.m_cw);
        put(vMoa, u.m_oa);
        PlantState nx = stepped ? step.next : x;
        Eigen::Matrix<double, 8, 1> xv = nx.to_vector();
        for (int i = 0; i < 8; ++i) put(vState + i, xv[i]);
        double q_L = stepped ? step.outputs.q_L : 0.0;
        double q_ch = stepped ? step.outputs.q_ch : 0.0;
        double q_ct = stepped ? step.outputs.q_ct : 0.0;
        put(vQl, q_L);
        put(vQch, q_ch);
        put(vQct, q_ct);
        double m_sw = u.m_lw + u.m_tw;
        double m_chw = u.n_ch * p.m_indv;
        double m_bp = std::max(0.0, m_chw - m_sw);
        double T_rw = u.m_tw > 0 ? x.T_lwr + u.m_tw / m_sw * (x.T_tww - x.T_lwr) : x.T_lwr;
        double T_chwr = m_chw > 0 ? T_rw + m_bp / m_chw * (x.T_chws - T_rw) : x.T_chws;
        put(vTchwr, T_chwr);
        put(vMbp, m_bp);
        put(vSqch, std::max(0.0, u.n_ch * p.q_ch_indv - q_ch));
        double cap = tower_capacity(u.m_cw, u.m_oa, x.T_cwr, w.T_oawb, p);
        put(vSct, std::max(0.0, cap - q_ct));
        model.sign[k] = u.m_tw >= 0 ? 1 : -1;
        x = nx;
    }
    return v;
}

double raw_var(const HorizonModel& model, const VectorXd& v, int k, int i) {
    return v[k * NV + i] * model.vscale[i];
}

HorizonModel make_model(const PlantState& x0, const HorizonForecast& fc, const MpcConfig& cfg,
                        const PlantParams& p) {
    HorizonModel m;
    m.p = &p;
    m.fc = fc;
    m.r1 = cfg.r1;
    m.r2 = cfg.r2;
    m.r3 = cfg.r3;
    m.x0 = x0;
    m.T = fc.size();
    m.sign.assign(m.T, 1);
    m.hold_chws.assign(m.T, 0);
    m.init_scales();
    return m;
}

}  // namespace

RelaxedSolution solve_relaxed_horizon(const PlantState& x0, const HorizonForecast& fc,
                                      const MpcConfig& cfg, const PlantParams& p,
                                      const RelaxedSolution* warm) {
    if (fc.size() <= 0) throw std::invalid_argument("empty forecast");
    HorizonModel model = make_model(x0, fc, cfg, p);

    VectorXd start;
    if (warm && warm->vars.size() == model.nvars()) {
        start = warm->vars;
        model.sign = warm->tw_sign;
    } else {
        start = cold_start(model, x0, p);
    }

    NlpProblem prob = build_problem(model, start);
    SolveReport rep = solve_nlp(prob, cfg.solver);

    // Steps parked exactly on the branch boundary may prefer the other sign;
    // flip them once and keep the better solve.
    std::vector<int> boundary;
    for (int k = 0; k < model.T; ++k)
        if (std::abs(raw_var(model, rep.x, k, vMtw)) < 1e-7) boundary.push_back(k);
    if (!boundary.empty()) {
        HorizonModel flipped = model;
        for (int k : boundary) flipped.sign[k] = -flipped.sign[k];
        NlpProblem prob2 = build_problem(flipped, rep.x);
        SolveReport rep2 = solve_nlp(prob2, cfg.solver);
        bool better = (rep2.converged && !rep.converged) ||
                      (rep2.converged == rep.converged && rep2.objective < rep.objective);
        if (better) {
            model.sign = flipped.sign;
            rep = rep2;
        }
    }

    if (!rep.converged && rep.eq_residual_norm > 100.0 * cfg.solver.eq_tol)
        throw MpcSolveFailure("relaxed horizon solve failed (eq residual " +
                                  std::to_string(rep.eq_residual_norm) + ")",
                              rep);

    RelaxedSolution sol;
    sol.vars = rep.x;
    sol.tw_sign = model.sign;
    sol.objective = rep.objective;
    sol.report = rep;
    sol.n_ch_trace.resize(model.T);
    for (int k = 0; k < model.T; ++k) {
        double n = raw_var(model, rep.x, k, vNc);
        // Snap solver dust so the rounding filter sees clean integers.
        double r = std::round(n);
        sol.n_ch_trace[k] = std::abs(n - r) < 1e-6 ? r : n;
    }
    return sol;
}

HorizonPlan resolve_fixed_integers(const PlantState& x0, const HorizonForecast& fc,
                                   const std::vector<int>& n_ch_fixed, const MpcConfig& cfg,
                                   const PlantParams& p, const RelaxedSolution* warm) {
    const int T = fc.size();
    if (static_cast<int>(n_ch_fixed.size()) != T)
        throw std::invalid_argument("fixed chiller trace length mismatch");
    for (int n : n_ch_fixed)
        if (n < 0 || n > p.n_ch_max) throw std::invalid_argument("fixed chiller count out of range");

    HorizonModel model = make_model(x0, fc, cfg, p);
    model.n_fixed.assign(n_ch_fixed.begin(), n_ch_fixed.end());

    VectorXd start;
    if (warm && warm->vars.size() == model.nvars()) {
        start = warm->vars;
        model.sign = warm->tw_sign;
    } else {
        start = cold_start(model, x0, p);
    }
    for (int k = 0; k < T; ++k) {
        start[k * NV + vNc] = n_ch_fixed[k] / model.vscale[vNc];
        if (n_ch_fixed[k] == 0) {
            // No chillers: supply flow must vanish, which lives on the
            // discharge branch, and the supply temperature just holds.
            model.sign[k] = -1;
            model.hold_chws[k] = 1;
            double m_lw = clamp(raw_var(model, start, k, vMlw), p.m_lw_min,
                                std::min(p.m_lw_max, -p.m_tw_min));
            start[k * NV + vMlw] = m_lw / model.vscale[vMlw];
            start[k * NV + vMtw] = -m_lw / model.vscale[vMtw];
            start[k * NV + vQch] = 0.0;
        }
    }

    NlpProblem prob = build_problem(model, start);
    SolveReport rep = solve_nlp(prob, cfg.solver);

    HorizonPlan plan;
    plan.n_ch_fixed = n_ch_fixed;
    plan.final_objective = rep.objective;
    plan.feasible = rep.converged;
    plan.eq_residual_norm = rep.eq_residual_norm;
    plan.inputs.resize(T);
    plan.states.resize(T);
    plan.outputs.resize(T);

    PlantState prev = x0;
    for (int k = 0; k < T; ++k) {
        ControlInput u;
        u.m_lw = raw_var(model, rep.x, k, vMlw);
        u.m_tw = raw_var(model, rep.x, k, vMtw);
        u.n_ch = n_ch_fixed[k];
        u.m_cw = raw_var(model, rep.x, k, vMcw);
        u.m_oa = raw_var(model, rep.x, k, vMoa);
        plan.inputs[k] = u;

        Eigen::Matrix<double, 8, 1> xv;
        for (int i = 0; i < 8; ++i) xv[i] = raw_var(model, rep.x, k, vState + i);
        plan.states[k] = PlantState::from_vector(xv);

        PlantOutputs o;
        o.q_L = raw_var(model, rep.x, k, vQl);
        o.q_ch = raw_var(model, rep.x, k, vQch);
        o.q_ct = raw_var(model, rep.x, k, vQct);
        o.P_ch = u.n_ch > 0 ? chiller_power(prev.T_cws, prev.T_chws, o.q_ch, p) : 0.0;
        o.q_cond = o.q_ch + p.eta1 * o.P_ch;
        o.P_chw_pump = pump_power(u.n_ch * p.m_indv, p.alpha);
        o.P_cw_pump = pump_power(u.m_cw, p.gamma);
        o.P_ct = fan_power(u.m_oa, p.lambda);
        o.P_tot = o.P_ch + o.P_ct + o.P_chw_pump + o.P_cw_pump;
        o.c_E = electricity_cost(o.P_tot, fc.rho[k], p.t_s);
        plan.outputs[k] = o;

        double ref = std::max(fc.q_L_ref[k], 1.0);
        plan.tracking_gap = std::max(plan.tracking_gap, (fc.q_L_ref[k] - o.q_L) / ref);
        prev = plan.states[k];
    }
    return plan;
}

HorizonPlan plan_horizon(const PlantState& x0, const HorizonForecast& fc, const MpcConfig& cfg,
                         const PlantParams& p, const RelaxedSolution* warm,
                         RelaxedSolution* relaxed_out) {
    RelaxedSolution relaxed = solve_relaxed_horizon(x0, fc, cfg, p, warm);
    std::vector<int> rounded = moving_average_round(relaxed.n_ch_trace, cfg.window);
    std::vector<int> fixed = reduce_switching(rounded, cfg.window);
    for (int& n : fixed) n = clamp(n, 0, p.n_ch_max);

    HorizonPlan plan = resolve_fixed_integers(x0, fc, fixed, cfg, p, &relaxed);
    plan.n_ch_relaxed = relaxed.n_ch_trace;
    plan.relaxed_objective = relaxed.objective;
    if (relaxed_out) *relaxed_out = relaxed;
    return plan;
}

void save_plan_csv(const HorizonPlan& plan, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write plan: " + path);
    f << "step,m_lw,m_tw,n_ch,m_cw,m_oa,n_ch_relaxed,"
         "T_lwr,S_tww,S_twc,T_twc,T_tww,T_chws,T_cwr,T_cws,q_L\n";
    f.precision(12);
    for (size_t k = 0; k < plan.inputs.size(); ++k) {
        const ControlInput& u = plan.inputs[k];
        const PlantState& x = plan.states[k];
        f << k << ',' << u.m_lw << ',' << u.m_tw << ',' << u.n_ch << ',' << u.m_cw << ','
          << u.m_oa << ',' << (k < plan.n_ch_relaxed.size() ? plan.n_ch_relaxed[k] : 0.0) << ','
          << x.T_lwr << ',' << x.S_tww << ',' << x.S_twc << ',' << x.T_twc << ',' << x.T_tww
          << ',' << x.T_chws << ',' << x.T_cwr << ',' << x.T_cws << ','
          << plan.outputs[k].q_L << '\n';
    }
}

ControlInput MpcController::decide(const PlantState& x, const Scenario& sc, int k) {
    int offset = plan_origin_ >= 0 ? k - plan_origin_ : -1;
    bool need_plan = plan_origin_ < 0 || offset < 0 || offset >= cfg_.replan_interval ||
                     offset >= static_cast<int>(plan_.inputs.size());
    if (need_plan) {
        HorizonForecast fc = forecast_slice(sc, k, cfg_.T_plan);
        RelaxedSolution shifted;
        const RelaxedSolution* warm_ptr = nullptr;
        if (warm_ && plan_origin_ >= 0 && k >= plan_origin_) {
            int delta = k - plan_origin_;
            shifted = *warm_;
            if (delta > 0) {
                int T = cfg_.T_plan;
                shifted.vars.resize(warm_->vars.size());
                for (int i = 0; i < T; ++i) {
                    int src = std::min(i + delta, T - 1);
                    shifted.vars.segment(i * NV, NV) = warm_->vars.segment(src * NV, NV);
                    shifted.tw_sign[i] = warm_->tw_sign[src];
                }
            }
            warm_ptr = &shifted;
        }
        RelaxedSolution relaxed;
        plan_ = plan_horizon(x, fc, cfg_, params_, warm_ptr, &relaxed);
        warm_ = std::move(relaxed);
        plan_origin_ = k;
        offset = 0;
    }
    return plan_.inputs[offset];
}

}  // namespace dcep
