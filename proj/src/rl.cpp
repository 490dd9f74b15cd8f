#include "dcep/rl.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace dcep {

using Eigen::VectorXd;

double stage_cost(const PlantOutputs& outputs, double rho, double q_L_ref, double kappa,
                  double t_s) {
    if (!(kappa > 0)) throw std::invalid_argument("stage_cost: kappa must be positive");
    double dq_MW = (outputs.q_L - q_L_ref) / 1000.0;
    return electricity_cost(outputs.P_tot, rho, t_s) + kappa * dq_MW * dq_MW;
}

double td_residual(double cost, double gamma, const VectorXd& theta, const VectorXd& phi_next,
                   const VectorXd& phi_curr) {
    return cost + gamma * theta.dot(phi_next) - theta.dot(phi_curr);
}

NlpConfig greedy_solver_config() {
    NlpConfig c;
    c.eq_tol = 1e-9;
    c.grad_tol = 1e-7;
    c.max_outer = 30;
    c.max_inner = 300;
    return c;
}

namespace {

RlState make_rl_state(const PlantState& x, const Scenario& sc, int k) {
    int kk = std::min(k, sc.size() - 1);  // hold the last row past the end
    RlState s;
    s.plant = x;
    s.T_oawb = sc.T_oawb[kk];
    s.q_L_ref = sc.q_L_ref[kk];
    s.rho = sc.rho[kk];
    s.rho_bar = sc.rho_bar[kk];
    return s;
}

}  // namespace

ControlInput greedy_action(const RlState& x, const VectorXd& theta, const BasisSpec& spec,
                           const PlantParams& p, const NlpConfig& solver) {
    if (!theta.allFinite()) throw std::invalid_argument("greedy_action: theta must be finite");
    Eigen::MatrixXd P = theta_matrix(theta, spec);
    InputBox box = admissible_input_box(x.plant, p);

    Eigen::Matrix<double, kJointDim, 1> zbase;
    {
        ControlInput dummy{};
        zbase = spec.normalized(x, dummy);
    }
    const auto& scales = spec.scales;

    double best_q = std::numeric_limits<double>::infinity();
    ControlInput best{};
    bool any = false;

    for (int n = 0; n <= p.n_ch_max; ++n) {
        double lo_lw = box.m_lw_lo, hi_lw = box.m_lw_hi;
        if (n == 0) {
            // Supply must balance to zero: m_tw = -m_lw within both boxes.
            lo_lw = std::max(box.m_lw_lo, -box.m_tw_hi);
            hi_lw = std::min(box.m_lw_hi, -box.m_tw_lo);
            if (lo_lw > hi_lw) continue;  // the tank cannot discharge that much
        }

        NlpProblem prob;
        prob.n = 5;  // m_lw, m_tw, m_cw, m_oa, bypass slack
        prob.m = 1;
        prob.lower.resize(5);
        prob.upper.resize(5);
        prob.lower << lo_lw, box.m_tw_lo, box.m_cw_lo, box.m_oa_lo, 0.0;
        prob.upper << hi_lw, box.m_tw_hi, box.m_cw_hi, box.m_oa_hi,
            n == 0 ? 0.0 : 2.0 * p.m_lw_max;
        double rhs = n * p.m_indv;

        prob.objective = [&, n](const VectorXd& v, VectorXd* grad) {
            Eigen::Matrix<double, kJointDim, 1> z = zbase;
            z[12] = v[0] / scales[12];
            z[13] = v[1] / scales[13];
            z[14] = n / scales[14];
            z[15] = v[2] / scales[15];
            z[16] = v[3] / scales[16];
            Eigen::Matrix<double, kJointDim, 1> Pz = P * z;
            if (grad) {
                grad->resize(5);
                (*grad)[0] = 2.0 * Pz[12] / scales[12];
                (*grad)[1] = 2.0 * Pz[13] / scales[13];
                (*grad)[2] = 2.0 * Pz[15] / scales[15];
                (*grad)[3] = 2.0 * Pz[16] / scales[16];
                (*grad)[4] = 0.0;
            }
            return z.dot(Pz);
        };
        prob.equality = [rhs](const VectorXd& v, VectorXd& c) {
            c.resize(1);
            c[0] = v[0] + v[1] + v[4] - rhs;
        };
        prob.eq_jacobian_tprod = [](const VectorXd&, const VectorXd& y, VectorXd& out) {
            out.resize(5);
            out << y[0], y[0], 0.0, 0.0, y[0];
        };

        prob.x0.resize(5);
        if (n == 0) {
            prob.x0 << lo_lw, -lo_lw, 0.5 * (box.m_cw_lo + box.m_cw_hi),
                0.5 * (box.m_oa_lo + box.m_oa_hi), 0.0;
        } else {
            double lw0 = clamp(0.6 * rhs, lo_lw, hi_lw);
            double tw0 = clamp(0.0, box.m_tw_lo, box.m_tw_hi);
            prob.x0 << lw0, tw0, 0.5 * (box.m_cw_lo + box.m_cw_hi),
                0.5 * (box.m_oa_lo + box.m_oa_hi), std::max(0.0, rhs - lw0 - tw0);
        }

        SolveReport rep = solve_nlp(prob, solver);
        if (!rep.converged) continue;
        if (rep.objective < best_q) {
            best_q = rep.objective;
            best.m_lw = rep.x[0];
            best.m_tw = rep.x[1];
            best.n_ch = n;
            best.m_cw = rep.x[2];
            best.m_oa = rep.x[3];
            any = true;
        }
    }
    if (!any) throw std::runtime_error("greedy_action: every chiller-count subproblem failed");
    return best;
}

VectorXd policy_evaluation(const std::vector<Transition>& batch, const VectorXd& theta_bar,
                           double alpha, double gamma, const BasisSpec& spec,
                           const PsdLsqConfig& cfg) {
    if (batch.empty()) throw std::invalid_argument("policy_evaluation: empty batch");
    const int d = static_cast<int>(spec.terms.size());
    PsdLsqProblem prob;
    prob.A.resize(static_cast<long>(batch.size()), d);
    prob.b.resize(static_cast<long>(batch.size()));
    for (size_t k = 0; k < batch.size(); ++k) {
        VectorXd phi = features(batch[k].x, batch[k].u, spec);
        VectorXd phi_next = features(batch[k].x_next, batch[k].u_next_policy, spec);
        prob.A.row(static_cast<long>(k)) = (gamma * phi_next - phi).transpose();
        prob.b[static_cast<long>(k)] = batch[k].cost;
    }
    prob.theta_bar = theta_bar;
    prob.alpha = alpha;
    prob.embed = spec.embedding();
    return solve_psd_lsq(prob, cfg);
}

TrainingConfig TrainingConfig::from_config(const KeyValueFile& kv) {
    TrainingConfig c;
    if (auto v = kv.get_double("rl.gamma")) c.gamma = *v;
    if (auto v = kv.get_double("rl.kappa")) c.kappa = *v;
    if (auto v = kv.get_double("rl.beta")) c.beta = *v;
    if (auto v = kv.get_int("rl.T_sim")) c.T_sim = static_cast<int>(*v);
    if (auto v = kv.get_int("rl.N_pol")) c.N_pol = static_cast<int>(*v);
    if (auto v = kv.get_int("rl.seed")) c.seed = static_cast<std::uint64_t>(*v);
    if (auto v = kv.get_int("rl.explore_switch_iter")) c.explore_switch_iter = static_cast<int>(*v);
    if (!(c.gamma > 0 && c.gamma < 1)) throw std::invalid_argument("rl.gamma must be in (0,1)");
    return c;
}

void TrainingConfig::to_config(KeyValueFile& kv) const {
    kv.set_double("rl.gamma", gamma);
    kv.set_double("rl.kappa", kappa);
    kv.set_double("rl.beta", beta);
    kv.set_int("rl.T_sim", T_sim);
    kv.set_int("rl.N_pol", N_pol);
    kv.set_int("rl.seed", static_cast<long>(seed));
    kv.set_int("rl.explore_switch_iter", explore_switch_iter);
}

TrainResult train(const Scenario& sc, const PlantState& x0, const PlantParams& p,
                  const BasisSpec& spec, const TrainingConfig& tc, const BaselineConfig& bc,
                  const NlpConfig& greedy_nlp, const NlpConfig& step_solver,
                  const PsdLsqConfig& lsq) {
    sc.validate();
    if (sc.size() < tc.T_sim) throw std::invalid_argument("train: scenario shorter than T_sim");

    std::mt19937_64 rng(tc.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    TrainResult out;
    out.thetas.push_back(initial_theta(spec));

    for (int j = 0; j < tc.N_pol; ++j) {
        const VectorXd& theta_j = out.thetas.back();
        const auto& nu = j <= tc.explore_switch_iter ? tc.nu_early : tc.nu_late;

        PlantState x = x0;
        BaselineState bl;
        std::vector<Transition> batch;
        batch.reserve(tc.T_sim);
        double rollout_cost = 0.0;

        for (int k = 0; k < tc.T_sim; ++k) {
            RlState xs = make_rl_state(x, sc, k);
            Disturbance w{sc.T_oawb[k], sc.q_L_ref[k]};

            double pick = unif(rng);
            ControlInput u;
            if (pick < nu[0]) {
                u = greedy_action(xs, theta_j, spec, p, greedy_nlp);
            } else if (pick < nu[0] + nu[1]) {
                InputBox box = admissible_input_box(x, p);
                u.m_lw = box.m_lw_lo + unif(rng) * (box.m_lw_hi - box.m_lw_lo);
                u.m_tw = box.m_tw_lo + unif(rng) * (box.m_tw_hi - box.m_tw_lo);
                u.n_ch = static_cast<int>(unif(rng) * (p.n_ch_max + 1));
                u.n_ch = clamp(u.n_ch, 0, p.n_ch_max);
                u.m_cw = box.m_cw_lo + unif(rng) * (box.m_cw_hi - box.m_cw_lo);
                u.m_oa = box.m_oa_lo + unif(rng) * (box.m_oa_hi - box.m_oa_lo);
            } else {
                u = baseline_step(x, w, sc.rho[k], sc.rho_bar[k], bl, bc, p);
            }
            u = repair_input(u, x, p);

            bool recorded = false;
            PlantStepResult step;
            try {
                step = plant_step(x, u, w, p, step_solver);
                recorded = true;
            } catch (const std::exception&) {
                ++out.discarded_transitions;
                try {
                    u = repair_input(baseline_step(x, w, sc.rho[k], sc.rho_bar[k], bl, bc, p), x, p);
                    step = plant_step(x, u, w, p, step_solver);
                } catch (const std::exception&) {
                    x = x0;  // recover from the initial state; transition dropped
                    bl.note_applied(u);
                    continue;
                }
            }

            double c = stage_cost(step.outputs, sc.rho[k], sc.q_L_ref[k], tc.kappa, p.t_s);
            rollout_cost += c;
            if (recorded) {
                Transition tr;
                tr.x = xs;
                tr.u = u;
                tr.cost = c;
                tr.x_next = make_rl_state(step.next, sc, k + 1);
                batch.push_back(tr);
            }
            bl.note_applied(u);
            x = step.next;
        }

        // Improved-policy actions at the visited next states.
        for (auto& tr : batch) tr.u_next_policy = greedy_action(tr.x_next, theta_j, spec, p, greedy_nlp);

        double alpha = static_cast<double>(j) / tc.beta;
        VectorXd theta_next = policy_evaluation(batch, theta_j, alpha, tc.gamma, spec, lsq);

        out.delta_norm.push_back((theta_next - theta_j).norm());
        out.rollout_cost.push_back(rollout_cost);
        out.thetas.push_back(theta_next);
    }
    return out;
}

int select_best_policy(const std::vector<VectorXd>& thetas, const Scenario& eval_sc,
                       const PlantState& x0, const PlantParams& p, const BasisSpec& spec,
                       double kappa, const NlpConfig& greedy_nlp, const NlpConfig& step_solver,
                       std::vector<double>* costs_out) {
    if (thetas.empty()) throw std::invalid_argument("select_best_policy: no candidates");
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<double> costs;
    costs.reserve(thetas.size());
    for (size_t i = 0; i < thetas.size(); ++i) {
        double total = std::numeric_limits<double>::infinity();
        try {
            RlController ctl(thetas[i], spec, p, greedy_nlp);
            RunReport rep = simulate(ctl, eval_sc, x0, p, step_solver);
            total = 0.0;
            for (const auto& row : rep.trajectory)
                total += stage_cost(row.out, row.rho, row.q_L_ref, kappa, p.t_s);
        } catch (const std::exception&) {
            // disqualified
        }
        costs.push_back(total);
        if (total < best_cost) {
            best_cost = total;
            best = static_cast<int>(i);
        }
    }
    if (costs_out) *costs_out = costs;
    if (best < 0) throw std::runtime_error("select_best_policy: every candidate failed");
    return best;
}

ControlInput RlController::decide(const PlantState& x, const Scenario& sc, int k) {
    RlState xs;
    xs.plant = x;
    xs.T_oawb = sc.T_oawb[k];
    xs.q_L_ref = sc.q_L_ref[k];
    xs.rho = sc.rho[k];
    xs.rho_bar = sc.rho_bar[k];
    return greedy_action(xs, theta_, spec_, params_, solver_);
}

}  // namespace dcep
