#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "dcep/basis.hpp"
#include "dcep/psd_lsq.hpp"
#include "dcep/simulate.hpp"

namespace dcep {

/// Per-step objective: electricity cost plus a load-tracking penalty. The
/// tracking error is expressed in MW so the two terms are commensurate.
double stage_cost(const PlantOutputs& outputs, double rho, double q_L_ref, double kappa,
                  double t_s);

/// Temporal-difference residual c + gamma*theta.phi' - theta.phi; linear in
/// theta.
double td_residual(double cost, double gamma, const Eigen::VectorXd& theta,
                   const Eigen::VectorXd& phi_next, const Eigen::VectorXd& phi_curr);

NlpConfig greedy_solver_config();

/// Minimizer of the learned Q over the admissible command set: one convex
/// box-constrained solve per candidate chiller count, cheapest taken, ties
/// broken toward fewer chillers. Throws only if every count fails to solve.
ControlInput greedy_action(const RlState& x, const Eigen::VectorXd& theta, const BasisSpec& spec,
                           const PlantParams& p, const NlpConfig& solver = greedy_solver_config());

struct Transition {
    RlState x;
    ControlInput u;
    double cost = 0.0;
    RlState x_next;
    ControlInput u_next_policy;  // improved-policy action at x_next
};

/// Regularized PSD-constrained least-squares fit of the Q parameters to a
/// batch of temporal-difference residuals.
Eigen::VectorXd policy_evaluation(const std::vector<Transition>& batch,
                                  const Eigen::VectorXd& theta_bar, double alpha, double gamma,
                                  const BasisSpec& spec, const PsdLsqConfig& cfg = {});

struct TrainingConfig {
    double gamma = 0.97;
    double kappa = 500.0;
    double beta = 100.0;  // proximal gain schedule alpha_j = j / beta
    int T_sim = 432;      // rollout length per iteration
    int N_pol = 50;       // policy improvements
    std::uint64_t seed = 1;
    int explore_switch_iter = 5;
    std::array<double, 3> nu_early{0.0, 0.1, 0.9};  // policy / random / baseline
    std::array<double, 3> nu_late{0.5, 0.25, 0.25};

    static TrainingConfig from_config(const KeyValueFile& kv);
    void to_config(KeyValueFile& kv) const;
};

struct TrainResult {
    std::vector<Eigen::VectorXd> thetas;  // theta^0 .. theta^{N_pol}
    std::vector<double> delta_norm;       // |theta^{j+1} - theta^j| per iteration
    std::vector<double> rollout_cost;     // summed stage cost of each rollout
    int discarded_transitions = 0;
};

/// Batch off-policy iteration: roll the plant out under the exploration
/// mixture, compute improved-policy actions for the visited states, fit the
/// Q parameters, repeat. Deterministic for a fixed seed.
TrainResult train(const Scenario& sc, const PlantState& x0, const PlantParams& p,
                  const BasisSpec& spec, const TrainingConfig& tc, const BaselineConfig& bc,
                  const NlpConfig& greedy_nlp = greedy_solver_config(),
                  const NlpConfig& step_solver = default_step_solver(),
                  const PsdLsqConfig& lsq = {});

/// Closed-loop evaluation of every candidate on a held-out scenario; returns
/// the index of the cheapest (ties toward the earliest iterate). A candidate
/// whose run fails is disqualified.
int select_best_policy(const std::vector<Eigen::VectorXd>& thetas, const Scenario& eval_sc,
                       const PlantState& x0, const PlantParams& p, const BasisSpec& spec,
                       double kappa, const NlpConfig& greedy_nlp = greedy_solver_config(),
                       const NlpConfig& step_solver = default_step_solver(),
                       std::vector<double>* costs_out = nullptr);

class RlController : public Controller {
public:
    RlController(Eigen::VectorXd theta, BasisSpec spec, PlantParams params,
                 NlpConfig solver = greedy_solver_config())
        : theta_(std::move(theta)), spec_(std::move(spec)), params_(std::move(params)),
          solver_(solver) {}
    std::string name() const override { return "rl"; }
    ControlInput decide(const PlantState& x, const Scenario& sc, int k) override;

private:
    Eigen::VectorXd theta_;
    BasisSpec spec_;
    PlantParams params_;
    NlpConfig solver_;
};

}  // namespace dcep
