#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

namespace dcep {

/// Smooth box-constrained problem with equality constraints:
///   min f(v)  s.t.  c(v) = 0,  lower <= v <= upper.
/// Inequalities other than bounds are expected to be rewritten by the caller
/// as an equality plus a bounded slack variable.
struct NlpProblem {
    int n = 0;  // number of variables
    int m = 0;  // number of equality residuals (0 allowed)

    /// Returns f(v); fills *grad with the gradient when grad != nullptr.
    std::function<double(const Eigen::VectorXd& v, Eigen::VectorXd* grad)> objective;

    /// Fills c(v) (size m). May be empty when m == 0.
    std::function<void(const Eigen::VectorXd& v, Eigen::VectorXd& c)> equality;

    /// Fills out = J(v)^T y where J is the m x n Jacobian of c.
    std::function<void(const Eigen::VectorXd& v, const Eigen::VectorXd& y, Eigen::VectorXd& out)>
        eq_jacobian_tprod;

    Eigen::VectorXd lower, upper, x0;
};

struct NlpConfig {
    double eq_tol = 1e-6;    // inf-norm of the equality residual at convergence
    double grad_tol = 1e-5;  // inf-norm of the projected gradient at convergence
    int max_outer = 200;
    int max_inner = 500;
    double mu0 = 10.0;       // initial penalty weight
    double mu_growth = 10.0;
    double mu_max = 1e12;
    int lbfgs_mem = 10;
    std::string trace_path;  // when set, per-iteration CSV (iter,objective,residual)

    static NlpConfig from_config(const class KeyValueFile& kv, const std::string& prefix = "solver");
};

struct SolveReport {
    Eigen::VectorXd x;
    double objective = 0.0;
    double eq_residual_norm = 0.0;  // inf-norm at x
    double proj_grad_norm = 0.0;    // inf-norm of projected Lagrangian gradient at x
    int outer_iters = 0;
    int inner_iters = 0;
    bool converged = false;
};

/// Augmented-Lagrangian outer loop with projected L-BFGS inner iterations.
/// Never evaluates the problem outside the box; hitting the iteration caps
/// yields a non-converged report rather than an exception.
SolveReport solve_nlp(const NlpProblem& problem, const NlpConfig& config = {});

}  // namespace dcep
