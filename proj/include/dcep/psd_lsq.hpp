#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace dcep {

/// Linear, injective embedding of a parameter vector into a structurally
/// sparse symmetric matrix: entry l maps to P(i,j) = P(j,i) = theta_l / 2 for
/// i != j and P(i,i) = theta_l on the diagonal, so that z'Pz equals the sum of
/// theta_l * z_i * z_j over the listed terms.
struct SymmetricEmbedding {
    int dim = 0;
    std::vector<std::pair<int, int>> terms;  // (i, j) with i <= j, no duplicates

    void validate() const;
    Eigen::MatrixXd matrix(const Eigen::VectorXd& theta) const;
    Eigen::VectorXd from_matrix(const Eigen::MatrixXd& P) const;
};

/// min_theta ||A theta + b||_2 + alpha ||theta - theta_bar||_2
/// subject to the embedded matrix being positive semidefinite.
struct PsdLsqProblem {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd theta_bar;
    double alpha = 0.0;
    SymmetricEmbedding embed;
};

struct PsdLsqConfig {
    int max_iters = 20000;
    double rel_tol = 1e-13;    // stop when the objective stalls
    double smooth_eps = 1e-9;  // smoothing of the two norm kinks
    int dykstra_iters = 300;   // per projection
    double min_eig_tol = 1e-8;
};

/// Projects a symmetric matrix onto the PSD matrices with the embedding's
/// sparsity pattern (Dykstra alternation of eigenvalue clipping and pattern
/// restriction). The result carries the pattern exactly.
Eigen::MatrixXd project_pattern_psd(const Eigen::MatrixXd& P, const SymmetricEmbedding& embed,
                                    int iters, double min_eig_tol);

/// Projected-gradient solve of the problem above. The returned parameters
/// always embed to a matrix with minimum eigenvalue >= -min_eig_tol.
Eigen::VectorXd solve_psd_lsq(const PsdLsqProblem& problem, const PsdLsqConfig& config = {});

}  // namespace dcep
