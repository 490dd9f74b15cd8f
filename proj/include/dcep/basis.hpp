#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "dcep/plant.hpp"
#include "dcep/psd_lsq.hpp"

namespace dcep {

/// Expanded controller state: the plant state plus the measured exogenous
/// signals (weather, load reference, spot price and its backward average).
struct RlState {
    PlantState plant;
    double T_oawb = 26.0;
    double q_L_ref = 1313.0;
    double rho = 0.08;
    double rho_bar = 0.08;

    Eigen::Matrix<double, 12, 1> to_vector() const;
};

inline constexpr int kRlStateDim = 12;
inline constexpr int kInputDim = 5;
inline constexpr int kJointDim = kRlStateDim + kInputDim;  // concatenated [x, u]
inline constexpr int kBasisSize = 36;

/// Component order of the concatenated [x, u] vector the basis indexes into:
///  0 T_lwr, 1 S_tww, 2 S_twc, 3 T_twc, 4 T_tww, 5 T_chws, 6 T_cwr, 7 T_cws,
///  8 T_oawb, 9 q_L_ref, 10 rho, 11 rho_bar, 12 m_lw, 13 m_tw, 14 n_ch,
/// 15 m_cw, 16 m_oa.
struct BasisSpec {
    std::vector<std::pair<int, int>> terms;  // quadratic monomials z_i * z_j, i <= j
    Eigen::VectorXd scales;                  // per-component normalization references

    /// The shipped 36-term basis: squares of every retained component plus the
    /// strongly coupled within-loop and price-storage cross terms. S_tww and
    /// T_tww are dropped (redundant with S_twc and T_lwr); cross-loop pairs
    /// with no direct equation coupling (e.g. m_oa with m_tw) are excluded.
    static BasisSpec standard();

    void validate() const;

    Eigen::Matrix<double, kJointDim, 1> normalized(const RlState& x, const ControlInput& u) const;

    SymmetricEmbedding embedding() const;

    void save(const std::string& path) const;
    static BasisSpec load(const std::string& path);
};

/// Quadratic feature vector psi(x, u), one entry per basis term.
Eigen::VectorXd features(const RlState& x, const ControlInput& u, const BasisSpec& spec);

/// theta . features(x, u); identical to [x,u] P_theta [x,u]' by construction.
double q_value(const Eigen::VectorXd& theta, const RlState& x, const ControlInput& u,
               const BasisSpec& spec);

/// The symmetric matrix P_theta over the normalized joint vector.
Eigen::MatrixXd theta_matrix(const Eigen::VectorXd& theta, const BasisSpec& spec);

/// Small positive-definite start: diag_value on every squared term, zero
/// elsewhere (PSD by construction).
Eigen::VectorXd initial_theta(const BasisSpec& spec, double diag_value = 1e-3);

void save_theta_csv(const Eigen::VectorXd& theta, const std::string& path);
Eigen::VectorXd load_theta_csv(const std::string& path);

}  // namespace dcep
