#include "dcep/psd_lsq.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dcep {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SymmetricEmbedding::validate() const {
    if (dim <= 0) throw std::invalid_argument("embedding: dim must be positive");
    std::set<std::pair<int, int>> seen;
    for (auto [i, j] : terms) {
        if (i < 0 || j < 0 || i >= dim || j >= dim || i > j)
            throw std::invalid_argument("embedding: term indices must satisfy 0 <= i <= j < dim");
        if (!seen.insert({i, j}).second)
            throw std::invalid_argument("embedding: duplicate term breaks injectivity");
    }
}

MatrixXd SymmetricEmbedding::matrix(const VectorXd& theta) const {
    if (theta.size() != static_cast<long>(terms.size()))
        throw std::invalid_argument("embedding: theta size mismatch");
    MatrixXd P = MatrixXd::Zero(dim, dim);
    for (size_t l = 0; l < terms.size(); ++l) {
        auto [i, j] = terms[l];
        if (i == j)
            P(i, i) = theta[l];
        else {
            P(i, j) = 0.5 * theta[l];
            P(j, i) = 0.5 * theta[l];
        }
    }
    return P;
}

VectorXd SymmetricEmbedding::from_matrix(const MatrixXd& P) const {
    VectorXd theta(terms.size());
    for (size_t l = 0; l < terms.size(); ++l) {
        auto [i, j] = terms[l];
        theta[l] = i == j ? P(i, i) : P(i, j) + P(j, i);
    }
    return theta;
}

namespace {

MatrixXd clip_psd(const MatrixXd& P) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (P + P.transpose()));
    VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd restrict_pattern(const MatrixXd& P, const SymmetricEmbedding& embed) {
    MatrixXd out = MatrixXd::Zero(P.rows(), P.cols());
    MatrixXd sym = 0.5 * (P + P.transpose());
    for (auto [i, j] : embed.terms) {
        out(i, j) = sym(i, j);
        out(j, i) = sym(j, i);
    }
    return out;
}

double min_eigenvalue(const MatrixXd& P) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(P, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace

MatrixXd project_pattern_psd(const MatrixXd& P, const SymmetricEmbedding& embed, int iters,
                             double min_eig_tol) {
    // Dykstra's alternating projections; finishing on the pattern restriction
    // keeps the sparsity exact while the eigenvalue clipping converges.
    MatrixXd x = restrict_pattern(P, embed);
    MatrixXd p_inc = MatrixXd::Zero(x.rows(), x.cols());
    MatrixXd q_inc = MatrixXd::Zero(x.rows(), x.cols());
    MatrixXd y;
    for (int it = 0; it < iters; ++it) {
        y = clip_psd(x + p_inc);
        p_inc = x + p_inc - y;
        MatrixXd x_new = restrict_pattern(y + q_inc, embed);
        q_inc = y + q_inc - x_new;
        double change = (x_new - x).norm();
        x = x_new;
        if (change < 1e-14 && min_eigenvalue(x) >= -min_eig_tol) break;
        if (it > 10 && min_eigenvalue(x) >= -0.01 * min_eig_tol) break;
    }
    return x;
}

VectorXd solve_psd_lsq(const PsdLsqProblem& problem, const PsdLsqConfig& config) {
    problem.embed.validate();
    const int d = static_cast<int>(problem.embed.terms.size());
    if (problem.A.cols() != d || problem.theta_bar.size() != d)
        throw std::invalid_argument("solve_psd_lsq: dimension mismatch");
    if (problem.A.rows() < d)
        throw std::invalid_argument("solve_psd_lsq: need at least d residual rows");
    if (problem.A.rows() != problem.b.size())
        throw std::invalid_argument("solve_psd_lsq: A rows and b size differ");
    if (!problem.A.allFinite() || !problem.b.allFinite() || !problem.theta_bar.allFinite())
        throw std::invalid_argument("solve_psd_lsq: non-finite residual data");
    if (problem.alpha < 0) throw std::invalid_argument("solve_psd_lsq: alpha must be >= 0");

    // Work in coordinates isometric to the Frobenius norm of the embedded
    // matrix (off-diagonal parameters scaled by sqrt(2)), so the Dykstra
    // projection and the gradient steps live in the same metric.
    VectorXd wscale(d);
    for (int l = 0; l < d; ++l)
        wscale[l] = problem.embed.terms[l].first == problem.embed.terms[l].second
                        ? 1.0
                        : std::sqrt(2.0);

    const double eps = config.smooth_eps;
    auto objective = [&](const VectorXd& eta, VectorXd* grad) {
        VectorXd th = wscale.cwiseProduct(eta);
        VectorXd r = problem.A * th + problem.b;
        double nr = std::sqrt(r.squaredNorm() + eps * eps);
        VectorXd dtheta = th - problem.theta_bar;
        double np = std::sqrt(dtheta.squaredNorm() + eps * eps);
        if (grad) {
            VectorXd g_theta = problem.A.transpose() * (r / nr) + problem.alpha * (dtheta / np);
            *grad = wscale.cwiseProduct(g_theta);
        }
        return nr + problem.alpha * np;
    };

    auto project = [&](const VectorXd& eta) -> VectorXd {
        VectorXd th = wscale.cwiseProduct(eta);
        MatrixXd P = project_pattern_psd(problem.embed.matrix(th), problem.embed,
                                         config.dykstra_iters, config.min_eig_tol);
        return problem.embed.from_matrix(P).cwiseQuotient(wscale);
    };

    VectorXd eta = project(problem.theta_bar.cwiseQuotient(wscale));
    VectorXd grad(d), trial(d);
    double f = objective(eta, &grad);
    double step = 1.0 / std::max(1.0, grad.norm());
    int stalled = 0;
    for (int it = 0; it < config.max_iters; ++it) {
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            trial = project(eta - step * grad);
            double ft = objective(trial, nullptr);
            double dist = (trial - eta).norm();
            if (dist == 0.0) break;
            if (ft <= f - 1e-4 * dist * dist / step) {
                double drop = f - ft;
                eta = trial;
                f = objective(eta, &grad);
                step *= 1.3;
                moved = true;
                stalled = drop < config.rel_tol * std::max(1.0, std::abs(f)) ? stalled + 1 : 0;
                break;
            }
            step *= 0.5;
        }
        if (!moved || stalled > 80) break;
    }

    // Tighten the cone membership at the final point.
    MatrixXd P = project_pattern_psd(problem.embed.matrix(wscale.cwiseProduct(eta)), problem.embed,
                                     4 * config.dykstra_iters, config.min_eig_tol);
    return problem.embed.from_matrix(P);
}

}  // namespace dcep
