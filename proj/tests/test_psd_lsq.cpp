#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "dcep/psd_lsq.hpp"

using namespace dcep;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SymmetricEmbedding full2x2() {
    SymmetricEmbedding e;
    e.dim = 2;
    e.terms = {{0, 0}, {0, 1}, {1, 1}};
    return e;
}

double min_eig(const MatrixXd& P) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(P, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Exhaustive zooming grid over the PSD cone of 2x2 matrices.
VectorXd grid_oracle_2x2(const VectorXd& theta_target, double alpha, const VectorXd& theta_bar) {
    double ca = 1.5, cb = 0.0, cc = 1.5, half = 2.5;
    VectorXd best(3);
    double best_f = 1e300;
    for (int level = 0; level < 6; ++level) {
        const int N = 41;
        for (int ia = 0; ia < N; ++ia)
            for (int ib = 0; ib < N; ++ib)
                for (int ic = 0; ic < N; ++ic) {
                    double a = ca + half * (2.0 * ia / (N - 1) - 1.0);
                    double bb = cb + half * (2.0 * ib / (N - 1) - 1.0);
                    double c = cc + half * (2.0 * ic / (N - 1) - 1.0);
                    if (a < 0 || c < 0 || a * c < bb * bb) continue;
                    VectorXd th(3);
                    th << a, 2.0 * bb, c;
                    double f = (th - theta_target).norm() + alpha * (th - theta_bar).norm();
                    if (f < best_f) {
                        best_f = f;
                        best = th;
                    }
                }
        ca = best[0];
        cb = best[1] / 2.0;
        cc = best[2];
        half *= 0.12;
    }
    return best;
}

}  // namespace

TEST_CASE("embedding round trip and validation") {
    auto e = full2x2();
    e.validate();
    VectorXd th(3);
    th << 2.0, 3.0, 1.0;
    MatrixXd P = e.matrix(th);
    CHECK(P(0, 1) == doctest::Approx(1.5));
    CHECK(P(1, 0) == doctest::Approx(1.5));
    CHECK(e.from_matrix(P).isApprox(th));

    SymmetricEmbedding bad = e;
    bad.terms.push_back({0, 0});
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("pattern-plus-cone projection") {
    SymmetricEmbedding e;
    e.dim = 3;
    e.terms = {{0, 0}, {1, 1}, {2, 2}, {0, 1}};  // (0,2) and (1,2) structurally zero
    MatrixXd P(3, 3);
    P << 1, -2, 5, -2, 1, 5, 5, 5, -3;
    MatrixXd Q = project_pattern_psd(P, e, 400, 1e-10);
    CHECK(Q(0, 2) == doctest::Approx(0.0));
    CHECK(Q(1, 2) == doctest::Approx(0.0));
    CHECK(min_eig(Q) >= -1e-8);
    CHECK((Q - Q.transpose()).norm() < 1e-12);
}

TEST_CASE("feasible unconstrained optimum is returned untouched") {
    auto e = full2x2();
    VectorXd theta0(3);
    theta0 << 2.0, 1.0, 1.5;  // P = [[2, .5], [.5, 1.5]] is PD
    PsdLsqProblem prob;
    prob.A = MatrixXd::Identity(3, 3);
    prob.b = -theta0;
    prob.theta_bar = VectorXd::Zero(3);
    prob.alpha = 0.0;
    prob.embed = e;
    VectorXd got = solve_psd_lsq(prob);
    CHECK((got - theta0).norm() < 1e-6);
}

TEST_CASE("huge proximal gain pins the answer to theta_bar") {
    auto e = full2x2();
    VectorXd theta_bar(3);
    theta_bar << 1.0, 0.4, 2.0;  // feasible
    PsdLsqProblem prob;
    prob.A = MatrixXd::Identity(3, 3);
    prob.b = VectorXd::Constant(3, 5.0);
    prob.theta_bar = theta_bar;
    prob.alpha = 1e9;
    prob.embed = e;
    VectorXd got = solve_psd_lsq(prob);
    CHECK((got - theta_bar).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("matches the exhaustive 2x2 oracle") {
    auto e = full2x2();
    SUBCASE("projection of an indefinite target") {
        VectorXd target(3);
        target << 1.0, 3.0, 1.0;  // embeds to eigenvalues {-0.5, 2.5}
        PsdLsqProblem prob;
        prob.A = MatrixXd::Identity(3, 3);
        prob.b = -target;
        prob.theta_bar = VectorXd::Zero(3);
        prob.alpha = 0.0;
        prob.embed = e;
        VectorXd got = solve_psd_lsq(prob);
        VectorXd want = grid_oracle_2x2(target, 0.0, prob.theta_bar);
        CHECK((got - want).lpNorm<Eigen::Infinity>() < 1e-3);
    }
    SUBCASE("with a proximal anchor") {
        VectorXd target(3);
        target << 0.5, 2.4, 0.8;
        VectorXd anchor(3);
        anchor << 0.3, 0.0, 0.3;
        PsdLsqProblem prob;
        prob.A = MatrixXd::Identity(3, 3);
        prob.b = -target;
        prob.theta_bar = anchor;
        prob.alpha = 0.5;
        prob.embed = e;
        VectorXd got = solve_psd_lsq(prob);
        VectorXd want = grid_oracle_2x2(target, 0.5, anchor);
        CHECK((got - want).lpNorm<Eigen::Infinity>() < 1e-3);
    }
}

TEST_CASE("solutions always embed to near-PSD matrices") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0, 1);
    SymmetricEmbedding e;
    e.dim = 5;
    e.terms = {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}, {0, 1}, {1, 2}, {2, 3}, {0, 4}};
    const int d = static_cast<int>(e.terms.size());
    for (int trial = 0; trial < 20; ++trial) {
        PsdLsqProblem prob;
        prob.A = MatrixXd::NullaryExpr(3 * d, d, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
        prob.b = VectorXd::NullaryExpr(3 * d, [&](Eigen::Index) { return gauss(rng); });
        prob.theta_bar = VectorXd::Zero(d);
        prob.alpha = 0.1;
        prob.embed = e;
        VectorXd th = solve_psd_lsq(prob);
        MatrixXd P = e.matrix(th);
        CHECK(min_eig(P) >= -1e-8);
        CHECK((P - P.transpose()).norm() < 1e-12);
    }
}

TEST_CASE("invalid inputs are rejected") {
    auto e = full2x2();
    PsdLsqProblem prob;
    prob.A = MatrixXd::Identity(2, 3);  // fewer rows than parameters
    prob.b = VectorXd::Zero(2);
    prob.theta_bar = VectorXd::Zero(3);
    prob.embed = e;
    CHECK_THROWS_AS(solve_psd_lsq(prob), std::invalid_argument);

    prob.A = MatrixXd::Identity(3, 3);
    prob.b = VectorXd::Constant(3, std::nan(""));
    prob.theta_bar = VectorXd::Zero(3);
    CHECK_THROWS_AS(solve_psd_lsq(prob), std::invalid_argument);

    prob.b = VectorXd::Zero(3);
    prob.alpha = -1.0;
    CHECK_THROWS_AS(solve_psd_lsq(prob), std::invalid_argument);
}
