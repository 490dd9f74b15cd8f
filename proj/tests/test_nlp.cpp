#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "dcep/nlp.hpp"

using namespace dcep;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

NlpProblem quadratic_problem(const MatrixXd& H, const VectorXd& g, const MatrixXd& A,
                             const VectorXd& b, double box) {
    NlpProblem prob;
    prob.n = static_cast<int>(H.rows());
    prob.m = static_cast<int>(A.rows());
    prob.objective = [H, g](const VectorXd& v, VectorXd* grad) {
        if (grad) *grad = H * v + g;
        return 0.5 * v.dot(H * v) + g.dot(v);
    };
    if (prob.m > 0) {
        prob.equality = [A, b](const VectorXd& v, VectorXd& c) { c = A * v - b; };
        prob.eq_jacobian_tprod = [A](const VectorXd&, const VectorXd& y, VectorXd& out) {
            out = A.transpose() * y;
        };
    }
    prob.lower = VectorXd::Constant(prob.n, -box);
    prob.upper = VectorXd::Constant(prob.n, box);
    prob.x0 = VectorXd::Zero(prob.n);
    return prob;
}

}  // namespace

TEST_CASE("projection onto a line") {
    MatrixXd H = MatrixXd::Identity(2, 2) * 2.0;  // |v|^2
    VectorXd g = VectorXd::Zero(2);
    MatrixXd A(1, 2);
    A << 1, 1;
    VectorXd b(1);
    b << 1;
    auto prob = quadratic_problem(H, g, A, b, 10.0);
    SolveReport rep = solve_nlp(prob);
    CHECK(rep.converged);
    CHECK(rep.x[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(rep.x[1] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("active bound") {
    MatrixXd H(1, 1);
    H << 2.0;
    VectorXd g(1);
    g << -4.0;  // (v-2)^2 up to a constant
    auto prob = quadratic_problem(H, g, MatrixXd(0, 1), VectorXd(0), 1.0);
    prob.lower[0] = 0.0;
    prob.upper[0] = 1.0;
    SolveReport rep = solve_nlp(prob);
    CHECK(rep.converged);
    CHECK(rep.x[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("random equality-constrained QPs match their KKT solutions") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0, 1);
    NlpConfig cfg;
    cfg.eq_tol = 1e-10;
    cfg.grad_tol = 1e-9;
    cfg.max_outer = 120;

    int done = 0;
    while (done < 50) {
        int n = 3 + static_cast<int>(rng() % 6);
        int m = 1 + static_cast<int>(rng() % std::max(1, n - 2));
        MatrixXd Q(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) Q(i, j) = gauss(rng);
        MatrixXd H = Q.transpose() * Q + 0.5 * MatrixXd::Identity(n, n);
        VectorXd g(n);
        MatrixXd A(m, n);
        VectorXd b(m);
        for (int i = 0; i < n; ++i) g[i] = gauss(rng);
        for (int i = 0; i < m; ++i) {
            b[i] = 0.3 * gauss(rng);
            for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
        }

        MatrixXd K(n + m, n + m);
        K.setZero();
        K.topLeftCorner(n, n) = H;
        K.topRightCorner(n, m) = A.transpose();
        K.bottomLeftCorner(m, n) = A;
        VectorXd rhs(n + m);
        rhs.head(n) = -g;
        rhs.tail(m) = b;
        VectorXd sol = K.fullPivLu().solve(rhs);
        VectorXd v_star = sol.head(n);
        if (v_star.lpNorm<Eigen::Infinity>() > 8.0) continue;  // keep the box inactive

        auto prob = quadratic_problem(H, g, A, b, 10.0);
        SolveReport rep = solve_nlp(prob, cfg);
        CHECK(rep.converged);
        CHECK((rep.x - v_star).lpNorm<Eigen::Infinity>() < 1e-5);
        ++done;
    }
}

TEST_CASE("iteration cap yields a non-converged report, not an exception") {
    MatrixXd H = MatrixXd::Identity(2, 2);
    VectorXd g = VectorXd::Zero(2);
    MatrixXd A(1, 2);
    A << 1, 1;
    VectorXd b(1);
    b << 100.0;  // unreachable inside the box
    auto prob = quadratic_problem(H, g, A, b, 1.0);
    NlpConfig cfg;
    cfg.max_outer = 5;
    cfg.max_inner = 50;
    SolveReport rep;
    CHECK_NOTHROW(rep = solve_nlp(prob, cfg));
    CHECK(!rep.converged);
    CHECK(rep.eq_residual_norm > 1.0);
    // Never outside the box.
    CHECK(rep.x.lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);
}

TEST_CASE("objective trace is non-increasing on a pure box problem") {
    MatrixXd H(3, 3);
    H.setZero();
    H.diagonal() << 2, 4, 6;
    VectorXd g(3);
    g << -1, -2, -3;
    auto prob = quadratic_problem(H, g, MatrixXd(0, 3), VectorXd(0), 5.0);
    prob.x0 << 4.0, -4.0, 4.0;
    NlpConfig cfg;
    cfg.trace_path = "nlp_trace_test.csv";
    SolveReport rep = solve_nlp(prob, cfg);
    CHECK(rep.converged);

    std::ifstream f(cfg.trace_path);
    REQUIRE(f.good());
    std::string line;
    std::getline(f, line);  // header
    double prev = 1e300;
    int rows = 0;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        int it;
        char c;
        double obj, res;
        ss >> it >> c >> obj >> c >> res;
        CHECK(obj <= prev + 1e-12);
        prev = obj;
        ++rows;
    }
    CHECK(rows >= 1);
    std::remove(cfg.trace_path.c_str());
}

TEST_CASE("deterministic given identical inputs") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0, 1);
    MatrixXd Q(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) Q(i, j) = gauss(rng);
    MatrixXd H = Q.transpose() * Q + MatrixXd::Identity(4, 4);
    VectorXd g = VectorXd::Ones(4);
    MatrixXd A(1, 4);
    A << 1, -1, 2, 0.5;
    VectorXd b(1);
    b << 0.7;
    auto prob = quadratic_problem(H, g, A, b, 10.0);
    SolveReport r1 = solve_nlp(prob);
    SolveReport r2 = solve_nlp(prob);
    CHECK(r1.x == r2.x);
    CHECK(r1.inner_iters == r2.inner_iters);
}

TEST_CASE("bad problems are rejected") {
    NlpProblem prob;
    prob.n = 0;
    CHECK_THROWS_AS(solve_nlp(prob), std::invalid_argument);

    MatrixXd H = MatrixXd::Identity(2, 2);
    auto ok = quadratic_problem(H, VectorXd::Zero(2), MatrixXd(0, 2), VectorXd(0), 1.0);
    ok.lower[0] = 2.0;  // crossed bounds
    CHECK_THROWS_AS(solve_nlp(ok), std::invalid_argument);
}
