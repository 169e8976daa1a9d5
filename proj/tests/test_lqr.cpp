#include "telewip/dynamics.hpp"

#include "doctest.h"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <random>

using namespace telewip;

TEST_CASE("double integrator") {
    Eigen::MatrixXd A(2, 2), B(2, 1), Q = Eigen::MatrixXd::Identity(2, 2), R(1, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    R << 1;
    const LqrSolution sol = solve_care(A, B, Q, R);
    CHECK(sol.K(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(sol.K(0, 1) - std::sqrt(3.0)) < 1e-6);
    CHECK(riccati_residual(A, B, Q, R, sol.P) < 1e-9);
    Eigen::MatrixXd P_exact(2, 2);
    P_exact << std::sqrt(3.0), 1.0, 1.0, std::sqrt(3.0);
    CHECK((sol.P - P_exact).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(spectral_abscissa(A - B * sol.K) < 0.0);
}

TEST_CASE("cost scaling leaves the gain unchanged") {
    Eigen::MatrixXd A(2, 2), B(2, 1), Q = Eigen::MatrixXd::Identity(2, 2), R(1, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    R << 1;
    const Eigen::MatrixXd K = solve_lqr(A, B, Q, R);
    for (double c : {0.01, 3.0, 250.0}) {
        const Eigen::MatrixXd Kc = solve_lqr(A, B, c * Q, c * R);
        CHECK((K - Kc).cwiseAbs().maxCoeff() < 1e-9);
    }
    const LqrDesign d1 = design_balance_lqr(WipParams{}, LqrWeights{});
    LqrWeights scaled;
    for (double& q : scaled.q) q *= 7.0;
    scaled.r *= 7.0;
    const LqrDesign d7 = design_balance_lqr(WipParams{}, scaled);
    CHECK((d1.K - d7.K).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("random stabilizable systems") {
    std::mt19937_64 rng(20240611);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> dim(2, 6);
    int solved = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const int n = dim(rng);
        const int m = 1 + trial % 3;
        Eigen::MatrixXd A(n, n), B(n, m), C(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = gauss(rng), C(i, j) = gauss(rng);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) B(i, j) = gauss(rng);
        const Eigen::MatrixXd Q = C.transpose() * C + Eigen::MatrixXd::Identity(n, n);
        const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(m, m);
        CAPTURE(trial);
        CAPTURE(n);
        CAPTURE(m);
        const LqrSolution sol = solve_care(A, B, Q, R);
        CHECK(riccati_residual(A, B, Q, R, sol.P) < 1e-8);
        CHECK(spectral_abscissa(A - B * sol.K) < 0.0);
        CHECK((sol.P - sol.P.transpose()).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + sol.P.cwiseAbs().maxCoeff()));
        CHECK(sol.P.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() > 0.0);
        ++solved;
    }
    CHECK(solved >= 20);
}

TEST_CASE("optimal gain beats perturbed gains on the quadratic cost") {
    // J(K) = trace(P_K X0) with P_K from the closed-loop Lyapunov equation; the
    // Riccati gain should minimize it.
    Eigen::MatrixXd A(2, 2), B(2, 1), Q = Eigen::MatrixXd::Identity(2, 2), R(1, 1);
    A << 0, 1, 2, -0.5;
    B << 0, 1;
    R << 2;
    const Eigen::MatrixXd K = solve_lqr(A, B, Q, R);
    auto cost = [&](const Eigen::MatrixXd& Kt) {
        const Eigen::MatrixXd Ac = A - B * Kt;
        const Eigen::MatrixXd W = Q + Kt.transpose() * R * Kt;
        // Vectorized Lyapunov solve, written independently of the library.
        Eigen::MatrixXd L = Eigen::kroneckerProduct(Eigen::MatrixXd::Identity(2, 2), Ac.transpose());
        L += Eigen::kroneckerProduct(Ac.transpose(), Eigen::MatrixXd::Identity(2, 2));
        Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(W.data(), 4);
        Eigen::VectorXd p = L.fullPivLu().solve(-w);
        return p(0) + p(3);
    };
    const double best = cost(K);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 0.2);
    for (int i = 0; i < 50; ++i) {
        Eigen::MatrixXd Kp = K;
        Kp(0, 0) += gauss(rng);
        Kp(0, 1) += gauss(rng);
        if (spectral_abscissa(A - B * Kp) >= 0.0) continue;
        CHECK(cost(Kp) >= best - 1e-9);
    }
}

TEST_CASE("non-stabilizable pair is rejected") {
    Eigen::MatrixXd A(2, 2), B(2, 1), Q = Eigen::MatrixXd::Identity(2, 2), R(1, 1);
    A << 1, 0, 0, -1;
    B << 0, 1;
    R << 1;
    CHECK_THROWS_AS(solve_lqr(A, B, Q, R), DesignError);
}

TEST_CASE("bad weights are rejected") {
    Eigen::MatrixXd A(2, 2), B(2, 1), Q = Eigen::MatrixXd::Identity(2, 2), R(1, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    R << -1;
    CHECK_THROWS_AS(solve_lqr(A, B, Q, R), DesignError);
    R << 1;
    Eigen::MatrixXd Qa = Q;
    Qa(0, 1) = 0.5;
    CHECK_THROWS_AS(solve_lqr(A, B, Qa, R), DesignError);
    CHECK_THROWS_AS(solve_lqr(A, Eigen::MatrixXd::Ones(3, 1), Q, R), DesignError);
}

TEST_CASE("WIP design is stabilizing with a small residual") {
    for (double mass : {8.0, 15.0, 30.0}) {
        WipParams p;
        p.body_mass = mass;
        const LqrDesign d = design_balance_lqr(p, LqrWeights{});
        Eigen::MatrixXd R(1, 1);
        R << d.R;
        const LqrSolution sol = solve_care(d.A, d.B, d.Q, R);
        CHECK(riccati_residual(d.A, d.B, d.Q, R, sol.P) < 1e-8);
        CHECK(spectral_abscissa(d.A - d.B * d.K) < 0.0);
    }
}
