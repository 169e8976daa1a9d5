#include "telewip/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace telewip {

namespace {

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Solves Ac' X + X Ac = -W for symmetric X via the Kronecker form. Only meant
// for the small systems used here (n <= ~10).
MatL solve_lyapunov(const MatL& Ac, const MatL& W) {
    const Eigen::Index n = Ac.rows();
    const MatL At = Ac.transpose();
    MatL L = MatL::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        L.block(i * n, i * n, n, n) += At;
        for (Eigen::Index j = 0; j < n; ++j) {
            L.block(i * n, j * n, n, n).diagonal().array() += At(i, j);
        }
    }
    using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const VecL rhs = -Eigen::Map<const VecL>(W.data(), n * n);
    const VecL x = L.fullPivLu().solve(rhs);
    MatL X = Eigen::Map<const MatL>(x.data(), n, n);
    return 0.5L * (X + X.transpose());
}

// A'P + PA - P B R^-1 B' P + Q in extended precision; the quadratic term
// cancels heavily when P is large.
MatL residual_matrix(const MatL& A, const MatL& BRB, const MatL& Q, const MatL& P) {
    return A.transpose() * P + P * A - P * BRB * P + Q;
}

long double inf_norm(const MatL& M) { return M.cwiseAbs().rowwise().sum().maxCoeff(); }

std::string describe(const Eigen::VectorXcd& values) {
    std::ostringstream os;
    os << '[';
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (i) os << ", ";
        os << values(i).real() << (values(i).imag() >= 0 ? "+" : "") << values(i).imag() << 'i';
    }
    os << ']';
    return os.str();
}

}  // namespace

double riccati_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                        const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
    const MatL Bl = B.cast<long double>();
    const MatL BRB = Bl * R.cast<long double>().llt().solve(Bl.transpose());
    return static_cast<double>(
        inf_norm(residual_matrix(A.cast<long double>(), BRB, Q.cast<long double>(), P.cast<long double>())));
}

double spectral_abscissa(const Eigen::MatrixXd& M) {
    const Eigen::VectorXcd ev = M.eigenvalues();
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) best = std::max(best, ev(i).real());
    return best;
}

LqrSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                       const Eigen::MatrixXd& R) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m || R.cols() != m) {
        throw DesignError("solve_care: inconsistent matrix dimensions");
    }
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff())) {
        throw DesignError("solve_care: Q is not symmetric");
    }
    const Eigen::LLT<Eigen::MatrixXd> r_llt(R);
    if (r_llt.info() != Eigen::Success) throw DesignError("solve_care: R is not positive definite");
    const Eigen::MatrixXd BRB = B * r_llt.solve(B.transpose());

    Eigen::MatrixXd H(2 * n, 2 * n);
    H << A, -BRB, -Q, -A.transpose();
    Eigen::ComplexEigenSolver<Eigen::MatrixXd> ces(H);
    if (ces.info() != Eigen::Success) throw DesignError("solve_care: Hamiltonian eigen-decomposition failed");

    const Eigen::VectorXcd& lambda = ces.eigenvalues();
    const double scale = 1.0 + H.cwiseAbs().maxCoeff();
    Eigen::MatrixXcd X(2 * n, n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        if (std::abs(lambda(i).real()) < 1e-10 * scale) {
            throw DesignError("solve_care: Hamiltonian has eigenvalues on the imaginary axis " + describe(lambda) +
                              " (pair not stabilizable or not detectable)");
        }
        if (lambda(i).real() < 0.0 && k < n) X.col(k++) = ces.eigenvectors().col(i);
    }
    if (k != n) throw DesignError("solve_care: stable subspace has wrong dimension " + describe(lambda));

    const Eigen::MatrixXcd X1 = X.topRows(n);
    const Eigen::MatrixXcd X2 = X.bottomRows(n);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(X1);
    if (lu.rank() < n || lu.rcond() < 1e-12) {
        throw DesignError("solve_care: stable subspace is not a graph (pair not stabilizable), eigenvalues " +
                          describe(lambda));
    }
    Eigen::MatrixXd P = (X2 * lu.inverse()).real();
    P = 0.5 * (P + P.transpose());

    // Newton polish in correction form: Ac' D + D Ac = -Res(P), P += D, with
    // the residual taken in extended precision. Stops once it stops improving.
    const MatL Al = A.cast<long double>();
    const MatL Bl = B.cast<long double>();
    const MatL Ql = Q.cast<long double>();
    const MatL BRBl = Bl * R.cast<long double>().llt().solve(Bl.transpose());
    MatL res = residual_matrix(Al, BRBl, Ql, P.cast<long double>());
    long double residual = inf_norm(res);
    for (int iter = 0; iter < 30 && residual > 0.0L; ++iter) {
        const MatL Ac = Al - BRBl * P.cast<long double>();
        if (spectral_abscissa(Ac.cast<double>()) >= 0.0) break;
        Eigen::MatrixXd candidate = P + solve_lyapunov(Ac, 0.5L * (res + res.transpose())).cast<double>();
        candidate = 0.5 * (candidate + candidate.transpose());
        const MatL next_res = residual_matrix(Al, BRBl, Ql, candidate.cast<long double>());
        const long double next = inf_norm(next_res);
        if (!(next < residual)) break;
        P = candidate;
        res = next_res;
        residual = next;
    }

    // Rounding P to double can cost more than the polish gained when the
    // closed loop is fast; nudge entries by one ulp while that helps.
    double best = riccati_residual(A, B, Q, R, P);
    for (int pass = 0; pass < 8 && best > 0.0; ++pass) {
        bool improved = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                for (double dir : {1.0, -1.0}) {
                    Eigen::MatrixXd trial = P;
                    trial(i, j) = std::nextafter(P(i, j), dir * std::numeric_limits<double>::infinity());
                    trial(j, i) = trial(i, j);
                    const double r = riccati_residual(A, B, Q, R, trial);
                    if (r < best) {
                        P = trial;
                        best = r;
                        improved = true;
                    }
                }
            }
        }
        if (!improved) break;
    }

    LqrSolution sol;
    sol.P = P;
    sol.K = r_llt.solve(B.transpose() * P);
    sol.residual = riccati_residual(A, B, Q, R, P);
    if (!sol.K.allFinite()) throw DesignError("solve_care: non-finite gain");
    const double abscissa = spectral_abscissa(A - B * sol.K);
    if (!(abscissa < 0.0)) {
        std::ostringstream os;
        os << "solve_care: closed loop not stable (spectral abscissa " << abscissa << ")";
        throw DesignError(os.str());
    }
    return sol;
}

Eigen::MatrixXd solve_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                          const Eigen::MatrixXd& R) {
    return solve_care(A, B, Q, R).K;
}

}  // namespace telewip
