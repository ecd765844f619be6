#ifndef GLS_TEST_SUPPORT_HPP
#define GLS_TEST_SUPPORT_HPP

// Reference computations for the tests. They rely on Eigen's own SVD and
// factorizations only, never on the library routines they check.

#include "gls/random.hpp"

#include <Eigen/Dense>

#include <optional>

namespace gls::testing {

inline double rel_diff(const MatrixXd& a, const MatrixXd& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline Eigen::JacobiSVD<MatrixXd> eigen_svd(const MatrixXd& a) {
    return Eigen::JacobiSVD<MatrixXd>(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

/// Numerical rank; singular values are compared with max(m, n) eps times
/// `reference`, which defaults to the largest singular value of a.
inline Index oracle_rank(const MatrixXd& a, double reference = -1.0) {
    if (a.size() == 0) return 0;
    const auto s = eigen_svd(a).singularValues();
    if (s.size() == 0) return 0;
    const double ref = reference > 0 ? reference : s(0);
    const double cut = std::max(a.rows(), a.cols()) * std::numeric_limits<double>::epsilon() * ref;
    Index r = 0;
    while (r < s.size() && s(r) > cut) ++r;
    return r;
}

inline MatrixXd oracle_pinv(const MatrixXd& a, double reference = -1.0) {
    if (a.size() == 0) return MatrixXd::Zero(a.cols(), a.rows());
    const auto svd = eigen_svd(a);
    const Index r = oracle_rank(a, reference);
    return svd.matrixV().leftCols(r) * svd.singularValues().head(r).cwiseInverse().asDiagonal() *
           svd.matrixU().leftCols(r).transpose();
}

inline MatrixXd oracle_nullspace(const MatrixXd& a, double reference = -1.0) {
    const Index n = a.cols();
    if (a.rows() == 0) return MatrixXd::Identity(n, n);
    const auto svd = eigen_svd(a);
    return svd.matrixV().rightCols(n - oracle_rank(a, reference));
}

inline MatrixXd oracle_range_projector(const MatrixXd& a) {
    const auto svd = eigen_svd(a);
    const auto u = svd.matrixU().leftCols(oracle_rank(a));
    return u * u.transpose();
}

/// Minimum 2-norm GLS solution by successive restriction:
/// x0 minimizes ||M(Ax - b)||, then ||L x|| is minimized over x0 + N(MA), then
/// the remaining freedom N(MA) cap N(L) is projected out.
inline VectorXd oracle_gls_solution(const MatrixXd& a, const std::optional<MatrixXd>& m, const MatrixXd& l,
                                    const VectorXd& b) {
    const MatrixXd ma = m ? MatrixXd(*m * a) : a;
    const VectorXd mb = m ? VectorXd(*m * b) : b;
    VectorXd x = oracle_pinv(ma) * mb;
    const MatrixXd n1 = oracle_nullspace(ma);
    if (n1.cols() == 0) return x;
    // L restricted to N(MA) is judged against the scale of L itself, widened by n
    // since N(MA) carries rounding of that order.
    const double l_scale = l.size() == 0 ? 0.0 : eigen_svd(l).singularValues()(0) * double(l.cols());
    const MatrixXd ln = l * n1;
    x -= n1 * (oracle_pinv(ln, l_scale) * (l * x));
    const MatrixXd n2 = n1 * oracle_nullspace(ln, l_scale);
    x -= n2 * (n2.transpose() * x);
    return x;
}

/// The weighted pseudoinverse column by column from oracle_gls_solution.
inline MatrixXd oracle_wpinv(const MatrixXd& a, const std::optional<MatrixXd>& m, const MatrixXd& l) {
    MatrixXd x(a.cols(), a.rows());
    for (Index j = 0; j < a.rows(); ++j) x.col(j) = oracle_gls_solution(a, m, l, VectorXd::Unit(a.rows(), j));
    return x;
}

/// max over v in R(G) of ||M A v|| / ||v||_G as a generalized eigenvalue problem
/// restricted to R(G): sqrt(lambda_max(W^T A^T P A W, W^T G W)) with W a basis of R(G).
inline double oracle_operator_norm(const MatrixXd& ma, const MatrixXd& l) {
    const MatrixXd g = ma.transpose() * ma + l.transpose() * l;
    const auto svd = eigen_svd(g);
    const Index r = oracle_rank(g);
    if (r == 0) return 0.0;
    const MatrixXd w = svd.matrixV().leftCols(r);
    const MatrixXd gw = w.transpose() * g * w;
    const MatrixXd aw = w.transpose() * ma.transpose() * ma * w;
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(0.5 * (aw + aw.transpose()), 0.5 * (gw + gw.transpose()));
    return std::sqrt(std::max(0.0, ges.eigenvalues().maxCoeff()));
}

/// A and L sharing a planted common null vector.
struct PlantedPair {
    MatrixXd a;
    MatrixXd l;
    VectorXd common_null;
};

inline PlantedPair planted_pair(Index m, Index p, Index n, std::uint64_t seed) {
    Rng rng(seed);
    PlantedPair out;
    out.common_null = rng.normal_vector(n).normalized();
    const MatrixXd proj = MatrixXd::Identity(n, n) - out.common_null * out.common_null.transpose();
    out.a = rng.normal_matrix(m, n) * proj;
    out.l = rng.normal_matrix(p, n) * proj;
    return out;
}

} // namespace gls::testing

#endif // GLS_TEST_SUPPORT_HPP
