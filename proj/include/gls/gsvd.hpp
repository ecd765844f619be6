#ifndef GLS_GSVD_HPP
#define GLS_GSVD_HPP

#include "gls/la_core.hpp"

namespace gls {

/// GSVD of the pair {A, L}:
///   A = U_A [C_A 0] X^{-1},  L = U_L [S_L 0] X^{-1},  C_A^T C_A + S_L^T S_L = I_r,
/// where C_A = diag-block(I_q1, C_q2, 0) (m x r) and S_L = diag-block(0, S_q2, I_q3) (p x r),
/// r = rank([A; L]). The q2 block is ordered with nonincreasing cosines.
template <typename Scalar>
struct GsvdFactors {
    Matrix<Scalar> U_A;
    Matrix<Scalar> U_L;
    Matrix<Scalar> X;
    Matrix<Scalar> X_inverse;
    Matrix<Scalar> C_A;
    Matrix<Scalar> S_L;
    Index r = 0;
    Index q1 = 0;
    Index q2 = 0;
    Index q3 = 0;

    Index n() const { return X.rows(); }

    /// Generalized cosines c_1 >= ... >= c_r (diagonal of C_A, zero-padded).
    Vector<Scalar> cosines() const {
        Vector<Scalar> c = Vector<Scalar>::Zero(r);
        for (Index j = 0; j < std::min(r, C_A.rows()); ++j) c(j) = C_A(j, j);
        return c;
    }

    Vector<Scalar> sines() const {
        Vector<Scalar> s = Vector<Scalar>::Zero(r);
        const Index p = S_L.rows();
        for (Index j = q1; j < r; ++j) s(j) = S_L(p - r + j, j);
        return s;
    }

    Matrix<Scalar> sigma_a() const {
        Matrix<Scalar> s = Matrix<Scalar>::Zero(C_A.rows(), n());
        s.leftCols(r) = C_A;
        return s;
    }

    Matrix<Scalar> sigma_l() const {
        Matrix<Scalar> s = Matrix<Scalar>::Zero(S_L.rows(), n());
        s.leftCols(r) = S_L;
        return s;
    }
};

template <typename Scalar>
struct XPartition {
    Matrix<Scalar> X1; // n x q1
    Matrix<Scalar> X2; // n x q2
    Matrix<Scalar> X3; // n x q3
    Matrix<Scalar> X4; // n x (n - r), spans N(G)
};

template <typename Scalar>
struct GsvdOptions {
    Scalar cluster_tol = Scalar(1e-12);
    RankTolerance<Scalar> rank_tol = RankTolerance<Scalar>::standard();
    LinalgConfig<Scalar> linalg{};
};

/// GSVD through the SVD of the stacked matrix K = [A; L] = Z S W^T followed by a
/// CS-style split of Z = [Z_A; Z_L]: the SVD Z_A = U_A C Vh^T gives the cosines,
/// Z_L Vh has orthogonal columns whose norms are the sines, and
/// X = [W S^{-1} Vh, basis of N(K)].
///
/// The identity block has at least r - rank(L) columns and the zero block at
/// least r - rank(A); further columns join them when their sine (cosine) is at
/// most cluster_tol.
template <typename DerivedA, typename DerivedL>
GsvdFactors<typename DerivedA::Scalar> gsvd_pair(const Eigen::MatrixBase<DerivedA>& a,
                                                 const Eigen::MatrixBase<DerivedL>& l,
                                                 const GsvdOptions<typename DerivedA::Scalar>& opt = {}) {
    using Scalar = typename DerivedA::Scalar;
    if (a.cols() != l.cols()) throw std::invalid_argument("gsvd_pair: A and L need the same column count");
    if (a.rows() == 0 || l.rows() == 0 || a.cols() == 0) throw std::invalid_argument("gsvd_pair: empty input");
    require_finite(a, "A");
    require_finite(l, "L");

    const Index m = a.rows();
    const Index p = l.rows();
    const Index n = a.cols();

    Matrix<Scalar> k(m + p, n);
    k.topRows(m) = a;
    k.bottomRows(p) = l;
    const SvdFactors<Scalar> ks = svd(k, opt.rank_tol, opt.linalg);
    const Index r = ks.rank;

    GsvdFactors<Scalar> f;
    f.r = r;
    f.C_A = Matrix<Scalar>::Zero(m, r);
    f.S_L = Matrix<Scalar>::Zero(p, r);

    const auto w = ks.V.leftCols(r);
    const auto w_perp = ks.V.rightCols(n - r);
    const Vector<Scalar> sk = ks.singular_values.head(r);

    if (r == 0) {
        f.U_A = Matrix<Scalar>::Identity(m, m);
        f.U_L = Matrix<Scalar>::Identity(p, p);
        f.X = ks.V;
        f.X_inverse = ks.V.transpose();
        return f;
    }

    const Matrix<Scalar> z = ks.U.leftCols(r);
    const SvdFactors<Scalar> za = svd(z.topRows(m), opt.rank_tol, opt.linalg);
    const Matrix<Scalar>& vh = za.V; // r x r
    f.U_A = za.U;

    Vector<Scalar> c = Vector<Scalar>::Zero(r);
    const Index nc = std::min(m, r);
    c.head(nc) = za.singular_values.head(nc).cwiseMin(Scalar(1));

    const Matrix<Scalar> y = z.bottomRows(p) * vh; // p x r, orthogonal columns
    Vector<Scalar> s(r);
    for (Index j = 0; j < r; ++j) s(j) = y.col(j).norm();

    // rank(L) = q2 + q3 and rank(A) = q1 + q2. The ranks fix the block sizes even
    // when rounding in the sines reaches cond(K) * eps.
    Index q1 = std::max<Index>(0, r - svd(l, opt.rank_tol, opt.linalg).rank);
    while (q1 < r && s(q1) <= opt.cluster_tol) ++q1;
    Index q3 = std::min<Index>(r - q1, std::max<Index>(0, r - svd(a, opt.rank_tol, opt.linalg).rank));
    while (q3 < r - q1 && c(r - 1 - q3) <= opt.cluster_tol) ++q3;
    const Index q2 = r - q1 - q3;
    f.q1 = q1;
    f.q2 = q2;
    f.q3 = q3;

    if (r - q1 > p) {
        throw FactorizationError("gsvd_pair: sine block larger than the row count of L",
                                 static_cast<double>(r - q1 - p));
    }

    for (Index j = 0; j < q1; ++j) c(j) = Scalar(1);
    for (Index j = q1 + q2; j < r; ++j) c(j) = Scalar(0);
    for (Index j = 0; j < std::min(m, q1 + q2); ++j) f.C_A(j, j) = c(j);

    // U_L: orthonormalized sine columns go to rows p - r + j of the S_L block.
    const Index ns = r - q1;
    const Index offset = p - r + q1;
    f.U_L.resize(p, p);
    if (ns > 0) {
        const Matrix<Scalar> ys = y.rightCols(ns);
        Eigen::HouseholderQR<Matrix<Scalar>> qr(ys);
        Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(p, p);
        for (Index j = 0; j < ns; ++j) {
            if (qr.matrixQR()(j, j) < Scalar(0)) q.col(j) = -q.col(j);
        }
        f.U_L.middleCols(offset, ns) = q.leftCols(ns);
        f.U_L.leftCols(offset) = q.rightCols(p - ns);
        for (Index j = q1; j < r; ++j) f.S_L(p - r + j, j) = s(j);
    } else {
        f.U_L.setIdentity();
    }

    f.X.resize(n, n);
    f.X.leftCols(r) = w * sk.cwiseInverse().asDiagonal() * vh;
    f.X.rightCols(n - r) = w_perp;
    f.X_inverse.resize(n, n);
    f.X_inverse.topRows(r) = vh.transpose() * sk.asDiagonal() * w.transpose();
    f.X_inverse.bottomRows(n - r) = w_perp.transpose();

    const Scalar res_a = (a - f.U_A * f.sigma_a() * f.X_inverse).norm();
    const Scalar res_l = (l - f.U_L * f.sigma_l() * f.X_inverse).norm();
    const Scalar scale = a.norm() + l.norm();
    // 1e-10 in double precision, scaled with the unit roundoff otherwise.
    const Scalar recon_tol = Scalar(1e-10) * std::max(Scalar(1), opt.linalg.epsilon / Scalar(std::numeric_limits<double>::epsilon()));
    if (res_a + res_l > recon_tol * scale) {
        throw FactorizationError("gsvd_pair: reconstruction residual too large",
                                 static_cast<double>((res_a + res_l) / scale));
    }
    return f;
}

template <typename Scalar>
XPartition<Scalar> partition_x(const GsvdFactors<Scalar>& f) {
    XPartition<Scalar> x;
    x.X1 = f.X.leftCols(f.q1);
    x.X2 = f.X.middleCols(f.q1, f.q2);
    x.X3 = f.X.middleCols(f.q1 + f.q2, f.q3);
    x.X4 = f.X.rightCols(f.n() - f.r);
    return x;
}

/// sigma_max(C_A); equals the norm of the operator v -> A v from (R(G), <.,.>_G) to (R^m, <.,.>_2).
template <typename Scalar>
Scalar sigma_max_ca(const GsvdFactors<Scalar>& f) {
    if (f.q1 > 0) return Scalar(1);
    if (f.q2 == 0) return Scalar(0);
    return f.C_A(0, 0);
}

/// A_IL^dag = P_R(G) X Sigma_A^dag U_A^T with X Sigma_A^dag = (X1, X2 C_q2^{-1}, 0).
template <typename Scalar, typename DerivedG>
Matrix<Scalar> wpinv_via_gsvd(const GsvdFactors<Scalar>& f, const Eigen::MatrixBase<DerivedG>& g,
                              const RankTolerance<Scalar>& tol = RankTolerance<Scalar>::standard()) {
    const Index k = f.q1 + f.q2;
    const Vector<Scalar> c = f.cosines().head(k);
    const Matrix<Scalar> x_sigma_dag = f.X.leftCols(k) * c.cwiseInverse().asDiagonal();
    return projector_range(g, tol) * (x_sigma_dag * f.U_A.leftCols(k).transpose());
}

} // namespace gls

#endif // GLS_GSVD_HPP
