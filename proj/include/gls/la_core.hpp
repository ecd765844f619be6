#ifndef GLS_LA_CORE_HPP
#define GLS_LA_CORE_HPP

// Dense kernels shared by the rest of the library: one-sided Jacobi SVD,
// pseudoinverse, range projectors, null-space bases, Householder QR, Cholesky,
// symmetric PSD square roots and a plain LSQR for symmetric operators.

#include "gls/core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

namespace gls {

/// Cutoff below which singular values count as zero.
template <typename Scalar>
class RankTolerance {
public:
    enum class Mode { relative, absolute };

    /// max(rows, cols) * eps * sigma_max.
    static RankTolerance standard() { return RankTolerance(Mode::relative, Scalar(0), true); }

    /// value * sigma_max.
    static RankTolerance relative(Scalar value) {
        return RankTolerance(Mode::relative, checked(value), false);
    }

    static RankTolerance absolute(Scalar value) {
        return RankTolerance(Mode::absolute, checked(value), false);
    }

    Mode mode() const noexcept { return mode_; }

    /// Effective relative factor or absolute cutoff for a matrix of the given shape.
    Scalar value(Index rows, Index cols) const noexcept {
        if (dimension_scaled_) {
            return Scalar(std::max<Index>({rows, cols, 1})) * std::numeric_limits<Scalar>::epsilon();
        }
        return value_;
    }

    Scalar cutoff(Scalar sigma_max, Index rows, Index cols) const noexcept {
        return mode_ == Mode::absolute ? value_ : value(rows, cols) * sigma_max;
    }

private:
    RankTolerance(Mode mode, Scalar value, bool dimension_scaled)
        : mode_(mode), value_(value), dimension_scaled_(dimension_scaled) {}

    static Scalar checked(Scalar value) {
        if (!(value > Scalar(0)) || !std::isfinite(static_cast<double>(value))) {
            throw std::invalid_argument("rank tolerance must be a positive finite number");
        }
        return value;
    }

    Mode mode_;
    Scalar value_;
    bool dimension_scaled_;
};

/// Full SVD A = U diag(singular_values) V^T with U (m x m), V (n x n).
template <typename Scalar>
struct SvdFactors {
    Matrix<Scalar> U;
    Vector<Scalar> singular_values; // length min(m, n), nonincreasing
    Matrix<Scalar> V;
    Index rank = 0;

    Scalar sigma_max() const {
        return singular_values.size() > 0 ? singular_values(0) : Scalar(0);
    }

    /// U_r and V_r: the leading `rank` singular vectors.
    auto range_basis() const { return U.leftCols(rank); }
    auto corange_basis() const { return V.leftCols(rank); }
};

namespace detail {

/// Completes the orthonormal columns of `q1` (m x k) to an m x m orthogonal matrix.
template <typename Scalar>
Matrix<Scalar> complete_orthonormal(const Matrix<Scalar>& q1, Index m) {
    const Index k = q1.cols();
    Matrix<Scalar> full(m, m);
    full.leftCols(k) = q1;
    if (k == m) return full;
    if (k == 0) {
        full.setIdentity();
        return full;
    }
    Eigen::HouseholderQR<Matrix<Scalar>> qr(q1);
    Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(m, m);
    full.rightCols(m - k) = q.rightCols(m - k);
    return full;
}

/// One-sided (Hestenes) Jacobi on a tall matrix, m >= n. On return the columns of
/// `w` are mutually orthogonal and `v` holds the accumulated rotations.
template <typename Scalar>
void hestenes_sweeps(Matrix<Scalar>& w, Matrix<Scalar>& v, const LinalgConfig<Scalar>& cfg) {
    using std::abs;
    using std::sqrt;
    const Index m = w.rows();
    const Index n = w.cols();
    const Scalar fro = w.norm();
    if (fro == Scalar(0) || n < 2) return;

    const Scalar rel_tol = cfg.epsilon * sqrt(Scalar(m));
    const Scalar abs_floor = cfg.epsilon * (cfg.epsilon * fro) * (cfg.epsilon * fro);

    Vector<Scalar> sq(n);
    for (Index j = 0; j < n; ++j) sq(j) = w.col(j).squaredNorm();

    Scalar worst = 0;
    for (int sweep = 0; sweep < cfg.svd_max_sweeps; ++sweep) {
        bool rotated = false;
        worst = 0;
        for (Index p = 0; p + 1 < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const Scalar alpha = sq(p);
                const Scalar beta = sq(q);
                if (alpha == Scalar(0) || beta == Scalar(0)) continue;
                const Scalar gamma = w.col(p).dot(w.col(q));
                const Scalar scale = sqrt(alpha) * sqrt(beta);
                if (abs(gamma) <= std::max(rel_tol * scale, abs_floor)) continue;
                worst = std::max(worst, abs(gamma) / scale);
                rotated = true;

                const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
                const Scalar t = (zeta >= 0 ? Scalar(1) : Scalar(-1)) / (abs(zeta) + sqrt(Scalar(1) + zeta * zeta));
                const Scalar c = Scalar(1) / sqrt(Scalar(1) + t * t);
                const Scalar s = c * t;

                for (Index i = 0; i < m; ++i) {
                    const Scalar wp = w(i, p);
                    const Scalar wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (Index i = 0; i < n; ++i) {
                    const Scalar vp = v(i, p);
                    const Scalar vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
                sq(p) = w.col(p).squaredNorm();
                sq(q) = w.col(q).squaredNorm();
            }
        }
        if (!rotated) return;
    }
    throw FactorizationError("one-sided Jacobi SVD did not converge within "
                                 + std::to_string(cfg.svd_max_sweeps) + " sweeps",
                             static_cast<double>(worst));
}

template <typename Scalar>
SvdFactors<Scalar> svd_tall(const Matrix<Scalar>& a, const RankTolerance<Scalar>& tol,
                            const LinalgConfig<Scalar>& cfg) {
    const Index m = a.rows();
    const Index n = a.cols();
    Matrix<Scalar> w = a;
    Matrix<Scalar> v = Matrix<Scalar>::Identity(n, n);
    const Scalar fro = a.norm();
    hestenes_sweeps(w, v, cfg);

    Vector<Scalar> norms(n);
    for (Index j = 0; j < n; ++j) norms(j) = w.col(j).norm();
    std::vector<Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return norms(i) > norms(j); });

    SvdFactors<Scalar> f;
    f.singular_values.resize(n);
    f.V.resize(n, n);
    // Columns at the roundoff level of ||A||_F are not reliably orthogonal; their
    // left singular vectors come from the orthogonal completion instead.
    const Scalar trusted = cfg.epsilon * fro;
    Index trusted_count = 0;
    for (Index j = 0; j < n; ++j) {
        const Index src = order[static_cast<size_t>(j)];
        f.singular_values(j) = norms(src);
        f.V.col(j) = v.col(src);
        if (norms(src) > trusted) ++trusted_count;
    }
    Matrix<Scalar> u1(m, trusted_count);
    for (Index j = 0; j < trusted_count; ++j) {
        const Index src = order[static_cast<size_t>(j)];
        u1.col(j) = w.col(src) / norms(src);
    }
    f.U = complete_orthonormal(u1, m);

    const Scalar cut = tol.cutoff(f.sigma_max(), m, n);
    f.rank = 0;
    while (f.rank < trusted_count && f.singular_values(f.rank) > cut) ++f.rank;
    return f;
}

} // namespace detail

/// Full singular value decomposition by one-sided Jacobi rotations.
template <typename Derived>
SvdFactors<typename Derived::Scalar> svd(
    const Eigen::MatrixBase<Derived>& a,
    const RankTolerance<typename Derived::Scalar>& tol = RankTolerance<typename Derived::Scalar>::standard(),
    const LinalgConfig<typename Derived::Scalar>& cfg = {}) {
    using Scalar = typename Derived::Scalar;
    if (a.rows() == 0 || a.cols() == 0) {
        throw std::invalid_argument("svd of an empty matrix");
    }
    require_finite(a, "svd input");
    if (a.rows() >= a.cols()) return detail::svd_tall<Scalar>(a, tol, cfg);

    SvdFactors<Scalar> t = detail::svd_tall<Scalar>(a.transpose(), tol, cfg);
    std::swap(t.U, t.V);
    return t;
}

/// Moore-Penrose pseudoinverse; singular values at or below the cutoff are treated as zero.
template <typename Derived>
Matrix<typename Derived::Scalar> pinv(
    const Eigen::MatrixBase<Derived>& a,
    const RankTolerance<typename Derived::Scalar>& tol = RankTolerance<typename Derived::Scalar>::standard(),
    const LinalgConfig<typename Derived::Scalar>& cfg = {}) {
    using Scalar = typename Derived::Scalar;
    if (a.rows() == 0 || a.cols() == 0) return Matrix<Scalar>::Zero(a.cols(), a.rows());
    const SvdFactors<Scalar> f = svd(a, tol, cfg);
    const Index r = f.rank;
    return f.V.leftCols(r) * f.singular_values.head(r).cwiseInverse().asDiagonal() * f.U.leftCols(r).transpose();
}

/// Orthogonal projector onto the column space of A.
template <typename Derived>
Matrix<typename Derived::Scalar> projector_range(
    const Eigen::MatrixBase<Derived>& a,
    const RankTolerance<typename Derived::Scalar>& tol = RankTolerance<typename Derived::Scalar>::standard(),
    const LinalgConfig<typename Derived::Scalar>& cfg = {}) {
    using Scalar = typename Derived::Scalar;
    if (a.rows() == 0 || a.cols() == 0) return Matrix<Scalar>::Zero(a.rows(), a.rows());
    const SvdFactors<Scalar> f = svd(a, tol, cfg);
    const auto ur = f.range_basis();
    return ur * ur.transpose();
}

/// Orthonormal basis (n x (n - rank)) of N(A); zero columns when A has full column rank.
template <typename Derived>
Matrix<typename Derived::Scalar> nullspace_basis(
    const Eigen::MatrixBase<Derived>& a,
    const RankTolerance<typename Derived::Scalar>& tol = RankTolerance<typename Derived::Scalar>::standard(),
    const LinalgConfig<typename Derived::Scalar>& cfg = {}) {
    using Scalar = typename Derived::Scalar;
    const Index n = a.cols();
    if (a.rows() == 0) return Matrix<Scalar>::Identity(n, n);
    const SvdFactors<Scalar> f = svd(a, tol, cfg);
    return f.V.rightCols(n - f.rank);
}

template <typename Scalar>
struct QrFactors {
    Matrix<Scalar> Q; // m x min(m, n), orthonormal columns
    Matrix<Scalar> R; // min(m, n) x n, upper triangular
};

/// Thin Householder QR (full Q when rows < cols).
template <typename Derived>
QrFactors<typename Derived::Scalar> qr_householder(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    require_finite(a, "qr input");
    const Index m = a.rows();
    const Index k = std::min(a.rows(), a.cols());
    Eigen::HouseholderQR<Matrix<Scalar>> qr(a.eval());
    QrFactors<Scalar> f;
    f.Q = qr.householderQ() * Matrix<Scalar>::Identity(m, k);
    f.R = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    return f;
}

/// Lower-triangular C with C C^T = G. Throws IndefiniteMatrixError when a pivot
/// falls to cholesky_pivot_tol * max(diag(G)) or below.
template <typename Derived>
Matrix<typename Derived::Scalar> cholesky_spd(const Eigen::MatrixBase<Derived>& g,
                                              const LinalgConfig<typename Derived::Scalar>& cfg = {}) {
    using Scalar = typename Derived::Scalar;
    if (g.rows() != g.cols()) throw std::invalid_argument("cholesky_spd: matrix is not square");
    require_finite(g, "cholesky input");
    const Index n = g.rows();
    if (n == 0) return Matrix<Scalar>(0, 0);
    const Scalar scale = g.norm();
    if ((g - g.transpose()).norm() > Scalar(1e3) * cfg.epsilon * scale) {
        throw std::invalid_argument("cholesky_spd: matrix is not symmetric");
    }
    const Scalar max_diag = g.diagonal().maxCoeff();
    if (!(max_diag > Scalar(0))) throw IndefiniteMatrixError("cholesky_spd: nonpositive diagonal", 0);
    const Scalar pivot_floor = cfg.cholesky_pivot_tol * max_diag;

    const Matrix<Scalar> gs = symmetrized(g);
    Matrix<Scalar> c = Matrix<Scalar>::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        // Left-looking column update: c(j:, j) = G(j:, j) - C(j:, :j) C(j, :j)^T.
        Vector<Scalar> col = gs.col(j).tail(n - j);
        if (j > 0) col.noalias() -= c.bottomLeftCorner(n - j, j) * c.row(j).head(j).transpose();
        const Scalar pivot = col(0);
        if (!(pivot > pivot_floor)) {
            throw IndefiniteMatrixError("cholesky_spd: pivot " + std::to_string(j) + " below tolerance", j);
        }
        const Scalar d = std::sqrt(pivot);
        c(j, j) = d;
        c.col(j).tail(n - j - 1) = col.tail(n - j - 1) / d;
    }
    return c;
}

/// Symmetric square root S with S^T S = P for symmetric positive semidefinite P.
template <typename Derived>
Matrix<typename Derived::Scalar> psd_sqrt(const Eigen::MatrixBase<Derived>& p,
                                          const LinalgConfig<typename Derived::Scalar>& cfg = {}) {
    using Scalar = typename Derived::Scalar;
    if (p.rows() != p.cols()) throw std::invalid_argument("psd_sqrt: matrix is not square");
    require_finite(p, "psd_sqrt input");
    if (p.rows() == 0) return Matrix<Scalar>(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(symmetrized(p));
    if (eig.info() != Eigen::Success) throw FactorizationError("psd_sqrt: eigensolver failed", 0.0);
    Vector<Scalar> lambda = eig.eigenvalues();
    const Scalar norm = lambda.cwiseAbs().maxCoeff();
    const Scalar lowest = lambda.minCoeff();
    if (lowest < -cfg.psd_tol * norm) {
        throw NegativeEigenvalueError("psd_sqrt: matrix has a negative eigenvalue", static_cast<double>(lowest));
    }
    lambda = lambda.cwiseMax(Scalar(0)).cwiseSqrt();
    const Matrix<Scalar>& q = eig.eigenvectors();
    return symmetrized(q * lambda.asDiagonal() * q.transpose());
}

template <typename Scalar>
struct LsqrResult {
    Vector<Scalar> x;
    Index iterations = 0;
    bool converged = false;       // false means the iteration cap was reached
    Scalar residual_norm = 0;     // ||rhs - G x||, recurrence value
};

/// LSQR (Paige-Saunders) for min ||G s - rhs||_2 with G symmetric, given as a
/// matrix-vector product. Started from s = 0, so the iterate is the
/// minimum-norm solution in exact arithmetic. Stops on either of the usual
/// criteria: ||r|| <= tau ||rhs||, or ||G r|| <= tau ||G||_est ||r||.
template <typename Scalar, typename ApplyG>
LsqrResult<Scalar> standard_lsqr(ApplyG&& apply_g, const Vector<Scalar>& rhs, Scalar tau, Index max_iter) {
    using std::abs;
    using std::sqrt;
    if (!(tau > Scalar(0))) throw std::invalid_argument("standard_lsqr: tau must be positive");
    require_finite(rhs, "lsqr right-hand side");

    LsqrResult<Scalar> out;
    const Index n = rhs.size();
    out.x = Vector<Scalar>::Zero(n);

    Scalar beta = rhs.norm();
    const Scalar rhs_norm = beta;
    if (beta == Scalar(0)) {
        out.converged = true;
        return out;
    }
    Vector<Scalar> u = rhs / beta;
    Vector<Scalar> v = apply_g(u);
    Scalar alpha = v.norm();
    if (alpha == Scalar(0)) {
        out.converged = true;
        out.residual_norm = beta;
        return out;
    }
    v /= alpha;
    Vector<Scalar> w = v;
    Scalar phibar = beta;
    Scalar rhobar = alpha;
    Scalar anorm_sq = alpha * alpha;

    for (Index it = 1; it <= max_iter; ++it) {
        u = apply_g(v) - alpha * u;
        beta = u.norm();
        if (beta > Scalar(0)) u /= beta;
        anorm_sq += beta * beta;

        v = apply_g(u) - beta * v;
        alpha = v.norm();
        if (alpha > Scalar(0)) v /= alpha;
        anorm_sq += alpha * alpha;

        const Scalar rho = std::hypot(rhobar, beta);
        const Scalar c = rhobar / rho;
        const Scalar s = beta / rho;
        const Scalar theta = s * alpha;
        rhobar = -c * alpha;
        const Scalar phi = c * phibar;
        phibar = s * phibar;

        out.x += (phi / rho) * w;
        w = v - (theta / rho) * w;
        out.iterations = it;

        const Scalar normr = abs(phibar);
        const Scalar normar = normr * alpha * abs(c);
        out.residual_norm = normr;
        if (normr <= tau * rhs_norm || normar <= tau * sqrt(anorm_sq) * normr || alpha == Scalar(0)
            || beta == Scalar(0)) {
            out.converged = true;
            return out;
        }
    }
    return out;
}

} // namespace gls

#endif // GLS_LA_CORE_HPP
