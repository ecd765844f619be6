#ifndef GLS_WPINV_HPP
#define GLS_WPINV_HPP

// Direct weighted pseudoinverse A_ML^dag, the map b -> argmin ||x||_2 over the
// solutions of  min ||L x||_2  s.t.  ||M (A x - b)||_2 = min.

#include "gls/gsvd.hpp"

#include <array>
#include <optional>
#include <variant>

namespace gls {

/// The data {A, M, L, b} together with P = M^T M, Q = L^T L and G = A^T P A + Q.
/// An absent M stands for the identity.
template <typename Scalar>
class GlsProblem {
public:
    GlsProblem(Matrix<Scalar> a, std::optional<Matrix<Scalar>> m, Matrix<Scalar> l, Vector<Scalar> b)
        : a_(std::move(a)), m_(std::move(m)), l_(std::move(l)), b_(std::move(b)) {
        if (l_.cols() != a_.cols()) throw std::invalid_argument("GlsProblem: L must have as many columns as A");
        if (b_.size() != a_.rows()) throw std::invalid_argument("GlsProblem: b must have as many rows as A");
        if (m_ && m_->cols() != a_.rows()) throw std::invalid_argument("GlsProblem: M must have as many columns as A has rows");
        if (a_.cols() == 0 || a_.rows() == 0) throw std::invalid_argument("GlsProblem: A is empty");
        require_finite(a_, "A");
        require_finite(l_, "L");
        require_finite(b_, "b");
        if (m_) require_finite(*m_, "M");

        p_ = m_ ? symmetrized(m_->transpose() * *m_) : Matrix<Scalar>::Identity(rows(), rows());
        q_ = symmetrized(l_.transpose() * l_);
        ma_ = m_ ? Matrix<Scalar>(*m_ * a_) : a_;
        g_ = symmetrized(ma_.transpose() * ma_ + q_);
        if (m_) {
            Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(m_->transpose());
            qr.setThreshold(Scalar(rows()) * std::numeric_limits<Scalar>::epsilon());
            if (qr.rank() < rows()) {
                range_p_ = Matrix<Scalar>(qr.householderQ()).leftCols(qr.rank());
            }
        }
    }

    /// Problem with M = I.
    GlsProblem(Matrix<Scalar> a, Matrix<Scalar> l, Vector<Scalar> b)
        : GlsProblem(std::move(a), std::nullopt, std::move(l), std::move(b)) {}

    Index rows() const { return a_.rows(); }
    Index cols() const { return a_.cols(); }

    const Matrix<Scalar>& A() const { return a_; }
    const Matrix<Scalar>& L() const { return l_; }
    const Vector<Scalar>& b() const { return b_; }
    bool identity_weight() const { return !m_.has_value(); }

    /// M, materialized as the identity when absent.
    Matrix<Scalar> M() const { return m_ ? *m_ : Matrix<Scalar>::Identity(rows(), rows()); }

    const Matrix<Scalar>& P() const { return p_; }
    const Matrix<Scalar>& Q() const { return q_; }
    const Matrix<Scalar>& G() const { return g_; }
    const Matrix<Scalar>& MA() const { return ma_; }

    /// M v without forming the identity.
    template <typename Derived>
    Vector<Scalar> apply_m(const Eigen::MatrixBase<Derived>& v) const {
        if (m_) return *m_ * v;
        return v;
    }

    /// ||v||_P = ||M v||_2.
    template <typename Derived>
    Scalar p_norm(const Eigen::MatrixBase<Derived>& v) const {
        return m_ ? (*m_ * v).norm() : v.norm();
    }

    /// ||v||_G = (||M A v||^2 + ||L v||^2)^{1/2}.
    template <typename Derived>
    Scalar g_norm(const Eigen::MatrixBase<Derived>& v) const {
        return std::hypot((ma_ * v).norm(), (l_ * v).norm());
    }

    /// Orthogonal projection onto R(P); the identity unless M is rank deficient.
    template <typename Derived>
    Vector<Scalar> project_range_p(const Eigen::MatrixBase<Derived>& v) const {
        if (range_p_) return *range_p_ * (range_p_->transpose() * v);
        return v;
    }

    /// A^T P v.
    template <typename Derived>
    Vector<Scalar> at_p(const Eigen::MatrixBase<Derived>& v) const {
        if (m_) return ma_.transpose() * (*m_ * v);
        return a_.transpose() * v;
    }

    /// The same problem with another right-hand side.
    GlsProblem with_rhs(Vector<Scalar> b) const {
        GlsProblem copy = *this;
        if (b.size() != rows()) throw std::invalid_argument("GlsProblem: b must have as many rows as A");
        require_finite(b, "b");
        copy.b_ = std::move(b);
        return copy;
    }

private:
    Matrix<Scalar> a_;
    std::optional<Matrix<Scalar>> m_;
    Matrix<Scalar> l_;
    Vector<Scalar> b_;
    Matrix<Scalar> p_;
    Matrix<Scalar> q_;
    Matrix<Scalar> ma_;
    Matrix<Scalar> g_;
    std::optional<Matrix<Scalar>> range_p_;   // orthonormal basis of R(P) when M is rank deficient
};

/// A_ML^dag = (I - (L P_N(MA))^dag L) (MA)^dag M.
template <typename Scalar>
Matrix<Scalar> wpinv_elden(const GlsProblem<Scalar>& prob,
                           const RankTolerance<Scalar>& tol = RankTolerance<Scalar>::standard()) {
    // With Z an orthonormal basis of N(MA), P_N = Z Z^T and (L P_N)^dag = Z (L Z)^dag.
    // Forming I - (MA)^dag MA instead leaves rounding noise that the pseudoinverse amplifies.
    const Index n = prob.cols();
    const Matrix<Scalar> ma_dag = pinv(prob.MA(), tol);
    const Matrix<Scalar> z = nullspace_basis(prob.MA(), tol);
    Matrix<Scalar> left = Matrix<Scalar>::Identity(n, n);
    if (z.cols() > 0) {
        // L Z is judged against the scale of L: directions of N(MA) that L annihilates
        // must give exact zeros, not inverted rounding noise.
        const Scalar l_sigma = svd(prob.L(), tol).sigma_max();
        if (l_sigma > Scalar(0)) {
            const auto lz_tol = RankTolerance<Scalar>::absolute(tol.cutoff(l_sigma, prob.L().rows(), prob.L().cols()));
            left -= z * (pinv(Matrix<Scalar>(prob.L() * z), lz_tol) * prob.L());
        }
    }
    if (prob.identity_weight()) return left * ma_dag;
    return left * (ma_dag * prob.M());
}

/// (A^T P A + delta G)^dag A^T P; tends to A_ML^dag as delta -> 0 with O(delta) error.
template <typename Scalar>
Matrix<Scalar> wpinv_limit(const GlsProblem<Scalar>& prob, Scalar delta,
                           const RankTolerance<Scalar>& tol = RankTolerance<Scalar>::standard()) {
    if (!(delta > Scalar(0))) throw std::invalid_argument("wpinv_limit: delta must be positive");
    const Matrix<Scalar> atpa = symmetrized(prob.MA().transpose() * prob.MA());
    const Matrix<Scalar> at_p = prob.identity_weight() ? Matrix<Scalar>(prob.A().transpose())
                                                       : Matrix<Scalar>(prob.MA().transpose() * prob.M());
    return pinv(Matrix<Scalar>(atpa + delta * prob.G()), tol) * at_p;
}

template <typename Scalar>
struct WpinvMethod {
    enum class Kind { elden, gsvd, limit };
    Kind kind = Kind::elden;
    Scalar delta = Scalar(0);

    static WpinvMethod elden() { return {Kind::elden, Scalar(0)}; }
    static WpinvMethod gsvd() { return {Kind::gsvd, Scalar(0)}; }
    static WpinvMethod limit(Scalar delta) { return {Kind::limit, delta}; }
};

/// The full matrix A_ML^dag by the chosen route. The GSVD route needs M = I.
template <typename Scalar>
Matrix<Scalar> wpinv_matrix(const GlsProblem<Scalar>& prob, const WpinvMethod<Scalar>& method,
                            const RankTolerance<Scalar>& tol = RankTolerance<Scalar>::standard()) {
    switch (method.kind) {
    case WpinvMethod<Scalar>::Kind::elden:
        return wpinv_elden(prob, tol);
    case WpinvMethod<Scalar>::Kind::gsvd: {
        if (!prob.identity_weight()) {
            throw MethodUnsupportedError("the GSVD route computes A_IL^dag and needs M = I");
        }
        GsvdOptions<Scalar> opt;
        opt.rank_tol = tol;
        return wpinv_via_gsvd(gsvd_pair(prob.A(), prob.L(), opt), prob.G(), tol);
    }
    case WpinvMethod<Scalar>::Kind::limit:
        return wpinv_limit(prob, method.delta, tol);
    }
    throw std::logic_error("unknown wpinv method");
}

/// x^dag = A_ML^dag b, the minimum 2-norm solution of the GLS problem.
template <typename Scalar>
Vector<Scalar> wpinv_apply(const GlsProblem<Scalar>& prob, const WpinvMethod<Scalar>& method,
                           const RankTolerance<Scalar>& tol = RankTolerance<Scalar>::standard()) {
    return wpinv_matrix(prob, method, tol) * prob.b();
}

// ---------------------------------------------------------------------------
// Generalized Moore-Penrose equations

template <typename Scalar>
struct MpeIdentity {
    Scalar residual = 0;
    bool passed = false;
};

/// Normalized residuals of
///   (1) XAX = X               (2) MAXA = MA          (3) (PAX)^T = PAX
///   (4) (G X A G^dag)^T = XA  (5) X M^dag M = X
/// plus the informational residual of (Q X A)^T = Q X A, which carries no verdict.
template <typename Scalar>
struct MpeReport {
    std::array<MpeIdentity<Scalar>, 5> identities{};
    Scalar symmetric_qxa_residual = 0;
    Scalar tol = 0;

    bool all_passed() const {
        for (const auto& id : identities) {
            if (!id.passed) return false;
        }
        return true;
    }
};

template <typename Scalar, typename DerivedX>
MpeReport<Scalar> check_gmpe(const GlsProblem<Scalar>& prob, const Eigen::MatrixBase<DerivedX>& x_in, Scalar tol,
                             const RankTolerance<Scalar>& rank_tol = RankTolerance<Scalar>::standard()) {
    if (x_in.rows() != prob.cols() || x_in.cols() != prob.rows()) {
        throw std::invalid_argument("check_gmpe: X must be n x m");
    }
    const Matrix<Scalar> x = x_in;
    const Matrix<Scalar>& a = prob.A();
    const Matrix<Scalar> m = prob.M();
    const Matrix<Scalar>& ma = prob.MA();

    const Matrix<Scalar> xa = x * a;
    const Matrix<Scalar> pax = prob.P() * (a * x);
    const Matrix<Scalar> g_dag = pinv(prob.G(), rank_tol);
    const Matrix<Scalar> m_dag_m = pinv(m, rank_tol) * m;
    const Matrix<Scalar> qxa = prob.Q() * xa;

    MpeReport<Scalar> rep;
    rep.tol = tol;
    const Scalar x_norm = x.norm();
    std::array<Scalar, 5> res = {
        safe_ratio<Scalar>((xa * x - x).norm(), x_norm),
        safe_ratio<Scalar>((ma * xa - ma).norm(), ma.norm()),
        safe_ratio<Scalar>((pax.transpose() - pax).norm(), pax.norm()),
        safe_ratio<Scalar>(((prob.G() * xa * g_dag).transpose() - xa).norm(), xa.norm()),
        safe_ratio<Scalar>((x * m_dag_m - x).norm(), x_norm),
    };
    for (size_t i = 0; i < res.size(); ++i) {
        rep.identities[i].residual = res[i];
        rep.identities[i].passed = res[i] <= tol;
    }
    rep.symmetric_qxa_residual = safe_ratio<Scalar>((qxa.transpose() - qxa).norm(), qxa.norm());
    return rep;
}

// ---------------------------------------------------------------------------
// Solution criterion

template <typename Scalar>
struct GlsCriterionReport {
    Scalar normal_residual = 0;     // ||A^T P (A x - b)|| / ||A^T P b||
    Scalar orthogonality = 0;       // max_j |x^T G z_j| / (||x||_G ||G||^{1/2})
    Scalar range_defect = 0;        // ||(I - P_R(G)) x|| / ||x||
    bool satisfied = false;         // x solves the GLS problem
    bool in_range_g = false;        // x in R(G), i.e. x is the minimum-norm solution
};

/// x solves the GLS problem iff A^T P (A x - b) = 0 and x^T G z = 0 for all z in
/// N(A^T P A) = N(L_P A), with L_P^T L_P = P.
template <typename Scalar, typename DerivedX>
GlsCriterionReport<Scalar> check_gls_criterion(const GlsProblem<Scalar>& prob, const Eigen::MatrixBase<DerivedX>& x_in,
                                               Scalar tol,
                                               const RankTolerance<Scalar>& rank_tol = RankTolerance<Scalar>::standard()) {
    if (x_in.size() != prob.cols()) throw std::invalid_argument("check_gls_criterion: x has the wrong length");
    const Vector<Scalar> x = x_in;
    const Matrix<Scalar>& g = prob.G();

    GlsCriterionReport<Scalar> rep;
    const Vector<Scalar> normal = prob.at_p(prob.A() * x - prob.b());
    const Scalar atpb = prob.at_p(prob.b()).norm();
    const Scalar normal_scale = atpb > Scalar(0) ? atpb : prob.MA().norm() * prob.MA().norm() * x.norm();
    rep.normal_residual = safe_ratio<Scalar>(normal.norm(), normal_scale);

    const Matrix<Scalar> lp_a = prob.identity_weight() ? prob.A() : Matrix<Scalar>(psd_sqrt(prob.P()) * prob.A());
    const Matrix<Scalar> z = nullspace_basis(lp_a, rank_tol);
    const Scalar x_g = prob.g_norm(x);
    const Scalar g_scale = std::sqrt(svd(g, rank_tol).sigma_max());
    Scalar worst = 0;
    if (z.cols() > 0) worst = (z.transpose() * (g * x)).cwiseAbs().maxCoeff();
    rep.orthogonality = safe_ratio<Scalar>(worst, x_g * g_scale);

    const Vector<Scalar> outside = x - projector_range(g, rank_tol) * x;
    rep.range_defect = safe_ratio<Scalar>(outside.norm(), x.norm());

    rep.satisfied = rep.normal_residual <= tol && rep.orthogonality <= tol;
    rep.in_range_g = rep.range_defect <= tol;
    return rep;
}

} // namespace gls

#endif // GLS_WPINV_HPP
