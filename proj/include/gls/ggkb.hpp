#ifndef GLS_GGKB_HPP
#define GLS_GGKB_HPP

// Generalized Golub-Kahan bidiagonalization of v -> P_R(P) A v between
// (R(G), <.,.>_G) and (R(P), <.,.>_P), run on vectors u~_i with u_i = P P^dag u~_i.
// For a full-rank M no projection is needed; otherwise u~_i is kept in R(P) (Pi below)
// with an orthonormal basis of R(M^T):
//
//   beta_1 u~_1 = Pi b,
//   alpha_i v_i = G^dag A^T P u~_i - beta_i v_{i-1},
//   beta_{i+1} u~_{i+1} = Pi (A v_i - alpha_i u~_i).

#include "gls/wpinv.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace gls {

/// How s = G^dag s_bar is evaluated inside the bidiagonalization.
template <typename Scalar>
class GdagStrategy {
public:
    enum class Kind { dense_pinv, cholesky, inner_lsqr };

    static GdagStrategy dense_pinv(const Matrix<Scalar>& g,
                                   const RankTolerance<Scalar>& tol = RankTolerance<Scalar>::standard()) {
        const auto f = svd(g, tol);
        const Index r = f.rank;
        auto gd = std::make_shared<const Matrix<Scalar>>(
            f.V.leftCols(r) * f.singular_values.head(r).cwiseInverse().asDiagonal() * f.U.leftCols(r).transpose());
        const Scalar cond = r > 0 ? f.singular_values(0) / f.singular_values(r - 1) : Scalar(1);
        return GdagStrategy(Kind::dense_pinv, std::move(gd), 0, 0, cond);
    }

    /// Throws IndefiniteMatrixError unless G is numerically positive definite.
    static GdagStrategy cholesky(const Matrix<Scalar>& g, const LinalgConfig<Scalar>& cfg = {}) {
        auto factor = std::make_shared<const Matrix<Scalar>>(cholesky_spd(g, cfg));
        const Vector<Scalar> d = factor->diagonal().cwiseAbs();
        const Scalar ratio = d.maxCoeff() / d.minCoeff();
        return GdagStrategy(Kind::cholesky, std::move(factor), 0, 0, ratio * ratio);
    }

    /// LSQR on min ||G s - s_bar||_2 with stopping tolerance tau; max_iter = 0 means 4n.
    static GdagStrategy inner_lsqr(const Matrix<Scalar>& g, Scalar tau, Index max_iter = 0) {
        if (!(tau > Scalar(0))) throw std::invalid_argument("inner_lsqr: tau must be positive");
        if (max_iter <= 0) max_iter = 4 * g.rows();
        return GdagStrategy(Kind::inner_lsqr, std::make_shared<const Matrix<Scalar>>(g), tau, max_iter, 1);
    }

    Kind kind() const noexcept { return kind_; }
    Scalar tau() const noexcept { return tau_; }
    Index max_iter() const noexcept { return max_iter_; }
    /// Condition estimate of G on R(G) (1 for inner_lsqr, whose error is governed by tau).
    Scalar condition() const noexcept { return cond_; }
    /// Relative level below which a computed alpha or beta is indistinguishable from zero.
    Scalar noise_level() const noexcept { return Scalar(10) * std::numeric_limits<Scalar>::epsilon() * cond_; }

    /// G^dag s_bar. `cap_hit` is set when the inner solver stops at its iteration cap.
    Vector<Scalar> apply(const Vector<Scalar>& s_bar, bool* cap_hit = nullptr) const {
        switch (kind_) {
        case Kind::dense_pinv:
            return *data_ * s_bar;
        case Kind::cholesky: {
            const auto lower = data_->template triangularView<Eigen::Lower>();
            Vector<Scalar> y = lower.solve(s_bar);
            return lower.transpose().solve(y);
        }
        case Kind::inner_lsqr: {
            const Matrix<Scalar>& g = *data_;
            auto res = standard_lsqr<Scalar>([&g](const Vector<Scalar>& v) -> Vector<Scalar> { return g * v; },
                                             s_bar, tau_, max_iter_);
            if (cap_hit && !res.converged) *cap_hit = true;
            return std::move(res.x);
        }
        }
        throw std::logic_error("unknown G^dag strategy");
    }

    /// The cached G^dag (dense_pinv only).
    const Matrix<Scalar>& pseudo_inverse() const {
        if (kind_ != Kind::dense_pinv) throw std::logic_error("pseudo_inverse: strategy has no dense G^dag");
        return *data_;
    }

private:
    GdagStrategy(Kind kind, std::shared_ptr<const Matrix<Scalar>> data, Scalar tau, Index max_iter, Scalar cond)
        : kind_(kind), data_(std::move(data)), tau_(tau), max_iter_(max_iter), cond_(cond) {}

    Kind kind_;
    std::shared_ptr<const Matrix<Scalar>> data_; // G^dag, Cholesky factor or G
    Scalar tau_;
    Index max_iter_;
    Scalar cond_;
};

template <typename Scalar>
struct GgkbOptions {
    /// Modified Gram-Schmidt of v_i in <.,.>_G and of u~_i in <.,.>_P.
    bool reorthogonalize = true;
    /// alpha_i or beta_i (i >= 2) at or below max(breakdown_tol, strategy noise level)
    /// times the largest coefficient seen so far ends the process.
    Scalar breakdown_tol = Scalar(1e-13);
};

template <typename Scalar>
struct BidiagState {
    std::vector<Scalar> alphas;    // alpha_1, alpha_2, ...
    std::vector<Scalar> betas;     // beta_1, beta_2, ...
    Matrix<Scalar> V;              // v_1, v_2, ... (G-orthonormal)
    Matrix<Scalar> U_tilde;        // u~_1, u~_2, ... (P-orthonormal)
    Index steps = 0;               // completed loop iterations
    bool terminated = false;
    std::optional<Index> k_t;      // min{k : alpha_{k+1} beta_{k+1} = 0}
    bool inner_cap_hit = false;    // an inexact G^dag application hit its iteration cap

    GgkbOptions<Scalar> options{};
    Scalar scale = 0;              // largest alpha_i / beta_{i>=2} so far
    Scalar cutoff = 0;             // relative breakdown threshold in effect
    Matrix<Scalar> GV;             // G v_i, kept for reorthogonalization
    Matrix<Scalar> PU;             // P u~_i

    /// Lower bidiagonal B_k ((k+1) x k) built from alpha_1..alpha_k, beta_2..beta_{k+1}.
    Matrix<Scalar> bidiagonal(Index k) const {
        Matrix<Scalar> b = Matrix<Scalar>::Zero(k + 1, k);
        for (Index i = 0; i < k; ++i) {
            b(i, i) = alpha(i + 1);
            b(i + 1, i) = beta(i + 2);
        }
        return b;
    }

    /// 1-based access; coefficients that were never formed read as zero.
    Scalar alpha(Index i) const { return i >= 1 && i <= Index(alphas.size()) ? alphas[size_t(i - 1)] : Scalar(0); }
    Scalar beta(Index i) const { return i >= 1 && i <= Index(betas.size()) ? betas[size_t(i - 1)] : Scalar(0); }
};

namespace detail {

template <typename Scalar>
void append_column(Matrix<Scalar>& m, const Vector<Scalar>& col) {
    if (m.cols() == 0) m.resize(col.size(), 0);
    m.conservativeResize(Eigen::NoChange, m.cols() + 1);
    m.col(m.cols() - 1) = col;
}

/// x -= sum_j basis_j (weighted_j^T x), where weighted_j = C basis_j.
template <typename Scalar>
void mgs_against(Vector<Scalar>& x, const Matrix<Scalar>& basis, const Matrix<Scalar>& weighted) {
    for (Index j = 0; j < basis.cols(); ++j) x -= weighted.col(j).dot(x) * basis.col(j);
}

template <typename Scalar>
Vector<Scalar> apply_p(const GlsProblem<Scalar>& prob, const Vector<Scalar>& u) {
    if (prob.identity_weight()) return u;
    return prob.P() * u;
}

template <typename Scalar>
void push_v(BidiagState<Scalar>& st, const GlsProblem<Scalar>& prob, const Vector<Scalar>& v) {
    append_column(st.V, v);
    if (st.options.reorthogonalize) append_column(st.GV, Vector<Scalar>(prob.G() * v));
}

template <typename Scalar>
void push_u(BidiagState<Scalar>& st, const GlsProblem<Scalar>& prob, const Vector<Scalar>& u) {
    append_column(st.U_tilde, u);
    if (st.options.reorthogonalize) append_column(st.PU, apply_p(prob, u));
}

} // namespace detail

/// beta_1 = (b^T P b)^{1/2}, u~_1 = Pi b / beta_1, alpha_1 v_1 = G^dag A^T P u~_1.
/// Returns an already terminated state (k_t = 0) when P b = 0 or A^T P b = 0.
template <typename Scalar>
BidiagState<Scalar> ggkb_init(const GlsProblem<Scalar>& prob, const GdagStrategy<Scalar>& strategy,
                              const GgkbOptions<Scalar>& options = {}) {
    BidiagState<Scalar> st;
    st.options = options;
    st.V.resize(prob.cols(), 0);
    st.U_tilde.resize(prob.rows(), 0);

    const Vector<Scalar>& b = prob.b();
    const Scalar beta1 = prob.p_norm(b);
    const Scalar m_scale = prob.identity_weight() ? Scalar(1) : prob.M().norm();
    st.betas.push_back(beta1);
    if (!(beta1 > options.breakdown_tol * m_scale * b.norm())) {
        st.terminated = true;
        st.k_t = 0;
        return st;
    }
    const Vector<Scalar> u1 = prob.project_range_p(b) / beta1;
    detail::push_u(st, prob, u1);

    const Vector<Scalar> s = strategy.apply(prob.at_p(u1), &st.inner_cap_hit);
    const Scalar alpha1 = prob.g_norm(s);
    if (!std::isfinite(alpha1)) throw NumericalBreakdownError("ggkb_init: alpha_1 is not finite");
    st.alphas.push_back(alpha1);
    // ||A v||_P <= ||v||_G, so every alpha and beta_{i>=2} lies in [0, 1].
    if (!(alpha1 > options.breakdown_tol)) {
        st.terminated = true;
        st.k_t = 0;
        return st;
    }
    st.scale = alpha1;
    st.cutoff = std::max(options.breakdown_tol, strategy.noise_level());
    detail::push_v(st, prob, Vector<Scalar>(s / alpha1));
    return st;
}

/// One pass of the recurrence: forms beta_{i+1}, u~_{i+1}, alpha_{i+1}, v_{i+1}.
template <typename Scalar>
BidiagState<Scalar> ggkb_step(BidiagState<Scalar> st, const GlsProblem<Scalar>& prob,
                              const GdagStrategy<Scalar>& strategy) {
    if (st.terminated) throw std::logic_error("ggkb_step: process already terminated");
    const Index i = st.steps + 1;
    const Scalar alpha_i = st.alpha(i);
    const Vector<Scalar> v_i = st.V.col(i - 1);

    // Without the projection the N(P) part of u~ grows like 1/(beta_2 ... beta_i) and
    // swamps the P-norm in rounding.
    Vector<Scalar> r = prob.project_range_p(Vector<Scalar>(prob.A() * v_i - alpha_i * st.U_tilde.col(i - 1)));
    if (st.options.reorthogonalize) detail::mgs_against(r, st.U_tilde, st.PU);
    const Scalar beta = prob.p_norm(r);
    if (!std::isfinite(beta)) throw NumericalBreakdownError("ggkb_step: beta is not finite");
    st.betas.push_back(beta);
    st.steps = i;
    st.scale = std::max(st.scale, beta);
    if (!(beta > st.cutoff * st.scale)) {
        st.terminated = true;
        st.k_t = i;
        return st;
    }
    const Vector<Scalar> u_next = r / beta;
    detail::push_u(st, prob, u_next);

    Vector<Scalar> s = strategy.apply(prob.at_p(u_next), &st.inner_cap_hit) - beta * v_i;
    if (st.options.reorthogonalize) detail::mgs_against(s, st.V, st.GV);
    const Scalar alpha = prob.g_norm(s);
    if (!std::isfinite(alpha)) throw NumericalBreakdownError("ggkb_step: alpha is not finite");
    st.alphas.push_back(alpha);
    st.scale = std::max(st.scale, alpha);
    if (!(alpha > st.cutoff * st.scale)) {
        st.terminated = true;
        st.k_t = i;
        return st;
    }
    detail::push_v(st, prob, Vector<Scalar>(s / alpha));
    return st;
}

/// Largest principal angle between span{v_1..v_k} and the Krylov space
/// K_k(G^dag A^T P A, G^dag A^T P b), the latter built independently with a dense
/// G^dag and Euclidean orthonormalization. Empty when fewer than k vectors exist.
template <typename Scalar>
std::optional<Scalar> krylov_subspace_check(const BidiagState<Scalar>& st, const GlsProblem<Scalar>& prob, Index k) {
    if (k < 1 || k > st.V.cols()) return std::nullopt;
    const Index n = prob.cols();
    const Matrix<Scalar> g_dag = pinv(prob.G());
    const Matrix<Scalar> op = g_dag * (prob.MA().transpose() * prob.MA());

    Matrix<Scalar> basis(n, k);
    Vector<Scalar> next = g_dag * prob.at_p(prob.b());
    for (Index j = 0; j < k; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Index i = 0; i < j; ++i) next -= basis.col(i).dot(next) * basis.col(i);
        }
        const Scalar nrm = next.norm();
        if (nrm == Scalar(0)) return std::nullopt;
        basis.col(j) = next / nrm;
        next = op * basis.col(j);
    }

    const Matrix<Scalar> qv = qr_householder(st.V.leftCols(k)).Q;
    // sin of the largest principal angle = ||(I - Q_v Q_v^T) Q_k||_2.
    const Matrix<Scalar> gap = basis - qv * (qv.transpose() * basis);
    const Scalar sin_max = std::min(Scalar(1), svd(gap).sigma_max());
    return std::asin(sin_max);
}

} // namespace gls

#endif // GLS_GGKB_HPP
