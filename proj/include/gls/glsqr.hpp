#ifndef GLS_GLSQR_HPP
#define GLS_GLSQR_HPP

// gLSQR: LSQR driven by the generalized bidiagonalization. The iterate
// x_k = V_k argmin_y ||B_k y - beta_1 e_1||_2 is updated through Givens QR of B_k.

#include "gls/ggkb.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gls {

enum class StopReason { tolerance_met, ggkb_terminated, max_iter };

inline const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::tolerance_met: return "tolerance_met";
    case StopReason::ggkb_terminated: return "ggkb_terminated";
    case StopReason::max_iter: return "max_iter";
    }
    return "unknown";
}

enum class NormMethod { automatic, gsvd_exact, power_iteration };

/// Estimate of ||A|| = max_{v in R(G)} ||A v||_P / ||v||_G.
template <typename Scalar>
struct OperatorNormEstimate {
    enum class Source { gsvd_exact, power_iteration };
    Scalar value = 0;
    Source source = Source::gsvd_exact;
    Index iterations = 0;
    Scalar tol = 0;

    static OperatorNormEstimate fixed(Scalar value, Source source = Source::gsvd_exact) {
        if (!(value >= Scalar(0))) throw std::invalid_argument("operator norm must be nonnegative");
        return {value, source, 0, 0};
    }
};

inline const char* to_string(OperatorNormEstimate<double>::Source s) {
    return s == OperatorNormEstimate<double>::Source::gsvd_exact ? "gsvd_exact" : "power_iteration";
}

template <typename Scalar>
struct GivensState {
    Scalar rho_bar = 0;
    Scalar phi_bar = 0;
    Scalar rho = 0;      // rho_k of the last rotation
    Scalar phi = 0;      // phi_k of the last rotation
    Scalar c = 1;
    Scalar s = 0;
    Vector<Scalar> w;
    Vector<Scalar> x;
};

/// Stepwise gLSQR; glsqr_solve drives it, tests inspect it between steps.
template <typename Scalar>
class GlsqrIteration {
public:
    GlsqrIteration(const GlsProblem<Scalar>& prob, const GdagStrategy<Scalar>& strategy,
                   const GgkbOptions<Scalar>& options = {})
        : prob_(&prob), strategy_(&strategy), bidiag_(ggkb_init(prob, strategy, options)) {
        givens_.x = Vector<Scalar>::Zero(prob.cols());
        if (bidiag_.terminated) {
            givens_.w = Vector<Scalar>::Zero(prob.cols());
            return;
        }
        givens_.w = bidiag_.V.col(0);
        givens_.phi_bar = bidiag_.beta(1);
        givens_.rho_bar = bidiag_.alpha(1);
    }

    /// True once the bidiagonalization has terminated; x() is then exact.
    bool done() const { return bidiag_.terminated; }
    Index iteration() const { return bidiag_.steps; }
    const Vector<Scalar>& x() const { return givens_.x; }
    const BidiagState<Scalar>& bidiag() const { return bidiag_; }
    const GivensState<Scalar>& givens() const { return givens_; }
    Scalar beta1() const { return bidiag_.beta(1); }

    void step() {
        if (done()) throw std::logic_error("GlsqrIteration::step: already terminated");
        bidiag_ = ggkb_step(std::move(bidiag_), *prob_, *strategy_);
        const Index i = bidiag_.steps;
        const Scalar beta_next = bidiag_.beta(i + 1);
        const Scalar alpha_next = bidiag_.alpha(i + 1);

        GivensState<Scalar>& g = givens_;
        g.rho = std::hypot(g.rho_bar, beta_next);
        g.c = g.rho_bar / g.rho;
        g.s = beta_next / g.rho;
        const Scalar theta = g.s * alpha_next;
        g.rho_bar = -g.c * alpha_next;
        g.phi = g.c * g.phi_bar;
        g.phi_bar = g.s * g.phi_bar;

        g.x += (g.phi / g.rho) * g.w;
        if (bidiag_.V.cols() > i) {
            g.w = bidiag_.V.col(i) - (theta / g.rho) * g.w;
        }
    }

    /// alpha_{k+1} beta_{k+1} |e_k^T y_k| = ||A^*(A x_k - P_R(P) b)||_G. The last
    /// entry of y_k = R_k^{-1} f_k is phi_k / rho_k.
    Scalar residual_estimate() const {
        const Index k = bidiag_.steps;
        if (k == 0) return bidiag_.terminated ? Scalar(0) : bidiag_.alpha(1) * bidiag_.beta(1);
        return bidiag_.alpha(k + 1) * bidiag_.beta(k + 1) * std::abs(givens_.phi / givens_.rho);
    }

private:
    const GlsProblem<Scalar>* prob_;
    const GdagStrategy<Scalar>* strategy_;
    BidiagState<Scalar> bidiag_;
    GivensState<Scalar> givens_;
};

template <typename Scalar>
OperatorNormEstimate<Scalar> operator_norm(const GlsProblem<Scalar>& prob, const GdagStrategy<Scalar>& strategy,
                                           NormMethod method = NormMethod::automatic, Index max_iter = 200,
                                           Scalar rel_change = Scalar(1e-10)) {
    using Source = typename OperatorNormEstimate<Scalar>::Source;
    if (method == NormMethod::automatic) {
        method = prob.identity_weight() && prob.cols() <= 200 ? NormMethod::gsvd_exact : NormMethod::power_iteration;
    }
    if (method == NormMethod::gsvd_exact) {
        if (!prob.identity_weight()) {
            throw MethodUnsupportedError("operator_norm: the GSVD route needs M = I");
        }
        return {sigma_max_ca(gsvd_pair(prob.A(), prob.L())), Source::gsvd_exact, 0, 0};
    }

    // Power iteration on G^dag A^T P A, self-adjoint in <.,.>_G on R(G).
    OperatorNormEstimate<Scalar> est{Scalar(0), Source::power_iteration, 0, rel_change};
    Vector<Scalar> v = strategy.apply(prob.at_p(prob.b()));
    if (prob.g_norm(v) == Scalar(0)) {
        v = strategy.apply(prob.at_p(prob.A() * Vector<Scalar>::Ones(prob.cols())));
    }
    Scalar lambda = 0;
    for (Index it = 1; it <= max_iter; ++it) {
        const Scalar vg = prob.g_norm(v);
        if (vg == Scalar(0)) return est;
        v /= vg;
        const Scalar next = std::pow(prob.p_norm(prob.A() * v), 2);
        est.iterations = it;
        const bool settled = it > 1 && std::abs(next - lambda) <= rel_change * next;
        lambda = next;
        if (settled) break;
        v = strategy.apply(prob.at_p(prob.A() * v));
    }
    est.value = std::sqrt(lambda);
    return est;
}

template <typename Scalar>
struct GlsqrOptions {
    Scalar tol = Scalar(1e-10);
    std::optional<Index> max_iter;                       // default min(m, n), or 2n without reorthogonalization
    std::optional<OperatorNormEstimate<Scalar>> norm;    // default operator_norm(automatic)
    bool debug_true_residual = false;
    bool debug_explicit_check = false;
    GgkbOptions<Scalar> ggkb{};
};

template <typename Scalar>
struct SolveReport {
    Vector<Scalar> x;
    Index iterations = 0;
    StopReason stop_reason = StopReason::max_iter;
    OperatorNormEstimate<Scalar> norm{};
    Scalar beta1 = 0;
    bool inner_cap_hit = false;
    std::vector<Scalar> residual_estimate_history; // ||A^* r_k||_G / (||A|| beta_1), estimated
    std::vector<Scalar> true_residual_history;     // same quantity evaluated directly (debug)
    std::vector<Scalar> explicit_gap_history;      // ||x_k - V_k B_k^dag beta_1 e_1|| / ||x_k|| (debug)
    std::vector<Scalar> x_norm_history;
    std::vector<Scalar> alpha_history;             // alpha_{k+1}
    std::vector<Scalar> beta_history;              // beta_{k+1}

    Scalar final_estimate() const {
        return residual_estimate_history.empty() ? Scalar(0) : residual_estimate_history.back();
    }
};

namespace detail {

template <typename Scalar>
Vector<Scalar> explicit_iterate(const BidiagState<Scalar>& st, Index k) {
    const Matrix<Scalar> b = st.bidiagonal(k);
    Vector<Scalar> rhs = Vector<Scalar>::Zero(k + 1);
    rhs(0) = st.beta(1);
    const Vector<Scalar> y = b.householderQr().solve(rhs);
    return st.V.leftCols(k) * y;
}

} // namespace detail

/// Runs gLSQR until  ||A^* r_k||_G / (||A|| (b^T P b)^{1/2}) <= tol, until the
/// bidiagonalization terminates (x is then the exact minimum-norm solution), or
/// until max_iter.
template <typename Scalar>
SolveReport<Scalar> glsqr_solve(const GlsProblem<Scalar>& prob, const GdagStrategy<Scalar>& strategy,
                                const GlsqrOptions<Scalar>& opt = {}) {
    if (!(opt.tol > Scalar(0))) throw std::invalid_argument("glsqr_solve: tol must be positive");
    const Index default_cap = opt.ggkb.reorthogonalize ? std::min(prob.rows(), prob.cols()) : 2 * prob.cols();
    const Index max_iter = opt.max_iter.value_or(default_cap);

    SolveReport<Scalar> rep;
    rep.norm = opt.norm ? *opt.norm : operator_norm(prob, strategy);

    GlsqrIteration<Scalar> it(prob, strategy, opt.ggkb);
    rep.beta1 = it.beta1();
    const Scalar denom = rep.norm.value * rep.beta1;

    std::optional<Matrix<Scalar>> g_dag;
    if (opt.debug_true_residual) g_dag = pinv(prob.G());

    if (it.done()) {
        rep.x = it.x();
        rep.stop_reason = StopReason::ggkb_terminated;
        rep.inner_cap_hit = it.bidiag().inner_cap_hit;
        return rep;
    }

    while (true) {
        if (it.iteration() >= max_iter) {
            rep.stop_reason = StopReason::max_iter;
            break;
        }
        it.step();
        const Index k = it.iteration();
        const Scalar estimate = safe_ratio<Scalar>(it.residual_estimate(), denom);
        rep.residual_estimate_history.push_back(estimate);
        rep.x_norm_history.push_back(it.x().norm());
        rep.alpha_history.push_back(it.bidiag().alpha(k + 1));
        rep.beta_history.push_back(it.bidiag().beta(k + 1));
        if (g_dag) {
            const Vector<Scalar> direct = *g_dag * prob.at_p(prob.A() * it.x() - prob.b());
            rep.true_residual_history.push_back(safe_ratio<Scalar>(prob.g_norm(direct), denom));
        }
        if (opt.debug_explicit_check) {
            const Vector<Scalar> xe = detail::explicit_iterate(it.bidiag(), k);
            rep.explicit_gap_history.push_back(safe_ratio<Scalar>((it.x() - xe).norm(), it.x().norm()));
        }
        if (it.done()) {
            rep.stop_reason = StopReason::ggkb_terminated;
            break;
        }
        if (estimate <= opt.tol) {
            rep.stop_reason = StopReason::tolerance_met;
            break;
        }
    }
    rep.x = it.x();
    rep.iterations = it.iteration();
    rep.inner_cap_hit = it.bidiag().inner_cap_hit;
    return rep;
}

/// The GLS criterion plus R(G) membership, i.e. report.x is the minimum-norm solution.
template <typename Scalar>
bool certify_solution(const GlsProblem<Scalar>& prob, const SolveReport<Scalar>& report, Scalar tol) {
    const auto crit = check_gls_criterion(prob, report.x, tol);
    return crit.satisfied && crit.in_range_g;
}

} // namespace gls

#endif // GLS_GLSQR_HPP
