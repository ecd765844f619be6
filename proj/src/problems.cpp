#include "gls/problems.hpp"

#include "gls/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace gls {

SparseMatrixXd make_l1(Index n) {
    if (n < 2) throw std::invalid_argument("make_l1: n must be at least 2");
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(2 * (n - 1)));
    for (Index i = 0; i + 1 < n; ++i) {
        trips.emplace_back(i, i, 1.0);
        trips.emplace_back(i, i + 1, -1.0);
    }
    SparseMatrixXd l(n - 1, n);
    l.setFromTriplets(trips.begin(), trips.end());
    return l;
}

SparseMatrixXd make_l2(Index n) {
    if (n < 3) throw std::invalid_argument("make_l2: n must be at least 3");
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(3 * (n - 2)));
    for (Index i = 0; i + 2 < n; ++i) {
        trips.emplace_back(i, i, -1.0);
        trips.emplace_back(i, i + 1, 2.0);
        trips.emplace_back(i, i + 2, -1.0);
    }
    SparseMatrixXd l(n - 2, n);
    l.setFromTriplets(trips.begin(), trips.end());
    return l;
}

RegularizerKind RegularizerKind::custom(SparseMatrixXd l) {
    RegularizerKind k(Kind::custom);
    k.custom_ = std::move(l);
    return k;
}

RegularizerKind RegularizerKind::parse(std::string_view name) {
    if (name == "l1") return l1();
    if (name == "l2") return l2();
    if (name == "identity" || name == "I") return identity();
    throw std::invalid_argument("unknown regularizer '" + std::string(name) + "' (expected l1, l2 or identity)");
}

std::string RegularizerKind::name() const {
    switch (kind_) {
    case Kind::l1_firstorder: return "l1";
    case Kind::l2_secondorder: return "l2";
    case Kind::identity: return "identity";
    case Kind::custom: return "custom";
    }
    return "unknown";
}

SparseMatrixXd RegularizerKind::build(Index n) const {
    switch (kind_) {
    case Kind::l1_firstorder: return make_l1(n);
    case Kind::l2_secondorder: return make_l2(n);
    case Kind::identity: {
        SparseMatrixXd eye(n, n);
        eye.setIdentity();
        return eye;
    }
    case Kind::custom:
        if (custom_.cols() != n) throw std::invalid_argument("custom regularizer has the wrong column count");
        return custom_;
    }
    throw std::logic_error("unknown regularizer kind");
}

TargetFunction parse_target_function(std::string_view name) {
    if (name == "ramp") return TargetFunction::ramp;
    if (name == "cubic") return TargetFunction::cubic;
    if (name == "trig") return TargetFunction::trig;
    throw std::invalid_argument("unknown function '" + std::string(name) + "' (expected ramp, cubic or trig)");
}

std::string to_string(TargetFunction f) {
    switch (f) {
    case TargetFunction::ramp: return "ramp";
    case TargetFunction::cubic: return "cubic";
    case TargetFunction::trig: return "trig";
    }
    return "unknown";
}

Interval default_interval(TargetFunction f) {
    switch (f) {
    case TargetFunction::ramp: return {0.0, 1.0};
    case TargetFunction::cubic: return {-1.0, 1.0};
    case TargetFunction::trig: return {-std::numbers::pi, std::numbers::pi};
    }
    return {};
}

VectorXd sample_function(TargetFunction f, Index n, Interval interval) {
    if (n < 1) throw std::invalid_argument("sample_function: n must be positive");
    if (!(interval.a < interval.b)) throw std::invalid_argument("sample_function: empty interval");
    VectorXd t = VectorXd::Constant(1, interval.a);
    if (n > 1) t = VectorXd::LinSpaced(n, interval.a, interval.b);
    switch (f) {
    case TargetFunction::ramp: return t;
    case TargetFunction::cubic: return t.array().cube() - t.array().square();
    case TargetFunction::trig: return (5.0 * t.array()).sin() - 2.0 * t.array().cos();
    }
    throw std::logic_error("unknown target function");
}

VectorXd sample_function(TargetFunction f, Index n) { return sample_function(f, n, default_interval(f)); }

GeneratedProblem generate(const MatrixXd& a, const RegularizerKind& regularizer, TargetFunction func,
                          std::uint64_t seed, double validation_tol) {
    const Index m = a.rows();
    const Index n = a.cols();
    const MatrixXd l = MatrixXd(regularizer.build(n));
    const MatrixXd g = symmetrized(a.transpose() * a + l.transpose() * l);

    const VectorXd f = sample_function(func, n);
    const VectorXd w = projector_range(g) * f;
    if (w.norm() <= 1e-8 * f.norm()) {
        throw ValidationError("generated problem failed validation: the target function lies in N(G)");
    }

    VectorXd x_true = w;
    const MatrixXd basis = nullspace_basis(a);
    if (basis.cols() > 0) {
        const MatrixXd gb = g * basis;
        const MatrixXd btgb = symmetrized(basis.transpose() * gb);
        // B^T G B is singular whenever N(A) and N(L) intersect, and is then judged on the
        // scale of G: a relative cutoff would invert its rounding-level part.
        const double cutoff = double(n) * std::numeric_limits<double>::epsilon() * g.norm();
        x_true -= basis * (pinv(btgb, RankTolerance<double>::absolute(cutoff)) * (gb.transpose() * w));
    }

    Rng rng(derive_seed(seed, 1));
    const SvdFactors<double> as = svd(a);
    VectorXd z = VectorXd::Zero(m);
    if (as.rank < m) {
        const VectorXd noise = rng.normal_vector(m);
        const auto ur = as.range_basis();
        z = noise - ur * (ur.transpose() * noise);
    }
    VectorXd b = a * x_true + z;

    GeneratedProblem out{GlsProblem<double>(a, l, std::move(b)), x_true, w, z, seed, to_string(func),
                         regularizer.name(), validation_tol};

    const auto crit = check_gls_criterion(out.problem, out.x_true, validation_tol);
    const double z_leak = (a.transpose() * z).norm();
    if (!crit.satisfied || !crit.in_range_g || z_leak > 1e-10 * a.norm() * z.norm()) {
        std::ostringstream msg;
        msg << "generated problem failed validation: normal residual " << crit.normal_residual
            << ", orthogonality " << crit.orthogonality << ", range defect " << crit.range_defect
            << ", ||A^T z|| " << z_leak;
        throw ValidationError(msg.str());
    }
    return out;
}

GeneratedProblem generate_synthetic(Index rows, Index cols, Index rank, const RegularizerKind& regularizer,
                                    TargetFunction func, std::uint64_t seed, double validation_tol,
                                    double density) {
    if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("generate_synthetic: density must be in (0, 1]");
    // The matrix and the R(A)^perp perturbation draw from distinct streams.
    const std::uint64_t matrix_seed = derive_seed(seed, 2);
    MatrixXd a;
    if (density == 1.0) {
        a = random_low_rank(rows, cols, rank, matrix_seed);
    } else {
        a = MatrixXd(sprandn(rows, rank, density, matrix_seed)) * MatrixXd(sprandn(rank, cols, density, matrix_seed + 1));
    }
    return generate(a, regularizer, func, seed, validation_tol);
}

} // namespace gls
