#ifndef GLS_PROBLEMS_HPP
#define GLS_PROBLEMS_HPP

// Test problems with a planted minimum 2-norm solution:
//   (1) G = A^T A + L^T L,
//   (2) w in R(G), B a basis of N(A), x = w - B (B^T G B)^{-1} B^T G w,
//   (3) z in R(A)^perp, b = A x + z.

#include "gls/wpinv.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace gls {

SparseMatrixXd make_l1(Index n);
SparseMatrixXd make_l2(Index n);

class RegularizerKind {
public:
    enum class Kind { l1_firstorder, l2_secondorder, identity, custom };

    static RegularizerKind l1() { return RegularizerKind(Kind::l1_firstorder); }
    static RegularizerKind l2() { return RegularizerKind(Kind::l2_secondorder); }
    static RegularizerKind identity() { return RegularizerKind(Kind::identity); }
    static RegularizerKind custom(SparseMatrixXd l);

    /// "l1", "l2" or "identity".
    static RegularizerKind parse(std::string_view name);

    Kind kind() const { return kind_; }
    std::string name() const;
    SparseMatrixXd build(Index n) const;

private:
    explicit RegularizerKind(Kind kind) : kind_(kind) {}

    Kind kind_;
    SparseMatrixXd custom_;
};

enum class TargetFunction { ramp, cubic, trig };

TargetFunction parse_target_function(std::string_view name);
std::string to_string(TargetFunction f);

struct Interval {
    double a = 0.0;
    double b = 1.0;
};

/// ramp: [0, 1], cubic: [-1, 1], trig: [-pi, pi].
Interval default_interval(TargetFunction f);

/// f on n equispaced points of [a, b], endpoints included.
VectorXd sample_function(TargetFunction f, Index n, Interval interval);
VectorXd sample_function(TargetFunction f, Index n);

struct GeneratedProblem {
    GlsProblem<double> problem;
    VectorXd x_true;
    VectorXd w;
    VectorXd z;
    std::uint64_t seed = 0;
    std::string func;
    std::string regularizer;
    double validation_tol = 0.0;
};

/// Builds b around a planted solution and validates it against the GLS
/// criterion at `validation_tol`; throws ValidationError otherwise.
GeneratedProblem generate(const MatrixXd& a, const RegularizerKind& regularizer, TargetFunction func,
                          std::uint64_t seed, double validation_tol = 1e-8);

/// Same with a synthetic A of the given shape and rank: dense Gaussian factors
/// when density is 1, otherwise the product of two sprandn-like factors (the
/// rank is then an upper bound).
GeneratedProblem generate_synthetic(Index rows, Index cols, Index rank, const RegularizerKind& regularizer,
                                    TargetFunction func, std::uint64_t seed, double validation_tol = 1e-8,
                                    double density = 1.0);

} // namespace gls

#endif // GLS_PROBLEMS_HPP
