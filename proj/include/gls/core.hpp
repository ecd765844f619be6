#ifndef GLS_CORE_HPP
#define GLS_CORE_HPP

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gls {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using SparseMatrixXd = SparseMatrix<double>;

using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative factorization did not reach its convergence criterion.
class FactorizationError : public Error {
public:
    FactorizationError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class IndefiniteMatrixError : public Error {
public:
    IndefiniteMatrixError(const std::string& what, Index pivot_index)
        : Error(what), pivot_index_(pivot_index) {}
    Index pivot_index() const noexcept { return pivot_index_; }

private:
    Index pivot_index_;
};

class NegativeEigenvalueError : public Error {
public:
    NegativeEigenvalueError(const std::string& what, double eigenvalue)
        : Error(what), eigenvalue_(eigenvalue) {}
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

class MethodUnsupportedError : public Error {
public:
    using Error::Error;
};

class NumericalBreakdownError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Helpers shared by every module

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.derived().array().isFinite().all();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* name) {
    if (!all_finite(m)) {
        throw std::invalid_argument(std::string(name) + " contains NaN or Inf entries");
    }
}

/// a/b with the convention 0/0 = 0 (and x/0 = x for x > 0).
template <typename Scalar>
Scalar safe_ratio(Scalar num, Scalar den) {
    if (den > Scalar(0)) return num / den;
    return num;
}

template <typename Derived>
Matrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    return Scalar(0.5) * (m + m.transpose());
}

/// Numerical settings for the dense kernels. Every default can be overridden per call.
template <typename Scalar>
struct LinalgConfig {
    Scalar epsilon = std::numeric_limits<Scalar>::epsilon();
    int svd_max_sweeps = 30;
    // 1e-14 and 1e-10 in double precision, scaled with the unit roundoff otherwise.
    Scalar cholesky_pivot_tol = Scalar(45) * std::numeric_limits<Scalar>::epsilon();
    Scalar psd_tol = Scalar(450000) * std::numeric_limits<Scalar>::epsilon();
};

} // namespace gls

#endif // GLS_CORE_HPP
