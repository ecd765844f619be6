#ifndef GLS_RANDOM_HPP
#define GLS_RANDOM_HPP

#include "gls/core.hpp"

#include <cstdint>
#include <random>

namespace gls {

/// Seeded generator with a platform-independent normal sampler (Box-Muller on
/// top of mt19937_64), so generated problems are bit-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1), 53 random bits.
    double uniform();
    double normal();

    VectorXd normal_vector(Index n);
    MatrixXd normal_matrix(Index rows, Index cols);

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Independent seed for a named sub-stream (splitmix64 finalizer over seed and stream),
/// so that callers that share a user seed do not replay each other's numbers.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Dense Gaussian m x n matrix of the given rank (product of Gaussian factors).
MatrixXd random_low_rank(Index rows, Index cols, Index rank, std::uint64_t seed);

/// m x n matrix U diag(s) V^T with Haar-like orthogonal factors and the given
/// singular values (zero-padded to min(m, n)).
MatrixXd random_with_singular_values(Index rows, Index cols, const VectorXd& singular_values, std::uint64_t seed);

/// Sparse Gaussian matrix with roughly density * m * n nonzeros (sprandn-like).
SparseMatrixXd sprandn(Index rows, Index cols, double density, std::uint64_t seed);

} // namespace gls

#endif // GLS_RANDOM_HPP
