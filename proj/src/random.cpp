#include "gls/random.hpp"

#include "gls/la_core.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <utility>

namespace gls {

double Rng::uniform() {
    // (k + 0.5) / 2^53 keeps the value strictly inside (0, 1).
    const std::uint64_t k = engine_() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

VectorXd Rng::normal_vector(Index n) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
}

MatrixXd Rng::normal_matrix(Index rows, Index cols) {
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    }
    return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

MatrixXd random_low_rank(Index rows, Index cols, Index rank, std::uint64_t seed) {
    if (rank < 0 || rank > std::min(rows, cols)) throw std::invalid_argument("random_low_rank: rank out of range");
    Rng rng(seed);
    if (rank == std::min(rows, cols)) return rng.normal_matrix(rows, cols);
    const MatrixXd left = rng.normal_matrix(rows, rank);
    const MatrixXd right = rng.normal_matrix(rank, cols);
    return left * right;
}

MatrixXd random_with_singular_values(Index rows, Index cols, const VectorXd& singular_values, std::uint64_t seed) {
    const Index k = std::min(rows, cols);
    if (singular_values.size() > k) throw std::invalid_argument("random_with_singular_values: too many values");
    Rng rng(seed);
    const MatrixXd u = qr_householder(rng.normal_matrix(rows, k)).Q;
    const MatrixXd v = qr_householder(rng.normal_matrix(cols, k)).Q;
    VectorXd s = VectorXd::Zero(k);
    s.head(singular_values.size()) = singular_values;
    return u * s.asDiagonal() * v.transpose();
}

SparseMatrixXd sprandn(Index rows, Index cols, double density, std::uint64_t seed) {
    if (!(density >= 0.0 && density <= 1.0)) throw std::invalid_argument("sprandn: density must lie in [0, 1]");
    Rng rng(seed);
    const auto total = static_cast<long double>(rows) * static_cast<long double>(cols);
    const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(total) * density));
    std::set<std::pair<Index, Index>> seen;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(target);
    while (seen.size() < target) {
        const Index i = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(rows));
        const Index j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(cols));
        if (!seen.emplace(i, j).second) continue;
        trips.emplace_back(i, j, rng.normal());
    }
    SparseMatrixXd s(rows, cols);
    s.setFromTriplets(trips.begin(), trips.end());
    return s;
}

} // namespace gls
