#ifndef GLS_IO_HPP
#define GLS_IO_HPP

#include "gls/glsqr.hpp"
#include "gls/problems.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

namespace gls {

/// Missing or unreadable file, failed write.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed Matrix Market content; line() is 1-based (0 when unknown).
class ParseError : public IoError {
public:
    ParseError(const std::string& source, long line, const std::string& what)
        : IoError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

// ---------------------------------------------------------------------------
// Matrix Market

/// Coordinate files give a sparse matrix, array files a dense one. Symmetric
/// storage is expanded and coordinate duplicates are summed.
using MatrixMarketData = std::variant<SparseMatrixXd, MatrixXd>;

MatrixMarketData parse_matrix_market(std::istream& in, const std::string& source = "<stream>");
MatrixMarketData read_matrix_market(const std::filesystem::path& path);

MatrixXd read_dense(const std::filesystem::path& path);
SparseMatrixXd read_sparse(const std::filesystem::path& path);
/// An n x 1 or 1 x n matrix.
VectorXd read_vector(const std::filesystem::path& path);

MatrixXd to_dense(const MatrixMarketData& data);

void write_matrix_market(std::ostream& out, const SparseMatrixXd& a);
void write_matrix_market(std::ostream& out, const MatrixXd& a);
void write_matrix_market(const std::filesystem::path& path, const SparseMatrixXd& a);
void write_matrix_market(const std::filesystem::path& path, const MatrixXd& a);
void write_vector(const std::filesystem::path& path, const VectorXd& v);

// ---------------------------------------------------------------------------
// Result export

using Json = nlohmann::json;

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

/// {r, q1, q2, q3}
Json gsvd_json(const GsvdFactors<double>& f);
/// U_A.mtx, U_L.mtx, X.mtx, CA.mtx, SL.mtx and gsvd.json.
void write_gsvd_factors(const std::filesystem::path& dir, const GsvdFactors<double>& f);

/// {"identities": [{"residual", "passed"} x 5], "tol"}
Json mpe_report_json(const MpeReport<double>& rep);

/// k,res_estimate,res_true,x_norm,alpha,beta; res_true is left empty without debug data.
void write_history_csv(std::ostream& out, const SolveReport<double>& rep);
void write_history_csv(const std::filesystem::path& path, const SolveReport<double>& rep);

struct SummaryExtras {
    std::optional<bool> certified;
    std::optional<double> inner_tau;
    std::optional<double> error_vs_truth;
};

Json summary_json(const SolveReport<double>& rep, const SummaryExtras& extras);

/// alphas.csv, betas.csv, V.mtx and U_tilde.mtx.
void write_bidiag_state(const std::filesystem::path& dir, const BidiagState<double>& st);

/// A.mtx, L.mtx, b.mtx, x_true.mtx and meta.json.
void write_generated_problem(const std::filesystem::path& dir, const GeneratedProblem& gp);

} // namespace gls

#endif // GLS_IO_HPP
