#include "gls/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace gls {

namespace {

std::string lowered(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool blank_or_comment(const std::string& line) {
    const auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string::npos || line[pos] == '%';
}

class LineReader {
public:
    LineReader(std::istream& in, const std::string& source) : in_(in), source_(source) {}

    /// Next non-comment line; false at end of input.
    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!blank_or_comment(line)) return true;
        }
        return false;
    }

    long line_no() const { return line_no_; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

    std::istream& in_;
    const std::string& source_;
    long line_no_ = 0;
};

constexpr long long max_dim = std::numeric_limits<int>::max();

long long parse_count(std::istringstream& ss, LineReader& rd, const char* what) {
    long long v = 0;
    if (!(ss >> v)) rd.fail(std::string("expected ") + what);
    if (v < 0) rd.fail(std::string("negative ") + what);
    if (v > max_dim) rd.fail(std::string("dimension overflow in ") + what);
    return v;
}

double parse_value(std::istringstream& ss, LineReader& rd) {
    std::string tok;
    if (!(ss >> tok)) rd.fail("expected a value");
    try {
        size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) rd.fail("malformed value '" + tok + "'");
        return v;
    } catch (const std::invalid_argument&) {
        rd.fail("malformed value '" + tok + "'");
    } catch (const std::out_of_range&) {
        rd.fail("value out of range '" + tok + "'");
    }
}

void expect_end(std::istringstream& ss, LineReader& rd) {
    std::string extra;
    if (ss >> extra) rd.fail("unexpected trailing token '" + extra + "'");
}

} // namespace

MatrixMarketData parse_matrix_market(std::istream& in, const std::string& source) {
    LineReader rd(in, source);
    std::string header;
    rd.line_no_ = 1;
    if (!std::getline(in, header)) rd.fail("empty input");

    std::istringstream hs(header);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") rd.fail("missing %%MatrixMarket banner");
    object = lowered(object);
    format = lowered(format);
    field = lowered(field);
    symmetry = lowered(symmetry);
    if (object != "matrix") rd.fail("unsupported object '" + object + "'");
    if (format != "coordinate" && format != "array") rd.fail("unsupported format '" + format + "'");
    if (field != "real" && field != "integer" && field != "double") rd.fail("non-real field '" + field + "'");
    if (symmetry != "general" && symmetry != "symmetric") rd.fail("unsupported symmetry '" + symmetry + "'");
    const bool symmetric = symmetry == "symmetric";

    std::string line;
    if (!rd.next(line)) rd.fail("missing size line");
    std::istringstream ss(line);
    const long long rows = parse_count(ss, rd, "row count");
    const long long cols = parse_count(ss, rd, "column count");
    if (symmetric && rows != cols) rd.fail("symmetric storage needs a square matrix");

    if (format == "array") {
        expect_end(ss, rd);
        if (rows > 0 && cols > max_dim / rows) rd.fail("dimension overflow: dense storage too large");
        MatrixXd a = MatrixXd::Zero(rows, cols);
        for (long long j = 0; j < cols; ++j) {
            for (long long i = symmetric ? j : 0; i < rows; ++i) {
                if (!rd.next(line)) rd.fail("unexpected end of data");
                std::istringstream vs(line);
                a(i, j) = parse_value(vs, rd);
                expect_end(vs, rd);
                if (symmetric) a(j, i) = a(i, j);
            }
        }
        if (rd.next(line)) rd.fail("more entries than the header declares");
        return a;
    }

    long long nnz = 0;
    if (!(ss >> nnz) || nnz < 0) rd.fail("expected an entry count");
    expect_end(ss, rd);
    if (rows > 0 && cols > 0 && nnz / cols > rows) rd.fail("entry count exceeds rows * cols");
    if (nnz > 0 && (rows == 0 || cols == 0)) rd.fail("entries in an empty matrix");

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(symmetric ? 2 * nnz : nnz));
    for (long long e = 0; e < nnz; ++e) {
        if (!rd.next(line)) rd.fail("unexpected end of data");
        std::istringstream es(line);
        long long i = 0, j = 0;
        if (!(es >> i >> j)) rd.fail("expected row and column indices");
        if (i < 1 || i > rows || j < 1 || j > cols) rd.fail("index out of range");
        const double v = parse_value(es, rd);
        expect_end(es, rd);
        trips.emplace_back(static_cast<Index>(i - 1), static_cast<Index>(j - 1), v);
        if (symmetric && i != j) trips.emplace_back(static_cast<Index>(j - 1), static_cast<Index>(i - 1), v);
    }
    if (rd.next(line)) rd.fail("more entries than the header declares");

    SparseMatrixXd a(rows, cols);
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();
    return a;
}

MatrixMarketData read_matrix_market(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return parse_matrix_market(in, path.string());
}

MatrixXd to_dense(const MatrixMarketData& data) {
    if (const auto* s = std::get_if<SparseMatrixXd>(&data)) return MatrixXd(*s);
    return std::get<MatrixXd>(data);
}

MatrixXd read_dense(const std::filesystem::path& path) { return to_dense(read_matrix_market(path)); }

SparseMatrixXd read_sparse(const std::filesystem::path& path) {
    auto data = read_matrix_market(path);
    if (auto* s = std::get_if<SparseMatrixXd>(&data)) return std::move(*s);
    return std::get<MatrixXd>(data).sparseView(0.0, 0.0);
}

VectorXd read_vector(const std::filesystem::path& path) {
    const MatrixXd a = read_dense(path);
    if (a.cols() == 1) return a.col(0);
    if (a.rows() == 1) return a.row(0).transpose();
    throw IoError("'" + path.string() + "' is not a vector (" + std::to_string(a.rows()) + " x " +
                  std::to_string(a.cols()) + ")");
}

void write_matrix_market(std::ostream& out, const SparseMatrixXd& a) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
    out << std::setprecision(17);
    for (Index j = 0; j < a.outerSize(); ++j) {
        for (SparseMatrixXd::InnerIterator it(a, j); it; ++it) {
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
        }
    }
}

void write_matrix_market(std::ostream& out, const MatrixXd& a) {
    out << "%%MatrixMarket matrix array real general\n";
    out << a.rows() << ' ' << a.cols() << '\n';
    out << std::setprecision(17);
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) out << a(i, j) << '\n';
    }
}

namespace {

template <typename M>
void write_file(const std::filesystem::path& path, const M& a) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    write_matrix_market(out, a);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace

void write_matrix_market(const std::filesystem::path& path, const SparseMatrixXd& a) { write_file(path, a); }
void write_matrix_market(const std::filesystem::path& path, const MatrixXd& a) { write_file(path, a); }
void write_vector(const std::filesystem::path& path, const VectorXd& v) { write_file(path, MatrixXd(v)); }

} // namespace gls
