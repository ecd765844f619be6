#include "gls/io.hpp"

#include <fstream>
#include <iomanip>

namespace gls {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << std::setprecision(17);
    return out;
}

void write_column_csv(const fs::path& path, const char* name, const std::vector<double>& values) {
    auto out = open_out(path);
    out << "i," << name << '\n';
    for (size_t i = 0; i < values.size(); ++i) out << i + 1 << ',' << values[i] << '\n';
}

} // namespace

void write_json(const fs::path& path, const Json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw IoError("'" + path.string() + "': " + e.what());
    }
}

Json gsvd_json(const GsvdFactors<double>& f) {
    return Json{{"r", f.r}, {"q1", f.q1}, {"q2", f.q2}, {"q3", f.q3}};
}

void write_gsvd_factors(const fs::path& dir, const GsvdFactors<double>& f) {
    ensure_dir(dir);
    write_matrix_market(dir / "U_A.mtx", f.U_A);
    write_matrix_market(dir / "U_L.mtx", f.U_L);
    write_matrix_market(dir / "X.mtx", f.X);
    write_matrix_market(dir / "CA.mtx", f.C_A);
    write_matrix_market(dir / "SL.mtx", f.S_L);
    write_json(dir / "gsvd.json", gsvd_json(f));
}

Json mpe_report_json(const MpeReport<double>& rep) {
    Json ids = Json::array();
    for (const auto& id : rep.identities) ids.push_back({{"residual", id.residual}, {"passed", id.passed}});
    return Json{{"identities", ids}, {"tol", rep.tol}};
}

void write_history_csv(std::ostream& out, const SolveReport<double>& rep) {
    out << std::setprecision(17);
    out << "k,res_estimate,res_true,x_norm,alpha,beta\n";
    const size_t n = rep.residual_estimate_history.size();
    for (size_t i = 0; i < n; ++i) {
        out << i + 1 << ',' << rep.residual_estimate_history[i] << ',';
        if (i < rep.true_residual_history.size()) out << rep.true_residual_history[i];
        out << ',' << rep.x_norm_history[i] << ',' << rep.alpha_history[i] << ',' << rep.beta_history[i] << '\n';
    }
}

void write_history_csv(const fs::path& path, const SolveReport<double>& rep) {
    auto out = open_out(path);
    write_history_csv(out, rep);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Json summary_json(const SolveReport<double>& rep, const SummaryExtras& extras) {
    Json j{{"schema", 1},
           {"iterations", rep.iterations},
           {"stop_reason", to_string(rep.stop_reason)},
           {"final_estimate", rep.final_estimate()},
           {"beta1", rep.beta1},
           {"inner_cap_hit", rep.inner_cap_hit},
           {"norm", {{"value", rep.norm.value}, {"source", to_string(rep.norm.source)},
                     {"iterations", rep.norm.iterations}}}};
    j["certified"] = extras.certified ? Json(*extras.certified) : Json(nullptr);
    if (extras.inner_tau) j["inner_tau"] = *extras.inner_tau;
    if (extras.error_vs_truth) j["error_vs_truth"] = *extras.error_vs_truth;
    return j;
}

void write_bidiag_state(const fs::path& dir, const BidiagState<double>& st) {
    ensure_dir(dir);
    write_column_csv(dir / "alphas.csv", "alpha", st.alphas);
    write_column_csv(dir / "betas.csv", "beta", st.betas);
    write_matrix_market(dir / "V.mtx", MatrixXd(st.V));
    write_matrix_market(dir / "U_tilde.mtx", MatrixXd(st.U_tilde));
}

void write_generated_problem(const fs::path& dir, const GeneratedProblem& gp) {
    ensure_dir(dir);
    write_matrix_market(dir / "A.mtx", SparseMatrixXd(gp.problem.A().sparseView(0.0, 0.0)));
    write_matrix_market(dir / "L.mtx", SparseMatrixXd(gp.problem.L().sparseView(0.0, 0.0)));
    write_vector(dir / "b.mtx", gp.problem.b());
    write_vector(dir / "x_true.mtx", gp.x_true);
    write_json(dir / "meta.json", Json{{"seed", gp.seed},
                                       {"func", gp.func},
                                       {"Lkind", gp.regularizer},
                                       {"tolerancesUsed", {{"validation", gp.validation_tol}}}});
}

} // namespace gls
