#include "cli.hpp"

#include "gls/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gls::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Certification of solve results needs a dense SVD of G; skipped above this size.
constexpr Index certify_max_cols = 1500;

struct RunConfig {
    std::string A, L, M, b, x_true, X;
    std::string out;
    std::string method = "elden";
    std::string gdag = "dense";
    std::string norm = "auto";
    std::string func = "ramp";
    std::optional<double> tol;
    std::optional<double> certify_tol;
    std::optional<Index> max_iter;
    std::optional<Index> n, m, rank;
    std::uint64_t seed = 0;
    bool debug = false;
    bool no_reorth = false;
};

// ---------------------------------------------------------------------------
// Configuration files: a JSON object whose keys are long option names.

using Setter = std::function<void(RunConfig&, const Json&)>;

template <typename T>
Setter set_field(T RunConfig::*field) {
    return [field](RunConfig& c, const Json& v) { c.*field = v.get<T>(); };
}

template <typename T>
Setter set_optional(std::optional<T> RunConfig::*field) {
    return [field](RunConfig& c, const Json& v) { c.*field = v.get<T>(); };
}

const std::map<std::string, Setter>& config_setters() {
    static const std::map<std::string, Setter> setters = {
        {"A", set_field(&RunConfig::A)},
        {"L", set_field(&RunConfig::L)},
        {"M", set_field(&RunConfig::M)},
        {"b", set_field(&RunConfig::b)},
        {"x-true", set_field(&RunConfig::x_true)},
        {"X", set_field(&RunConfig::X)},
        {"out", set_field(&RunConfig::out)},
        {"method", set_field(&RunConfig::method)},
        {"gdag", set_field(&RunConfig::gdag)},
        {"norm", set_field(&RunConfig::norm)},
        {"func", set_field(&RunConfig::func)},
        {"tol", set_optional(&RunConfig::tol)},
        {"certify-tol", set_optional(&RunConfig::certify_tol)},
        {"max-iter", set_optional(&RunConfig::max_iter)},
        {"n", set_optional(&RunConfig::n)},
        {"m", set_optional(&RunConfig::m)},
        {"rank", set_optional(&RunConfig::rank)},
        {"seed", set_field(&RunConfig::seed)},
        {"debug", set_field(&RunConfig::debug)},
        {"no-reorth", set_field(&RunConfig::no_reorth)},
    };
    return setters;
}

void apply_config(RunConfig& cfg, const fs::path& path, const std::set<std::string>& allowed) {
    const Json j = read_json(path);
    if (!j.is_object()) throw UsageError("config '" + path.string() + "' must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
        const auto it = config_setters().find(key);
        if (it == config_setters().end() || !allowed.count(key)) {
            throw UsageError("config '" + path.string() + "': unknown key '" + key + "'");
        }
        try {
            it->second(cfg, value);
        } catch (const Json::exception&) {
            throw UsageError("config '" + path.string() + "': bad value for '" + key + "'");
        }
    }
}

/// Looks for --config before CLI11 runs so that command-line flags override file values.
std::optional<std::string> find_config(int argc, const char* const* argv) {
    std::optional<std::string> found;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config") {
            if (i + 1 >= argc) throw UsageError("--config needs a path");
            found = argv[++i];
        } else if (arg.rfind("--config=", 0) == 0) {
            found = arg.substr(9);
        }
    }
    return found;
}

// ---------------------------------------------------------------------------
// Environment and selector parsing

std::optional<double> env_double(const char* name) {
    const char* raw = std::getenv(name);
    if (!raw || !*raw) return std::nullopt;
    try {
        size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != std::string(raw).size() || !(v > 0)) throw std::invalid_argument(name);
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("environment variable ") + name + " must be a positive number");
    }
}

RankTolerance<double> rank_tolerance() {
    if (auto v = env_double("WPINV_TOL_RANK")) return RankTolerance<double>::relative(*v);
    return RankTolerance<double>::standard();
}

double parse_positive(const std::string& text, const std::string& what) {
    try {
        size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size() && v > 0) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(what + " must be a positive number, got '" + text + "'");
}

std::string after_colon(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0 ? s.substr(prefix.size()) : std::string();
}

GdagStrategy<double> make_strategy(const std::string& spec, const MatrixXd& g, std::optional<double>& tau) {
    if (spec == "dense") return GdagStrategy<double>::dense_pinv(g, rank_tolerance());
    if (spec == "cholesky") return GdagStrategy<double>::cholesky(g);
    if (spec.rfind("lsqr:", 0) == 0) {
        tau = parse_positive(after_colon(spec, "lsqr:"), "lsqr tau");
        return GdagStrategy<double>::inner_lsqr(g, *tau);
    }
    throw UsageError("--gdag must be dense, cholesky or lsqr:TAU, got '" + spec + "'");
}

NormMethod parse_norm(const std::string& s) {
    if (s == "auto") return NormMethod::automatic;
    if (s == "gsvd") return NormMethod::gsvd_exact;
    if (s == "power") return NormMethod::power_iteration;
    throw UsageError("--norm must be auto, gsvd or power, got '" + s + "'");
}

WpinvMethod<double> parse_method(const std::string& s) {
    if (s == "elden") return WpinvMethod<double>::elden();
    if (s == "gsvd") return WpinvMethod<double>::gsvd();
    if (s.rfind("limit:", 0) == 0) return WpinvMethod<double>::limit(parse_positive(after_colon(s, "limit:"), "delta"));
    throw UsageError("--method must be elden, gsvd or limit:DELTA, got '" + s + "'");
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

GlsProblem<double> load_problem(const RunConfig& cfg, bool need_b) {
    require(cfg.A, "--A");
    require(cfg.L, "--L");
    if (need_b) require(cfg.b, "--b");
    MatrixXd a = read_dense(cfg.A);
    MatrixXd l = read_dense(cfg.L);
    std::optional<MatrixXd> m;
    if (!cfg.M.empty()) m = read_dense(cfg.M);
    VectorXd b = cfg.b.empty() ? VectorXd::Zero(a.rows()) : read_vector(cfg.b);
    try {
        return GlsProblem<double>(std::move(a), std::move(m), std::move(l), std::move(b));
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
}

fs::path output_dir(const RunConfig& cfg, const char* fallback) {
    const fs::path dir = cfg.out.empty() ? fs::path(fallback) : fs::path(cfg.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    return dir;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
    const GlsProblem<double> prob = load_problem(cfg, true);
    std::optional<VectorXd> x_true;
    if (!cfg.x_true.empty()) {
        x_true = read_vector(cfg.x_true);
        if (x_true->size() != prob.cols()) throw ValidationError("--x-true has the wrong length");
    }

    std::optional<double> tau;
    const GdagStrategy<double> strategy = make_strategy(cfg.gdag, prob.G(), tau);

    GlsqrOptions<double> opt;
    if (auto env = env_double("WPINV_TOL_STOP")) opt.tol = *env;
    if (cfg.tol) opt.tol = *cfg.tol;
    if (cfg.max_iter) {
        if (*cfg.max_iter < 1) throw UsageError("--max-iter must be positive");
        opt.max_iter = *cfg.max_iter;
    }
    opt.ggkb.reorthogonalize = !cfg.no_reorth;
    opt.debug_true_residual = cfg.debug;
    opt.norm = operator_norm(prob, strategy, parse_norm(cfg.norm));

    const SolveReport<double> rep = glsqr_solve(prob, strategy, opt);

    SummaryExtras extras;
    if (prob.cols() <= certify_max_cols) {
        extras.certified = certify_solution(prob, rep, cfg.certify_tol.value_or(1e-8));
    }
    if (tau) extras.inner_tau = *tau;
    if (x_true) extras.error_vs_truth = safe_ratio((rep.x - *x_true).norm(), x_true->norm());

    const fs::path dir = output_dir(cfg, ".");
    write_vector(dir / "x.mtx", rep.x);
    write_history_csv(dir / "history.csv", rep);
    write_json(dir / "summary.json", summary_json(rep, extras));

    out << std::setprecision(6) << "iterations " << rep.iterations << ", stop " << to_string(rep.stop_reason)
        << ", estimate " << rep.final_estimate();
    if (extras.certified) out << ", certified " << (*extras.certified ? "true" : "false");
    if (extras.error_vs_truth) out << ", error " << *extras.error_vs_truth;
    out << '\n';
    return 0;
}

int cmd_wpinv(const RunConfig& cfg, std::ostream& out) {
    const GlsProblem<double> prob = load_problem(cfg, false);
    const MatrixXd x = wpinv_matrix(prob, parse_method(cfg.method), rank_tolerance());
    const fs::path dir = output_dir(cfg, ".");
    write_matrix_market(dir / "X.mtx", x);
    if (!cfg.b.empty()) write_vector(dir / "x.mtx", x * prob.b());
    out << "wrote " << (dir / "X.mtx").string() << " (" << x.rows() << " x " << x.cols() << ")\n";
    return 0;
}

int cmd_gsvd(const RunConfig& cfg, std::ostream& out) {
    require(cfg.A, "--A");
    require(cfg.L, "--L");
    const MatrixXd a = read_dense(cfg.A);
    const MatrixXd l = read_dense(cfg.L);
    if (a.cols() != l.cols()) throw ValidationError("A and L need the same column count");
    GsvdOptions<double> opt;
    opt.rank_tol = rank_tolerance();
    const GsvdFactors<double> f = gsvd_pair(a, l, opt);
    write_gsvd_factors(output_dir(cfg, "gsvd"), f);
    out << gsvd_json(f).dump() << '\n';
    return 0;
}

int cmd_check_mpe(const RunConfig& cfg, std::ostream& out) {
    require(cfg.X, "--X");
    const GlsProblem<double> prob = load_problem(cfg, false);
    const MatrixXd x = read_dense(cfg.X);
    if (x.rows() != prob.cols() || x.cols() != prob.rows()) throw ValidationError("--X must be n x m");
    const MpeReport<double> rep = check_gmpe(prob, x, cfg.tol.value_or(1e-9), rank_tolerance());

    static const char* const names[5] = {"XAX = X", "MAXA = MA", "(PAX)^T = PAX", "(GXAG^dag)^T = XA",
                                         "XM^dag M = X"};
    out << std::scientific << std::setprecision(3);
    for (size_t i = 0; i < 5; ++i) {
        out << i + 1 << ' ' << std::left << std::setw(20) << names[i] << std::right << ' '
            << rep.identities[i].residual << ' ' << (rep.identities[i].passed ? "PASS" : "FAIL") << '\n';
    }
    if (!cfg.out.empty()) {
        const fs::path path(cfg.out);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        write_json(path, mpe_report_json(rep));
    }
    return rep.all_passed() ? 0 : 1;
}

int cmd_gen_problem(const RunConfig& cfg, std::ostream& out) {
    const RegularizerKind reg = RegularizerKind::parse(cfg.L.empty() ? "l1" : cfg.L);
    const TargetFunction func = parse_target_function(cfg.func);
    std::optional<GeneratedProblem> gp;
    if (!cfg.A.empty()) {
        gp.emplace(generate(read_dense(cfg.A), reg, func, cfg.seed));
    } else {
        if (!cfg.n) throw UsageError("--n or --A is required");
        const Index n = *cfg.n;
        const Index m = cfg.m.value_or(n);
        const Index rank = cfg.rank.value_or(std::min(m, n));
        if (n < 1 || m < 1 || rank < 0 || rank > std::min(m, n)) {
            throw UsageError("need n, m >= 1 and 0 <= rank <= min(m, n)");
        }
        gp.emplace(generate_synthetic(m, n, rank, reg, func, cfg.seed));
    }
    const fs::path dir = output_dir(cfg, "problem");
    write_generated_problem(dir, *gp);
    out << "wrote " << dir.string() << " (m " << gp->problem.rows() << ", n " << gp->problem.cols()
        << ", seed " << gp->seed << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct Subcommand {
    CLI::App* app;
    std::set<std::string> keys;
    std::function<int(const RunConfig&, std::ostream&)> run;
};

void add_problem_flags(CLI::App* app, RunConfig& cfg, std::set<std::string>& keys, bool with_m) {
    app->add_option("--A", cfg.A, "matrix A (Matrix Market)");
    app->add_option("--L", cfg.L, "regularization matrix L (Matrix Market)");
    keys.insert({"A", "L"});
    if (with_m) {
        app->add_option("--M", cfg.M, "weight matrix M (Matrix Market, default identity)");
        keys.insert("M");
    }
}

/// One "error: ..." line, whatever the message contains.
int report(std::ostream& err, std::string what, int code) {
    std::replace(what.begin(), what.end(), '\n', ' ');
    err << "error: " << what << '\n';
    return code;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Minimum-norm general-form least squares: gLSQR and weighted pseudoinverses", "gls"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<Subcommand> subs;

    {
        Subcommand s{app.add_subcommand("solve", "run gLSQR"), {}, cmd_solve};
        add_problem_flags(s.app, cfg, s.keys, true);
        s.app->add_option("--b", cfg.b, "right-hand side (Matrix Market)");
        s.app->add_option("--x-true", cfg.x_true, "reference solution for the error report");
        s.app->add_option("--tol", cfg.tol, "stopping tolerance (default 1e-10 or WPINV_TOL_STOP)");
        s.app->add_option("--certify-tol", cfg.certify_tol, "tolerance of the solution certificate (default 1e-8)");
        s.app->add_option("--max-iter", cfg.max_iter, "iteration cap");
        s.app->add_option("--gdag", cfg.gdag, "G^dag strategy: dense, cholesky or lsqr:TAU");
        s.app->add_option("--norm", cfg.norm, "operator norm: auto, gsvd or power");
        s.app->add_option("--out", cfg.out, "output directory");
        s.app->add_flag("--debug", cfg.debug, "record the directly computed residual");
        s.app->add_flag("--no-reorth", cfg.no_reorth, "disable reorthogonalization");
        s.keys.insert({"b", "x-true", "tol", "certify-tol", "max-iter", "gdag", "norm", "out", "debug", "no-reorth"});
        subs.push_back(s);
    }
    {
        Subcommand s{app.add_subcommand("wpinv", "form the weighted pseudoinverse"), {}, cmd_wpinv};
        add_problem_flags(s.app, cfg, s.keys, true);
        s.app->add_option("--b", cfg.b, "optional right-hand side; writes x.mtx");
        s.app->add_option("--method", cfg.method, "elden, gsvd or limit:DELTA");
        s.app->add_option("--out", cfg.out, "output directory");
        s.keys.insert({"b", "method", "out"});
        subs.push_back(s);
    }
    {
        Subcommand s{app.add_subcommand("gsvd", "GSVD of the pair {A, L}"), {}, cmd_gsvd};
        add_problem_flags(s.app, cfg, s.keys, false);
        s.app->add_option("--out", cfg.out, "output directory");
        s.keys.insert("out");
        subs.push_back(s);
    }
    {
        Subcommand s{app.add_subcommand("check-mpe", "check the generalized Moore-Penrose equations"), {},
                     cmd_check_mpe};
        add_problem_flags(s.app, cfg, s.keys, true);
        s.app->add_option("--X", cfg.X, "candidate pseudoinverse (Matrix Market)");
        s.app->add_option("--tol", cfg.tol, "residual tolerance (default 1e-9)");
        s.app->add_option("--out", cfg.out, "optional JSON report path");
        s.keys.insert({"X", "tol", "out"});
        subs.push_back(s);
    }
    {
        Subcommand s{app.add_subcommand("gen-problem", "generate a test problem with known solution"), {},
                     cmd_gen_problem};
        s.app->add_option("--A", cfg.A, "use this A instead of a random one");
        s.app->add_option("--L", cfg.L, "regularizer: l1, l2 or identity");
        s.app->add_option("--n", cfg.n, "columns");
        s.app->add_option("--m", cfg.m, "rows (default n)");
        s.app->add_option("--rank", cfg.rank, "rank of the random A (default min(m, n))");
        s.app->add_option("--func", cfg.func, "ramp, cubic or trig");
        s.app->add_option("--seed", cfg.seed, "random seed");
        s.app->add_option("--out", cfg.out, "output directory");
        s.keys.insert({"A", "L", "n", "m", "rank", "func", "seed", "out"});
        subs.push_back(s);
    }
    for (auto& s : subs) s.app->add_option("--config", config_path, "JSON file with option values");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            throw UsageError(e.what());
        }
        const Subcommand* active = nullptr;
        for (const auto& s : subs) {
            if (s.app->parsed()) active = &s;
        }
        if (!active) throw UsageError("no subcommand given");

        if (auto path = find_config(argc, argv)) {
            // File values first, then the command line again so that flags win.
            RunConfig from_file;
            apply_config(from_file, *path, active->keys);
            cfg = from_file;
            app.clear();
            app.parse(argc, argv);
        }
        return active->run(cfg, out);
    } catch (const CLI::ParseError& e) {
        return report(err, e.what(), 2);
    } catch (const UsageError& e) {
        return report(err, e.what(), 2);
    } catch (const IoError& e) {
        return report(err, e.what(), 2);
    } catch (const std::invalid_argument& e) {
        return report(err, e.what(), 2);
    } catch (const fs::filesystem_error& e) {
        return report(err, e.what(), 2);
    } catch (const Error& e) {
        return report(err, e.what(), 1);
    } catch (const std::exception& e) {
        return report(err, e.what(), 1);
    }
}

} // namespace gls::cli
