#include "homfv/cli.hpp"

#include "homfv/config.hpp"
#include "homfv/errors.hpp"
#include "homfv/fo_approx.hpp"
#include "homfv/homogenize.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace homfv::cli {

namespace fs = std::filesystem;
using config::Json;
using config::RunConfig;

std::size_t CsvTable::column(const std::string& name) const
{
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == name) {
            return k;
        }
    }
    throw IoError("table has no column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const
{
    const std::string& cell = rows.at(row).at(column(name));
    if (cell == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (cell == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != cell.size()) {
        throw IoError("table cell '" + cell + "' in column " + name + " is not a number");
    }
    return v;
}

namespace {

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

}  // namespace

CsvTable read_csv(std::istream& is)
{
    CsvTable t;
    std::string line;
    if (!std::getline(is, line) || line.empty()) {
        throw IoError("table is empty");
    }
    t.header = split_line(line);
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        auto cells = split_line(line);
        if (cells.size() != t.header.size()) {
            throw IoError("table row has " + std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

CsvTable load_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot read " + path);
    }
    return read_csv(is);
}

namespace {

struct Flags {
    std::string config_path;
    std::string builtin_name;
    std::vector<double> constant_diag;
    bool no_gaussian = false;
    double source_constant = 0.0;
    double R = 0.0;
    double h = 0.0;
    double h_corr = 0.0;
    double T = 0.0;
    std::vector<int> eps;
    std::string out;
    unsigned threads = 1;
    bool deterministic = false;
    double tol = 0.0;
    int maxit = 0;
    std::string method;
    // homogenize
    std::vector<double> study_R;
    std::vector<double> study_T;
    bool periodic_cell = false;
    // solve
    std::string kind;
    std::vector<double> a_star;
    bool manufactured = false;
    std::vector<double> refine;
    // options actually given on the command line
    std::function<bool(const std::string&)> given;
};

void add_common(CLI::App* sub, Flags& f)
{
    sub->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--builtin", f.builtin_name,
                    "builtin field: asymptotic_periodic_paper, asymptotic_almost_periodic_paper, layered_cosine");
    sub->add_option("--constant", f.constant_diag, "constant diagonal field a11,a22")->delimiter(',')->expected(2);
    sub->add_flag("--no-gaussian", f.no_gaussian, "drop the decaying Gaussian terms of the field");
    sub->add_option("--f", f.source_constant, "constant right-hand side f");
    sub->add_option("--R", f.R, "corrector cube half-side");
    sub->add_option("--T", f.T, "regularization length T (>= 1)");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--threads", f.threads, "worker threads for independent solves")->check(CLI::PositiveNumber);
    sub->add_flag("--deterministic", f.deterministic, "single thread, no timings in metadata");
    sub->add_option("--tol", f.tol, "relative residual tolerance");
    sub->add_option("--maxit", f.maxit, "iteration cap (0: default)");
    sub->add_option("--method", f.method, "bicgstab_ilu0, cg_ilu0 or bicgstab");
}

RunConfig base_config(const Flags& f)
{
    return f.config_path.empty() ? config::run_config_from_json(Json::object())
                                 : config::load_run_config(f.config_path);
}

// Flags win over the config file; the environment variable replaces the configured output directory.
void apply_common(const Flags& f, RunConfig& rc, const char* default_out)
{
    auto& e = rc.experiment;
    const auto& given = f.given;
    if (given("--builtin")) {
        const Builtin b = parse_builtin(f.builtin_name);
        e.field = builtin(b);
        e.field_name = f.builtin_name;
        e.source = builtin_source(b);
    }
    if (given("--constant")) {
        e.field = MatrixField::constant_diagonal(f.constant_diag.at(0), f.constant_diag.at(1));
        e.field_name = "constant";
    }
    if (f.no_gaussian) {
        e.field = e.field.without_gaussians();
        e.field_name += "_no_gaussian";
    }
    if (given("--f")) {
        e.source = ScalarFieldSpec{f.source_constant, {}, {}};
    }
    if (given("--R")) {
        e.corrector.R = f.R;
    }
    if (given("--T")) {
        e.corrector.T = f.T;
    }
    if (given("--threads")) {
        e.settings.threads = f.threads;
    }
    if (f.deterministic) {
        e.deterministic = true;
    }
    if (e.deterministic) {
        e.settings.threads = 1;
    }
    if (given("--tol")) {
        e.settings.solver.tol = f.tol;
    }
    if (given("--maxit")) {
        if (f.maxit < 0) {
            throw ConfigError("--maxit must be >= 0");
        }
        e.settings.solver.maxit = static_cast<std::size_t>(f.maxit);
    }
    if (given("--method")) {
        e.settings.method = config::parse_method(f.method);
    }
    if (given("--out")) {
        e.output_dir = f.out;
    } else if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
        e.output_dir = env;
    }
    if (e.output_dir.empty()) {
        e.output_dir = default_out;
    }
}

fs::path prepare_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + dir + ": " + ec.message());
    }
    return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    os << text;
    if (!os) {
        throw IoError("failed writing " + path.string());
    }
}

void print_matrix(std::ostream& out, const Mat2& m)
{
    out << std::setprecision(17);
    out << "[[" << m[0][0] << ", " << m[0][1] << "],\n [" << m[1][0] << ", " << m[1][1] << "]]\n";
}

int cmd_corrector(const RunConfig& rc, std::ostream& out)
{
    const auto& e = rc.experiment;
    const CorrectorSet set = solve_correctors(e.field, e.corrector, e.settings);
    const fs::path dir = prepare_dir(e.output_dir);
    Json reports = Json::array();
    for (int j = 0; j < 2; ++j) {
        const auto& entry = set.entries[static_cast<std::size_t>(j)];
        save_grid_field((dir / ("chi_" + std::to_string(j + 1) + ".grid")).string(), entry.chi);
        reports.push_back(Json{{"j", j + 1}, {"max_abs_chi", entry.chi.max_abs()}, {"report", config::to_json(entry.report)}});
        out << "chi_" << (j + 1) << ": " << describe(entry.report) << ", max|chi| = " << std::setprecision(17)
            << entry.chi.max_abs() << "\n";
    }
    const Json meta{{"field_name", e.field_name},
                    {"R", e.corrector.R},
                    {"T", e.corrector.T ? Json(*e.corrector.T) : Json(nullptr)},
                    {"h", e.corrector.h},
                    {"config_hash", config::config_hash(e)},
                    {"config", config::to_json(e)},
                    {"correctors", reports}};
    write_text(dir / "corrector.json", meta.dump(2) + "\n");
    return 0;
}

EffectiveMatrix homogenize_single(const RunConfig& rc)
{
    const auto& e = rc.experiment;
    if (!e.field.is_diagonal()) {
        EffectiveMatrix a;
        a.m = e.field.as_constant_full().m;
        a.provenance = {e.corrector.R, e.corrector.T, e.corrector.h, e.field_name};
        return a;
    }
    if (rc.periodic_cell) {
        return periodic_cell_effective(e.field, e.corrector.h, e.settings, e.field_name);
    }
    const CorrectorSet set = solve_correctors(e.field, e.corrector, e.settings);
    return effective_matrix(e.field, set, e.settings, e.field_name);
}

int cmd_homogenize(const RunConfig& rc, std::ostream& out)
{
    const auto& e = rc.experiment;
    const fs::path dir = prepare_dir(e.output_dir);
    const std::string hash = config::config_hash(e);
    if (!rc.study_R.empty() || !rc.study_T.empty()) {
        const bool by_R = !rc.study_R.empty();
        if (by_R && !rc.study_T.empty()) {
            throw ConfigError("give either --study (R values) or --study-T, not both");
        }
        const RateTable t = by_R ? truncation_study(e.field, rc.study_R, e.corrector.h, e.corrector.T.has_value(),
                                                    e.settings)
                                 : regularization_study(e.field, e.corrector.R, e.corrector.h, rc.study_T, e.settings);
        std::ostringstream csv;
        write_rate_table(csv, t);
        const std::string name = by_R ? "rate_R.csv" : "rate_T.csv";
        write_text(dir / name, csv.str());
        out << csv.str();
        const auto slope = t.loglog_slope();
        out << "reference: " << t.reference_kind << "\n";
        if (slope) {
            out << "log-log slope: " << std::setprecision(17) << *slope << "\n";
        }
        const Json meta{{"table", name},
                        {"param", t.param_name},
                        {"reference_kind", t.reference_kind},
                        {"slope", slope ? Json(*slope) : Json(nullptr)},
                        {"config_hash", hash},
                        {"config", config::to_json(e)}};
        write_text(dir / "homogenize.json", meta.dump(2) + "\n");
        return 0;
    }
    const EffectiveMatrix a = homogenize_single(rc);
    print_matrix(out, a.m);
    std::ostringstream csv;
    write_a_star_csv(csv, a);
    write_text(dir / "a_star.csv", csv.str());
    const Json meta{{"a_star", config::to_json(a)}, {"config_hash", hash}, {"config", config::to_json(e)}};
    write_text(dir / "homogenize.json", meta.dump(2) + "\n");
    return 0;
}

int cmd_study(const RunConfig& rc, std::ostream& out)
{
    const StudyResult r = run_study(rc.experiment);
    out << "A* = ";
    print_matrix(out, r.a_star.m);
    out << "inv_eps,eps,err,h1_diff,h2_u0\n" << std::setprecision(17);
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        out << rc.experiment.inv_eps[k] << ',' << r.rows[k].eps << ',' << r.rows[k].err << ',' << r.rows[k].h1_diff
            << ',' << r.rows[k].h2_u0 << '\n';
    }
    return 0;
}

// -Laplace u = 2 pi^2 sin(pi x1) sin(pi x2), written as a difference of two cosines.
ScalarFieldSpec manufactured_source()
{
    using std::numbers::pi;
    ScalarFieldSpec f;
    f.trig_terms = {TrigTerm{pi * pi, TrigKind::Cos, Vec2{pi, -pi}, 0.0},
                    TrigTerm{-pi * pi, TrigKind::Cos, Vec2{pi, pi}, 0.0}};
    return f;
}

int cmd_solve(const RunConfig& rc, const Flags& flags, std::ostream& out)
{
    const auto& e = rc.experiment;
    const fs::path dir = prepare_dir(e.output_dir);
    if (flags.manufactured) {
        if (flags.refine.empty()) {
            throw ConfigError("--manufactured needs --refine h1,h2,...");
        }
        using std::numbers::pi;
        const auto exact = [](Vec2 x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
        std::ostringstream csv;
        csv << "h,l2_err,ratio\n" << std::setprecision(17);
        double prev = std::numeric_limits<double>::quiet_NaN();
        for (const double h : flags.refine) {
            ExperimentConfig sub = e;
            sub.h = h;
            const auto mesh = sub.omega_mesh();
            const auto sol = solve_oscillating(MatrixField::constant_diagonal(1.0, 1.0), 1.0, manufactured_source(),
                                               mesh, e.settings);
            const double err = discrete_norms(sol.u - GridField::sample(mesh, exact)).l2;
            csv << h << ',' << err << ',' << prev / err << '\n';
            prev = err;
        }
        write_text(dir / "convergence.csv", csv.str());
        out << csv.str();
        return 0;
    }
    const auto mesh = e.omega_mesh();
    SolveOutcome sol;
    std::string file;
    Json meta;
    if (rc.solve_kind == "homogenized") {
        EffectiveMatrix a;
        a.m = rc.solve_a_star;
        sol = solve_homogenized(a, e.source, mesh, e.settings);
        file = "u0.grid";
        meta["a_star"] = config::to_json(a);
    } else {
        if (!e.field.is_diagonal()) {
            throw ConfigError("the oscillating solve needs a diagonal coefficient field");
        }
        sol = solve_oscillating(e.field, rc.solve_eps, e.source, mesh, e.settings);
        const double n = 1.0 / rc.solve_eps;
        std::ostringstream name;
        if (std::abs(n - std::round(n)) < 1e-12) {
            name << "u_eps_N" << static_cast<long>(std::round(n)) << ".grid";
        } else {
            name << "u_eps_" << std::setprecision(17) << rc.solve_eps << ".grid";
        }
        file = name.str();
        meta["eps"] = rc.solve_eps;
    }
    save_grid_field((dir / file).string(), sol.u);
    meta["kind"] = rc.solve_kind;
    meta["field"] = file;
    meta["report"] = config::to_json(sol.report);
    meta["config_hash"] = config::config_hash(e);
    meta["config"] = config::to_json(e);
    write_text(dir / "solve.json", meta.dump(2) + "\n");
    out << file << ": " << describe(sol.report) << ", max|u| = " << std::setprecision(17) << sol.u.max_abs() << "\n";
    return 0;
}

// Fast in-process invariant checks.
int cmd_selftest(const RunConfig& rc, std::ostream& out)
{
    const SolveSettings settings = rc.experiment.settings;
    int failures = 0;
    const auto check = [&](const std::string& name, const std::function<std::string()>& body) {
        std::string problem;
        try {
            problem = body();
        } catch (const std::exception& ex) {
            problem = std::string("threw: ") + ex.what();
        }
        if (problem.empty()) {
            out << "PASS " << name << "\n";
        } else {
            ++failures;
            out << "FAIL " << name << ": " << problem << "\n";
        }
    };
    std::mt19937_64 rng(20240607);
    std::uniform_real_distribution<double> amp(-0.5, 0.5);
    std::uniform_real_distribution<double> freq(-8.0, 8.0);
    const auto random_field = [&] {
        auto spec = [&] {
            ScalarFieldSpec s;
            s.constant = 2.0;
            for (int k = 0; k < 3; ++k) {
                s.trig_terms.push_back(TrigTerm{amp(rng), k % 2 ? TrigKind::Sin : TrigKind::Cos,
                                                Vec2{freq(rng), freq(rng)}, amp(rng)});
            }
            return s;
        };
        return MatrixField::diagonal(spec(), spec());
    };
    const auto unit = build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{1.0, 1.0}, Index2{16, 16});

    check("flux_antisymmetry", [&]() -> std::string {
        const auto sys = assemble_tpfa(unit, random_field(), {}, {});
        return sys.matrix.asymmetry() == 0.0 ? "" : "assembled matrix is not exactly symmetric";
    });
    check("discrete_maximum_principle", [&]() -> std::string {
        for (int k = 0; k < 10; ++k) {
            const auto sys = assemble_tpfa(unit, random_field(), {}, [](Vec2) { return 1.0; });
            const auto res = solve_system(sys, settings, "selftest");
            for (const double v : res.x) {
                if (v < 0.0) {
                    return "negative solution for a nonnegative source";
                }
            }
        }
        return "";
    });
    check("zero_corrector_constant_field", [&]() -> std::string {
        const auto set = solve_correctors(MatrixField::constant_diagonal(2.0, 3.0), CorrectorParams{1.0, {}, 0.125},
                                          settings);
        const double m = std::max(set.entries[0].chi.max_abs(), set.entries[1].chi.max_abs());
        return m <= 10.0 * settings.solver.tol ? "" : "max|chi| = " + std::to_string(m);
    });
    check("constant_field_a_star", [&]() -> std::string {
        const auto a = effective_matrix_dirichlet(MatrixField::constant_diagonal(2.0, 3.0), 1.0, 0.125, settings);
        const double d = max_norm(a.m - Mat2{Vec2{2.0, 0.0}, Vec2{0.0, 3.0}});
        return d <= 1e-12 ? "" : "deviation " + std::to_string(d);
    });
    check("eta_delta_spot_value", []() -> std::string {
        const double d = std::abs(eta_delta(1.0, 0.5, 2.0) - (2.0 + std::exp(-1.0)));
        return d <= 1e-12 ? "" : "deviation " + std::to_string(d);
    });
    ExperimentConfig small;
    small.field_name = "constant";
    small.field = MatrixField::constant_diagonal(2.0, 3.0);
    small.source = ScalarFieldSpec{1.0, {}, {}};
    small.inv_eps = {2, 3};
    small.h = 0.1;
    small.corrector = CorrectorParams{3.0, std::nullopt, 0.25};
    small.settings = settings;
    small.deterministic = true;
    check("err_zero_constant_field", [&]() -> std::string {
        for (const auto& row : run_study(small).rows) {
            if (!(row.err <= 1e-8)) {
                return "Err = " + std::to_string(row.err);
            }
        }
        return "";
    });
    check("determinism", [&]() -> std::string {
        ExperimentConfig c = small;
        c.field = builtin(Builtin::AsymptoticPeriodicPaper);
        const auto a = run_study(c);
        const auto b = run_study(c);
        for (std::size_t k = 0; k < a.rows.size(); ++k) {
            if (a.rows[k].err != b.rows[k].err || a.rows[k].h1_diff != b.rows[k].h1_diff) {
                return "repeated study differs";
            }
        }
        return a.a_star.m == b.a_star.m ? "" : "repeated A* differs";
    });
    check("config_round_trip", [&]() -> std::string {
        const std::string once = config::serialize(rc);
        const std::string twice = config::serialize(config::parse_run_config(once));
        return once == twice ? "" : "re-serialized config differs";
    });
    out << (failures == 0 ? "selftest: all checks passed\n" : "selftest: " + std::to_string(failures) + " failed\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Homogenization correctors, effective matrices and first-order approximation studies", "homfv"};
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1);
    Flags f;
    auto* corrector = app.add_subcommand("corrector", "solve the two corrector problems on Q_R and dump them");
    auto* homogenize = app.add_subcommand("homogenize", "assemble the effective matrix or run an R / T study");
    auto* study = app.add_subcommand("study", "full first-order approximation study over eps = 1/N");
    auto* solve = app.add_subcommand("solve", "single oscillating or homogenized solve");
    auto* selftest = app.add_subcommand("selftest", "run the built-in invariant checks");
    for (auto* sub : {corrector, homogenize, study, solve, selftest}) {
        add_common(sub, f);
    }
    for (auto* sub : {corrector, homogenize}) {
        sub->add_option("--h", f.h, "corrector mesh spacing");
    }
    for (auto* sub : {study, solve}) {
        sub->add_option("--h", f.h, "Omega mesh spacing");
        sub->add_option("--eps", f.eps, "inverse eps values N (eps = 1/N), comma separated")->delimiter(',');
    }
    study->add_option("--h-corr", f.h_corr, "corrector mesh spacing");
    homogenize->add_option("--study", f.study_R, "truncation study over R values")->delimiter(',');
    homogenize->add_option("--study-T", f.study_T, "regularization study over T values at fixed R")->delimiter(',');
    homogenize->add_flag("--periodic-cell", f.periodic_cell, "periodic cell problem on the unit square");
    solve->add_option("--kind", f.kind, "oscillating or homogenized");
    solve->add_option("--a-star", f.a_star, "m11,m12,m21,m22 for the homogenized solve")->delimiter(',')->expected(4);
    solve->add_flag("--manufactured", f.manufactured, "A = I manufactured-solution refinement run");
    solve->add_option("--refine", f.refine, "mesh spacings for --manufactured")->delimiter(',');

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) {
        reversed.pop_back();  // program name
    }
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    CLI::App* active = app.get_subcommands().front();
    f.given = [active](const std::string& name) {
        const auto* opt = active->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };

    const std::string stage = active->get_name();
    try {
        RunConfig rc = base_config(f);
        apply_common(f, rc, "homfv_out");
        auto& e = rc.experiment;
        if (active == corrector || active == homogenize) {
            if (f.given("--h")) {
                e.corrector.h = f.h;
            }
        } else if (f.given("--h")) {
            e.h = f.h;
        }
        if (f.given("--h-corr")) {
            e.corrector.h = f.h_corr;
        }
        if (f.given("--eps")) {
            e.inv_eps = f.eps;
        }
        if (f.given("--study")) {
            rc.study_R = f.study_R;
        }
        if (f.given("--study-T")) {
            rc.study_T = f.study_T;
        }
        if (f.periodic_cell) {
            rc.periodic_cell = true;
        }
        if (f.given("--kind")) {
            rc.solve_kind = f.kind;
        }
        if (f.given("--a-star")) {
            rc.solve_a_star = Mat2{Vec2{f.a_star[0], f.a_star[1]}, Vec2{f.a_star[2], f.a_star[3]}};
        }
        if (active == solve && f.given("--eps")) {
            if (f.eps.size() != 1 || f.eps[0] < 1) {
                throw ConfigError("solve takes a single --eps N with N >= 1");
            }
            rc.solve_eps = 1.0 / f.eps[0];
        }
        rc.validate();
        if (active == study) {
            e.validate();
            return cmd_study(rc, out);
        }
        if (active == corrector) {
            return cmd_corrector(rc, out);
        }
        if (active == homogenize) {
            return cmd_homogenize(rc, out);
        }
        if (active == solve) {
            return cmd_solve(rc, f, out);
        }
        return cmd_selftest(rc, out);
    } catch (const Error& e) {
        err << "homfv " << stage << ": " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        err << "homfv " << stage << ": " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "homfv " << stage << ": unexpected error: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace homfv::cli
