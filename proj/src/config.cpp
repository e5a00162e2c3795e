#include "homfv/config.hpp"

#include "homfv/errors.hpp"

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <sstream>

namespace homfv::config {

namespace {

void check_object(const Json& j, const std::string& where, std::initializer_list<std::string_view> allowed)
{
    if (!j.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    for (const auto& item : j.items()) {
        bool known = false;
        for (const auto a : allowed) {
            known = known || item.key() == a;
        }
        if (!known) {
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

double number(const Json& j, const std::string& where)
{
    if (!j.is_number()) {
        throw ConfigError(where + ": expected a number");
    }
    return j.get<double>();
}

double number_or(const Json& j, std::string_view key, double fallback, const std::string& where)
{
    const auto it = j.find(key);
    return it == j.end() ? fallback : number(*it, where + "." + std::string(key));
}

int integer(const Json& j, const std::string& where)
{
    if (!j.is_number_integer()) {
        throw ConfigError(where + ": expected an integer");
    }
    return j.get<int>();
}

bool boolean(const Json& j, const std::string& where)
{
    if (!j.is_boolean()) {
        throw ConfigError(where + ": expected true or false");
    }
    return j.get<bool>();
}

std::string string(const Json& j, const std::string& where)
{
    if (!j.is_string()) {
        throw ConfigError(where + ": expected a string");
    }
    return j.get<std::string>();
}

Vec2 vec2(const Json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 2) {
        throw ConfigError(where + ": expected a 2-element array");
    }
    return {number(j[0], where + "[0]"), number(j[1], where + "[1]")};
}

Mat2 mat2(const Json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 2) {
        throw ConfigError(where + ": expected a 2x2 array");
    }
    return {vec2(j[0], where + "[0]"), vec2(j[1], where + "[1]")};
}

Json to_json(const Vec2& v) { return Json::array({v[0], v[1]}); }

Json to_json(const Mat2& m) { return Json::array({to_json(m[0]), to_json(m[1])}); }

std::vector<double> number_list(const Json& j, const std::string& where)
{
    if (!j.is_array()) {
        throw ConfigError(where + ": expected an array");
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        out.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
    }
    return out;
}

std::string_view cell_average_name(CellAverage c) noexcept { return c == CellAverage::Gauss3 ? "gauss3" : "midpoint"; }

CellAverage parse_cell_average(const std::string& s)
{
    if (s == "midpoint") {
        return CellAverage::Midpoint;
    }
    if (s == "gauss3") {
        return CellAverage::Gauss3;
    }
    throw ConfigError("unknown cell_average '" + s + "' (expected midpoint or gauss3)");
}

std::string_view gradient_mode_name(GradientMode m) noexcept
{
    return m == GradientMode::InterpolatedCorrectorGradient ? "interpolated_corrector_gradient" : "differenced";
}

GradientMode parse_gradient_mode(const std::string& s)
{
    if (s == "differenced") {
        return GradientMode::Differenced;
    }
    if (s == "interpolated_corrector_gradient") {
        return GradientMode::InterpolatedCorrectorGradient;
    }
    throw ConfigError("unknown gradient_mode '" + s + "'");
}

}  // namespace

Json to_json(const ScalarFieldSpec& spec)
{
    Json trig = Json::array();
    for (const auto& t : spec.trig_terms) {
        trig.push_back(Json{{"amplitude", t.amplitude},
                            {"kind", t.kind == TrigKind::Sin ? "sin" : "cos"},
                            {"frequency", to_json(t.frequency)},
                            {"phase", t.phase}});
    }
    Json gauss = Json::array();
    for (const auto& g : spec.gaussian_terms) {
        gauss.push_back(
            Json{{"amplitude", g.amplitude}, {"center", to_json(g.center)}, {"inverse_width", g.inverse_width}});
    }
    return Json{{"constant", spec.constant}, {"trig_terms", trig}, {"gaussian_terms", gauss}};
}

ScalarFieldSpec scalar_from_json(const Json& j, const std::string& where)
{
    if (j.is_number()) {
        return ScalarFieldSpec{j.get<double>(), {}, {}};
    }
    check_object(j, where, {"constant", "trig_terms", "gaussian_terms"});
    ScalarFieldSpec s;
    s.constant = number_or(j, "constant", 0.0, where);
    if (const auto it = j.find("trig_terms"); it != j.end()) {
        if (!it->is_array()) {
            throw ConfigError(where + ".trig_terms: expected an array");
        }
        for (std::size_t k = 0; k < it->size(); ++k) {
            const auto& t = (*it)[k];
            const std::string w = where + ".trig_terms[" + std::to_string(k) + "]";
            check_object(t, w, {"amplitude", "kind", "frequency", "phase"});
            TrigTerm term;
            term.amplitude = number_or(t, "amplitude", 0.0, w);
            if (const auto kind = t.find("kind"); kind != t.end()) {
                const std::string name = string(*kind, w + ".kind");
                if (name == "sin") {
                    term.kind = TrigKind::Sin;
                } else if (name == "cos") {
                    term.kind = TrigKind::Cos;
                } else {
                    throw ConfigError(w + ".kind: expected sin or cos, got '" + name + "'");
                }
            }
            if (const auto f = t.find("frequency"); f != t.end()) {
                term.frequency = vec2(*f, w + ".frequency");
            }
            term.phase = number_or(t, "phase", 0.0, w);
            s.trig_terms.push_back(term);
        }
    }
    if (const auto it = j.find("gaussian_terms"); it != j.end()) {
        if (!it->is_array()) {
            throw ConfigError(where + ".gaussian_terms: expected an array");
        }
        for (std::size_t k = 0; k < it->size(); ++k) {
            const auto& g = (*it)[k];
            const std::string w = where + ".gaussian_terms[" + std::to_string(k) + "]";
            check_object(g, w, {"amplitude", "center", "inverse_width"});
            GaussianTerm term;
            term.amplitude = number_or(g, "amplitude", 0.0, w);
            if (const auto c = g.find("center"); c != g.end()) {
                term.center = vec2(*c, w + ".center");
            }
            term.inverse_width = number_or(g, "inverse_width", 1.0, w);
            if (!(term.inverse_width > 0.0)) {
                throw ConfigError(w + ".inverse_width must be positive");
            }
            s.gaussian_terms.push_back(term);
        }
    }
    return s;
}

Json to_json(const MatrixField& field)
{
    if (field.is_diagonal()) {
        const auto& d = field.as_diagonal();
        return Json{{"diagonal", Json{{"a11", to_json(d.a11)}, {"a22", to_json(d.a22)}}}};
    }
    return Json{{"constant_full", to_json(field.as_constant_full().m)}};
}

MatrixField field_from_json(const Json& j, std::string* name)
{
    const std::string where = "field";
    check_object(j, where, {"builtin", "without_gaussians", "diagonal", "constant_full"});
    const int forms = static_cast<int>(j.contains("builtin")) + static_cast<int>(j.contains("diagonal")) +
                      static_cast<int>(j.contains("constant_full"));
    if (forms != 1) {
        throw ConfigError("field: give exactly one of builtin, diagonal, constant_full");
    }
    MatrixField out;
    if (const auto it = j.find("builtin"); it != j.end()) {
        const std::string b = string(*it, "field.builtin");
        out = builtin(b);
        if (name) {
            *name = b;
        }
    } else if (const auto d = j.find("diagonal"); d != j.end()) {
        check_object(*d, "field.diagonal", {"a11", "a22"});
        if (!d->contains("a11") || !d->contains("a22")) {
            throw ConfigError("field.diagonal needs a11 and a22");
        }
        out = MatrixField::diagonal(scalar_from_json((*d)["a11"], "field.diagonal.a11"),
                                    scalar_from_json((*d)["a22"], "field.diagonal.a22"));
    } else {
        out = MatrixField::constant_full(mat2(j["constant_full"], "field.constant_full"));
    }
    if (const auto w = j.find("without_gaussians"); w != j.end() && boolean(*w, "field.without_gaussians")) {
        out = out.without_gaussians();
    }
    return out;
}

Json to_json(const linalg::SolveReport& r)
{
    return Json{{"iterations", r.iterations},
                {"final_relative_residual", r.final_relative_residual},
                {"converged", r.converged},
                {"restarts", r.restarts}};
}

Json to_json(const EffectiveMatrix& a)
{
    Json prov{{"R", a.provenance.R ? Json(*a.provenance.R) : Json(nullptr)},
              {"T", a.provenance.T ? Json(*a.provenance.T) : Json(nullptr)},
              {"h", a.provenance.h},
              {"field_name", a.provenance.field_name}};
    return Json{{"m", to_json(a.m)}, {"asymmetry", a.asymmetry()}, {"symmetrized", a.symmetrized}, {"provenance", prov}};
}

std::string_view method_name(SolverMethod m) noexcept
{
    switch (m) {
    case SolverMethod::BicgstabIlu0:
        return "bicgstab_ilu0";
    case SolverMethod::CgIlu0:
        return "cg_ilu0";
    case SolverMethod::Bicgstab:
        return "bicgstab";
    }
    return "bicgstab_ilu0";
}

SolverMethod parse_method(std::string_view name)
{
    if (name == "bicgstab_ilu0") {
        return SolverMethod::BicgstabIlu0;
    }
    if (name == "cg_ilu0") {
        return SolverMethod::CgIlu0;
    }
    if (name == "bicgstab") {
        return SolverMethod::Bicgstab;
    }
    throw ConfigError("unknown solver method '" + std::string(name) + "' (bicgstab_ilu0, cg_ilu0, bicgstab)");
}

void RunConfig::validate() const
{
    if (solve_kind != "oscillating" && solve_kind != "homogenized") {
        throw ConfigError("solve.kind must be oscillating or homogenized");
    }
    if (!(solve_eps > 0.0 && solve_eps <= 1.0)) {
        throw ConfigError("solve.eps must lie in (0, 1]");
    }
    if (!is_spd(solve_a_star)) {
        throw ConfigError("solve.a_star must be symmetric positive definite");
    }
    for (const double r : study_R) {
        if (!(r > 0.0)) {
            throw ConfigError("homogenize.study_R entries must be positive");
        }
    }
    for (const double t : study_T) {
        if (!(t >= 1.0)) {
            throw ConfigError("homogenize.study_T entries must be >= 1");
        }
    }
    if (experiment.settings.threads < 1) {
        throw ConfigError("threads must be >= 1");
    }
}

Json to_json(const ExperimentConfig& c)
{
    Json inv = Json::array();
    for (const int n : c.inv_eps) {
        inv.push_back(n);
    }
    return Json{
        {"field_name", c.field_name},
        {"field", to_json(c.field)},
        {"source", to_json(c.source)},
        {"omega", Json{{"lo", to_json(c.omega.lo)}, {"hi", to_json(c.omega.hi)}}},
        {"inv_eps", inv},
        {"h", c.h},
        {"corrector",
         Json{{"R", c.corrector.R}, {"h", c.corrector.h}, {"T", c.corrector.T ? Json(*c.corrector.T) : Json(nullptr)}}},
        {"solver", Json{{"tol", c.settings.solver.tol},
                        {"maxit", c.settings.solver.maxit},
                        {"method", method_name(c.settings.method)},
                        {"cell_average", cell_average_name(c.settings.cell_average)}}},
        {"gradient_mode", gradient_mode_name(c.gradient_mode)},
        {"threads", c.settings.threads},
        {"deterministic", c.deterministic},
        {"output_dir", c.output_dir},
    };
}

Json to_json(const RunConfig& c)
{
    Json j = to_json(c.experiment);
    j["homogenize"] = Json{{"study_R", c.study_R}, {"study_T", c.study_T}, {"periodic_cell", c.periodic_cell}};
    j["solve"] = Json{{"kind", c.solve_kind}, {"eps", c.solve_eps}, {"a_star", to_json(c.solve_a_star)}};
    return j;
}

RunConfig run_config_from_json(const Json& j)
{
    check_object(j, "config",
                 {"field_name", "field", "source", "omega", "inv_eps", "h", "corrector", "solver", "gradient_mode",
                  "threads", "deterministic", "output_dir", "homogenize", "solve"});
    RunConfig rc;
    auto& e = rc.experiment;
    std::string builtin_used;
    if (const auto it = j.find("field"); it != j.end()) {
        e.field = field_from_json(*it, &builtin_used);
    } else {
        builtin_used = std::string(builtin_name(Builtin::AsymptoticPeriodicPaper));
        e.field = builtin(Builtin::AsymptoticPeriodicPaper);
    }
    if (const auto it = j.find("field_name"); it != j.end()) {
        e.field_name = string(*it, "field_name");
    } else {
        e.field_name = builtin_used.empty() ? "custom" : builtin_used;
    }
    if (const auto it = j.find("source"); it != j.end()) {
        e.source = scalar_from_json(*it, "source");
    } else if (!builtin_used.empty()) {
        e.source = builtin_source(parse_builtin(builtin_used));
    } else {
        e.source = ScalarFieldSpec{1.0, {}, {}};
    }
    if (const auto it = j.find("omega"); it != j.end()) {
        check_object(*it, "omega", {"lo", "hi"});
        if (const auto lo = it->find("lo"); lo != it->end()) {
            e.omega.lo = vec2(*lo, "omega.lo");
        }
        if (const auto hi = it->find("hi"); hi != it->end()) {
            e.omega.hi = vec2(*hi, "omega.hi");
        }
    }
    if (const auto it = j.find("inv_eps"); it != j.end()) {
        if (!it->is_array()) {
            throw ConfigError("inv_eps: expected an array of integers");
        }
        e.inv_eps.clear();
        for (std::size_t k = 0; k < it->size(); ++k) {
            e.inv_eps.push_back(integer((*it)[k], "inv_eps[" + std::to_string(k) + "]"));
        }
    }
    e.h = number_or(j, "h", e.h, "config");
    if (const auto it = j.find("corrector"); it != j.end()) {
        check_object(*it, "corrector", {"R", "h", "T"});
        e.corrector.R = number_or(*it, "R", e.corrector.R, "corrector");
        e.corrector.h = number_or(*it, "h", e.corrector.h, "corrector");
        if (const auto t = it->find("T"); t != it->end() && !t->is_null()) {
            e.corrector.T = number(*t, "corrector.T");
        }
    }
    if (const auto it = j.find("solver"); it != j.end()) {
        check_object(*it, "solver", {"tol", "maxit", "method", "cell_average"});
        e.settings.solver.tol = number_or(*it, "tol", e.settings.solver.tol, "solver");
        if (const auto m = it->find("maxit"); m != it->end()) {
            const int maxit = integer(*m, "solver.maxit");
            if (maxit < 0) {
                throw ConfigError("solver.maxit must be >= 0 (0 selects the default)");
            }
            e.settings.solver.maxit = static_cast<std::size_t>(maxit);
        }
        if (const auto m = it->find("method"); m != it->end()) {
            e.settings.method = parse_method(string(*m, "solver.method"));
        }
        if (const auto m = it->find("cell_average"); m != it->end()) {
            e.settings.cell_average = parse_cell_average(string(*m, "solver.cell_average"));
        }
    }
    if (const auto it = j.find("gradient_mode"); it != j.end()) {
        e.gradient_mode = parse_gradient_mode(string(*it, "gradient_mode"));
    }
    if (const auto it = j.find("threads"); it != j.end()) {
        const int t = integer(*it, "threads");
        if (t < 1) {
            throw ConfigError("threads must be >= 1");
        }
        e.settings.threads = static_cast<unsigned>(t);
    }
    if (const auto it = j.find("deterministic"); it != j.end()) {
        e.deterministic = boolean(*it, "deterministic");
    }
    if (const auto it = j.find("output_dir"); it != j.end()) {
        e.output_dir = string(*it, "output_dir");
    }
    if (const auto it = j.find("homogenize"); it != j.end()) {
        check_object(*it, "homogenize", {"study_R", "study_T", "periodic_cell"});
        if (const auto r = it->find("study_R"); r != it->end()) {
            rc.study_R = number_list(*r, "homogenize.study_R");
        }
        if (const auto t = it->find("study_T"); t != it->end()) {
            rc.study_T = number_list(*t, "homogenize.study_T");
        }
        if (const auto p = it->find("periodic_cell"); p != it->end()) {
            rc.periodic_cell = boolean(*p, "homogenize.periodic_cell");
        }
    }
    if (const auto it = j.find("solve"); it != j.end()) {
        check_object(*it, "solve", {"kind", "eps", "a_star"});
        if (const auto k = it->find("kind"); k != it->end()) {
            rc.solve_kind = string(*k, "solve.kind");
        }
        rc.solve_eps = number_or(*it, "eps", rc.solve_eps, "solve");
        if (const auto a = it->find("a_star"); a != it->end()) {
            rc.solve_a_star = mat2(*a, "solve.a_star");
        }
    }
    rc.validate();
    return rc;
}

RunConfig parse_run_config(std::string_view text)
{
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return run_config_from_json(j);
}

RunConfig load_run_config(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot read config file " + path);
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_run_config(ss.str());
}

std::string serialize(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

std::string fnv1a_hex(std::string_view bytes)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (const char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string config_hash(const ExperimentConfig& c)
{
    Json j = to_json(c);
    j.erase("output_dir");
    return fnv1a_hex(j.dump());
}

Json study_meta(const ExperimentConfig& c, const StudyResult& r)
{
    Json osc = Json::array();
    for (std::size_t k = 0; k < r.oscillating_reports.size(); ++k) {
        osc.push_back(Json{{"inv_eps", c.inv_eps[k]}, {"report", to_json(r.oscillating_reports[k])}});
    }
    Json meta{
        {"config", to_json(c)},
        {"config_hash", config_hash(c)},
        {"a_star", to_json(r.a_star)},
        {"reports",
         Json{{"corrector", Json::array({to_json(r.corrector_reports[0]), to_json(r.corrector_reports[1])})},
              {"homogenized", to_json(r.homogenized_report)},
              {"oscillating", osc}}},
    };
    if (!c.deterministic) {
        Json t = Json::object();
        for (const auto& [stage, seconds] : r.timings) {
            t[stage] = seconds;
        }
        meta["timings"] = t;
    }
    return meta;
}

}  // namespace homfv::config
