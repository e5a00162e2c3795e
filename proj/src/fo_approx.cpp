#include "homfv/fo_approx.hpp"

#include "homfv/config.hpp"
#include "homfv/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace homfv {

namespace {

[[noreturn]] void rethrow_in_stage(const std::string& stage, const Error& e)
{
    const std::string msg = "stage '" + stage + "': " + e.what();
    if (const auto* f = dynamic_cast<const FactorizationError*>(&e)) {
        throw FactorizationError(msg, f->row());
    }
    if (dynamic_cast<const UnsupportedDiscretization*>(&e)) {
        throw UnsupportedDiscretization(msg);
    }
    if (dynamic_cast<const AssemblyError*>(&e)) {
        throw AssemblyError(msg);
    }
    if (dynamic_cast<const SolverError*>(&e)) {
        throw SolverError(msg);
    }
    if (dynamic_cast<const ConfigError*>(&e)) {
        throw ConfigError(msg);
    }
    if (dynamic_cast<const ContractError*>(&e)) {
        throw ContractError(msg);
    }
    if (dynamic_cast<const DomainError*>(&e)) {
        throw DomainError(msg);
    }
    if (dynamic_cast<const IoError*>(&e)) {
        throw IoError(msg);
    }
    throw Error(msg);
}

class StageClock {
public:
    StageClock() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

template <class F>
auto staged(const std::string& stage, std::vector<std::pair<std::string, double>>* timings, F&& f)
{
    const StageClock clock;
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            if (timings) {
                timings->emplace_back(stage, clock.seconds());
            }
        } else {
            auto out = f();
            if (timings) {
                timings->emplace_back(stage, clock.seconds());
            }
            return out;
        }
    } catch (const Error& e) {
        rethrow_in_stage(stage, e);
    }
}

PointFunction source_function(const ScalarFieldSpec& f)
{
    return [f](Vec2 x) { return eval_scalar(f, x); };
}

double omega_reach(const AxisBox& box) noexcept
{
    return std::max({std::abs(box.lo[0]), std::abs(box.lo[1]), std::abs(box.hi[0]), std::abs(box.hi[1])});
}

void write_file(const std::filesystem::path& path, const std::string& text)
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

std::string study_csv(const std::vector<int>& inv_eps, const std::vector<ErrRow>& rows)
{
    std::ostringstream os;
    os << "inv_eps,eps,err,h1_diff,h2_u0\n" << std::setprecision(17);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        os << inv_eps[k] << ',' << rows[k].eps << ',' << rows[k].err << ',' << rows[k].h1_diff << ','
           << rows[k].h2_u0 << '\n';
    }
    return os.str();
}

}  // namespace

void ExperimentConfig::validate() const
{
    if (inv_eps.empty()) {
        throw ConfigError("eps list is empty");
    }
    for (const int n : inv_eps) {
        if (n < 1) {
            throw ConfigError("eps = 1/N needs an integer N >= 1, got N = " + std::to_string(n));
        }
    }
    if (!(h > 0.0)) {
        throw ConfigError("Omega mesh spacing h must be positive");
    }
    (void)omega_mesh();
    if (!(corrector.R > 0.0) || !(corrector.h > 0.0)) {
        throw ConfigError("corrector R and h must be positive");
    }
    if (corrector.T && !(*corrector.T >= 1.0)) {
        throw ConfigError("regularization parameter T must be >= 1");
    }
    (void)centered_square_mesh(corrector.R, corrector.h);
    if (!field.is_diagonal()) {
        throw ConfigError("the oscillating problem needs a diagonal coefficient field");
    }
    if (!(settings.solver.tol > 0.0)) {
        throw ConfigError("solver tolerance must be positive");
    }
    if (!periodic_wrap()) {
        const int n_max = *std::max_element(inv_eps.begin(), inv_eps.end());
        const double needed = n_max * omega_reach(omega);
        if (corrector.R < needed - 1e-12 * needed) {
            std::ostringstream os;
            os << "corrector domain too small: Omega/eps needs R >= " << needed << " (N = " << n_max
               << "), got R = " << corrector.R;
            throw ConfigError(os.str());
        }
    }
}

StructuredMesh ExperimentConfig::omega_mesh() const
{
    Index2 n{};
    for (std::size_t a = 0; a < 2; ++a) {
        const double len = omega.hi[a] - omega.lo[a];
        if (!(len > 0.0)) {
            throw ConfigError("Omega must have positive extent");
        }
        const double cells = len / h;
        const double rounded = std::round(cells);
        if (rounded < 1.0 || std::abs(cells - rounded) > 1e-8 * cells) {
            throw ConfigError("Omega mesh spacing must divide the domain evenly");
        }
        n[a] = static_cast<std::size_t>(rounded);
    }
    return build_uniform_mesh(omega.lo, Vec2{omega.hi[0] - omega.lo[0], omega.hi[1] - omega.lo[1]}, n);
}

bool ExperimentConfig::periodic_wrap() const noexcept { return field.is_diagonal() && field.is_unit_periodic(); }

SolveOutcome solve_oscillating(const MatrixField& field, double eps, const ScalarFieldSpec& f,
                               const StructuredMesh& omega, const SolveSettings& settings)
{
    const SparseSystem sys =
        assemble_tpfa(omega, EpsilonScaled(field, eps), {}, source_function(f), AssemblyOptions{settings.cell_average});
    auto res = solve_system(sys, settings, "oscillating problem");
    return {GridField(omega, std::move(res.x)), res.report};
}

SolveOutcome solve_homogenized(const EffectiveMatrix& a_star, const ScalarFieldSpec& f, const StructuredMesh& omega,
                               const SolveSettings& settings)
{
    const auto sym = a_star.symmetric_part();
    const SparseSystem sys = assemble_const_full(omega, sym.m, {}, source_function(f));
    auto res = solve_system(sys, settings, "homogenized problem");
    return {GridField(omega, std::move(res.x)), res.report};
}

GridField first_order_approx(const GridField& u0, const std::array<GridField, 2>& u0_grad,
                             const CorrectorSet& correctors, double eps, bool periodic_wrap)
{
    require_same_mesh(u0, u0_grad[0]);
    require_same_mesh(u0, u0_grad[1]);
    if (!(eps > 0.0)) {
        throw ContractError("eps must be positive");
    }
    GridField v(u0.mesh);
    for (std::size_t c = 0; c < u0.values.size(); ++c) {
        const Vec2 x = u0.mesh.center(c);
        const Vec2 y{x[0] / eps, x[1] / eps};
        const double corr = correctors.chi(0, y, periodic_wrap) * u0_grad[0].values[c] +
                            correctors.chi(1, y, periodic_wrap) * u0_grad[1].values[c];
        v.values[c] = u0.values[c] + eps * corr;
    }
    return v;
}

std::array<GridField, 2> first_order_gradient(const GridField& u0, const CorrectorSet& correctors, double eps,
                                              bool periodic_wrap)
{
    if (!(eps > 0.0)) {
        throw ContractError("eps must be positive");
    }
    const auto g = cell_gradient(u0);
    // hess[j][i] = d_i d_j u0
    const std::array<std::array<GridField, 2>, 2> hess{cell_gradient(g[0]), cell_gradient(g[1])};
    std::array<GridField, 2> out{GridField(u0.mesh), GridField(u0.mesh)};
    for (std::size_t c = 0; c < u0.values.size(); ++c) {
        const Vec2 x = u0.mesh.center(c);
        const Vec2 y{x[0] / eps, x[1] / eps};
        const std::array<double, 2> chi{correctors.chi(0, y, periodic_wrap), correctors.chi(1, y, periodic_wrap)};
        const std::array<Vec2, 2> dchi{correctors.grad_chi(0, y, periodic_wrap),
                                       correctors.grad_chi(1, y, periodic_wrap)};
        for (std::size_t i = 0; i < 2; ++i) {
            double s = g[i].values[c];
            for (std::size_t j = 0; j < 2; ++j) {
                s += dchi[j][i] * g[j].values[c] + eps * chi[j] * hess[j][i].values[c];
            }
            out[i].values[c] = s;
        }
    }
    return out;
}

namespace {

ErrRow finish_err(const DiscreteNorms& diff, const GridField& u0, double eps)
{
    ErrRow row;
    row.eps = eps;
    row.h1_diff = diff.h1;
    row.h2_u0 = discrete_norms(u0).h2;
    if (row.h2_u0 > 0.0) {
        row.err = row.h1_diff / row.h2_u0;
    } else if (row.h1_diff == 0.0) {
        row.err = 0.0;
    } else {
        throw ContractError("Err undefined: u0 has zero H2 norm");
    }
    return row;
}

}  // namespace

ErrRow err_epsilon(const GridField& u_eps, const GridField& v_eps, const GridField& u0, double eps)
{
    require_same_mesh(u_eps, v_eps);
    require_same_mesh(u_eps, u0);
    return finish_err(discrete_norms(u_eps - v_eps), u0, eps);
}

ErrRow err_epsilon(const GridField& u_eps, const GridField& v_eps, const GridField& u0,
                   const std::array<GridField, 2>& diff_gradient, double eps)
{
    require_same_mesh(u_eps, v_eps);
    require_same_mesh(u_eps, u0);
    require_same_mesh(u_eps, diff_gradient[0]);
    require_same_mesh(u_eps, diff_gradient[1]);
    NormOptions opts;
    opts.reference_gradient = diff_gradient;
    return finish_err(discrete_norms(u_eps - v_eps, opts), u0, eps);
}

StudyResult run_study(const ExperimentConfig& config)
{
    config.validate();
    SolveSettings settings = config.settings;
    if (config.deterministic) {
        settings.threads = 1;
    }
    const StructuredMesh omega = config.omega_mesh();
    const bool wrap = config.periodic_wrap();

    StudyResult out;
    auto* timings = &out.timings;

    const CorrectorSet correctors =
        staged("correctors", timings, [&] { return solve_correctors(config.field, config.corrector, settings); });
    out.corrector_reports = {correctors.entries[0].report, correctors.entries[1].report};

    out.a_star = staged("homogenized_matrix", timings,
                        [&] { return effective_matrix(config.field, correctors, settings, config.field_name); });

    SolveOutcome homogenized = staged("homogenized_solve", timings,
                                      [&] { return solve_homogenized(out.a_star, config.source, omega, settings); });
    out.homogenized_report = homogenized.report;
    const GridField& u0 = homogenized.u;
    const auto u0_grad = cell_gradient(u0);

    const std::size_t count = config.inv_eps.size();
    std::vector<GridField> u_eps(count);
    std::vector<GridField> v_eps(count);
    out.rows.resize(count);
    out.oscillating_reports.resize(count);
    std::vector<std::vector<std::pair<std::string, double>>> branch_timings(count);
    SolveSettings inner = settings;
    inner.threads = 1;
    run_tasks(count, settings.threads, [&](std::size_t k) {
        const int n = config.inv_eps[k];
        const double eps = 1.0 / n;
        const std::string tag = " N=" + std::to_string(n);
        auto* t = &branch_timings[k];
        auto fine = staged("oscillating_solve" + tag, t,
                           [&] { return solve_oscillating(config.field, eps, config.source, omega, inner); });
        out.oscillating_reports[k] = fine.report;
        u_eps[k] = std::move(fine.u);
        v_eps[k] = staged("first_order" + tag, t,
                          [&] { return first_order_approx(u0, u0_grad, correctors, eps, wrap); });
        out.rows[k] = staged("err" + tag, t, [&] {
            if (config.gradient_mode == GradientMode::InterpolatedCorrectorGradient) {
                const auto gv = first_order_gradient(u0, correctors, eps, wrap);
                const auto gu = cell_gradient(u_eps[k]);
                const std::array<GridField, 2> diff{gu[0] - gv[0], gu[1] - gv[1]};
                return err_epsilon(u_eps[k], v_eps[k], u0, diff, eps);
            }
            return err_epsilon(u_eps[k], v_eps[k], u0, eps);
        });
    });
    for (auto& bt : branch_timings) {
        out.timings.insert(out.timings.end(), bt.begin(), bt.end());
    }

    if (!config.output_dir.empty()) {
        staged("write_outputs", nullptr, [&] {
            namespace fs = std::filesystem;
            const fs::path dir(config.output_dir);
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec) {
                throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
            }
            write_file(dir / "study.csv", study_csv(config.inv_eps, out.rows));
            {
                std::ostringstream os;
                write_a_star_csv(os, out.a_star);
                write_file(dir / "a_star.csv", os.str());
            }
            save_grid_field((dir / "u0.grid").string(), u0);
            for (std::size_t k = 0; k < count; ++k) {
                const std::string n = std::to_string(config.inv_eps[k]);
                save_grid_field((dir / ("u_eps_N" + n + ".grid")).string(), u_eps[k]);
                save_grid_field((dir / ("v_eps_N" + n + ".grid")).string(), v_eps[k]);
            }
            write_file(dir / "meta.json", config::study_meta(config, out).dump(2) + "\n");
        });
    }
    return out;
}

}  // namespace homfv
