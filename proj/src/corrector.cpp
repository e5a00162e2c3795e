#include "homfv/corrector.hpp"

#include "homfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace homfv {

namespace {

void validate_params(const CorrectorParams& p)
{
    if (!(p.R > 0.0)) {
        throw ConfigError("corrector domain size R must be positive");
    }
    if (!(p.h > 0.0)) {
        throw ConfigError("corrector mesh spacing must be positive");
    }
    if (p.T && !(*p.T >= 1.0)) {
        throw ConfigError("regularization parameter T must be >= 1");
    }
}

std::array<GridField, 2> gradient_impl(const GridField& u, bool periodic)
{
    const auto& mesh = u.mesh;
    const std::size_t nx = mesh.n(0);
    const std::size_t ny = mesh.n(1);
    if (nx < 2 || ny < 2) {
        throw ContractError("cell_gradient needs at least two cells per axis");
    }
    std::array<GridField, 2> g{GridField(mesh), GridField(mesh)};
    const std::array<std::size_t, 2> n{nx, ny};
    for (int axis = 0; axis < 2; ++axis) {
        const auto a = static_cast<std::size_t>(axis);
        const double h = mesh.h(axis);
        const std::size_t len = n[a];
        for (std::size_t iy = 0; iy < ny; ++iy) {
            for (std::size_t ix = 0; ix < nx; ++ix) {
                // values along the axis through (ix, iy)
                auto v = [&](std::size_t k) { return axis == 0 ? u.at(k, iy) : u.at(ix, k); };
                const std::size_t k = axis == 0 ? ix : iy;
                double d = 0.0;
                if (periodic) {
                    d = (v((k + 1) % len) - v((k + len - 1) % len)) / (2.0 * h);
                } else if (k > 0 && k + 1 < len) {
                    d = (v(k + 1) - v(k - 1)) / (2.0 * h);
                } else if (len == 2) {
                    d = (v(1) - v(0)) / h;
                } else if (k == 0) {
                    d = (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h);
                } else {
                    d = (3.0 * v(len - 1) - 4.0 * v(len - 2) + v(len - 3)) / (2.0 * h);
                }
                g[a].values[mesh.index(ix, iy)] = d;
            }
        }
    }
    return g;
}

// fractional cell-centre coordinate, snapped to integers within rounding
double centre_coordinate(const StructuredMesh& mesh, int axis, double x)
{
    const double s = (x - mesh.origin()[static_cast<std::size_t>(axis)]) / mesh.h(axis) - 0.5;
    const double r = std::round(s);
    return std::abs(s - r) <= 1e-9 ? r : s;
}

Vec2 wrap_into_unit_cell(Vec2 y) noexcept { return {y[0] - std::floor(y[0] + 0.5), y[1] - std::floor(y[1] + 0.5)}; }

bool inside_mesh(const StructuredMesh& mesh, Vec2 y) noexcept
{
    for (int a = 0; a < 2; ++a) {
        const auto i = static_cast<std::size_t>(a);
        if (y[i] < mesh.origin()[i] || y[i] > mesh.origin()[i] + mesh.extent()[i]) {
            return false;
        }
    }
    return true;
}

CorrectorEntry finish_entry(const StructuredMesh& mesh, int j, linalg::SolveResult res)
{
    CorrectorEntry e;
    e.direction = j;
    e.chi = GridField(mesh, std::move(res.x));
    e.grad = cell_gradient(e.chi);
    e.report = res.report;
    return e;
}

std::string context_name(int j, const CorrectorParams& p)
{
    std::ostringstream os;
    os << "corrector chi_" << (j + 1) << " (R=" << p.R;
    if (p.T) {
        os << ", T=" << *p.T;
    }
    os << ", h=" << p.h << ")";
    return os.str();
}

}  // namespace

linalg::Vector corrector_source(const StructuredMesh& mesh, const std::vector<Vec2>& coeffs, int j, bool periodic)
{
    if (j != 0 && j != 1) {
        throw ContractError("corrector direction must be 0 or 1");
    }
    if (coeffs.size() != mesh.num_cells()) {
        throw ContractError("cell coefficient array does not match the mesh");
    }
    const auto a = static_cast<std::size_t>(j);
    const std::size_t len = mesh.n(j);
    const double meas = mesh.edge_measure(j);
    const double d = mesh.center_to_edge(j);
    linalg::Vector rhs(mesh.num_cells(), 0.0);
    for (std::size_t iy = 0; iy < mesh.n(1); ++iy) {
        for (std::size_t ix = 0; ix < mesh.n(0); ++ix) {
            const std::size_t i = mesh.index(ix, iy);
            const std::size_t k = j == 0 ? ix : iy;
            auto neighbour = [&](std::size_t kk) { return j == 0 ? mesh.index(kk, iy) : mesh.index(ix, kk); };
            auto conductivity = [&](bool exists, std::size_t other) {
                if (!exists) {
                    return coeffs[i][a];
                }
                return i < other ? edge_conductivity(coeffs[i][a], d, coeffs[other][a], d)
                                 : edge_conductivity(coeffs[other][a], d, coeffs[i][a], d);
            };
            double kappa_plus = 0.0;
            double kappa_minus = 0.0;
            if (periodic) {
                kappa_plus = conductivity(true, neighbour((k + 1) % len));
                kappa_minus = conductivity(true, neighbour((k + len - 1) % len));
            } else {
                kappa_plus = conductivity(k + 1 < len, k + 1 < len ? neighbour(k + 1) : i);
                kappa_minus = conductivity(k > 0, k > 0 ? neighbour(k - 1) : i);
            }
            rhs[i] = meas * kappa_plus - meas * kappa_minus;
        }
    }
    return rhs;
}

CorrectorSet solve_correctors(const MatrixField& field, const CorrectorParams& params, const SolveSettings& settings)
{
    validate_params(params);
    if (!field.is_diagonal()) {
        throw UnsupportedDiscretization("corrector problems need a diagonal coefficient field");
    }
    CorrectorSet set;
    set.params = params;
    set.mesh = centered_square_mesh(params.R, params.h);
    const auto coeffs = cell_diagonal_coefficients(set.mesh, EpsilonScaled(field, 1.0), settings.cell_average);
    const double reaction = params.T ? 1.0 / (*params.T * *params.T) : 0.0;
    SparseSystem sys = assemble_tpfa(set.mesh, coeffs, {}, {}, reaction);
    const LinearSolver solver(std::move(sys.matrix), settings);
    run_tasks(2, settings.threads, [&](std::size_t k) {
        const int j = static_cast<int>(k);
        const auto rhs = corrector_source(set.mesh, coeffs, j);
        set.entries[k] = finish_entry(set.mesh, j, solver.solve(rhs, context_name(j, params)));
    });
    return set;
}

CorrectorEntry solve_dirichlet_corrector(const MatrixField& field, double R, double h, int j,
                                         const SolveSettings& settings)
{
    const CorrectorParams params{R, std::nullopt, h};
    validate_params(params);
    if (j != 0 && j != 1) {
        throw ContractError("corrector direction must be 0 or 1");
    }
    const auto mesh = centered_square_mesh(R, h);
    const auto coeffs = cell_diagonal_coefficients(mesh, EpsilonScaled(field, 1.0), settings.cell_average);
    SparseSystem sys = assemble_tpfa(mesh, coeffs, {}, {}, 0.0);
    sys.rhs = corrector_source(mesh, coeffs, j);
    return finish_entry(mesh, j, solve_system(sys, settings, context_name(j, params)));
}

CorrectorEntry solve_regularized_corrector(const MatrixField& field, double R, double T, double h, int j,
                                           const SolveSettings& settings)
{
    const CorrectorParams params{R, T, h};
    validate_params(params);
    if (j != 0 && j != 1) {
        throw ContractError("corrector direction must be 0 or 1");
    }
    const auto mesh = centered_square_mesh(R, h);
    const auto coeffs = cell_diagonal_coefficients(mesh, EpsilonScaled(field, 1.0), settings.cell_average);
    SparseSystem sys = assemble_tpfa(mesh, coeffs, {}, {}, 1.0 / (T * T));
    sys.rhs = corrector_source(mesh, coeffs, j);
    return finish_entry(mesh, j, solve_system(sys, settings, context_name(j, params)));
}

std::array<GridField, 2> cell_gradient(const GridField& u) { return gradient_impl(u, false); }

std::array<GridField, 2> periodic_cell_gradient(const GridField& u) { return gradient_impl(u, true); }

double interpolate(const GridField& u, Vec2 point)
{
    const auto& mesh = u.mesh;
    for (int a = 0; a < 2; ++a) {
        const auto i = static_cast<std::size_t>(a);
        const double lo = mesh.origin()[i] - mesh.h(a);
        const double hi = mesh.origin()[i] + mesh.extent()[i] + mesh.h(a);
        if (!(point[i] >= lo && point[i] <= hi)) {
            std::ostringstream os;
            os << "point (" << point[0] << ", " << point[1] << ") lies outside the interpolation domain";
            throw DomainError(os.str());
        }
    }
    std::array<std::size_t, 2> base{};
    std::array<double, 2> t{};
    for (int a = 0; a < 2; ++a) {
        const auto i = static_cast<std::size_t>(a);
        const std::size_t len = mesh.n(a);
        const double s = std::clamp(centre_coordinate(mesh, a, point[i]), 0.0, static_cast<double>(len - 1));
        if (len == 1) {
            base[i] = 0;
            t[i] = 0.0;
            continue;
        }
        const auto k = std::min(static_cast<std::size_t>(std::floor(s)), len - 2);
        base[i] = k;
        t[i] = s - static_cast<double>(k);
    }
    const std::size_t x1 = std::min(base[0] + 1, mesh.n(0) - 1);
    const std::size_t y1 = std::min(base[1] + 1, mesh.n(1) - 1);
    const double v00 = u.at(base[0], base[1]);
    const double v10 = u.at(x1, base[1]);
    const double v01 = u.at(base[0], y1);
    const double v11 = u.at(x1, y1);
    if (t[0] == 0.0 && t[1] == 0.0) {
        return v00;
    }
    return (1.0 - t[0]) * (1.0 - t[1]) * v00 + t[0] * (1.0 - t[1]) * v10 + (1.0 - t[0]) * t[1] * v01 +
           t[0] * t[1] * v11;
}

double CorrectorSet::chi(int j, Vec2 y, bool periodic_wrap) const
{
    if (periodic_wrap && !inside_mesh(mesh, y)) {
        y = wrap_into_unit_cell(y);
    }
    return interpolate(entries.at(static_cast<std::size_t>(j)).chi, y);
}

Vec2 CorrectorSet::grad_chi(int j, Vec2 y, bool periodic_wrap) const
{
    if (periodic_wrap && !inside_mesh(mesh, y)) {
        y = wrap_into_unit_cell(y);
    }
    const auto& g = entries.at(static_cast<std::size_t>(j)).grad;
    return {interpolate(g[0], y), interpolate(g[1], y)};
}

}  // namespace homfv
