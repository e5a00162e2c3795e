#include "homfv/mesh.hpp"

#include "homfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace homfv {

namespace {

std::string cell_name(const StructuredMesh& mesh, std::size_t i)
{
    const auto c = mesh.cell(i);
    std::ostringstream os;
    os << "cell " << i << " (ix=" << c[0] << ", iy=" << c[1] << ")";
    return os.str();
}

void require_positive_coefficient(const StructuredMesh& mesh, std::size_t i, double c)
{
    if (!(c > 0.0)) {
        std::ostringstream os;
        os << "nonpositive coefficient " << c << " in " << cell_name(mesh, i);
        throw AssemblyError(os.str());
    }
}

Vec2 cell_average(const StructuredMesh& mesh, const EpsilonScaled& field, std::size_t i, CellAverage rule)
{
    const Vec2 c = mesh.center(i);
    if (rule == CellAverage::Midpoint) {
        return eval_diagonal(field, c);
    }
    static constexpr std::array<double, 3> kNodes{-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> kWeights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    Vec2 acc{0.0, 0.0};
    for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t p = 0; p < 3; ++p) {
            const Vec2 x{c[0] + 0.5 * mesh.h(0) * kNodes[p], c[1] + 0.5 * mesh.h(1) * kNodes[q]};
            const Vec2 a = eval_diagonal(field, x);
            const double w = kWeights[p] * kWeights[q];
            acc[0] += w * a[0];
            acc[1] += w * a[1];
        }
    }
    return acc;
}

double interior_tau(const StructuredMesh& mesh, int axis, double ci, double cj)
{
    const double d = mesh.center_to_edge(axis);
    return mesh.edge_measure(axis) * edge_conductivity(ci, d, cj, d) / (2.0 * d);
}

double boundary_tau(const StructuredMesh& mesh, int axis, double ci)
{
    return mesh.edge_measure(axis) * ci / mesh.center_to_edge(axis);
}

// Core 5-point assembly (plus optional constant cross term). `cross` = m12.
SparseSystem assemble_rows(const StructuredMesh& mesh, const std::vector<Vec2>& coeffs, const PointFunction& g,
                           const PointFunction& f, double reaction, double cross)
{
    const std::size_t nx = mesh.n(0);
    const std::size_t ny = mesh.n(1);
    const std::size_t n = mesh.num_cells();
    if (coeffs.size() != n) {
        throw ContractError("cell coefficient array does not match the mesh");
    }
    for (std::size_t i = 0; i < n; ++i) {
        require_positive_coefficient(mesh, i, coeffs[i][0]);
        require_positive_coefficient(mesh, i, coeffs[i][1]);
    }
    const double vol = mesh.cell_volume();
    linalg::RowAssembler rows(n, n * (cross != 0.0 ? 9 : 5));
    linalg::Vector rhs(n, 0.0);

    auto boundary_value = [&](Vec2 x) { return g ? g(x) : 0.0; };

    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const std::size_t i = mesh.index(ix, iy);
            const Vec2 xc = mesh.center(ix, iy);
            double diag = reaction * vol;
            double b = f ? f(xc) * vol : 0.0;

            auto neighbour = [&](int axis, bool exists, std::size_t j, double edge_coord) {
                const double ci = coeffs[i][static_cast<std::size_t>(axis)];
                if (exists) {
                    const double cj = coeffs[j][static_cast<std::size_t>(axis)];
                    const double tau = i < j ? interior_tau(mesh, axis, ci, cj) : interior_tau(mesh, axis, cj, ci);
                    diag += tau;
                    rows.add(j, -tau);
                } else {
                    const double tau = boundary_tau(mesh, axis, ci);
                    Vec2 xs = xc;
                    xs[static_cast<std::size_t>(axis)] = edge_coord;
                    diag += tau;
                    b += tau * boundary_value(xs);
                }
            };
            neighbour(1, iy > 0, iy > 0 ? i - nx : 0, mesh.origin()[1]);
            neighbour(0, ix > 0, ix > 0 ? i - 1 : 0, mesh.origin()[0]);
            neighbour(0, ix + 1 < nx, i + 1, mesh.origin()[0] + mesh.extent()[0]);
            neighbour(1, iy + 1 < ny, i + nx, mesh.origin()[1] + mesh.extent()[1]);

            if (cross != 0.0) {
                // -2 m12 u_xy vol with u_xy ~ (u++ - u+- - u-+ + u--) / (4 hx hy)
                for (const int sx : {-1, 1}) {
                    for (const int sy : {-1, 1}) {
                        const double entry = -0.5 * cross * static_cast<double>(sx * sy);
                        const auto jx = static_cast<std::ptrdiff_t>(ix) + sx;
                        const auto jy = static_cast<std::ptrdiff_t>(iy) + sy;
                        const bool inside = jx >= 0 && jy >= 0 && jx < static_cast<std::ptrdiff_t>(nx) &&
                                            jy < static_cast<std::ptrdiff_t>(ny);
                        if (inside) {
                            rows.add(mesh.index(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy)), entry);
                        } else {
                            const Vec2 ghost{xc[0] + sx * mesh.h(0), xc[1] + sy * mesh.h(1)};
                            b -= entry * boundary_value(ghost);
                        }
                    }
                }
            }
            rows.add(i, diag);
            rows.finish_row();
            rhs[i] = b;
        }
    }
    return SparseSystem{std::move(rows).build(), std::move(rhs)};
}

StructuredMesh checked_mesh(Vec2 origin, Vec2 extent, Index2 ncells)
{
    return build_uniform_mesh(origin, extent, ncells);
}

}  // namespace

StructuredMesh build_uniform_mesh(Vec2 origin, Vec2 extent, Index2 ncells)
{
    if (!(extent[0] > 0.0) || !(extent[1] > 0.0) || !std::isfinite(extent[0]) || !std::isfinite(extent[1])) {
        throw ConfigError("mesh extent must be positive");
    }
    if (ncells[0] == 0 || ncells[1] == 0) {
        throw ConfigError("mesh needs at least one cell per axis");
    }
    StructuredMesh m;
    m.origin_ = origin;
    m.extent_ = extent;
    m.n_ = ncells;
    m.h_ = {extent[0] / static_cast<double>(ncells[0]), extent[1] / static_cast<double>(ncells[1])};
    return m;
}

StructuredMesh centered_square_mesh(double half_side, double h)
{
    if (!(half_side > 0.0) || !(h > 0.0)) {
        throw ConfigError("square mesh needs positive half side and spacing");
    }
    const double side = 2.0 * half_side;
    const double cells = side / h;
    const double rounded = std::round(cells);
    if (rounded < 1.0 || std::abs(cells - rounded) > 1e-8 * std::max(1.0, cells)) {
        std::ostringstream os;
        os << "spacing h=" << h << " does not divide the side " << side << " evenly";
        throw ConfigError(os.str());
    }
    const auto n = static_cast<std::size_t>(rounded);
    return checked_mesh(Vec2{-half_side, -half_side}, Vec2{side, side}, Index2{n, n});
}

GridField::GridField(StructuredMesh m, std::vector<double> v) : mesh(m), values(std::move(v))
{
    if (values.size() != mesh.num_cells()) {
        throw ContractError("grid field length does not match the cell count");
    }
}

GridField GridField::sample(const StructuredMesh& m, const PointFunction& f)
{
    GridField out(m);
    for (std::size_t i = 0; i < m.num_cells(); ++i) {
        out.values[i] = f(m.center(i));
    }
    return out;
}

double GridField::max_abs() const noexcept
{
    double m = 0.0;
    for (const double v : values) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

void require_same_mesh(const GridField& a, const GridField& b)
{
    // geometry may differ in the last bits after a text round trip
    const auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max({1.0, std::abs(x), std::abs(y)}); };
    bool same = a.mesh.ncells() == b.mesh.ncells();
    for (int k = 0; k < 2 && same; ++k) {
        same = close(a.mesh.origin()[k], b.mesh.origin()[k]) && close(a.mesh.h(k), b.mesh.h(k));
    }
    if (!same || a.values.size() != b.values.size()) {
        throw ContractError("grid fields live on different meshes");
    }
}

GridField operator-(const GridField& a, const GridField& b)
{
    require_same_mesh(a, b);
    GridField out(a.mesh);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = a.values[i] - b.values[i];
    }
    return out;
}

void write_grid_field(std::ostream& os, const GridField& f)
{
    const auto& m = f.mesh;
    os << std::setprecision(17);
    os << m.n(0) << ' ' << m.n(1) << ' ' << m.origin()[0] << ' ' << m.origin()[1] << ' ' << m.h(0) << ' ' << m.h(1)
       << '\n';
    for (const double v : f.values) {
        os << v << '\n';
    }
}

GridField read_grid_field(std::istream& is)
{
    std::size_t nx = 0;
    std::size_t ny = 0;
    double x0 = 0.0;
    double y0 = 0.0;
    double hx = 0.0;
    double hy = 0.0;
    if (!(is >> nx >> ny >> x0 >> y0 >> hx >> hy)) {
        throw IoError("malformed grid field header");
    }
    const auto mesh = build_uniform_mesh(Vec2{x0, y0}, Vec2{hx * static_cast<double>(nx), hy * static_cast<double>(ny)},
                                         Index2{nx, ny});
    std::vector<double> values(mesh.num_cells());
    for (auto& v : values) {
        if (!(is >> v)) {
            throw IoError("grid field ended before all values were read");
        }
    }
    return GridField(mesh, std::move(values));
}

void save_grid_field(const std::string& path, const GridField& f)
{
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    write_grid_field(os, f);
    if (!os) {
        throw IoError("failed writing '" + path + "'");
    }
}

GridField load_grid_field(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open '" + path + "'");
    }
    return read_grid_field(is);
}

std::vector<Vec2> cell_diagonal_coefficients(const StructuredMesh& mesh, const EpsilonScaled& field, CellAverage rule)
{
    if (!field.base.is_diagonal()) {
        throw UnsupportedDiscretization("two-point flux assembly needs a diagonal coefficient field");
    }
    std::vector<Vec2> out(mesh.num_cells());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = cell_average(mesh, field, i, rule);
    }
    return out;
}

double edge_conductivity(double ci, double di, double cj, double dj) noexcept
{
    if (ci == cj) {
        return ci;
    }
    return ci * cj * (di + dj) / (ci * di + cj * dj);
}

double transmissibility(const StructuredMesh& mesh, const MatrixField& field, InteriorEdge edge, CellAverage rule)
{
    const auto a = mesh.cell(edge.from);
    const auto b = mesh.cell(edge.to);
    const bool x_neighbours = a[1] == b[1] && (a[0] + 1 == b[0] || b[0] + 1 == a[0]);
    const bool y_neighbours = a[0] == b[0] && (a[1] + 1 == b[1] || b[1] + 1 == a[1]);
    if (edge.from >= mesh.num_cells() || edge.to >= mesh.num_cells() || !(x_neighbours || y_neighbours)) {
        throw ContractError("transmissibility requested for cells that do not share an edge");
    }
    if (!field.is_diagonal()) {
        throw UnsupportedDiscretization("two-point flux needs a diagonal coefficient field");
    }
    const int axis = x_neighbours ? 0 : 1;
    const EpsilonScaled unscaled(field, 1.0);
    const double ci = cell_average(mesh, unscaled, edge.from, rule)[static_cast<std::size_t>(axis)];
    const double cj = cell_average(mesh, unscaled, edge.to, rule)[static_cast<std::size_t>(axis)];
    require_positive_coefficient(mesh, edge.from, ci);
    require_positive_coefficient(mesh, edge.to, cj);
    return interior_tau(mesh, axis, ci, cj);
}

double boundary_transmissibility(const StructuredMesh& mesh, const MatrixField& field, std::size_t cell, int axis,
                                 CellAverage rule)
{
    if (!field.is_diagonal()) {
        throw UnsupportedDiscretization("two-point flux needs a diagonal coefficient field");
    }
    const double ci = cell_average(mesh, EpsilonScaled(field, 1.0), cell, rule)[static_cast<std::size_t>(axis)];
    require_positive_coefficient(mesh, cell, ci);
    return boundary_tau(mesh, axis, ci);
}

SparseSystem assemble_tpfa(const StructuredMesh& mesh, const std::vector<Vec2>& cell_coeffs,
                           const PointFunction& dirichlet, const PointFunction& source, double reaction)
{
    return assemble_rows(mesh, cell_coeffs, dirichlet, source, reaction, 0.0);
}

SparseSystem assemble_tpfa(const StructuredMesh& mesh, const EpsilonScaled& field, const PointFunction& dirichlet,
                           const PointFunction& source, const AssemblyOptions& opts)
{
    return assemble_rows(mesh, cell_diagonal_coefficients(mesh, field, opts.cell_average), dirichlet, source,
                         opts.reaction, 0.0);
}

SparseSystem assemble_tpfa(const StructuredMesh& mesh, const MatrixField& field, const PointFunction& dirichlet,
                           const PointFunction& source, const AssemblyOptions& opts)
{
    return assemble_tpfa(mesh, EpsilonScaled(field, 1.0), dirichlet, source, opts);
}

SparseSystem assemble_tpfa_periodic(const StructuredMesh& mesh, const std::vector<Vec2>& coeffs,
                                    const PointFunction& source)
{
    const std::size_t nx = mesh.n(0);
    const std::size_t ny = mesh.n(1);
    const std::size_t n = mesh.num_cells();
    if (coeffs.size() != n) {
        throw ContractError("cell coefficient array does not match the mesh");
    }
    for (std::size_t i = 0; i < n; ++i) {
        require_positive_coefficient(mesh, i, coeffs[i][0]);
        require_positive_coefficient(mesh, i, coeffs[i][1]);
    }
    const double vol = mesh.cell_volume();
    linalg::RowAssembler rows(n, 5 * n);
    linalg::Vector rhs(n, 0.0);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const std::size_t i = mesh.index(ix, iy);
            double diag = 0.0;
            const std::array<std::pair<int, std::size_t>, 4> nbrs{{
                {1, mesh.index(ix, (iy + ny - 1) % ny)},
                {0, mesh.index((ix + nx - 1) % nx, iy)},
                {0, mesh.index((ix + 1) % nx, iy)},
                {1, mesh.index(ix, (iy + 1) % ny)},
            }};
            for (const auto& [axis, j] : nbrs) {
                if (j == i) {
                    continue;
                }
                const double ci = coeffs[i][static_cast<std::size_t>(axis)];
                const double cj = coeffs[j][static_cast<std::size_t>(axis)];
                const double tau = i < j ? interior_tau(mesh, axis, ci, cj) : interior_tau(mesh, axis, cj, ci);
                diag += tau;
                rows.add(j, -tau);
            }
            rows.add(i, diag);
            rows.finish_row();
            rhs[i] = source ? source(mesh.center(i)) * vol : 0.0;
        }
    }
    return SparseSystem{std::move(rows).build(), std::move(rhs)};
}

bool is_spd(const Mat2& m) noexcept
{
    const double scale = std::max({std::abs(m[0][0]), std::abs(m[1][1]), std::abs(m[0][1]), 1e-300});
    const bool symmetric = std::abs(m[0][1] - m[1][0]) <= 1e-12 * scale;
    return symmetric && m[0][0] > 0.0 && m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0;
}

SparseSystem assemble_const_full(const StructuredMesh& mesh, const Mat2& m, const PointFunction& dirichlet,
                                 const PointFunction& source)
{
    if (!is_spd(m)) {
        throw ConfigError("constant coefficient matrix must be symmetric positive definite");
    }
    const std::vector<Vec2> coeffs(mesh.num_cells(), Vec2{m[0][0], m[1][1]});
    return assemble_rows(mesh, coeffs, dirichlet, source, 0.0, m[0][1]);
}

DiscreteNorms discrete_norms(const GridField& u, const NormOptions& opts)
{
    const auto& mesh = u.mesh;
    if (u.values.size() != mesh.num_cells()) {
        throw ContractError("grid field length does not match the cell count");
    }
    const std::size_t nx = mesh.n(0);
    const std::size_t ny = mesh.n(1);
    const double vol = mesh.cell_volume();
    const double hx = mesh.h(0);
    const double hy = mesh.h(1);

    double l2 = 0.0;
    for (const double v : u.values) {
        l2 += v * v;
    }
    l2 *= vol;

    double semi = 0.0;
    if (opts.reference_gradient) {
        const auto& grad = *opts.reference_gradient;
        require_same_mesh(u, grad[0]);
        require_same_mesh(u, grad[1]);
        for (std::size_t i = 0; i < mesh.num_cells(); ++i) {
            semi += grad[0].values[i] * grad[0].values[i] + grad[1].values[i] * grad[1].values[i];
        }
        semi *= vol;
    } else {
        const double wx = mesh.edge_measure(0) / hx;
        const double wy = mesh.edge_measure(1) / hy;
        for (std::size_t iy = 0; iy < ny; ++iy) {
            for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
                const double d = u.at(ix + 1, iy) - u.at(ix, iy);
                semi += wx * d * d;
            }
        }
        for (std::size_t iy = 0; iy + 1 < ny; ++iy) {
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const double d = u.at(ix, iy + 1) - u.at(ix, iy);
                semi += wy * d * d;
            }
        }
        if (opts.boundary) {
            const double bx = mesh.edge_measure(0) / mesh.center_to_edge(0);
            const double by = mesh.edge_measure(1) / mesh.center_to_edge(1);
            const double x_lo = mesh.origin()[0];
            const double x_hi = x_lo + mesh.extent()[0];
            const double y_lo = mesh.origin()[1];
            const double y_hi = y_lo + mesh.extent()[1];
            for (std::size_t iy = 0; iy < ny; ++iy) {
                const double y = mesh.center(0, iy)[1];
                const double dl = u.at(0, iy) - opts.boundary(Vec2{x_lo, y});
                const double dr = u.at(nx - 1, iy) - opts.boundary(Vec2{x_hi, y});
                semi += bx * (dl * dl + dr * dr);
            }
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const double x = mesh.center(ix, 0)[0];
                const double db = u.at(ix, 0) - opts.boundary(Vec2{x, y_lo});
                const double dt = u.at(ix, ny - 1) - opts.boundary(Vec2{x, y_hi});
                semi += by * (db * db + dt * dt);
            }
        }
    }

    double second = 0.0;
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double c = u.at(ix, iy);
            if (ix > 0 && ix + 1 < nx) {
                const double uxx = (u.at(ix + 1, iy) - 2.0 * c + u.at(ix - 1, iy)) / (hx * hx);
                second += uxx * uxx;
            }
            if (iy > 0 && iy + 1 < ny) {
                const double uyy = (u.at(ix, iy + 1) - 2.0 * c + u.at(ix, iy - 1)) / (hy * hy);
                second += uyy * uyy;
            }
            if (ix > 0 && ix + 1 < nx && iy > 0 && iy + 1 < ny) {
                const double uxy = (u.at(ix + 1, iy + 1) - u.at(ix + 1, iy - 1) - u.at(ix - 1, iy + 1) +
                                    u.at(ix - 1, iy - 1)) /
                                   (4.0 * hx * hy);
                second += 2.0 * uxy * uxy;
            }
        }
    }
    second *= vol;

    DiscreteNorms out;
    out.l2 = std::sqrt(l2);
    out.h1_semi = std::sqrt(semi);
    out.h1 = std::sqrt(l2 + semi);
    out.h2 = std::sqrt(l2 + semi + second);
    return out;
}

}  // namespace homfv
