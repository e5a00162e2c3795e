#pragma once

// Uniform rectangular control-volume meshes, cell-centred fields and the two-point flux
// finite-volume assembly.

#include "homfv/coefficients.hpp"
#include "homfv/linalg.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace homfv {

using Index2 = std::array<std::size_t, 2>;
using PointFunction = std::function<double(Vec2)>;

/// Uniform axis-aligned grid. Cells are numbered with ix fastest: index = ix + nx * iy.
class StructuredMesh {
public:
    StructuredMesh() = default;

    [[nodiscard]] const Vec2& origin() const noexcept { return origin_; }
    [[nodiscard]] const Vec2& extent() const noexcept { return extent_; }
    [[nodiscard]] const Index2& ncells() const noexcept { return n_; }
    [[nodiscard]] std::size_t n(int axis) const noexcept { return n_[static_cast<std::size_t>(axis)]; }
    [[nodiscard]] double h(int axis) const noexcept { return h_[static_cast<std::size_t>(axis)]; }
    [[nodiscard]] std::size_t num_cells() const noexcept { return n_[0] * n_[1]; }
    [[nodiscard]] double cell_volume() const noexcept { return h_[0] * h_[1]; }

    [[nodiscard]] std::size_t index(std::size_t ix, std::size_t iy) const noexcept { return ix + n_[0] * iy; }
    [[nodiscard]] Index2 cell(std::size_t index) const noexcept { return {index % n_[0], index / n_[0]}; }
    [[nodiscard]] Vec2 center(std::size_t ix, std::size_t iy) const noexcept
    {
        return {origin_[0] + (static_cast<double>(ix) + 0.5) * h_[0],
                origin_[1] + (static_cast<double>(iy) + 0.5) * h_[1]};
    }
    [[nodiscard]] Vec2 center(std::size_t index) const noexcept
    {
        const auto c = cell(index);
        return center(c[0], c[1]);
    }

    /// Length of an edge whose normal is along `axis`.
    [[nodiscard]] double edge_measure(int axis) const noexcept { return h(1 - axis); }
    /// Distance from a cell centre to an edge whose normal is along `axis`.
    [[nodiscard]] double center_to_edge(int axis) const noexcept { return 0.5 * h(axis); }

    [[nodiscard]] std::size_t interior_edge_count() const noexcept
    {
        return (n_[0] - 1) * n_[1] + n_[0] * (n_[1] - 1);
    }
    [[nodiscard]] std::size_t boundary_edge_count() const noexcept { return 2 * (n_[0] + n_[1]); }

    friend bool operator==(const StructuredMesh&, const StructuredMesh&) = default;

private:
    friend StructuredMesh build_uniform_mesh(Vec2, Vec2, Index2);
    Vec2 origin_{0.0, 0.0};
    Vec2 extent_{1.0, 1.0};
    Index2 n_{1, 1};
    Vec2 h_{1.0, 1.0};
};

/// Throws ConfigError for a nonpositive extent or zero cells.
[[nodiscard]] StructuredMesh build_uniform_mesh(Vec2 origin, Vec2 extent, Index2 ncells);

/// Mesh of (-half_side, half_side)^2 with spacing `h`; `h` must divide the side evenly.
[[nodiscard]] StructuredMesh centered_square_mesh(double half_side, double h);

/// One value per cell of `mesh`, cell order as in StructuredMesh.
struct GridField {
    StructuredMesh mesh;
    std::vector<double> values;

    GridField() = default;
    explicit GridField(StructuredMesh m, double fill = 0.0) : mesh(m), values(m.num_cells(), fill) {}
    GridField(StructuredMesh m, std::vector<double> v);

    static GridField sample(const StructuredMesh& m, const PointFunction& f);

    [[nodiscard]] double at(std::size_t ix, std::size_t iy) const { return values[mesh.index(ix, iy)]; }
    [[nodiscard]] double max_abs() const noexcept;

    friend bool operator==(const GridField&, const GridField&) = default;
};

/// Throws ContractError unless both fields live on the same mesh (cell counts equal, origin and spacing
/// equal to 1e-12 relative).
void require_same_mesh(const GridField& a, const GridField& b);

[[nodiscard]] GridField operator-(const GridField& a, const GridField& b);

/// Header `nx ny x0 y0 hx hy`, then one value per line, 17 significant digits.
void write_grid_field(std::ostream& os, const GridField& f);
[[nodiscard]] GridField read_grid_field(std::istream& is);
void save_grid_field(const std::string& path, const GridField& f);
[[nodiscard]] GridField load_grid_field(const std::string& path);

struct SparseSystem {
    linalg::CsrMatrix matrix;
    linalg::Vector rhs;
};

/// How the cell value A_K is obtained from A.
enum class CellAverage {
    Midpoint,
    /// tensor 3x3 Gauss-Legendre average over the cell
    Gauss3,
};

/// (A_K e_1 . e_1, A_K e_2 . e_2) per cell.
[[nodiscard]] std::vector<Vec2> cell_diagonal_coefficients(const StructuredMesh& mesh, const EpsilonScaled& field,
                                                           CellAverage rule = CellAverage::Midpoint);

/// Harmonic edge conductivity C_i C_j (d_i + d_j) / (C_i d_i + C_j d_j). Equal inputs return C_i exactly.
[[nodiscard]] double edge_conductivity(double ci, double di, double cj, double dj) noexcept;

/// An interior edge between cells `from` and `to`, which must be axis neighbours.
struct InteriorEdge {
    std::size_t from = 0;
    std::size_t to = 0;
};

/// meas(sigma) C_i C_j / (C_i d_i + C_j d_j) with C = |A_K n|. Throws AssemblyError when either C <= 0
/// and ContractError when the cells are not neighbours.
[[nodiscard]] double transmissibility(const StructuredMesh& mesh, const MatrixField& field, InteriorEdge edge,
                                      CellAverage rule = CellAverage::Midpoint);

/// meas(sigma) C_i / d_i for an edge of `cell` on the domain boundary with normal along `axis`.
[[nodiscard]] double boundary_transmissibility(const StructuredMesh& mesh, const MatrixField& field, std::size_t cell,
                                               int axis, CellAverage rule = CellAverage::Midpoint);

struct AssemblyOptions {
    CellAverage cell_average = CellAverage::Midpoint;
    /// Zero-order coefficient c; adds c * vol(K) to every diagonal entry.
    double reaction = 0.0;
};

/// Two-point flux (5-point) assembly of -div(A grad u) + c u = f with u = g on the boundary.
/// Dirichlet data enter through the boundary-edge transmissibilities. `dirichlet` and `source`
/// may be empty (zero). Throws UnsupportedDiscretization unless the field is diagonal.
[[nodiscard]] SparseSystem assemble_tpfa(const StructuredMesh& mesh, const EpsilonScaled& field,
                                         const PointFunction& dirichlet, const PointFunction& source,
                                         const AssemblyOptions& opts = {});
[[nodiscard]] SparseSystem assemble_tpfa(const StructuredMesh& mesh, const MatrixField& field,
                                         const PointFunction& dirichlet, const PointFunction& source,
                                         const AssemblyOptions& opts = {});
/// Assembly from precomputed cell coefficients.
[[nodiscard]] SparseSystem assemble_tpfa(const StructuredMesh& mesh, const std::vector<Vec2>& cell_coeffs,
                                         const PointFunction& dirichlet, const PointFunction& source,
                                         double reaction = 0.0);

/// Two-point flux assembly with periodic wrap-around in both axes (no boundary edges). The matrix
/// is singular (constants in the kernel).
[[nodiscard]] SparseSystem assemble_tpfa_periodic(const StructuredMesh& mesh, const std::vector<Vec2>& cell_coeffs,
                                                  const PointFunction& source);

/// Constant symmetric positive definite m: the diagonal part through the two-point flux, the cross
/// term 2 m12 d^2u/dx1dx2 through the 4-corner centred difference (ghost corners take Dirichlet data
/// at the reflected centre). Identical to assemble_tpfa on diag(m11, m22) when m12 = 0.
/// Throws ConfigError when m is not SPD.
[[nodiscard]] SparseSystem assemble_const_full(const StructuredMesh& mesh, const Mat2& m,
                                               const PointFunction& dirichlet, const PointFunction& source);

[[nodiscard]] bool is_spd(const Mat2& m) noexcept;

struct DiscreteNorms {
    double l2 = 0.0;
    double h1_semi = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
};

struct NormOptions {
    /// When set, boundary edges add meas/d (u_i - g)^2 to the H1 seminorm.
    PointFunction boundary;
    /// Gradient components used in place of edge differences for the H1 seminorm.
    std::optional<std::array<GridField, 2>> reference_gradient;
};

/// l2^2 = sum vol u^2; |u|_1^2 = sum over interior edges meas/d_ij (u_j - u_i)^2; h1^2 = l2^2 + |u|_1^2;
/// h2^2 = h1^2 + sum vol (u_xx^2 + 2 u_xy^2 + u_yy^2) with second differences taken wherever the
/// centred stencil fits inside the mesh.
[[nodiscard]] DiscreteNorms discrete_norms(const GridField& u, const NormOptions& opts = {});

}  // namespace homfv
