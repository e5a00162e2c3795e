#pragma once

// Truncated (Dirichlet) and regularized corrector problems on Q_R = (-R, R)^2:
//   -div(A (e_j + grad chi)) + T^-2 chi = 0 in Q_R,  chi = 0 on the boundary.

#include "homfv/coefficients.hpp"
#include "homfv/linalg.hpp"
#include "homfv/mesh.hpp"
#include "homfv/solve.hpp"

#include <array>
#include <optional>

namespace homfv {

struct CorrectorParams {
    double R = 1.0;
    /// Regularization length; empty for the plain Dirichlet corrector.
    std::optional<double> T;
    double h = 0.1;
};

struct CorrectorEntry {
    int direction = 0;
    GridField chi;
    /// d chi / d y1, d chi / d y2
    std::array<GridField, 2> grad;
    linalg::SolveReport report;
};

struct CorrectorSet {
    StructuredMesh mesh;
    CorrectorParams params;
    std::array<CorrectorEntry, 2> entries;

    /// chi_j at y. With `periodic_wrap`, points outside Q_R are shifted by an integer vector into
    /// [-1/2, 1/2)^2 (only meaningful for unit-periodic fields).
    [[nodiscard]] double chi(int j, Vec2 y, bool periodic_wrap = false) const;
    [[nodiscard]] Vec2 grad_chi(int j, Vec2 y, bool periodic_wrap = false) const;
};

/// Cell-integrated divergence source div(A e_j): the flux of the constant vector e_j through the
/// two edges normal to e_j, with the harmonic edge conductivity used by the transmissibilities.
/// Vanishes identically for constant A.
[[nodiscard]] linalg::Vector corrector_source(const StructuredMesh& mesh, const std::vector<Vec2>& cell_coeffs,
                                              int j, bool periodic = false);

[[nodiscard]] CorrectorEntry solve_dirichlet_corrector(const MatrixField& field, double R, double h, int j,
                                                       const SolveSettings& settings = {});
[[nodiscard]] CorrectorEntry solve_regularized_corrector(const MatrixField& field, double R, double T, double h, int j,
                                                         const SolveSettings& settings = {});

/// Both directions on a shared mesh, matrix and factorization.
[[nodiscard]] CorrectorSet solve_correctors(const MatrixField& field, const CorrectorParams& params,
                                            const SolveSettings& settings = {});

/// Centred differences inside, one-sided second-order differences in boundary cells (first order
/// when an axis has only two cells). Throws ContractError for fewer than 2 cells per axis.
[[nodiscard]] std::array<GridField, 2> cell_gradient(const GridField& u);

/// Centred differences with periodic wrap-around.
[[nodiscard]] std::array<GridField, 2> periodic_cell_gradient(const GridField& u);

/// Bilinear interpolation between cell centres; coordinates between the outermost centres and the
/// boundary are clamped. Throws DomainError more than one cell outside the mesh.
[[nodiscard]] double interpolate(const GridField& u, Vec2 point);

}  // namespace homfv
