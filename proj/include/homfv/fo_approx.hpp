#pragma once

// First-order two-scale approximation v_eps = u0 + eps chi(x/eps) . grad u0 and the relative error
//   Err(eps) = ||u_eps - v_eps||_H1 / ||u0||_H2
// on a box Omega with zero Dirichlet data.

#include "homfv/coefficients.hpp"
#include "homfv/corrector.hpp"
#include "homfv/homogenize.hpp"
#include "homfv/mesh.hpp"

#include <optional>
#include <string>
#include <vector>

namespace homfv {

enum class GradientMode {
    /// differences of v_eps on the Omega mesh
    Differenced,
    /// grad v_eps assembled from interpolated grad chi; sensitivity check only
    InterpolatedCorrectorGradient,
};

struct ExperimentConfig {
    std::string field_name;
    MatrixField field;
    ScalarFieldSpec source;
    AxisBox omega{Vec2{-1.0, -1.0}, Vec2{1.0, 1.0}};
    /// eps = 1 / N for each entry
    std::vector<int> inv_eps{2, 3, 4, 5, 6};
    double h = 0.01;
    CorrectorParams corrector{6.0, std::nullopt, 0.02};
    SolveSettings settings;
    GradientMode gradient_mode = GradientMode::Differenced;
    /// Empty: nothing is written.
    std::string output_dir;
    /// Single-threaded, and meta.json carries no wall-clock timings, so repeated runs are byte-identical.
    bool deterministic = false;

    /// Throws ConfigError on invalid values, including R < N_max * max|x| on Omega for fields that
    /// are not unit-periodic.
    void validate() const;
    /// Omega mesh with spacing h.
    [[nodiscard]] StructuredMesh omega_mesh() const;
    /// Unit-periodic fields may evaluate chi outside Q_R by periodic wrapping.
    [[nodiscard]] bool periodic_wrap() const noexcept;
};

struct ErrRow {
    double eps = 0.0;
    double err = 0.0;
    double h1_diff = 0.0;
    double h2_u0 = 0.0;
};

struct SolveOutcome {
    GridField u;
    linalg::SolveReport report;
};

/// -div(A(x/eps) grad u) = f in Omega, u = 0 on the boundary.
[[nodiscard]] SolveOutcome solve_oscillating(const MatrixField& field, double eps, const ScalarFieldSpec& f,
                                             const StructuredMesh& omega, const SolveSettings& settings = {});

/// -div(A* grad u0) = f with the symmetric part of A*.
[[nodiscard]] SolveOutcome solve_homogenized(const EffectiveMatrix& a_star, const ScalarFieldSpec& f,
                                             const StructuredMesh& omega, const SolveSettings& settings = {});

/// v = u0 + eps sum_j chi_j(x/eps) d_j u0 at every cell centre, d_j u0 from cell_gradient.
[[nodiscard]] GridField first_order_approx(const GridField& u0, const std::array<GridField, 2>& u0_grad,
                                           const CorrectorSet& correctors, double eps, bool periodic_wrap = false);

/// Discrete gradient of v_eps from interpolated corrector gradients:
///   grad u0 + sum_j (grad_y chi_j)(x/eps) d_j u0 + eps sum_j chi_j(x/eps) grad d_j u0.
[[nodiscard]] std::array<GridField, 2> first_order_gradient(const GridField& u0, const CorrectorSet& correctors,
                                                            double eps, bool periodic_wrap = false);

/// Err = ||u_eps - v_eps||_H1 / ||u0||_H2 with the discrete norms of discrete_norms (interior edges).
[[nodiscard]] ErrRow err_epsilon(const GridField& u_eps, const GridField& v_eps, const GridField& u0, double eps = 0.0);
/// Variant whose H1 seminorm of the difference uses supplied gradients.
[[nodiscard]] ErrRow err_epsilon(const GridField& u_eps, const GridField& v_eps, const GridField& u0,
                                 const std::array<GridField, 2>& diff_gradient, double eps);

struct StudyResult {
    std::vector<ErrRow> rows;
    EffectiveMatrix a_star;
    std::array<linalg::SolveReport, 2> corrector_reports{};
    linalg::SolveReport homogenized_report;
    std::vector<linalg::SolveReport> oscillating_reports;
    /// stage name -> seconds
    std::vector<std::pair<std::string, double>> timings;
};

/// Fine solves per eps, correctors on Q_R, A*_R, homogenized solve, v_eps and Err(eps). When the
/// config names an output directory, writes study.csv, a_star.csv, u0.grid, u_eps_N<k>.grid,
/// v_eps_N<k>.grid and meta.json there. A failing stage rethrows with the stage name prefixed.
[[nodiscard]] StudyResult run_study(const ExperimentConfig& config);

}  // namespace homfv
