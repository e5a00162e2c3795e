#pragma once

// Effective (homogenized) matrices from truncated, regularized and periodic cell correctors, and
// convergence studies over R and T.

#include "homfv/coefficients.hpp"
#include "homfv/corrector.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace homfv {

struct EffectiveMatrix {
    struct Provenance {
        /// Cube half-side; empty for the periodic cell problem.
        std::optional<double> R;
        std::optional<double> T;
        double h = 0.0;
        std::string field_name;
    };

    Mat2 m{};
    Provenance provenance;
    bool symmetrized = false;

    [[nodiscard]] double asymmetry() const noexcept;
    /// (m + m^T) / 2, flagged as symmetrized.
    [[nodiscard]] EffectiveMatrix symmetric_part() const;
};

/// CSV `R,T,h,m11,m12,m21,m22` with one row; R is `cell` for the periodic cell problem, T is `inf`
/// for the plain Dirichlet corrector.
void write_a_star_csv(std::ostream& os, const EffectiveMatrix& a);

[[nodiscard]] double max_norm(const Mat2& a) noexcept;
[[nodiscard]] Mat2 operator-(const Mat2& a, const Mat2& b) noexcept;

/// m_ij = (1/|Q|) sum_K vol(K) [A(c_K) (e_j + grad chi_j(c_K))]_i.
[[nodiscard]] Mat2 average_flux_matrix(const std::vector<Vec2>& cell_coeffs,
                                       const std::array<std::array<GridField, 2>, 2>& grad_chi);

[[nodiscard]] EffectiveMatrix effective_matrix(const MatrixField& field, const CorrectorSet& correctors,
                                               const SolveSettings& settings = {}, std::string field_name = {});

[[nodiscard]] EffectiveMatrix effective_matrix_dirichlet(const MatrixField& field, double R, double h,
                                                         const SolveSettings& settings = {},
                                                         std::string field_name = {});
[[nodiscard]] EffectiveMatrix effective_matrix_regularized(const MatrixField& field, double R, double T, double h,
                                                           const SolveSettings& settings = {},
                                                           std::string field_name = {});

/// Cell problem on Y = (0,1)^2 with periodic boundary conditions. The singular system is made SPD
/// by pinning cell 0, and the solution is shifted to zero mean afterwards.
/// Throws ContractError unless the field is unit-periodic.
[[nodiscard]] EffectiveMatrix periodic_cell_effective(const MatrixField& field, double h,
                                                      const SolveSettings& settings = {},
                                                      std::string field_name = {});

/// 1/t + t exp(-(c1/2) t^(1+delta)) + t^((delta-1)/2), for t >= 1, delta in (0,1), c1 > 0.
[[nodiscard]] double eta_delta(double t, double delta, double c1);

struct RateRow {
    double param = 0.0;
    Mat2 value{};
    double err_max = 0.0;
    bool is_reference = false;
};

/// Rows ordered by strictly increasing parameter. The reference either is one of the computed rows
/// (flagged) or is appended as a flagged row with param = +inf.
struct RateTable {
    std::string param_name;
    std::string reference_kind;
    Mat2 reference{};
    std::vector<RateRow> rows;

    /// Least-squares slope of log(err_max) against log(param) over non-reference rows with err > 0.
    [[nodiscard]] std::optional<double> loglog_slope() const;
};

/// CSV with header `param,m11,m12,m21,m22,err_max,ref`, 17 significant digits.
void write_rate_table(std::ostream& os, const RateTable& t);
[[nodiscard]] RateTable read_rate_table(std::istream& is);

/// |A*_R - reference| for each R. Unit-periodic fields use periodic_cell_effective(h) as reference,
/// other fields the largest R. With `use_T_equals_R` the regularized A*_{R,R} is used.
[[nodiscard]] RateTable truncation_study(const MatrixField& field, std::vector<double> R_list, double h,
                                         bool use_T_equals_R = false, const SolveSettings& settings = {});

/// |A*_{R,T} - A*_{R,inf}| for each T on a fixed Q_R mesh.
[[nodiscard]] RateTable regularization_study(const MatrixField& field, double R, double h, std::vector<double> T_list,
                                             const SolveSettings& settings = {});

}  // namespace homfv
