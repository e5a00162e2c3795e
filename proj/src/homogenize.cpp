#include "homfv/homogenize.hpp"

#include "homfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace homfv {

namespace {

// Neumaier-compensated running sum
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) noexcept
    {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    [[nodiscard]] double value() const noexcept { return sum + carry; }
};

std::array<std::array<GridField, 2>, 2> gradients_of(const CorrectorSet& set)
{
    return {set.entries[0].grad, set.entries[1].grad};
}

void require_increasing(const std::vector<double>& p, const char* what)
{
    if (p.empty()) {
        throw ConfigError(std::string(what) + " list is empty");
    }
    for (std::size_t k = 1; k < p.size(); ++k) {
        if (!(p[k] > p[k - 1])) {
            throw ConfigError(std::string(what) + " list must be strictly increasing");
        }
    }
}

}  // namespace

double EffectiveMatrix::asymmetry() const noexcept { return std::abs(m[0][1] - m[1][0]); }

EffectiveMatrix EffectiveMatrix::symmetric_part() const
{
    EffectiveMatrix out = *this;
    const double off = 0.5 * (m[0][1] + m[1][0]);
    out.m[0][1] = off;
    out.m[1][0] = off;
    out.symmetrized = true;
    return out;
}

void write_a_star_csv(std::ostream& os, const EffectiveMatrix& a)
{
    os << "R,T,h,m11,m12,m21,m22\n" << std::setprecision(17);
    if (a.provenance.R) {
        os << *a.provenance.R;
    } else {
        os << "cell";
    }
    os << ',';
    if (a.provenance.T) {
        os << *a.provenance.T;
    } else {
        os << "inf";
    }
    os << ',' << a.provenance.h << ',' << a.m[0][0] << ',' << a.m[0][1] << ',' << a.m[1][0] << ',' << a.m[1][1]
       << '\n';
}

double max_norm(const Mat2& a) noexcept
{
    return std::max({std::abs(a[0][0]), std::abs(a[0][1]), std::abs(a[1][0]), std::abs(a[1][1])});
}

Mat2 operator-(const Mat2& a, const Mat2& b) noexcept
{
    return Mat2{Vec2{a[0][0] - b[0][0], a[0][1] - b[0][1]}, Vec2{a[1][0] - b[1][0], a[1][1] - b[1][1]}};
}

Mat2 average_flux_matrix(const std::vector<Vec2>& coeffs, const std::array<std::array<GridField, 2>, 2>& grad_chi)
{
    const std::size_t n = coeffs.size();
    for (const auto& g : grad_chi) {
        if (g[0].values.size() != n || g[1].values.size() != n) {
            throw ContractError("corrector gradients do not match the coefficient array");
        }
    }
    Mat2 out{};
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CompensatedSum s;
            const double delta = i == j ? 1.0 : 0.0;
            const auto& d = grad_chi[j][i].values;  // d chi_j / d y_i
            for (std::size_t c = 0; c < n; ++c) {
                s.add(coeffs[c][i] * (delta + d[c]));
            }
            out[i][j] = s.value() / static_cast<double>(n);
        }
    }
    return out;
}

EffectiveMatrix effective_matrix(const MatrixField& field, const CorrectorSet& correctors,
                                 const SolveSettings& settings, std::string field_name)
{
    const auto coeffs = cell_diagonal_coefficients(correctors.mesh, EpsilonScaled(field, 1.0), settings.cell_average);
    EffectiveMatrix out;
    out.m = average_flux_matrix(coeffs, gradients_of(correctors));
    out.provenance = {correctors.params.R, correctors.params.T, correctors.params.h, std::move(field_name)};
    return out;
}

EffectiveMatrix effective_matrix_dirichlet(const MatrixField& field, double R, double h,
                                           const SolveSettings& settings, std::string field_name)
{
    const auto set = solve_correctors(field, CorrectorParams{R, std::nullopt, h}, settings);
    return effective_matrix(field, set, settings, std::move(field_name));
}

EffectiveMatrix effective_matrix_regularized(const MatrixField& field, double R, double T, double h,
                                             const SolveSettings& settings, std::string field_name)
{
    const auto set = solve_correctors(field, CorrectorParams{R, T, h}, settings);
    return effective_matrix(field, set, settings, std::move(field_name));
}

EffectiveMatrix periodic_cell_effective(const MatrixField& field, double h, const SolveSettings& settings,
                                        std::string field_name)
{
    if (!field.is_diagonal() || !field.is_unit_periodic()) {
        throw ContractError("periodic cell problem needs a diagonal field with unit period and no decaying terms");
    }
    if (!(h > 0.0)) {
        throw ConfigError("cell mesh spacing must be positive");
    }
    const double cells = 1.0 / h;
    const double rounded = std::round(cells);
    if (rounded < 3.0 || std::abs(cells - rounded) > 1e-8 * cells) {
        throw ConfigError("cell mesh spacing must divide the unit cell into at least 3 cells");
    }
    const auto n = static_cast<std::size_t>(rounded);
    const auto mesh = build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{1.0, 1.0}, Index2{n, n});
    const auto coeffs = cell_diagonal_coefficients(mesh, EpsilonScaled(field, 1.0), settings.cell_average);
    SparseSystem sys = assemble_tpfa_periodic(mesh, coeffs, {});

    // pin cell 0: identity row and column
    auto pinned = sys.matrix;
    {
        auto& v = pinned.mutable_values();
        const auto& rp = pinned.row_ptr();
        const auto& ci = pinned.col_idx();
        for (std::size_t r = 0; r < pinned.size(); ++r) {
            for (std::size_t p = rp[r]; p < rp[r + 1]; ++p) {
                if (r == 0 || ci[p] == 0) {
                    v[p] = (r == ci[p]) ? 1.0 : 0.0;
                }
            }
        }
    }
    const LinearSolver solver(std::move(pinned), settings);

    std::array<std::array<GridField, 2>, 2> grads;
    run_tasks(2, settings.threads, [&](std::size_t k) {
        const int j = static_cast<int>(k);
        auto rhs = corrector_source(mesh, coeffs, j, /*periodic=*/true);
        rhs[0] = 0.0;
        auto res = solver.solve(rhs, "periodic cell corrector");
        CompensatedSum mean;
        for (const double v : res.x) {
            mean.add(v);
        }
        const double shift = mean.value() / static_cast<double>(res.x.size());
        for (double& v : res.x) {
            v -= shift;
        }
        grads[k] = periodic_cell_gradient(GridField(mesh, std::move(res.x)));
    });

    EffectiveMatrix out;
    out.m = average_flux_matrix(coeffs, grads);
    out.provenance = {std::nullopt, std::nullopt, h, std::move(field_name)};
    return out;
}

double eta_delta(double t, double delta, double c1)
{
    if (!(t >= 1.0) || !(delta > 0.0 && delta < 1.0) || !(c1 > 0.0)) {
        throw ContractError("eta_delta needs t >= 1, 0 < delta < 1 and c1 > 0");
    }
    return 1.0 / t + t * std::exp(-0.5 * c1 * std::pow(t, 1.0 + delta)) + std::pow(t, 0.5 * (delta - 1.0));
}

std::optional<double> RateTable::loglog_slope() const
{
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    std::size_t count = 0;
    for (const auto& r : rows) {
        if (r.is_reference || !(r.err_max > 0.0) || !std::isfinite(r.param) || !(r.param > 0.0)) {
            continue;
        }
        const double x = std::log(r.param);
        const double y = std::log(r.err_max);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2) {
        return std::nullopt;
    }
    const double c = static_cast<double>(count);
    const double denom = c * sxx - sx * sx;
    if (denom == 0.0) {
        return std::nullopt;
    }
    return (c * sxy - sx * sy) / denom;
}

void write_rate_table(std::ostream& os, const RateTable& t)
{
    os << "param,m11,m12,m21,m22,err_max,ref\n";
    os << std::setprecision(17);
    for (const auto& r : t.rows) {
        os << r.param << ',' << r.value[0][0] << ',' << r.value[0][1] << ',' << r.value[1][0] << ','
           << r.value[1][1] << ',' << r.err_max << ',' << (r.is_reference ? 1 : 0) << '\n';
    }
}

RateTable read_rate_table(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != "param,m11,m12,m21,m22,err_max,ref") {
        throw IoError("rate table header mismatch");
    }
    RateTable t;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                cells.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("rate table cell '" + cell + "' is not a number");
            }
        }
        if (cells.size() != 7) {
            throw IoError("rate table row has " + std::to_string(cells.size()) + " cells, expected 7");
        }
        RateRow r;
        r.param = cells[0];
        r.value = Mat2{Vec2{cells[1], cells[2]}, Vec2{cells[3], cells[4]}};
        r.err_max = cells[5];
        r.is_reference = cells[6] != 0.0;
        if (r.is_reference) {
            t.reference = r.value;
        }
        t.rows.push_back(r);
    }
    return t;
}

RateTable truncation_study(const MatrixField& field, std::vector<double> R_list, double h, bool use_T_equals_R,
                           const SolveSettings& settings)
{
    require_increasing(R_list, "R");
    RateTable t;
    t.param_name = "R";
    std::vector<Mat2> values(R_list.size());
    // The solves for different R are independent; each is internally sequential.
    SolveSettings inner = settings;
    inner.threads = 1;
    run_tasks(R_list.size(), settings.threads, [&](std::size_t k) {
        const double R = R_list[k];
        values[k] = use_T_equals_R ? effective_matrix_regularized(field, R, std::max(R, 1.0), h, inner).m
                                   : effective_matrix_dirichlet(field, R, h, inner).m;
    });

    const bool periodic = field.is_diagonal() && field.is_unit_periodic();
    if (periodic) {
        t.reference_kind = "periodic_cell";
        t.reference = periodic_cell_effective(field, h, settings).m;
    } else {
        t.reference_kind = "largest_R";
        t.reference = values.back();
    }
    for (std::size_t k = 0; k < R_list.size(); ++k) {
        RateRow r;
        r.param = R_list[k];
        r.value = values[k];
        r.err_max = max_norm(values[k] - t.reference);
        r.is_reference = !periodic && k + 1 == R_list.size();
        t.rows.push_back(r);
    }
    if (periodic) {
        t.rows.push_back(RateRow{std::numeric_limits<double>::infinity(), t.reference, 0.0, true});
    }
    return t;
}

RateTable regularization_study(const MatrixField& field, double R, double h, std::vector<double> T_list,
                               const SolveSettings& settings)
{
    require_increasing(T_list, "T");
    RateTable t;
    t.param_name = "T";
    t.reference_kind = "T_infinity";
    SolveSettings inner = settings;
    inner.threads = 1;
    std::vector<Mat2> values(T_list.size() + 1);
    run_tasks(values.size(), settings.threads, [&](std::size_t k) {
        values[k] = k == T_list.size() ? effective_matrix_dirichlet(field, R, h, inner).m
                                       : effective_matrix_regularized(field, R, T_list[k], h, inner).m;
    });
    t.reference = values.back();
    for (std::size_t k = 0; k < T_list.size(); ++k) {
        t.rows.push_back(RateRow{T_list[k], values[k], max_norm(values[k] - t.reference), false});
    }
    t.rows.push_back(RateRow{std::numeric_limits<double>::infinity(), t.reference, 0.0, true});
    return t;
}

}  // namespace homfv
