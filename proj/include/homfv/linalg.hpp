#pragma once

// Compressed sparse row matrices, ILU(0) and Krylov solvers.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace homfv::linalg {

using Vector = std::vector<double>;

/// Square CSR matrix. Columns are sorted ascending within each row, without duplicates.
class CsrMatrix {
public:
    CsrMatrix() = default;
    /// Validates the CSR invariants; throws ContractError on violation.
    CsrMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> col_idx,
              std::vector<double> values);

    static CsrMatrix identity(std::size_t n, double scale = 1.0);
    /// Builds from (row, col, value) triplets; duplicate entries are summed in insertion order.
    static CsrMatrix from_triplets(std::size_t n, std::vector<std::size_t> rows, std::vector<std::size_t> cols,
                                   std::vector<double> values);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return values_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
    [[nodiscard]] const std::vector<std::size_t>& col_idx() const noexcept { return col_idx_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    /// Values in place; the sparsity pattern is fixed.
    [[nodiscard]] std::vector<double>& mutable_values() noexcept { return values_; }

    /// Entry (i, j), zero when outside the pattern.
    [[nodiscard]] double coeff(std::size_t i, std::size_t j) const noexcept;
    /// Position of (i, j) in values(), if stored.
    [[nodiscard]] std::optional<std::size_t> find(std::size_t i, std::size_t j) const noexcept;

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] Vector multiply(std::span<const double> x) const;

    [[nodiscard]] CsrMatrix transpose() const;

    /// Largest |A_ij - A_ji| over the union of both patterns.
    [[nodiscard]] double asymmetry() const;

    friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// Accumulates one row at a time in ascending row order; entries inside a row may arrive in any
/// order and repeated columns are summed.
class RowAssembler {
public:
    explicit RowAssembler(std::size_t n, std::size_t nnz_hint = 0);

    void add(std::size_t col, double value);
    /// Closes the current row and starts the next one.
    void finish_row();
    [[nodiscard]] CsrMatrix build() &&;

private:
    std::size_t n_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
    std::vector<std::pair<std::size_t, double>> pending_;
};

/// Incomplete LU factorization without fill. L is unit lower triangular, both factors live on the
/// sparsity pattern of the input matrix.
class Ilu0 {
public:
    /// Throws FactorizationError when |pivot| < 1e-14 * max|diag(a)|.
    explicit Ilu0(const CsrMatrix& a);

    /// Solves (L U) z = r.
    void apply(std::span<const double> r, std::span<double> z) const;

    /// Combined L-strict + U storage on the pattern of the factored matrix.
    [[nodiscard]] const CsrMatrix& factors() const noexcept { return lu_; }
    [[nodiscard]] CsrMatrix lower() const;
    [[nodiscard]] CsrMatrix upper() const;

private:
    CsrMatrix lu_;
    std::vector<std::size_t> diag_pos_;
};

struct SolveReport {
    std::size_t iterations = 0;
    double final_relative_residual = 0.0;
    bool converged = false;
    std::size_t restarts = 0;
};

struct SolverOptions {
    double tol = 1e-10;
    /// 0 selects the default 20 * sqrt(n), with a floor of 100.
    std::size_t maxit = 0;
};

[[nodiscard]] std::size_t default_maxit(std::size_t n) noexcept;

struct SolveResult {
    Vector x;
    SolveReport report;
};

/// Right-preconditioned BiCGStab. Converged means ||b - A x||_2 <= tol ||b||_2 for the returned x.
/// A breakdown triggers one restart from the current iterate; a second breakdown returns a
/// non-converged report.
[[nodiscard]] SolveResult bicgstab(const CsrMatrix& a, std::span<const double> b, const Ilu0* precond,
                                   const SolverOptions& opts, std::span<const double> x0 = {});

/// Conjugate gradients, optionally preconditioned (ILU(0) of an SPD matrix is symmetric).
[[nodiscard]] SolveResult cg(const CsrMatrix& a, std::span<const double> b, const SolverOptions& opts,
                             const Ilu0* precond = nullptr, std::span<const double> x0 = {});

[[nodiscard]] double dot(std::span<const double> x, std::span<const double> y) noexcept;
[[nodiscard]] double norm2(std::span<const double> x) noexcept;
/// ||b - A x||_2 / ||b||_2 (or ||b - A x||_2 when b = 0).
[[nodiscard]] double relative_residual(const CsrMatrix& a, std::span<const double> x, std::span<const double> b);

/// MatrixMarket coordinate real general format, 1-based indices.
void write_matrix_market(std::ostream& os, const CsrMatrix& a);

}  // namespace homfv::linalg
