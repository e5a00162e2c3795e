#include "homfv/linalg.hpp"

#include "homfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

namespace homfv::linalg {

namespace {

constexpr std::size_t kNoPos = std::numeric_limits<std::size_t>::max();

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept
{
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += alpha * x[i];
    }
}

void check_dims(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0)
{
    if (b.size() != a.size()) {
        throw ContractError("right-hand side length does not match the matrix dimension");
    }
    if (!x0.empty() && x0.size() != a.size()) {
        throw ContractError("initial guess length does not match the matrix dimension");
    }
}

void apply_or_copy(const Ilu0* m, std::span<const double> r, std::span<double> z)
{
    if (m != nullptr) {
        m->apply(r, z);
    } else {
        std::copy(r.begin(), r.end(), z.begin());
    }
}

}  // namespace

CsrMatrix::CsrMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> col_idx,
                     std::vector<double> values)
    : n_(n), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values))
{
    if (row_ptr_.size() != n_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
        col_idx_.size() != values_.size()) {
        throw ContractError("inconsistent CSR array sizes");
    }
    for (std::size_t i = 0; i < n_; ++i) {
        if (row_ptr_[i] > row_ptr_[i + 1]) {
            throw ContractError("CSR row_ptr is not monotone at row " + std::to_string(i));
        }
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            if (col_idx_[p] >= n_) {
                throw ContractError("CSR column index out of range in row " + std::to_string(i));
            }
            if (p > row_ptr_[i] && col_idx_[p] <= col_idx_[p - 1]) {
                throw ContractError("CSR columns not strictly ascending in row " + std::to_string(i));
            }
        }
    }
}

CsrMatrix CsrMatrix::identity(std::size_t n, double scale)
{
    std::vector<std::size_t> rp(n + 1);
    std::iota(rp.begin(), rp.end(), std::size_t{0});
    std::vector<std::size_t> ci(n);
    std::iota(ci.begin(), ci.end(), std::size_t{0});
    return CsrMatrix(n, std::move(rp), std::move(ci), std::vector<double>(n, scale));
}

CsrMatrix CsrMatrix::from_triplets(std::size_t n, std::vector<std::size_t> rows, std::vector<std::size_t> cols,
                                   std::vector<double> values)
{
    if (rows.size() != cols.size() || rows.size() != values.size()) {
        throw ContractError("triplet arrays differ in length");
    }
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rows[a] != rows[b] ? rows[a] < rows[b] : cols[a] < cols[b];
    });
    RowAssembler asmb(n, rows.size());
    std::size_t k = 0;
    for (std::size_t r = 0; r < n; ++r) {
        while (k < order.size() && rows[order[k]] == r) {
            asmb.add(cols[order[k]], values[order[k]]);
            ++k;
        }
        asmb.finish_row();
    }
    if (k != order.size()) {
        throw ContractError("triplet row index out of range");
    }
    return std::move(asmb).build();
}

std::optional<std::size_t> CsrMatrix::find(std::size_t i, std::size_t j) const noexcept
{
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - col_idx_.begin());
}

double CsrMatrix::coeff(std::size_t i, std::size_t j) const noexcept
{
    const auto p = find(i, j);
    return p ? values_[*p] : 0.0;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
    if (x.size() != n_ || y.size() != n_) {
        throw ContractError("matvec dimension mismatch");
    }
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            s += values_[p] * x[col_idx_[p]];
        }
        y[i] = s;
    }
}

Vector CsrMatrix::multiply(std::span<const double> x) const
{
    Vector y(n_);
    multiply(x, y);
    return y;
}

CsrMatrix CsrMatrix::transpose() const
{
    std::vector<std::size_t> rp(n_ + 1, 0);
    for (const auto c : col_idx_) {
        ++rp[c + 1];
    }
    std::partial_sum(rp.begin(), rp.end(), rp.begin());
    std::vector<std::size_t> next(rp.begin(), rp.end() - 1);
    std::vector<std::size_t> ci(nnz());
    std::vector<double> v(nnz());
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            const std::size_t q = next[col_idx_[p]]++;
            ci[q] = i;
            v[q] = values_[p];
        }
    }
    return CsrMatrix(n_, std::move(rp), std::move(ci), std::move(v));
}

double CsrMatrix::asymmetry() const
{
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            worst = std::max(worst, std::abs(values_[p] - coeff(col_idx_[p], i)));
        }
    }
    return worst;
}

RowAssembler::RowAssembler(std::size_t n, std::size_t nnz_hint) : n_(n)
{
    row_ptr_.reserve(n + 1);
    row_ptr_.push_back(0);
    col_idx_.reserve(nnz_hint);
    values_.reserve(nnz_hint);
}

void RowAssembler::add(std::size_t col, double value)
{
    if (col >= n_) {
        throw ContractError("column index out of range during assembly");
    }
    pending_.emplace_back(col, value);
}

void RowAssembler::finish_row()
{
    if (row_ptr_.size() > n_) {
        throw ContractError("more rows assembled than the matrix dimension");
    }
    std::stable_sort(pending_.begin(), pending_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [c, v] : pending_) {
        if (!col_idx_.empty() && col_idx_.size() > row_ptr_.back() && col_idx_.back() == c) {
            values_.back() += v;
        } else {
            col_idx_.push_back(c);
            values_.push_back(v);
        }
    }
    pending_.clear();
    row_ptr_.push_back(col_idx_.size());
}

CsrMatrix RowAssembler::build() &&
{
    if (row_ptr_.size() != n_ + 1) {
        throw ContractError("assembled row count does not match the matrix dimension");
    }
    return CsrMatrix(n_, std::move(row_ptr_), std::move(col_idx_), std::move(values_));
}

// ---------------------------------------------------------------------------------------------
// ILU(0)

Ilu0::Ilu0(const CsrMatrix& a) : lu_(a), diag_pos_(a.size(), kNoPos)
{
    const std::size_t n = a.size();
    const auto& rp = lu_.row_ptr();
    const auto& ci = lu_.col_idx();
    auto& v = lu_.mutable_values();

    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = a.find(i, i);
        if (!p) {
            throw FactorizationError("ILU(0): missing diagonal entry in row " + std::to_string(i), i);
        }
        diag_pos_[i] = *p;
        max_diag = std::max(max_diag, std::abs(a.values()[*p]));
    }
    const double pivot_floor = 1e-14 * max_diag;

    std::vector<std::size_t> where(n, kNoPos);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
            where[ci[p]] = p;
        }
        for (std::size_t p = rp[i]; p < diag_pos_[i]; ++p) {
            const std::size_t k = ci[p];
            v[p] /= v[diag_pos_[k]];
            const double lik = v[p];
            for (std::size_t q = diag_pos_[k] + 1; q < rp[k + 1]; ++q) {
                const std::size_t w = where[ci[q]];
                if (w != kNoPos) {
                    v[w] -= lik * v[q];
                }
            }
        }
        for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
            where[ci[p]] = kNoPos;
        }
        if (!(std::abs(v[diag_pos_[i]]) >= pivot_floor) || v[diag_pos_[i]] == 0.0) {
            throw FactorizationError("ILU(0): zero pivot in row " + std::to_string(i), i);
        }
    }
}

void Ilu0::apply(std::span<const double> r, std::span<double> z) const
{
    const std::size_t n = lu_.size();
    const auto& rp = lu_.row_ptr();
    const auto& ci = lu_.col_idx();
    const auto& v = lu_.values();
    for (std::size_t i = 0; i < n; ++i) {
        double s = r[i];
        for (std::size_t p = rp[i]; p < diag_pos_[i]; ++p) {
            s -= v[p] * z[ci[p]];
        }
        z[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = z[i];
        for (std::size_t p = diag_pos_[i] + 1; p < rp[i + 1]; ++p) {
            s -= v[p] * z[ci[p]];
        }
        z[i] = s / v[diag_pos_[i]];
    }
}

CsrMatrix Ilu0::lower() const
{
    RowAssembler out(lu_.size(), lu_.nnz());
    for (std::size_t i = 0; i < lu_.size(); ++i) {
        for (std::size_t p = lu_.row_ptr()[i]; p < diag_pos_[i]; ++p) {
            out.add(lu_.col_idx()[p], lu_.values()[p]);
        }
        out.add(i, 1.0);
        out.finish_row();
    }
    return std::move(out).build();
}

CsrMatrix Ilu0::upper() const
{
    RowAssembler out(lu_.size(), lu_.nnz());
    for (std::size_t i = 0; i < lu_.size(); ++i) {
        for (std::size_t p = diag_pos_[i]; p < lu_.row_ptr()[i + 1]; ++p) {
            out.add(lu_.col_idx()[p], lu_.values()[p]);
        }
        out.finish_row();
    }
    return std::move(out).build();
}

// ---------------------------------------------------------------------------------------------
// Krylov solvers

double dot(std::span<const double> x, std::span<const double> y) noexcept
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * y[i];
    }
    return s;
}

double norm2(std::span<const double> x) noexcept { return std::sqrt(dot(x, x)); }

std::size_t default_maxit(std::size_t n) noexcept
{
    const auto m = static_cast<std::size_t>(std::ceil(20.0 * std::sqrt(static_cast<double>(n))));
    return std::max<std::size_t>(m, 100);
}

double relative_residual(const CsrMatrix& a, std::span<const double> x, std::span<const double> b)
{
    Vector r = a.multiply(x);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = b[i] - r[i];
    }
    const double nb = norm2(b);
    return nb > 0.0 ? norm2(r) / nb : norm2(r);
}

SolveResult bicgstab(const CsrMatrix& a, std::span<const double> b, const Ilu0* precond, const SolverOptions& opts,
                     std::span<const double> x0)
{
    check_dims(a, b, x0);
    if (!(opts.tol > 0.0)) {
        throw ContractError("solver tolerance must be positive");
    }
    const std::size_t n = a.size();
    SolveResult out;
    out.x.assign(n, 0.0);
    const double nb = norm2(b);
    if (nb == 0.0) {
        out.report.converged = true;
        return out;
    }
    if (!x0.empty()) {
        std::copy(x0.begin(), x0.end(), out.x.begin());
    }
    const std::size_t maxit = opts.maxit > 0 ? opts.maxit : default_maxit(n);
    const double target = opts.tol * nb;

    Vector r(n), rhat(n), p(n), v(n), s(n), t(n), phat(n), shat(n);
    auto& x = out.x;
    auto& rep = out.report;

    auto true_residual = [&]() {
        a.multiply(x, r);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = b[i] - r[i];
        }
        return norm2(r);
    };

    double rnorm = true_residual();
    constexpr std::size_t kMaxRefresh = 5;
    std::size_t refreshes = 0;
    while (rnorm > target && rep.iterations < maxit) {
        // (re)start the shadow space at the current residual
        std::copy(r.begin(), r.end(), rhat.begin());
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
        double rho = 1.0;
        double alpha = 1.0;
        double omega = 1.0;
        const double rhat_norm = norm2(rhat);
        bool breakdown = false;

        while (rep.iterations < maxit) {
            const double rho_new = dot(rhat, r);
            if (std::abs(rho_new) <= 1e-30 * rhat_norm * norm2(r) || rho_new == 0.0) {
                breakdown = true;
                break;
            }
            const double beta = (rho_new / rho) * (alpha / omega);
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            apply_or_copy(precond, p, phat);
            a.multiply(phat, v);
            const double rv = dot(rhat, v);
            if (rv == 0.0 || !std::isfinite(rv)) {
                breakdown = true;
                break;
            }
            alpha = rho_new / rv;
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = r[i] - alpha * v[i];
            }
            ++rep.iterations;
            if (norm2(s) <= target) {
                axpy(alpha, phat, x);
                rnorm = 0.0;  // verified below
                break;
            }
            apply_or_copy(precond, s, shat);
            a.multiply(shat, t);
            const double tt = dot(t, t);
            omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * phat[i] + omega * shat[i];
                r[i] = s[i] - omega * t[i];
            }
            rho = rho_new;
            rnorm = norm2(r);
            if (rnorm <= target) {
                break;
            }
            if (omega == 0.0 || !std::isfinite(omega)) {
                breakdown = true;
                break;
            }
        }
        const bool recursive_converged = rnorm <= target;
        rnorm = true_residual();
        if (breakdown) {
            if (rep.restarts >= 1) {
                break;
            }
            ++rep.restarts;
            continue;
        }
        if (recursive_converged && rnorm > target) {
            // recursive residual drifted from the true one
            if (++refreshes > kMaxRefresh) {
                break;
            }
            continue;
        }
    }
    rep.final_relative_residual = rnorm / nb;
    rep.converged = rnorm <= target;
    return out;
}

SolveResult cg(const CsrMatrix& a, std::span<const double> b, const SolverOptions& opts, const Ilu0* precond,
               std::span<const double> x0)
{
    check_dims(a, b, x0);
    if (!(opts.tol > 0.0)) {
        throw ContractError("solver tolerance must be positive");
    }
    const std::size_t n = a.size();
    SolveResult out;
    out.x.assign(n, 0.0);
    const double nb = norm2(b);
    if (nb == 0.0) {
        out.report.converged = true;
        return out;
    }
    if (!x0.empty()) {
        std::copy(x0.begin(), x0.end(), out.x.begin());
    }
    const std::size_t maxit = opts.maxit > 0 ? opts.maxit : default_maxit(n);
    const double target = opts.tol * nb;
    auto& x = out.x;
    auto& rep = out.report;

    Vector r(n), z(n), p(n), q(n);
    a.multiply(x, r);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = b[i] - r[i];
    }
    double rnorm = norm2(r);
    for (int pass = 0; pass < 3 && rnorm > target && rep.iterations < maxit; ++pass) {
        apply_or_copy(precond, r, z);
        std::copy(z.begin(), z.end(), p.begin());
        double rz = dot(r, z);
        while (rep.iterations < maxit) {
            a.multiply(p, q);
            const double pq = dot(p, q);
            if (!(pq > 0.0)) {
                break;  // not SPD along p
            }
            const double alpha = rz / pq;
            axpy(alpha, p, x);
            axpy(-alpha, q, r);
            ++rep.iterations;
            rnorm = norm2(r);
            if (rnorm <= target) {
                break;
            }
            apply_or_copy(precond, r, z);
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = z[i] + beta * p[i];
            }
        }
        a.multiply(x, r);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = b[i] - r[i];
        }
        rnorm = norm2(r);
    }
    rep.final_relative_residual = rnorm / nb;
    rep.converged = rnorm <= target;
    return out;
}

void write_matrix_market(std::ostream& os, const CsrMatrix& a)
{
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << a.size() << ' ' << a.size() << ' ' << a.nnz() << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) {
            os << (i + 1) << ' ' << (a.col_idx()[p] + 1) << ' ' << a.values()[p] << '\n';
        }
    }
}

}  // namespace homfv::linalg
