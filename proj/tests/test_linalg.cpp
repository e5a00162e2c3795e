#include "homfv/errors.hpp"
#include "homfv/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace homfv;
using namespace homfv::linalg;

namespace {

using Dense = std::vector<std::vector<double>>;

Dense to_dense(const CsrMatrix& a)
{
    Dense d(a.size(), std::vector<double>(a.size(), 0.0));
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t p = a.row_ptr()[r]; p < a.row_ptr()[r + 1]; ++p) {
            d[r][a.col_idx()[p]] = a.values()[p];
        }
    }
    return d;
}

// Gaussian elimination with partial pivoting
Vector dense_solve(Dense a, Vector b)
{
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < n; ++r) {
            if (std::abs(a[r][k]) > std::abs(a[piv][k])) {
                piv = r;
            }
        }
        std::swap(a[k], a[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = a[r][k] / a[k][k];
            for (std::size_t c = k; c < n; ++c) {
                a[r][c] -= f * a[k][c];
            }
            b[r] -= f * b[k];
        }
    }
    Vector x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t c = k + 1; c < n; ++c) {
            s -= a[k][c] * x[c];
        }
        x[k] = s / a[k][k];
    }
    return x;
}

// 2-D five-point pattern with random weights; diagonally dominant, SPD when `symmetric`
CsrMatrix random_grid_matrix(std::size_t m, bool symmetric, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> w(0.5, 2.0);
    const std::size_t n = m * m;
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    std::vector<double> diag(n, 0.1);
    auto couple = [&](std::size_t i, std::size_t j) {
        const double a = w(rng);
        const double b = symmetric ? a : w(rng);
        rows.insert(rows.end(), {i, j});
        cols.insert(cols.end(), {j, i});
        vals.insert(vals.end(), {-a, -b});
        diag[i] += std::max(a, b);
        diag[j] += std::max(a, b);
    };
    for (std::size_t y = 0; y < m; ++y) {
        for (std::size_t x = 0; x < m; ++x) {
            const std::size_t i = x + m * y;
            if (x + 1 < m) {
                couple(i, i + 1);
            }
            if (y + 1 < m) {
                couple(i, i + m);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(i);
        cols.push_back(i);
        vals.push_back(diag[i]);
    }
    return CsrMatrix::from_triplets(n, rows, cols, vals);
}

Vector random_vector(std::size_t n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Vector v(n);
    for (auto& x : v) {
        x = g(rng);
    }
    return v;
}

double max_diff(const Vector& a, const Vector& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

}  // namespace

TEST(Csr, ValidatesInvariants)
{
    EXPECT_NO_THROW(CsrMatrix(2, {0, 1, 2}, {0, 1}, {1.0, 2.0}));
    EXPECT_THROW(CsrMatrix(2, {0, 1}, {0}, {1.0}), ContractError);
    EXPECT_THROW(CsrMatrix(2, {0, 2, 2}, {1, 0}, {1.0, 2.0}), ContractError);
    EXPECT_THROW(CsrMatrix(2, {0, 1, 2}, {0, 2}, {1.0, 2.0}), ContractError);
    EXPECT_THROW(CsrMatrix(2, {0, 1, 2}, {0, 1}, {1.0}), ContractError);
}

TEST(Csr, TripletsSumDuplicates)
{
    const auto a = CsrMatrix::from_triplets(3, {0, 2, 0, 1, 0}, {1, 2, 1, 0, 0}, {1.0, 5.0, 2.0, -1.0, 4.0});
    EXPECT_EQ(a.nnz(), 4u);
    EXPECT_DOUBLE_EQ(a.coeff(0, 1), 3.0);
    EXPECT_DOUBLE_EQ(a.coeff(0, 0), 4.0);
    EXPECT_DOUBLE_EQ(a.coeff(2, 1), 0.0);
    EXPECT_FALSE(a.find(2, 1).has_value());
    EXPECT_DOUBLE_EQ(a.asymmetry(), 4.0);
    const auto t = a.transpose();
    EXPECT_DOUBLE_EQ(t.coeff(1, 0), 3.0);
    EXPECT_EQ(t.transpose(), a);
}

TEST(Csr, RowAssemblerMatchesTriplets)
{
    RowAssembler ra(2);
    ra.add(1, 2.0);
    ra.add(0, 1.0);
    ra.add(1, 0.5);
    ra.finish_row();
    ra.add(1, 3.0);
    ra.finish_row();
    const auto a = std::move(ra).build();
    EXPECT_EQ(a, CsrMatrix::from_triplets(2, {0, 0, 1}, {0, 1, 1}, {1.0, 2.5, 3.0}));
}

TEST(Csr, MultiplyAgainstDense)
{
    std::mt19937_64 rng(1);
    const auto a = random_grid_matrix(6, false, rng);
    const auto x = random_vector(a.size(), rng);
    const auto d = to_dense(a);
    const auto y = a.multiply(x);
    for (std::size_t r = 0; r < a.size(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) {
            s += d[r][c] * x[c];
        }
        EXPECT_NEAR(y[r], s, 1e-13);
    }
    EXPECT_EQ(CsrMatrix::identity(4, 2.0).multiply(Vector{1, 2, 3, 4}), (Vector{2, 4, 6, 8}));
}

TEST(Csr, MatvecIsLinear)
{
    std::mt19937_64 rng(9);
    const auto a = random_grid_matrix(7, false, rng);
    const auto x = random_vector(a.size(), rng);
    const auto y = random_vector(a.size(), rng);
    Vector z(x.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = 1.5 * x[i] - 0.25 * y[i];
    }
    const auto az = a.multiply(z);
    const auto ax = a.multiply(x);
    const auto ay = a.multiply(y);
    for (std::size_t i = 0; i < z.size(); ++i) {
        EXPECT_NEAR(az[i], 1.5 * ax[i] - 0.25 * ay[i], 1e-12);
    }
}

TEST(Ilu0, ExactOnTridiagonal)
{
    // no fill-in for a tridiagonal matrix: ILU(0) is the exact LU factorization
    const std::size_t n = 12;
    std::vector<std::size_t> r;
    std::vector<std::size_t> c;
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) {
        r.push_back(i);
        c.push_back(i);
        v.push_back(4.0 + 0.1 * static_cast<double>(i));
        if (i + 1 < n) {
            r.insert(r.end(), {i, i + 1});
            c.insert(c.end(), {i + 1, i});
            v.insert(v.end(), {-1.0, -1.5});
        }
    }
    const auto a = CsrMatrix::from_triplets(n, r, c, v);
    const Ilu0 ilu(a);
    const auto L = to_dense(ilu.lower());
    const auto U = to_dense(ilu.upper());
    const auto A = to_dense(a);
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_DOUBLE_EQ(L[i][i], 1.0);
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                s += L[i][k] * U[k][j];
            }
            EXPECT_NEAR(s, A[i][j], 1e-13);
        }
    }
    std::mt19937_64 rng(4);
    const auto b = random_vector(n, rng);
    Vector z(n);
    ilu.apply(b, z);
    EXPECT_LT(max_diff(z, dense_solve(A, b)), 1e-12);
}

TEST(Ilu0, ZeroPivotThrowsWithRow)
{
    const auto a = CsrMatrix::from_triplets(2, {0, 0, 1, 1}, {0, 1, 0, 1}, {1.0, 1.0, 1.0, 1.0});
    try {
        const Ilu0 ilu(a);
        FAIL() << "expected FactorizationError";
    } catch (const FactorizationError& e) {
        EXPECT_EQ(e.row(), 1u);
    }
}

TEST(Krylov, BicgstabMatchesDenseOracle)
{
    std::mt19937_64 rng(17);
    for (const bool symmetric : {true, false}) {
        const auto a = random_grid_matrix(9, symmetric, rng);
        const auto b = random_vector(a.size(), rng);
        const auto ref = dense_solve(to_dense(a), b);
        const Ilu0 ilu(a);
        const auto pre = bicgstab(a, b, &ilu, SolverOptions{1e-12, 0});
        const auto plain = bicgstab(a, b, nullptr, SolverOptions{1e-12, 0});
        EXPECT_TRUE(pre.report.converged);
        EXPECT_TRUE(plain.report.converged);
        EXPECT_LT(max_diff(pre.x, ref), 1e-9);
        EXPECT_LT(max_diff(plain.x, ref), 1e-9);
        EXPECT_LE(relative_residual(a, pre.x, b), 1e-12);
        EXPECT_LE(pre.report.iterations, plain.report.iterations);
    }
}

TEST(Krylov, CgMatchesDenseOracle)
{
    std::mt19937_64 rng(23);
    const auto a = random_grid_matrix(10, true, rng);
    const auto b = random_vector(a.size(), rng);
    const auto ref = dense_solve(to_dense(a), b);
    const Ilu0 ilu(a);
    for (const Ilu0* p : {static_cast<const Ilu0*>(nullptr), &ilu}) {
        const auto r = cg(a, b, SolverOptions{1e-12, 0}, p);
        EXPECT_TRUE(r.report.converged);
        EXPECT_LT(max_diff(r.x, ref), 1e-9);
    }
}

TEST(Krylov, ZeroRightHandSide)
{
    std::mt19937_64 rng(2);
    const auto a = random_grid_matrix(4, false, rng);
    const Vector b(a.size(), 0.0);
    const auto r = bicgstab(a, b, nullptr, SolverOptions{});
    EXPECT_TRUE(r.report.converged);
    EXPECT_EQ(r.report.iterations, 0u);
    for (const double v : r.x) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Krylov, InitialGuessAndIterationCap)
{
    std::mt19937_64 rng(5);
    const auto a = random_grid_matrix(12, false, rng);
    const auto b = random_vector(a.size(), rng);
    const auto exact = bicgstab(a, b, nullptr, SolverOptions{1e-13, 0});
    const auto warm = bicgstab(a, b, nullptr, SolverOptions{1e-10, 0}, exact.x);
    EXPECT_LE(warm.report.iterations, 1u);
    const auto capped = bicgstab(a, b, nullptr, SolverOptions{1e-14, 1});
    EXPECT_FALSE(capped.report.converged);
    EXPECT_GT(capped.report.final_relative_residual, 1e-14);
    EXPECT_EQ(default_maxit(10000), 2000u);
    EXPECT_EQ(default_maxit(4), 100u);
}

TEST(Krylov, IdentitySolvesImmediately)
{
    const auto a = CsrMatrix::identity(5);
    const Vector b{1, -2, 3, -4, 5};
    const auto r = bicgstab(a, b, nullptr, SolverOptions{});
    EXPECT_TRUE(r.report.converged);
    EXPECT_LT(max_diff(r.x, b), 1e-14);
}

TEST(VectorOps, DotNormResidual)
{
    const Vector x{3.0, 4.0};
    EXPECT_DOUBLE_EQ(dot(x, x), 25.0);
    EXPECT_DOUBLE_EQ(norm2(x), 5.0);
    const auto a = CsrMatrix::identity(2);
    EXPECT_DOUBLE_EQ(relative_residual(a, x, x), 0.0);
    EXPECT_DOUBLE_EQ(relative_residual(a, Vector{0.0, 0.0}, x), 1.0);
}

TEST(MatrixMarket, Format)
{
    const auto a = CsrMatrix::from_triplets(2, {0, 1}, {1, 0}, {2.5, -1.0});
    std::ostringstream os;
    write_matrix_market(os, a);
    const std::string s = os.str();
    EXPECT_EQ(s.rfind("%%MatrixMarket matrix coordinate real general", 0), 0u);
    EXPECT_NE(s.find("2 2 2"), std::string::npos);
    EXPECT_NE(s.find("1 2 2.5"), std::string::npos);
    EXPECT_NE(s.find("2 1 -1"), std::string::npos);
}
