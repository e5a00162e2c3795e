#include "homfv/errors.hpp"
#include "homfv/mesh.hpp"
#include "homfv/solve.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace homfv;

namespace {

constexpr double kPi = std::numbers::pi;

StructuredMesh unit_mesh(std::size_t n) { return build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{1.0, 1.0}, Index2{n, n}); }

MatrixField random_diagonal_field(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> amp(-0.45, 0.45);
    std::uniform_real_distribution<double> freq(-12.0, 12.0);
    std::uniform_real_distribution<double> base(1.0, 5.0);
    auto spec = [&] {
        ScalarFieldSpec s;
        s.constant = base(rng);
        for (int k = 0; k < 2; ++k) {
            s.trig_terms.push_back(TrigTerm{amp(rng) * s.constant, k ? TrigKind::Sin : TrigKind::Cos,
                                            Vec2{freq(rng), freq(rng)}, amp(rng)});
        }
        return s;
    };
    return MatrixField::diagonal(spec(), spec());
}

linalg::Vector solve(const SparseSystem& sys)
{
    SolveSettings s;
    s.solver.tol = 1e-13;
    return solve_system(sys, s, "test").x;
}

double l2_error(const GridField& u, const PointFunction& exact)
{
    return discrete_norms(u - GridField::sample(u.mesh, exact)).l2;
}

}  // namespace

TEST(MeshConstruction, GeometryAndNumbering)
{
    const auto m = build_uniform_mesh(Vec2{-1.0, 2.0}, Vec2{4.0, 2.0}, Index2{4, 8});
    EXPECT_DOUBLE_EQ(m.h(0), 1.0);
    EXPECT_DOUBLE_EQ(m.h(1), 0.25);
    EXPECT_EQ(m.num_cells(), 32u);
    EXPECT_EQ(m.index(3, 1), 7u);
    EXPECT_EQ(m.cell(7), (Index2{3, 1}));
    EXPECT_EQ(m.center(0, 0), (Vec2{-0.5, 2.125}));
    EXPECT_DOUBLE_EQ(m.edge_measure(0), 0.25);
    EXPECT_DOUBLE_EQ(m.edge_measure(1), 1.0);
    EXPECT_DOUBLE_EQ(m.center_to_edge(1), 0.125);
}

TEST(MeshConstruction, RejectsDegenerateInput)
{
    EXPECT_THROW((void)build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{0.0, 1.0}, Index2{2, 2}), ConfigError);
    EXPECT_THROW((void)build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{1.0, -1.0}, Index2{2, 2}), ConfigError);
    EXPECT_THROW((void)build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{1.0, 1.0}, Index2{0, 2}), ConfigError);
    EXPECT_THROW((void)centered_square_mesh(1.0, 0.3), ConfigError);
    const auto q = centered_square_mesh(6.0, 0.02);
    EXPECT_EQ(q.n(0), 600u);
    EXPECT_DOUBLE_EQ(q.origin()[0], -6.0);
}

TEST(MeshConstruction, EdgeCountsMatchEnumeration)
{
    for (const auto n : {Index2{1, 1}, Index2{2, 3}, Index2{7, 4}, Index2{10, 10}}) {
        const auto m = build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{1.0, 1.0}, n);
        std::set<std::pair<std::size_t, std::size_t>> interior;
        std::size_t boundary = 0;
        for (std::size_t iy = 0; iy < n[1]; ++iy) {
            for (std::size_t ix = 0; ix < n[0]; ++ix) {
                const std::size_t i = m.index(ix, iy);
                const int dirs[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
                for (const auto& d : dirs) {
                    const long jx = static_cast<long>(ix) + d[0];
                    const long jy = static_cast<long>(iy) + d[1];
                    if (jx < 0 || jy < 0 || jx >= static_cast<long>(n[0]) || jy >= static_cast<long>(n[1])) {
                        ++boundary;
                    } else {
                        const std::size_t j = m.index(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy));
                        interior.insert({std::min(i, j), std::max(i, j)});
                    }
                }
            }
        }
        EXPECT_EQ(m.interior_edge_count(), interior.size());
        EXPECT_EQ(m.boundary_edge_count(), boundary);
    }
}

TEST(Transmissibility, HarmonicFormulaValues)
{
    const auto m = build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{2.0, 1.0}, Index2{2, 1});
    // 2 - sin(pi x): C = 1 in the left cell, 3 in the right cell
    ScalarFieldSpec s;
    s.constant = 2.0;
    s.trig_terms = {TrigTerm{-1.0, TrigKind::Sin, Vec2{kPi, 0.0}, 0.0}};
    const auto f = MatrixField::diagonal(s, ScalarFieldSpec{1.0, {}, {}});
    EXPECT_NEAR(transmissibility(m, f, InteriorEdge{0, 1}), 1.5, 1e-14);
    EXPECT_NEAR(transmissibility(m, f, InteriorEdge{1, 0}), 1.5, 1e-14);
    EXPECT_DOUBLE_EQ(transmissibility(m, MatrixField::constant_diagonal(2.0, 2.0), InteriorEdge{0, 1}), 2.0);
    EXPECT_NEAR(boundary_transmissibility(m, f, 0, 0), 2.0, 1e-14);
    EXPECT_THROW((void)transmissibility(unit_mesh(3), f, InteriorEdge{0, 4}), ContractError);
    EXPECT_THROW((void)transmissibility(m, MatrixField::constant_full(Mat2{Vec2{1, 0}, Vec2{0, 1}}), InteriorEdge{0, 1}),
                 UnsupportedDiscretization);
}

TEST(Transmissibility, NonPositiveCoefficientIsAssemblyError)
{
    const auto f = MatrixField::constant_diagonal(0.0, 1.0);
    EXPECT_THROW((void)assemble_tpfa(unit_mesh(2), f, {}, {}), AssemblyError);
}

TEST(EdgeConductivity, EqualInputsExact)
{
    for (const double c : {0.1, 1.0 / 3.0, 2.7182818284590451, 1e7}) {
        EXPECT_EQ(edge_conductivity(c, 0.01, c, 0.01), c);
    }
    EXPECT_DOUBLE_EQ(edge_conductivity(1.0, 0.5, 3.0, 0.5), 1.5);
}

TEST(Assembly, SingleCellUnitSquare)
{
    const auto sys = assemble_tpfa(unit_mesh(1), MatrixField::constant_diagonal(1.0, 1.0), {},
                                   [](Vec2) { return 1.0; });
    ASSERT_EQ(sys.matrix.size(), 1u);
    EXPECT_DOUBLE_EQ(sys.matrix.coeff(0, 0), 8.0);
    EXPECT_DOUBLE_EQ(sys.rhs[0], 1.0);
    EXPECT_DOUBLE_EQ(solve(sys)[0], 0.125);
}

TEST(Assembly, FluxAntisymmetryIsExact)
{
    std::mt19937_64 rng(42);
    for (int k = 0; k < 20; ++k) {
        const auto m = build_uniform_mesh(Vec2{-1.0, -0.5}, Vec2{2.0, 1.5}, Index2{13, 9});
        const auto sys = assemble_tpfa(m, random_diagonal_field(rng), {}, {});
        EXPECT_EQ(sys.matrix.asymmetry(), 0.0);
        EXPECT_EQ(sys.matrix, sys.matrix.transpose());
    }
}

TEST(Assembly, InteriorRowsConserve)
{
    std::mt19937_64 rng(5);
    const auto m = unit_mesh(9);
    const auto sys = assemble_tpfa(m, random_diagonal_field(rng), {}, {});
    for (std::size_t iy = 1; iy + 1 < 9; ++iy) {
        for (std::size_t ix = 1; ix + 1 < 9; ++ix) {
            const std::size_t r = m.index(ix, iy);
            double s = 0.0;
            for (std::size_t p = sys.matrix.row_ptr()[r]; p < sys.matrix.row_ptr()[r + 1]; ++p) {
                s += sys.matrix.values()[p];
            }
            EXPECT_NEAR(s, 0.0, 1e-12);
        }
    }
}

TEST(Assembly, MMatrixStructure)
{
    std::mt19937_64 rng(9);
    const auto sys = assemble_tpfa(unit_mesh(8), random_diagonal_field(rng), {}, {});
    const auto& a = sys.matrix;
    for (std::size_t r = 0; r < a.size(); ++r) {
        double off = 0.0;
        for (std::size_t p = a.row_ptr()[r]; p < a.row_ptr()[r + 1]; ++p) {
            if (a.col_idx()[p] == r) {
                EXPECT_GT(a.values()[p], 0.0);
            } else {
                EXPECT_LT(a.values()[p], 0.0);
                off += a.values()[p];
            }
        }
        EXPECT_GE(a.coeff(r, r) + off, -1e-12);
    }
}

TEST(Assembly, DiscreteMaximumPrinciple)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pos(0.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        const auto field = random_diagonal_field(rng);
        const double c = pos(rng);
        const auto sys = assemble_tpfa(unit_mesh(12), field, {}, [c](Vec2 x) { return c + x[0] * x[1]; });
        for (const double v : solve(sys)) {
            ASSERT_GE(v, 0.0);
        }
    }
}

TEST(Assembly, LinearFunctionsReproducedWithConstantCoefficients)
{
    const auto m = build_uniform_mesh(Vec2{-1.0, 0.0}, Vec2{3.0, 2.0}, Index2{12, 8});
    const PointFunction g = [](Vec2 x) { return 0.5 + 2.0 * x[0] - 1.25 * x[1]; };
    const auto sys = assemble_tpfa(m, MatrixField::constant_diagonal(2.0, 0.5), g, {});
    const GridField u(m, solve(sys));
    EXPECT_LT(l2_error(u, g), 1e-9);
}

TEST(Assembly, ManufacturedSolutionSecondOrder)
{
    const PointFunction exact = [](Vec2 x) { return std::sin(kPi * x[0]) * std::sin(kPi * x[1]); };
    const PointFunction f = [](Vec2 x) { return 2 * kPi * kPi * std::sin(kPi * x[0]) * std::sin(kPi * x[1]); };
    double prev = 0.0;
    for (const std::size_t n : {16u, 32u, 64u}) {
        const auto m = unit_mesh(n);
        const GridField u(m, solve(assemble_tpfa(m, MatrixField::constant_diagonal(1.0, 1.0), {}, f)));
        const double err = l2_error(u, exact);
        if (prev > 0.0) {
            EXPECT_NEAR(prev / err, 4.0, 0.3);
        }
        prev = err;
    }
}

TEST(Assembly, ReactionAddsVolumeToDiagonal)
{
    const auto m = unit_mesh(4);
    const auto a = assemble_tpfa(m, MatrixField::constant_diagonal(1.0, 1.0), {}, {});
    const auto b = assemble_tpfa(m, MatrixField::constant_diagonal(1.0, 1.0), {}, {}, AssemblyOptions{{}, 0.25});
    for (std::size_t r = 0; r < m.num_cells(); ++r) {
        EXPECT_DOUBLE_EQ(b.matrix.coeff(r, r) - a.matrix.coeff(r, r), 0.25 * m.cell_volume());
    }
}

TEST(ConstFull, DiagonalCaseIdenticalToTpfa)
{
    const auto m = build_uniform_mesh(Vec2{-1.0, -1.0}, Vec2{2.0, 2.0}, Index2{10, 10});
    const PointFunction f = [](Vec2 x) { return 1.0 + x[0]; };
    const auto a = assemble_const_full(m, Mat2{Vec2{3.0, 0.0}, Vec2{0.0, 2.0}}, {}, f);
    const auto b = assemble_tpfa(m, MatrixField::constant_diagonal(3.0, 2.0), {}, f);
    EXPECT_EQ(a.matrix, b.matrix);
    EXPECT_EQ(a.rhs, b.rhs);
}

TEST(ConstFull, RejectsNonSpd)
{
    const auto m = unit_mesh(4);
    EXPECT_THROW((void)assemble_const_full(m, Mat2{Vec2{1.0, 2.0}, Vec2{2.0, 1.0}}, {}, {}), ConfigError);
    EXPECT_THROW((void)assemble_const_full(m, Mat2{Vec2{1.0, 0.3}, Vec2{0.0, 1.0}}, {}, {}), ConfigError);
    EXPECT_TRUE(is_spd(Mat2{Vec2{2.0, 0.5}, Vec2{0.5, 1.0}}));
}

TEST(ConstFull, CrossTermManufacturedSolution)
{
    // -div(M grad u) = (m11 + m22) pi^2 sin sin - 2 m12 pi^2 cos cos for u = sin(pi x) sin(pi y)
    const Mat2 M{Vec2{2.0, 0.6}, Vec2{0.6, 1.0}};
    const PointFunction exact = [](Vec2 x) { return std::sin(kPi * x[0]) * std::sin(kPi * x[1]); };
    const PointFunction f = [&](Vec2 x) {
        return (M[0][0] + M[1][1]) * kPi * kPi * std::sin(kPi * x[0]) * std::sin(kPi * x[1]) -
               2 * M[0][1] * kPi * kPi * std::cos(kPi * x[0]) * std::cos(kPi * x[1]);
    };
    std::vector<double> errs;
    for (const std::size_t n : {16u, 32u, 64u}) {
        const auto m = unit_mesh(n);
        const GridField u(m, solve(assemble_const_full(m, M, exact, f)));
        errs.push_back(l2_error(u, exact));
    }
    EXPECT_LT(errs[2], 1e-3);
    EXPECT_GT(errs[0] / errs[1], 3.0);
    EXPECT_GT(errs[1] / errs[2], 3.0);
}

TEST(DiscreteNorms, ConstantAndLinear)
{
    const auto m = unit_mesh(10);
    const GridField one(m, 1.0);
    const auto n1 = discrete_norms(one);
    EXPECT_NEAR(n1.l2, 1.0, 1e-14);
    EXPECT_EQ(n1.h1_semi, 0.0);
    EXPECT_NEAR(n1.h2, 1.0, 1e-14);

    const auto lin = GridField::sample(m, [](Vec2 x) { return 3.0 * x[0]; });
    const auto n2 = discrete_norms(lin);
    // interior x-edges only: 9 * 10 edges, each meas/d (3h)^2 = 9 h^2
    EXPECT_NEAR(n2.h1_semi * n2.h1_semi, 90 * 9 * 0.01, 1e-12);
    EXPECT_NEAR(n2.h2 * n2.h2, n2.h1 * n2.h1, 1e-12);
}

TEST(DiscreteNorms, QuadraticSecondDifferences)
{
    const auto m = unit_mesh(20);
    const auto q = GridField::sample(m, [](Vec2 x) { return x[0] * x[0] + x[0] * x[1]; });
    const auto n = discrete_norms(q);
    // u_xx = 2, u_xy = 1, u_yy = 0 wherever the centred stencil fits
    const double hess = n.h2 * n.h2 - n.h1 * n.h1;
    EXPECT_GT(hess, 0.0);
    EXPECT_LE(hess, (4.0 + 2.0) * 1.0 + 1e-12);
    EXPECT_GT(hess, 0.7 * 6.0);
}

TEST(DiscreteNorms, BoundaryDataAndReferenceGradient)
{
    const auto m = unit_mesh(4);
    const GridField one(m, 1.0);
    NormOptions opts;
    opts.boundary = [](Vec2) { return 0.0; };
    // 16 boundary edges, meas/d = 2, jump 1
    EXPECT_NEAR(discrete_norms(one, opts).h1_semi, std::sqrt(32.0), 1e-12);
    NormOptions ref;
    ref.reference_gradient = std::array<GridField, 2>{GridField(m, 3.0), GridField(m, 4.0)};
    EXPECT_NEAR(discrete_norms(one, ref).h1_semi, 5.0, 1e-12);
}

TEST(GridFieldIo, RoundTripAndErrors)
{
    const auto m = build_uniform_mesh(Vec2{-0.3, 0.1}, Vec2{0.7, 0.9}, Index2{7, 3});
    const auto u = GridField::sample(m, [](Vec2 x) { return std::exp(x[0]) / 3.0 + x[1]; });
    std::stringstream ss;
    write_grid_field(ss, u);
    const auto v = read_grid_field(ss);
    EXPECT_EQ(v.values, u.values);
    EXPECT_NO_THROW(require_same_mesh(u, v));
    std::stringstream bad("3 3 0 0 0.1");
    EXPECT_THROW((void)read_grid_field(bad), IoError);
    EXPECT_THROW((void)load_grid_field("/nonexistent/dir/x.grid"), IoError);
    EXPECT_THROW(require_same_mesh(u, GridField(unit_mesh(3))), ContractError);
}
