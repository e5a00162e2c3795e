#include "homfv/corrector.hpp"
#include "homfv/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace homfv;

namespace {

constexpr double kPi = std::numbers::pi;

SolveSettings tight()
{
    SolveSettings s;
    s.solver.tol = 1e-12;
    return s;
}

}  // namespace

TEST(Corrector, ConstantFieldHasZeroCorrector)
{
    const auto f = MatrixField::constant_diagonal(2.0, 5.0);
    const auto set = solve_correctors(f, CorrectorParams{2.0, std::nullopt, 0.125});
    for (const auto& e : set.entries) {
        EXPECT_EQ(e.chi.max_abs(), 0.0);
        EXPECT_TRUE(e.report.converged);
    }
    const auto reg = solve_correctors(f, CorrectorParams{2.0, 3.0, 0.125});
    EXPECT_LE(reg.entries[0].chi.max_abs(), 1e-13);
}

TEST(Corrector, SourceVanishesForConstantField)
{
    const auto mesh = centered_square_mesh(1.0, 0.25);
    const std::vector<Vec2> c(mesh.num_cells(), Vec2{3.0, 0.5});
    for (const int j : {0, 1}) {
        for (const bool periodic : {false, true}) {
            for (const double v : corrector_source(mesh, c, j, periodic)) {
                EXPECT_EQ(v, 0.0);
            }
        }
    }
    EXPECT_THROW((void)corrector_source(mesh, c, 2), ContractError);
    EXPECT_THROW((void)corrector_source(mesh, std::vector<Vec2>(3), 0), ContractError);
}

TEST(Corrector, SourceHasFluxDifferenceForm)
{
    // 4 x 1 mesh with coefficients 1, 2, 4, 8 along the x axis
    const auto mesh = build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{4.0, 1.0}, Index2{4, 1});
    const std::vector<Vec2> c{Vec2{1, 1}, Vec2{2, 1}, Vec2{4, 1}, Vec2{8, 1}};
    const auto s = corrector_source(mesh, c, 0);
    const auto k = [](double a, double b) { return 2 * a * b / (a + b); };
    EXPECT_NEAR(s[0], k(1, 2) - 1.0, 1e-14);
    EXPECT_NEAR(s[1], k(2, 4) - k(1, 2), 1e-14);
    EXPECT_NEAR(s[3], 8.0 - k(4, 8), 1e-14);
    for (const double v : corrector_source(mesh, c, 1)) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Corrector, ParameterValidation)
{
    const auto f = builtin(Builtin::LayeredCosine);
    EXPECT_THROW((void)solve_correctors(f, CorrectorParams{0.0, std::nullopt, 0.1}), ConfigError);
    EXPECT_THROW((void)solve_correctors(f, CorrectorParams{1.0, std::nullopt, -0.1}), ConfigError);
    EXPECT_THROW((void)solve_correctors(f, CorrectorParams{1.0, 0.5, 0.1}), ConfigError);
    EXPECT_THROW((void)solve_regularized_corrector(f, 1.0, 0.99, 0.1, 0), ConfigError);
    EXPECT_THROW((void)solve_dirichlet_corrector(f, 1.0, 0.1, 3), ContractError);
    EXPECT_THROW((void)solve_correctors(MatrixField::constant_full(Mat2{Vec2{2, 1}, Vec2{1, 2}}),
                                        CorrectorParams{1.0, std::nullopt, 0.25}),
                 UnsupportedDiscretization);
}

TEST(Corrector, SharedSolveMatchesSingleDirection)
{
    const auto f = builtin(Builtin::AsymptoticPeriodicPaper);
    const auto s = tight();
    const auto set = solve_correctors(f, CorrectorParams{1.5, std::nullopt, 0.0625}, s);
    for (const int j : {0, 1}) {
        const auto one = solve_dirichlet_corrector(f, 1.5, 0.0625, j, s);
        ASSERT_EQ(one.chi.mesh, set.mesh);
        double d = 0.0;
        for (std::size_t k = 0; k < one.chi.values.size(); ++k) {
            d = std::max(d, std::abs(one.chi.values[k] - set.entries[static_cast<std::size_t>(j)].chi.values[k]));
        }
        EXPECT_LT(d, 1e-9);
    }
    const auto reg = solve_correctors(f, CorrectorParams{1.5, 2.0, 0.0625}, s);
    const auto one = solve_regularized_corrector(f, 1.5, 2.0, 0.0625, 1, s);
    EXPECT_NEAR(one.chi.values[40], reg.entries[1].chi.values[40], 1e-9);
}

TEST(Corrector, LayeredFieldIsOneDimensional)
{
    // A = (2 + cos 2 pi y1) I: chi_2 vanishes and chi_1 depends on y1 only
    const auto f = builtin(Builtin::LayeredCosine);
    const auto set = solve_correctors(f, CorrectorParams{1.0, std::nullopt, 0.0625}, tight());
    EXPECT_EQ(set.entries[1].chi.max_abs(), 0.0);
    const auto& chi = set.entries[0].chi;
    EXPECT_GT(chi.max_abs(), 1e-3);
    const std::size_t n = chi.mesh.n(0);
    for (std::size_t ix = 0; ix < n; ++ix) {
        // symmetric in y2 about 0 and antisymmetric in y1
        EXPECT_NEAR(chi.at(ix, 3), chi.at(ix, n - 4), 1e-10);
        EXPECT_NEAR(chi.at(ix, n / 2), -chi.at(n - 1 - ix, n / 2), 1e-10);
    }
}

TEST(Corrector, RegularizedApproachesDirichletAsTGrows)
{
    const auto f = builtin(Builtin::AsymptoticPeriodicPaper);
    const auto plain = solve_dirichlet_corrector(f, 2.0, 0.0625, 0, tight());
    double prev = std::numeric_limits<double>::infinity();
    for (const double T : {1.0, 2.0, 4.0, 8.0}) {
        const auto r = solve_regularized_corrector(f, 2.0, T, 0.0625, 0, tight());
        const double d = (r.chi - plain.chi).max_abs();
        EXPECT_LT(d, prev) << "T = " << T;
        prev = d;
    }
}

TEST(Corrector, EnergyStaysBoundedInR)
{
    // cube average of |grad chi|^2 for R = 2, 4, 6 stays within 10x the R = 2 value
    for (const auto b : {Builtin::AsymptoticPeriodicPaper, Builtin::AsymptoticAlmostPeriodicPaper}) {
        double first = 0.0;
        for (const double R : {2.0, 4.0, 6.0}) {
            const auto set = solve_correctors(builtin(b), CorrectorParams{R, std::nullopt, 0.125});
            for (const auto& e : set.entries) {
                double s = 0.0;
                for (std::size_t k = 0; k < e.chi.values.size(); ++k) {
                    s += e.grad[0].values[k] * e.grad[0].values[k] + e.grad[1].values[k] * e.grad[1].values[k];
                }
                s /= static_cast<double>(e.chi.values.size());
                if (R == 2.0 && e.direction == 0) {
                    first = s;
                }
                EXPECT_GT(s, 0.0);
                EXPECT_LE(s, 10.0 * first);
            }
        }
    }
}

TEST(Corrector, OddInY1ForEvenField)
{
    // cosine-only variant of the periodic builtin is even in y
    ScalarFieldSpec a11;
    a11.constant = 4.0;
    a11.trig_terms = {TrigTerm{1.0, TrigKind::Cos, Vec2{2 * kPi, 0.0}, 0.0}, TrigTerm{1.0, TrigKind::Cos, Vec2{0.0, 2 * kPi}, 0.0}};
    ScalarFieldSpec a22 = a11;
    a22.constant = 3.0;
    const auto f = MatrixField::diagonal(a11, a22);
    const auto e = solve_dirichlet_corrector(f, 1.5, 0.125, 0, tight());
    const std::size_t n = e.chi.mesh.n(0);
    for (std::size_t iy = 0; iy < n; ++iy) {
        for (std::size_t ix = 0; ix < n; ++ix) {
            EXPECT_NEAR(e.chi.at(ix, iy), -e.chi.at(n - 1 - ix, iy), 1e-9);
        }
    }
}

TEST(CellGradient, ExactForQuadratics)
{
    const auto mesh = build_uniform_mesh(Vec2{-1.0, 0.5}, Vec2{2.0, 1.5}, Index2{8, 6});
    const auto u = GridField::sample(mesh, [](Vec2 x) { return 1.0 + 2 * x[0] - x[1] + 3 * x[0] * x[0] + x[0] * x[1] - 0.5 * x[1] * x[1]; });
    const auto g = cell_gradient(u);
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const Vec2 x = mesh.center(k);
        EXPECT_NEAR(g[0].values[k], 2 + 6 * x[0] + x[1], 1e-12);
        EXPECT_NEAR(g[1].values[k], -1 + x[0] - x[1], 1e-12);
    }
}

TEST(CellGradient, TwoCellsExactForLinear)
{
    const auto mesh = build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{1.0, 1.0}, Index2{2, 2});
    const auto g = cell_gradient(GridField::sample(mesh, [](Vec2 x) { return 3 * x[0] - 7 * x[1]; }));
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(g[0].values[k], 3.0, 1e-13);
        EXPECT_NEAR(g[1].values[k], -7.0, 1e-13);
    }
    const auto one = build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{1.0, 1.0}, Index2{1, 4});
    EXPECT_THROW((void)cell_gradient(GridField(one)), ContractError);
}

TEST(CellGradient, PeriodicTrigonometric)
{
    const auto mesh = build_uniform_mesh(Vec2{0.0, 0.0}, Vec2{1.0, 1.0}, Index2{64, 64});
    const auto g = periodic_cell_gradient(GridField::sample(mesh, [](Vec2 x) { return std::sin(2 * kPi * x[0]); }));
    // centred difference of sin(2 pi x) is cos(2 pi x) sin(2 pi h) / h
    const double h = 1.0 / 64;
    const double factor = std::sin(2 * kPi * h) / h;
    for (std::size_t k = 0; k < mesh.num_cells(); k += 37) {
        const Vec2 x = mesh.center(k);
        EXPECT_NEAR(g[0].values[k], factor * std::cos(2 * kPi * x[0]), 1e-11);
        EXPECT_NEAR(g[1].values[k], 0.0, 1e-11);
    }
}

TEST(Interpolate, ExactForBilinear)
{
    const auto mesh = build_uniform_mesh(Vec2{-2.0, -1.0}, Vec2{4.0, 2.0}, Index2{8, 4});
    const auto f = [](Vec2 x) { return 0.5 + x[0] - 2 * x[1] + 0.75 * x[0] * x[1]; };
    const auto u = GridField::sample(mesh, f);
    for (const Vec2 p : {Vec2{-1.75, -0.75}, Vec2{0.1, 0.3}, Vec2{1.6, 0.7}, Vec2{1.75, 0.75}}) {
        EXPECT_NEAR(interpolate(u, p), f(p), 1e-13);
    }
    // between the last centre and the boundary the value is clamped
    EXPECT_NEAR(interpolate(u, Vec2{1.9, 0.0}), f(Vec2{1.75, 0.0}), 1e-13);
    EXPECT_NO_THROW((void)interpolate(u, Vec2{2.2, 0.0}));
    EXPECT_THROW((void)interpolate(u, Vec2{3.0, 0.0}), DomainError);
    EXPECT_THROW((void)interpolate(u, Vec2{0.0, -2.0}), DomainError);
}

TEST(CorrectorSet, PeriodicWrapOutsideTheMesh)
{
    const auto f = builtin(Builtin::LayeredCosine);
    const auto set = solve_correctors(f, CorrectorParams{1.0, std::nullopt, 0.0625}, tight());
    const Vec2 inside{0.2, -0.1};
    const Vec2 outside{3.2, -4.1};
    EXPECT_NEAR(set.chi(0, outside, true), set.chi(0, inside), 1e-12);
    const Vec2 gi = set.grad_chi(0, inside);
    const Vec2 go = set.grad_chi(0, outside, true);
    EXPECT_NEAR(gi[0], go[0], 1e-12);
    EXPECT_NEAR(gi[1], go[1], 1e-12);
    EXPECT_THROW((void)set.chi(0, outside), DomainError);
    // points inside the mesh are never wrapped
    EXPECT_EQ(set.chi(0, Vec2{0.7, 0.0}, true), set.chi(0, Vec2{0.7, 0.0}));
}
