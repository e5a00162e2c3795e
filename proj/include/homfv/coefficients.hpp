#pragma once

// Declarative scalar and matrix coefficient fields A(y) on R^2.

#include <array>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace homfv {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<Vec2, 2>;

enum class TrigKind { Sin, Cos };

/// amplitude * sin|cos(frequency . y + phase)
struct TrigTerm {
    double amplitude = 0.0;
    TrigKind kind = TrigKind::Cos;
    Vec2 frequency{0.0, 0.0};
    double phase = 0.0;

    friend bool operator==(const TrigTerm&, const TrigTerm&) = default;
};

/// amplitude * exp(-inverse_width * |y - center|^2)
struct GaussianTerm {
    double amplitude = 0.0;
    Vec2 center{0.0, 0.0};
    double inverse_width = 1.0;

    friend bool operator==(const GaussianTerm&, const GaussianTerm&) = default;
};

/// b(y) = constant + sum of trig terms + sum of Gaussian bumps.
struct ScalarFieldSpec {
    double constant = 0.0;
    std::vector<TrigTerm> trig_terms;
    std::vector<GaussianTerm> gaussian_terms;

    friend bool operator==(const ScalarFieldSpec&, const ScalarFieldSpec&) = default;
};

[[nodiscard]] double eval_scalar(const ScalarFieldSpec& spec, Vec2 y) noexcept;

struct DiagonalField {
    ScalarFieldSpec a11;
    ScalarFieldSpec a22;

    friend bool operator==(const DiagonalField&, const DiagonalField&) = default;
};

struct ConstantFullField {
    Mat2 m{Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};

    friend bool operator==(const ConstantFullField&, const ConstantFullField&) = default;
};

/// A 2x2 coefficient field: spatially varying diagonal, or a constant symmetric matrix.
class MatrixField {
public:
    MatrixField() = default;
    MatrixField(DiagonalField d) : repr_(std::move(d)) {}  // NOLINT(google-explicit-constructor)
    /// Throws ConfigError unless `m` is symmetric to machine precision.
    explicit MatrixField(ConstantFullField c);

    static MatrixField diagonal(ScalarFieldSpec a11, ScalarFieldSpec a22);
    static MatrixField constant_diagonal(double a11, double a22);
    static MatrixField constant_full(const Mat2& m);

    [[nodiscard]] bool is_diagonal() const noexcept { return std::holds_alternative<DiagonalField>(repr_); }
    [[nodiscard]] const DiagonalField& as_diagonal() const;
    [[nodiscard]] const ConstantFullField& as_constant_full() const;

    /// True when the field has no spatial variation.
    [[nodiscard]] bool is_constant() const noexcept;

    /// Unit-cell periodic: no Gaussian terms and every frequency an integer multiple of 2*pi.
    [[nodiscard]] bool is_unit_periodic() const noexcept;

    /// Copy with all Gaussian terms removed (the periodic / almost periodic part).
    [[nodiscard]] MatrixField without_gaussians() const;

    friend bool operator==(const MatrixField&, const MatrixField&) = default;

private:
    std::variant<DiagonalField, ConstantFullField> repr_{DiagonalField{}};
};

[[nodiscard]] Mat2 eval_matrix(const MatrixField& field, Vec2 y) noexcept;

/// Diagonal of A(y) for diagonal fields; for constant full fields the diagonal of m.
[[nodiscard]] Vec2 eval_diagonal(const MatrixField& field, Vec2 y) noexcept;

/// A^eps(x) = A(x / eps).
struct EpsilonScaled {
    MatrixField base;
    double epsilon = 1.0;

    /// Throws ConfigError for epsilon <= 0.
    EpsilonScaled(MatrixField base_field, double eps);

    [[nodiscard]] Vec2 to_fast(Vec2 x) const noexcept { return {x[0] / epsilon, x[1] / epsilon}; }
};

[[nodiscard]] Mat2 eval_matrix(const EpsilonScaled& field, Vec2 x) noexcept;
[[nodiscard]] Vec2 eval_diagonal(const EpsilonScaled& field, Vec2 x) noexcept;

enum class Builtin {
    AsymptoticPeriodicPaper,
    AsymptoticAlmostPeriodicPaper,
    /// diag(2 + cos 2 pi y1, 2 + cos 2 pi y1); closed-form homogenized matrix diag(sqrt 3, 2).
    LayeredCosine,
};

[[nodiscard]] Builtin parse_builtin(std::string_view name);
[[nodiscard]] std::string_view builtin_name(Builtin b) noexcept;
[[nodiscard]] MatrixField builtin(Builtin b);
[[nodiscard]] MatrixField builtin(std::string_view name);

/// Default right-hand side f(x) paired with each builtin coefficient in the reference experiments.
[[nodiscard]] ScalarFieldSpec builtin_source(Builtin b);

struct AxisBox {
    Vec2 lo{0.0, 0.0};
    Vec2 hi{1.0, 1.0};
};

struct EllipticityBounds {
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
};

/// Min / max eigenvalue of A over a samples_per_axis^2 lattice spanning `box` (endpoints included).
/// Prints a warning to stderr when alpha_hat <= 0; never throws for a non-elliptic field.
[[nodiscard]] EllipticityBounds ellipticity_scan(const MatrixField& field, const AxisBox& box,
                                                 int samples_per_axis);

/// Eigenvalues of the symmetric part of m, ascending.
[[nodiscard]] Vec2 symmetric_eigenvalues(const Mat2& m) noexcept;

}  // namespace homfv
