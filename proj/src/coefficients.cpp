#include "homfv/coefficients.hpp"

#include "homfv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>

namespace homfv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool scalar_is_constant(const ScalarFieldSpec& s) noexcept
{
    const bool trig_flat = std::all_of(s.trig_terms.begin(), s.trig_terms.end(), [](const TrigTerm& t) {
        return t.amplitude == 0.0 || (t.frequency[0] == 0.0 && t.frequency[1] == 0.0);
    });
    const bool gauss_flat = std::all_of(s.gaussian_terms.begin(), s.gaussian_terms.end(),
                                        [](const GaussianTerm& g) { return g.amplitude == 0.0; });
    return trig_flat && gauss_flat;
}

bool is_integer_multiple_of_two_pi(double w) noexcept
{
    const double k = w / kTwoPi;
    return std::abs(k - std::round(k)) <= 1e-12 * std::max(1.0, std::abs(k));
}

bool scalar_is_unit_periodic(const ScalarFieldSpec& s) noexcept
{
    const bool no_bump = std::all_of(s.gaussian_terms.begin(), s.gaussian_terms.end(),
                                     [](const GaussianTerm& g) { return g.amplitude == 0.0; });
    const bool trig_ok = std::all_of(s.trig_terms.begin(), s.trig_terms.end(), [](const TrigTerm& t) {
        return t.amplitude == 0.0 ||
               (is_integer_multiple_of_two_pi(t.frequency[0]) && is_integer_multiple_of_two_pi(t.frequency[1]));
    });
    return no_bump && trig_ok;
}

TrigTerm trig(double amplitude, TrigKind kind, double w1, double w2)
{
    return TrigTerm{amplitude, kind, Vec2{w1, w2}, 0.0};
}

GaussianTerm unit_gaussian_at_origin() { return GaussianTerm{1.0, Vec2{0.0, 0.0}, 1.0}; }

}  // namespace

double eval_scalar(const ScalarFieldSpec& spec, Vec2 y) noexcept
{
    double v = spec.constant;
    for (const auto& t : spec.trig_terms) {
        const double arg = t.frequency[0] * y[0] + t.frequency[1] * y[1] + t.phase;
        v += t.amplitude * (t.kind == TrigKind::Sin ? std::sin(arg) : std::cos(arg));
    }
    for (const auto& g : spec.gaussian_terms) {
        const double dx = y[0] - g.center[0];
        const double dy = y[1] - g.center[1];
        v += g.amplitude * std::exp(-g.inverse_width * (dx * dx + dy * dy));
    }
    return v;
}

MatrixField::MatrixField(ConstantFullField c)
{
    const double scale = std::max({std::abs(c.m[0][0]), std::abs(c.m[1][1]), std::abs(c.m[0][1]), 1.0});
    if (std::abs(c.m[0][1] - c.m[1][0]) > 4.0 * std::numeric_limits<double>::epsilon() * scale) {
        throw ConfigError("constant full coefficient matrix is not symmetric");
    }
    repr_ = c;
}

MatrixField MatrixField::diagonal(ScalarFieldSpec a11, ScalarFieldSpec a22)
{
    return MatrixField(DiagonalField{std::move(a11), std::move(a22)});
}

MatrixField MatrixField::constant_diagonal(double a11, double a22)
{
    ScalarFieldSpec s11;
    s11.constant = a11;
    ScalarFieldSpec s22;
    s22.constant = a22;
    return diagonal(std::move(s11), std::move(s22));
}

MatrixField MatrixField::constant_full(const Mat2& m) { return MatrixField(ConstantFullField{m}); }

const DiagonalField& MatrixField::as_diagonal() const
{
    if (const auto* d = std::get_if<DiagonalField>(&repr_)) {
        return *d;
    }
    throw UnsupportedDiscretization("coefficient field is not diagonal");
}

const ConstantFullField& MatrixField::as_constant_full() const
{
    if (const auto* c = std::get_if<ConstantFullField>(&repr_)) {
        return *c;
    }
    throw ContractError("coefficient field is not a constant full matrix");
}

bool MatrixField::is_constant() const noexcept
{
    if (const auto* d = std::get_if<DiagonalField>(&repr_)) {
        return scalar_is_constant(d->a11) && scalar_is_constant(d->a22);
    }
    return true;
}

bool MatrixField::is_unit_periodic() const noexcept
{
    if (const auto* d = std::get_if<DiagonalField>(&repr_)) {
        return scalar_is_unit_periodic(d->a11) && scalar_is_unit_periodic(d->a22);
    }
    return true;
}

MatrixField MatrixField::without_gaussians() const
{
    if (const auto* d = std::get_if<DiagonalField>(&repr_)) {
        DiagonalField out = *d;
        out.a11.gaussian_terms.clear();
        out.a22.gaussian_terms.clear();
        return MatrixField(std::move(out));
    }
    return *this;
}

Mat2 eval_matrix(const MatrixField& field, Vec2 y) noexcept
{
    if (field.is_diagonal()) {
        const auto& d = field.as_diagonal();
        return Mat2{Vec2{eval_scalar(d.a11, y), 0.0}, Vec2{0.0, eval_scalar(d.a22, y)}};
    }
    return field.as_constant_full().m;
}

Vec2 eval_diagonal(const MatrixField& field, Vec2 y) noexcept
{
    if (field.is_diagonal()) {
        const auto& d = field.as_diagonal();
        return Vec2{eval_scalar(d.a11, y), eval_scalar(d.a22, y)};
    }
    const auto& m = field.as_constant_full().m;
    return Vec2{m[0][0], m[1][1]};
}

EpsilonScaled::EpsilonScaled(MatrixField base_field, double eps) : base(std::move(base_field)), epsilon(eps)
{
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw ConfigError("epsilon must be positive and finite");
    }
}

Mat2 eval_matrix(const EpsilonScaled& field, Vec2 x) noexcept { return eval_matrix(field.base, field.to_fast(x)); }

Vec2 eval_diagonal(const EpsilonScaled& field, Vec2 x) noexcept
{
    return eval_diagonal(field.base, field.to_fast(x));
}

Builtin parse_builtin(std::string_view name)
{
    if (name == "asymptotic_periodic_paper") {
        return Builtin::AsymptoticPeriodicPaper;
    }
    if (name == "asymptotic_almost_periodic_paper") {
        return Builtin::AsymptoticAlmostPeriodicPaper;
    }
    if (name == "layered_cosine") {
        return Builtin::LayeredCosine;
    }
    throw ConfigError("unknown builtin coefficient field '" + std::string(name) + "'");
}

std::string_view builtin_name(Builtin b) noexcept
{
    switch (b) {
    case Builtin::AsymptoticPeriodicPaper:
        return "asymptotic_periodic_paper";
    case Builtin::AsymptoticAlmostPeriodicPaper:
        return "asymptotic_almost_periodic_paper";
    case Builtin::LayeredCosine:
        return "layered_cosine";
    }
    return "unknown";
}

MatrixField builtin(Builtin b)
{
    using std::numbers::pi;
    ScalarFieldSpec a11;
    ScalarFieldSpec a22;
    switch (b) {
    case Builtin::AsymptoticPeriodicPaper:
        // b0 + b1, b0 + b2 with b0 = exp(-|y|^2)
        a11.constant = 4.0;
        a11.trig_terms = {trig(1.0, TrigKind::Cos, kTwoPi, 0.0), trig(1.0, TrigKind::Sin, 0.0, kTwoPi)};
        a11.gaussian_terms = {unit_gaussian_at_origin()};
        a22.constant = 3.0;
        a22.trig_terms = {trig(1.0, TrigKind::Cos, kTwoPi, 0.0), trig(1.0, TrigKind::Cos, 0.0, kTwoPi)};
        a22.gaussian_terms = {unit_gaussian_at_origin()};
        break;
    case Builtin::AsymptoticAlmostPeriodicPaper:
        a11.constant = 4.0;
        a11.trig_terms = {trig(1.0, TrigKind::Sin, kTwoPi, 0.0),
                          trig(1.0, TrigKind::Cos, 0.0, std::numbers::sqrt2 * pi)};
        a11.gaussian_terms = {unit_gaussian_at_origin()};
        a22.constant = 3.0;
        a22.trig_terms = {trig(1.0, TrigKind::Sin, std::numbers::sqrt3 * pi, 0.0),
                          trig(1.0, TrigKind::Cos, 0.0, pi)};
        a22.gaussian_terms = {unit_gaussian_at_origin()};
        break;
    case Builtin::LayeredCosine:
        a11.constant = 2.0;
        a11.trig_terms = {trig(1.0, TrigKind::Cos, kTwoPi, 0.0)};
        a22 = a11;
        break;
    }
    return MatrixField::diagonal(std::move(a11), std::move(a22));
}

MatrixField builtin(std::string_view name) { return builtin(parse_builtin(name)); }

ScalarFieldSpec builtin_source(Builtin b)
{
    ScalarFieldSpec f;
    if (b == Builtin::AsymptoticAlmostPeriodicPaper) {
        // cos(pi x1) cos(sqrt5 pi x2) as a sum of two cosines
        const double w1 = std::numbers::pi;
        const double w2 = std::sqrt(5.0) * std::numbers::pi;
        f.trig_terms = {trig(0.5, TrigKind::Cos, w1, w2), trig(0.5, TrigKind::Cos, w1, -w2)};
    } else {
        f.constant = 1.0;
    }
    return f;
}

Vec2 symmetric_eigenvalues(const Mat2& m) noexcept
{
    const double a = m[0][0];
    const double d = m[1][1];
    const double b = 0.5 * (m[0][1] + m[1][0]);
    const double mean = 0.5 * (a + d);
    const double radius = std::hypot(0.5 * (a - d), b);
    return Vec2{mean - radius, mean + radius};
}

EllipticityBounds ellipticity_scan(const MatrixField& field, const AxisBox& box, int samples_per_axis)
{
    if (samples_per_axis < 2) {
        throw ContractError("ellipticity_scan needs at least 2 samples per axis");
    }
    EllipticityBounds out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    const double n = samples_per_axis - 1;
    for (int j = 0; j < samples_per_axis; ++j) {
        const double y2 = box.lo[1] + (box.hi[1] - box.lo[1]) * (j / n);
        for (int i = 0; i < samples_per_axis; ++i) {
            const double y1 = box.lo[0] + (box.hi[0] - box.lo[0]) * (i / n);
            const Vec2 ev = symmetric_eigenvalues(eval_matrix(field, Vec2{y1, y2}));
            out.alpha_hat = std::min(out.alpha_hat, ev[0]);
            out.beta_hat = std::max(out.beta_hat, ev[1]);
        }
    }
    if (!(out.alpha_hat > 0.0)) {
        std::cerr << "warning: coefficient field is not uniformly elliptic on the sampled box (alpha_hat = "
                  << out.alpha_hat << ")\n";
    }
    return out;
}

}  // namespace homfv
