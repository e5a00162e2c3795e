#pragma once

// JSON configuration files: coefficient specs, experiment and run settings, and the metadata
// written next to study outputs.

#include "homfv/fo_approx.hpp"
#include "homfv/homogenize.hpp"
#include "homfv/solve.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace homfv::config {

using Json = nlohmann::ordered_json;

[[nodiscard]] Json to_json(const ScalarFieldSpec& spec);
[[nodiscard]] ScalarFieldSpec scalar_from_json(const Json& j, const std::string& where);

/// Always the explicit form: {"diagonal": {"a11": ..., "a22": ...}} or {"constant_full": [[..], [..]]}.
[[nodiscard]] Json to_json(const MatrixField& field);
/// Accepts {"builtin": name} (optionally "without_gaussians": true) and the explicit forms.
/// `name` receives the builtin name when one is given.
[[nodiscard]] MatrixField field_from_json(const Json& j, std::string* name = nullptr);

[[nodiscard]] Json to_json(const linalg::SolveReport& r);
[[nodiscard]] Json to_json(const EffectiveMatrix& a);

[[nodiscard]] std::string_view method_name(SolverMethod m) noexcept;
[[nodiscard]] SolverMethod parse_method(std::string_view name);

/// Everything a CLI invocation may configure. Subcommands read the parts they need.
struct RunConfig {
    ExperimentConfig experiment;
    /// homogenize: R values of a truncation study
    std::vector<double> study_R;
    /// homogenize: T values of a regularization study at R = corrector.R
    std::vector<double> study_T;
    /// homogenize: reference from the periodic cell problem instead of Q_R
    bool periodic_cell = false;
    /// solve: "oscillating" or "homogenized"
    std::string solve_kind = "oscillating";
    /// solve: eps for an oscillating solve
    double solve_eps = 1.0;
    /// solve, homogenized: matrix used for A*
    Mat2 solve_a_star{Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};

    /// Throws ConfigError; the experiment part is validated by the subcommands that need it.
    void validate() const;
};

[[nodiscard]] Json to_json(const ExperimentConfig& c);
[[nodiscard]] Json to_json(const RunConfig& c);

/// Missing keys keep their defaults; unknown keys and ill-typed values throw ConfigError.
[[nodiscard]] RunConfig run_config_from_json(const Json& j);
[[nodiscard]] RunConfig parse_run_config(std::string_view text);
/// Throws IoError when the file cannot be read.
[[nodiscard]] RunConfig load_run_config(const std::string& path);
[[nodiscard]] std::string serialize(const RunConfig& c);

/// 64-bit FNV-1a of the canonical JSON of `c`, as 16 hex digits.
[[nodiscard]] std::string config_hash(const ExperimentConfig& c);
[[nodiscard]] std::string fnv1a_hex(std::string_view bytes);

/// Config echo, hash, solver reports and (unless deterministic) timings.
[[nodiscard]] Json study_meta(const ExperimentConfig& c, const StudyResult& r);

}  // namespace homfv::config
