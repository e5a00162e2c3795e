#pragma once

// Solver selection shared by the corrector, homogenization and experiment drivers.

#include "homfv/linalg.hpp"
#include "homfv/mesh.hpp"

#include <functional>
#include <optional>
#include <string>
#include <span>
#include <string_view>

namespace homfv {

enum class SolverMethod { BicgstabIlu0, CgIlu0, Bicgstab };

struct SolveSettings {
    linalg::SolverOptions solver{};
    SolverMethod method = SolverMethod::BicgstabIlu0;
    CellAverage cell_average = CellAverage::Midpoint;
    /// Run independent solves (directions, parameter sweeps) on up to this many threads.
    unsigned threads = 1;
};

/// A matrix with its (optional) ILU(0) factorization, reusable for several right-hand sides.
class LinearSolver {
public:
    LinearSolver(linalg::CsrMatrix matrix, SolveSettings settings);

    /// Throws SolverError (message carries the report, prefixed by `context`) on non-convergence.
    [[nodiscard]] linalg::SolveResult solve(std::span<const double> rhs, std::string_view context) const;
    [[nodiscard]] const linalg::CsrMatrix& matrix() const noexcept { return matrix_; }

private:
    linalg::CsrMatrix matrix_;
    SolveSettings settings_;
    std::optional<linalg::Ilu0> ilu_;
};

[[nodiscard]] linalg::SolveResult solve_system(const SparseSystem& sys, const SolveSettings& settings,
                                               std::string_view context);

[[nodiscard]] std::string describe(const linalg::SolveReport& report);

/// Runs task(0..count-1) on up to `threads` threads (sequentially for threads <= 1). Each task
/// must write only to its own slot. The exception of the lowest failing index is rethrown.
void run_tasks(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace homfv
