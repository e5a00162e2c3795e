#include "homfv/solve.hpp"

#include "homfv/errors.hpp"

#include <algorithm>
#include <exception>
#include <sstream>
#include <thread>
#include <vector>

namespace homfv {

LinearSolver::LinearSolver(linalg::CsrMatrix matrix, SolveSettings settings)
    : matrix_(std::move(matrix)), settings_(settings)
{
    if (settings_.method != SolverMethod::Bicgstab) {
        ilu_.emplace(matrix_);
    }
}

linalg::SolveResult LinearSolver::solve(std::span<const double> rhs, std::string_view context) const
{
    const linalg::Ilu0* m = ilu_ ? &*ilu_ : nullptr;
    linalg::SolveResult out = settings_.method == SolverMethod::CgIlu0
                                  ? linalg::cg(matrix_, rhs, settings_.solver, m)
                                  : linalg::bicgstab(matrix_, rhs, m, settings_.solver);
    if (!out.report.converged) {
        std::ostringstream os;
        os << context << ": linear solver did not converge (" << describe(out.report) << ")";
        throw SolverError(os.str());
    }
    return out;
}

linalg::SolveResult solve_system(const SparseSystem& sys, const SolveSettings& settings, std::string_view context)
{
    return LinearSolver(sys.matrix, settings).solve(sys.rhs, context);
}

std::string describe(const linalg::SolveReport& report)
{
    std::ostringstream os;
    os << "iterations=" << report.iterations << ", relative residual=" << report.final_relative_residual
       << ", restarts=" << report.restarts;
    return os.str();
}

void run_tasks(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task)
{
    std::vector<std::exception_ptr> errors(count);
    auto guarded = [&](std::size_t k) {
        try {
            task(k);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };
    const std::size_t workers = std::min<std::size_t>(threads, count);
    if (workers <= 1) {
        for (std::size_t k = 0; k < count; ++k) {
            guarded(k);
        }
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t k = w; k < count; k += workers) {
                    guarded(k);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace homfv
