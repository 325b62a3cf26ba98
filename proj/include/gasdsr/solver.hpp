#pragma once

#include <vector>

#include "gasdsr/program.hpp"

namespace gasdsr {

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations };

const char* to_string(SolveStatus status);

struct SolverOptions {
    double feas_tol = 1e-8;   // scaled primal/dual residual tolerance
    double gap_tol = 1e-8;    // relative duality gap tolerance
    int max_iterations = 200;
    double step_fraction = 0.99; // fraction-to-boundary
    double static_reg = 1e-10;   // quasi-definite KKT regularization
    int refine_steps = 2;        // iterative refinement per KKT solve
    int equilibrate_iters = 3;   // Ruiz scaling passes over [A; G]
};

struct SolveResult {
    SolveStatus status = SolveStatus::MaxIterations;
    std::vector<double> x; // primal point, original variable space
    std::vector<double> y; // equality multipliers
    std::vector<double> z; // inequality/cone multipliers (internal ordering)
    double objective = 0.0;
    double gap = 0.0;
    double rel_gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    std::vector<double> mu_trace; // complementarity measure per iteration
};

/// Primal-dual interior-point solve of the boxed conic program via a
/// homogeneous self-dual embedding with Nesterov-Todd scalings and Mehrotra
/// predictor-corrector steps. Deterministic for fixed inputs and options.
/// Throws NumericalFailure when the KKT factorization cannot be rescued by
/// dynamic regularization.
SolveResult solve(const ConicProgram& prog, const SolverOptions& opts = {});

} // namespace gasdsr
