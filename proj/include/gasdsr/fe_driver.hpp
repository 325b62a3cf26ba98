#pragma once

#include <functional>

#include "gasdsr/program_builder.hpp"
#include "gasdsr/simulator.hpp"
#include "gasdsr/solver.hpp"

namespace gasdsr {

/// The three program variants one boundary search needs. Builders must be
/// pure so capped instances can be assembled and solved concurrently.
struct ProgramFamily {
    std::function<ConicProgram()> relaxed_bound;
    std::function<ConicProgram(double)> capped;
    std::function<ConicProgram()> rank_min;
};

ProgramFamily dsr_family(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                         Direction direction);
ProgramFamily ssr_family(const GasNetwork& net, Direction direction);

struct SampleRecord {
    double eta = 0.0;
    SolveStatus status = SolveStatus::MaxIterations;
    double min_ratio = 0.0;
    bool rank_one = false;
    bool fresh = false; // solved this round (ends are carried over)
    double dg = 0.0;
};

struct BisectionRound {
    std::vector<SampleRecord> samples;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

struct BisectionTrace {
    double eta_min = 0.0;
    double epsilon = 0.0;
    bool short_circuit = false; // cap at eta_min already rank-one
    std::vector<BisectionRound> rounds;
};

struct EvaluateOptions {
    double epsilon = 0.0;    // bracket width target; 0 = 1e-3 * max(|eta_min|, 1)
    int samples = 11;        // points per round, endpoints included
    int threads = 0;         // concurrent interior solves; 0 = samples - 2
    double ratio_threshold = 6.0;
    SolverOptions solver;
};

struct BoundaryResult {
    Direction direction = Direction::Upper;
    double dg = 0.0;   // accepted total adjustment
    double eta = 0.0;  // accepted cap
    bool certified = false; // rank-one solution found
    LiftedSolution solution;
    RatioReport ratios;
    BisectionTrace trace;
};

/// Cap search of Fig.-of-merit style: seed the bracket with the relaxation
/// bound, then repeatedly sample the bracket with evenly spaced caps solved
/// concurrently, moving onto the smallest rank-one sample. Falls back to the
/// uncapped rank-minimization solution (certified = false) when no sample is
/// ever rank-one.
BoundaryResult evaluate_boundary(const ProgramFamily& family, Direction direction,
                                 const EvaluateOptions& opts = {});

std::vector<double> withdrawals_for(const GasNetwork& net, double dg);

/// Re-simulate the boundary withdrawals and demand a clean security report.
/// Returns the report on success; throws VerificationFailed when violations
/// remain.
SecurityReport verify_boundary(const GasNetwork& net, const Grid& grid,
                               const SystemState& initial, const BoundaryResult& result,
                               double tol = 1e-6);

std::string trace_to_json(const BisectionTrace& trace);

} // namespace gasdsr
