#pragma once

#include "gasdsr/grid.hpp"
#include "gasdsr/network.hpp"
#include "gasdsr/program.hpp"
#include "gasdsr/simulator.hpp"

namespace gasdsr {

enum class Direction { Upper, Lower };

/// Rank-minimization program over the transient dynamics: lifted friction
/// cones, objective sum of the lifting variables, free total adjustment.
ConicProgram build_dsr1(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                        Direction direction);

/// build_dsr1 plus the scalar cap on the adjustment: upper keeps -dG <= eta,
/// lower keeps dG <= eta.
ConicProgram build_dsr2(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                        double eta, Direction direction);

/// Same feasible set, objective -dG (upper) or dG (lower); its optimum is the
/// relaxation bound that seeds the cap search.
ConicProgram build_relaxed_bound(const GasNetwork& net, const Grid& grid,
                                 const SystemState& initial, Direction direction);

/// Steady-state counterpart: single time level, flow uniform along pipes,
/// no linepack constraint, wells dispatchable within their capacity ranges.
ConicProgram build_ssr(const GasNetwork& net, Direction direction);
ConicProgram build_ssr_capped(const GasNetwork& net, double eta, Direction direction);
ConicProgram build_ssr_relaxed_bound(const GasNetwork& net, Direction direction);

/// The steady programs use an internal single-level grid; exposed so steady
/// solutions can be mapped back for diagnostics.
Grid ssr_grid(const GasNetwork& net);

struct RatioReport {
    std::vector<double> ratios; // per cone, log10(lambda1 / lambda2)
    double min_ratio = 0.0;
    double threshold = 6.0;
    bool rank_one = false;
};

/// Eigenvalue tightness diagnostic of the lifted 2x2 blocks. lambda2 is
/// floored at 1e-12 * lambda1, capping each ratio at 12.
RatioReport relaxation_ratio(const ConicProgram& prog, const std::vector<double>& x,
                             double threshold = 6.0);

} // namespace gasdsr
