#pragma once

#include <string>
#include <vector>

#include "gasdsr/grid.hpp"
#include "gasdsr/network.hpp"

namespace gasdsr {

/// Densities and mass flows at every segmentation point plus node densities,
/// at one time point, laid out per Grid level offsets.
struct SystemState {
    std::vector<double> level;

    double rho(const Grid& g, int pipe, int seg) const { return level[g.level_rho(pipe, seg)]; }
    double flow(const Grid& g, int pipe, int seg) const { return level[g.level_m(pipe, seg)]; }
    double node_rho(const Grid& g, int node) const { return level[g.level_node(node)]; }
};

struct Trajectory {
    std::vector<SystemState> states;      // t = 0..n_steps; states[0] is the given initial state
    std::vector<double> linepack;         // kg, per time point
    std::vector<double> unit_withdrawals; // d_u applied, constant over the horizon
};

enum class ConstraintKind { DensityBound, Linepack, NonnegOutput };

struct Violation {
    ConstraintKind kind;
    std::string location; // node id, "system" for linepack, unit id for output
    int time;             // time point index, -1 for horizon-constant checks
    double magnitude;     // amount by which the constraint is exceeded
};

struct SecurityReport {
    std::vector<Violation> violations;
    double min_margin = 0.0; // smallest slack over all checked constraints

    bool secure() const { return violations.empty(); }
};

struct SimulatorOptions {
    double newton_tol = 1e-11; // scaled residual infinity norm
    int max_newton = 50;
    int max_damping = 10;
    double security_tol = 1e-6; // relative slack below which a bound counts as violated
};

/// Net fixed mass injection per node: wells - loads - unit withdrawals.
/// Compressor self-consumption is flow-dependent and handled inside the solves.
std::vector<double> fixed_injections(const GasNetwork& net,
                                     const std::vector<double>& unit_withdrawals);

/// Advance one implicit time step: Newton solve of the coupled momentum /
/// mass-conservation / node relations at the new time level.
SystemState step(const GasNetwork& net, const Grid& grid, const SystemState& state,
                 const std::vector<double>& injections, const SimulatorOptions& opts = {});

Trajectory simulate(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                    const std::vector<double>& unit_withdrawals,
                    const SimulatorOptions& opts = {});

struct SteadyBoundary {
    int reference_node = 0;
    double reference_density = 50.0;      // kg/m^3
    std::vector<double> well_outputs;     // per well; empty = scheduled outputs
    int slack_well = -1;                  // well freed to close the mass balance
    std::vector<double> unit_withdrawals; // per unit; empty = scheduled dispatch
};

struct SteadyResult {
    SystemState state;
    std::vector<double> well_outputs; // realized outputs (slack resolved)
};

/// Steady flow: time derivatives dropped, so flow is uniform along each pipe
/// and densities follow the friction-drop recursion. With a slack well the
/// system is square; with all wells fixed it is solvable only for balanced
/// boundary data (least-squares Newton, divergence otherwise).
SteadyResult solve_steady(const GasNetwork& net, const Grid& grid,
                          const SteadyBoundary& boundary, const SimulatorOptions& opts = {});

/// Stored gas mass: trapezoidal integral of density over each pipe volume
/// (or the alternate per-point form when the network flags it).
double linepack(const GasNetwork& net, const Grid& grid, const SystemState& state);

/// Operating point implied by the network's `initial` block: steady flow under
/// the (possibly overridden) schedule with the first well balancing the
/// system at the stated reference density.
SystemState initial_steady_state(const GasNetwork& net, const Grid& grid,
                                 const SimulatorOptions& opts = {});

/// Density bounds, minimum-linepack, and nonnegative-output checks over the
/// decision time points t >= 1.
SecurityReport check_security(const Trajectory& traj, const GasNetwork& net, const Grid& grid,
                              double tol = 1e-6);

} // namespace gasdsr
