#include "gasdsr/grid.hpp"

#include <cmath>

#include "gasdsr/errors.hpp"

namespace gasdsr {

Grid build_grid(const GasNetwork& net, double dt, double horizon) {
    if (!(dt > 0.0)) throw GridError("time step must be positive");
    if (!(horizon > 0.0)) throw GridError("horizon must be positive");
    const double ratio = horizon / dt;
    const double steps = std::round(ratio);
    if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
        throw GridError("horizon is not an integer multiple of the time step");
    }

    Grid grid;
    grid.dt = dt;
    grid.n_steps = static_cast<int>(steps);
    grid.n_nodes = static_cast<int>(net.nodes.size());

    int offset = 0;
    grid.pipes.reserve(net.pipes.size());
    for (const Pipe& p : net.pipes) {
        Grid::PipeLayout layout;
        layout.n_seg = p.n_seg;
        layout.dx = p.length / (p.n_seg - 1);
        layout.rho0 = offset;
        layout.m0 = offset + p.n_seg;
        offset += 2 * p.n_seg;
        grid.pipes.push_back(layout);
    }
    grid.node0 = offset;
    grid.level_size = offset + grid.n_nodes;
    return grid;
}

} // namespace gasdsr
