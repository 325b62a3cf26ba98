#pragma once

#include "gasdsr/network.hpp"

namespace gasdsr {

/// Space-time finite-difference grid shared by the transient solver and the
/// conic program builders. One "level" holds every state quantity at a single
/// time point: per pipe the densities then flows at each segmentation point
/// (pipes in file order, points ascending), followed by the node densities.
/// Decision levels t = 1..n_steps map onto a flat index space; t = 0 is the
/// supplied initial state and is never indexed.
struct Grid {
    struct PipeLayout {
        double dx = 0.0; // m
        int n_seg = 0;
        int rho0 = 0;    // level offset of density at point 0
        int m0 = 0;      // level offset of flow at point 0
    };

    double dt = 0.0;     // s
    int n_steps = 0;     // decision time points (horizon / dt)
    int n_nodes = 0;
    std::vector<PipeLayout> pipes;
    int node0 = 0;       // level offset of the first node density
    int level_size = 0;

    int time_points() const { return n_steps + 1; }
    int state_vars() const { return level_size * n_steps; }

    // Offsets within a single level.
    int level_rho(int pipe, int seg) const { return pipes[pipe].rho0 + seg; }
    int level_m(int pipe, int seg) const { return pipes[pipe].m0 + seg; }
    int level_node(int node) const { return node0 + node; }

    // Flat indices over all decision levels, t in 1..n_steps.
    int rho_index(int pipe, int seg, int t) const {
        return (t - 1) * level_size + level_rho(pipe, seg);
    }
    int m_index(int pipe, int seg, int t) const {
        return (t - 1) * level_size + level_m(pipe, seg);
    }
    int node_index(int node, int t) const {
        return (t - 1) * level_size + level_node(node);
    }
};

/// horizon must be a positive integer multiple of dt (GridError otherwise).
Grid build_grid(const GasNetwork& net, double dt, double horizon);

} // namespace gasdsr
