#include "gasdsr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "gasdsr/errors.hpp"

namespace gasdsr {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Residual assembly shared by the transient step and the steady solve. Each
// row tracks the sum of absolute term magnitudes so convergence is judged on
// a relative scale.
struct Assembly {
    Eigen::VectorXd residual;
    Eigen::VectorXd scale;
    std::vector<Triplet> jac;
    int row = 0;

    explicit Assembly(int rows)
        : residual(Eigen::VectorXd::Zero(rows)), scale(Eigen::VectorXd::Constant(rows, 1.0)) {}

    void value(double v) {
        residual[row] += v;
        scale[row] += std::abs(v);
    }
    void deriv(int col, double d) { jac.emplace_back(row, col, d); }
    void next() { ++row; }

    double scaled_norm() const {
        double worst = 0.0;
        for (int i = 0; i < residual.size(); ++i) {
            worst = std::max(worst, std::abs(residual[i]) / scale[i]);
        }
        return worst;
    }
};

bool physically_positive(const Grid& grid, const Eigen::VectorXd& v) {
    for (size_t p = 0; p < grid.pipes.size(); ++p) {
        for (int s = 0; s < grid.pipes[p].n_seg; ++s) {
            if (!(v[grid.level_rho(static_cast<int>(p), s)] > 0.0)) return false;
        }
    }
    for (int j = 0; j < grid.n_nodes; ++j) {
        if (!(v[grid.level_node(j)] > 0.0)) return false;
    }
    return true;
}

// Momentum balance along segment (p, s) at the unknown level, row scaled by dx:
//   rho[s+1] - rho[s] + dx * K_p * m[s]^2 / rho[s] = 0
void momentum_rows(const GasNetwork& net, const Grid& grid, const Eigen::VectorXd& v,
                   Assembly& as, bool with_jacobian) {
    for (size_t p = 0; p < grid.pipes.size(); ++p) {
        const auto& pl = grid.pipes[p];
        const double dxK = pl.dx * net.friction_coeff(static_cast<int>(p));
        for (int s = 0; s + 1 < pl.n_seg; ++s) {
            const int ir0 = grid.level_rho(static_cast<int>(p), s);
            const int ir1 = grid.level_rho(static_cast<int>(p), s + 1);
            const int im = grid.level_m(static_cast<int>(p), s);
            const double rho = v[ir0];
            const double m = v[im];
            as.value(v[ir1]);
            as.value(-rho);
            as.value(dxK * m * m / rho);
            if (with_jacobian) {
                as.deriv(ir1, 1.0);
                as.deriv(ir0, -1.0 - dxK * m * m / (rho * rho));
                as.deriv(im, 2.0 * dxK * m / rho);
            }
            as.next();
        }
    }
}

// Pipe-end densities tied to node densities; outgoing pipes of a compressor
// node see the boosted density.
void coupling_rows(const GasNetwork& net, const Grid& grid, const Eigen::VectorXd& v,
                   Assembly& as, bool with_jacobian) {
    for (size_t p = 0; p < grid.pipes.size(); ++p) {
        const Pipe& pipe = net.pipes[p];
        const auto& pl = grid.pipes[p];
        const double boost =
            net.nodes[pipe.from_node].compressor ? net.nodes[pipe.from_node].compressor->ratio : 1.0;
        const int start = grid.level_rho(static_cast<int>(p), 0);
        const int from = grid.level_node(pipe.from_node);
        as.value(v[start]);
        as.value(-boost * v[from]);
        if (with_jacobian) {
            as.deriv(start, 1.0);
            as.deriv(from, -boost);
        }
        as.next();

        const int end = grid.level_rho(static_cast<int>(p), pl.n_seg - 1);
        const int to = grid.level_node(pipe.to_node);
        as.value(v[end]);
        as.value(-v[to]);
        if (with_jacobian) {
            as.deriv(end, 1.0);
            as.deriv(to, -1.0);
        }
        as.next();
    }
}

// Nodal mass balance with flow-dependent compressor consumption:
//   sum_in m_end - (1 + kappa_j) * sum_out m_start + injection_j = 0
void balance_rows(const GasNetwork& net, const Grid& grid, const Eigen::VectorXd& v,
                  const std::vector<double>& injections, Assembly& as, bool with_jacobian) {
    for (int j = 0; j < grid.n_nodes; ++j) {
        const double kappa = net.compressor_flow_coeff(j);
        for (int k : net.pipes_to[j]) {
            const int idx = grid.level_m(k, grid.pipes[k].n_seg - 1);
            as.value(v[idx]);
            if (with_jacobian) as.deriv(idx, 1.0);
        }
        for (int k : net.pipes_from[j]) {
            const int idx = grid.level_m(k, 0);
            as.value(-(1.0 + kappa) * v[idx]);
            if (with_jacobian) as.deriv(idx, -(1.0 + kappa));
        }
        as.value(injections[j]);
        as.next();
    }
}

} // namespace

std::vector<double> fixed_injections(const GasNetwork& net,
                                     const std::vector<double>& unit_withdrawals) {
    if (unit_withdrawals.size() != net.units.size()) {
        throw ValidationError("unit withdrawal vector size does not match unit count");
    }
    std::vector<double> inj(net.nodes.size(), 0.0);
    for (const auto& w : net.wells) inj[w.node] += w.output;
    for (const auto& l : net.loads) inj[l.node] -= l.demand;
    for (size_t u = 0; u < net.units.size(); ++u) {
        inj[net.units[u].node] -= unit_withdrawals[u];
    }
    return inj;
}

SystemState step(const GasNetwork& net, const Grid& grid, const SystemState& state,
                 const std::vector<double>& injections, const SimulatorOptions& opts) {
    const int n = grid.level_size;
    int rows = 0;
    for (const auto& pl : grid.pipes) rows += 2 * (pl.n_seg - 1);
    rows += 2 * static_cast<int>(grid.pipes.size()) + grid.n_nodes;
    if (rows != n) {
        throw NewtonDivergence("transient system is not square; unexpected layout");
    }

    const Eigen::VectorXd prev = Eigen::Map<const Eigen::VectorXd>(state.level.data(), n);
    Eigen::VectorXd v = prev;

    auto assemble = [&](const Eigen::VectorXd& x, bool with_jacobian) {
        Assembly as(rows);
        momentum_rows(net, grid, x, as, with_jacobian);
        // Mass conservation per segment, row scaled by A*dx (units of kg/s):
        //   (A dx / 2 dt)(rho_s + rho_{s+1} - rho_s^old - rho_{s+1}^old) + m_{s+1} - m_s = 0
        for (size_t p = 0; p < grid.pipes.size(); ++p) {
            const auto& pl = grid.pipes[p];
            const double c = net.cross_section(static_cast<int>(p)) * pl.dx / (2.0 * grid.dt);
            for (int s = 0; s + 1 < pl.n_seg; ++s) {
                const int ir0 = grid.level_rho(static_cast<int>(p), s);
                const int ir1 = grid.level_rho(static_cast<int>(p), s + 1);
                const int im0 = grid.level_m(static_cast<int>(p), s);
                const int im1 = grid.level_m(static_cast<int>(p), s + 1);
                as.value(c * (x[ir0] + x[ir1] - prev[ir0] - prev[ir1]));
                as.value(x[im1]);
                as.value(-x[im0]);
                if (with_jacobian) {
                    as.deriv(ir0, c);
                    as.deriv(ir1, c);
                    as.deriv(im1, 1.0);
                    as.deriv(im0, -1.0);
                }
                as.next();
            }
        }
        coupling_rows(net, grid, x, as, with_jacobian);
        balance_rows(net, grid, x, injections, as, with_jacobian);
        return as;
    };

    double norm = assemble(v, false).scaled_norm();
    for (int it = 0; it < opts.max_newton; ++it) {
        if (norm <= opts.newton_tol) {
            if (!physically_positive(grid, v)) {
                throw NonPhysical("nonpositive density in converged transient state");
            }
            SystemState out;
            out.level.assign(v.data(), v.data() + n);
            return out;
        }
        Assembly as = assemble(v, true);
        SpMat jac(rows, n);
        jac.setFromTriplets(as.jac.begin(), as.jac.end());
        Eigen::SparseLU<SpMat> lu(jac);
        if (lu.info() != Eigen::Success) {
            throw NewtonDivergence("singular Jacobian in transient step");
        }
        const Eigen::VectorXd dir = lu.solve(-as.residual);

        double alpha = 1.0;
        bool accepted = false;
        for (int d = 0; d <= opts.max_damping; ++d) {
            Eigen::VectorXd trial = v + alpha * dir;
            if (physically_positive(grid, trial)) {
                const double trial_norm = assemble(trial, false).scaled_norm();
                if (trial_norm < norm || d == opts.max_damping) {
                    v = trial;
                    norm = trial_norm;
                    accepted = true;
                    break;
                }
            } else if (d == opts.max_damping) {
                throw NonPhysical("density driven nonpositive during transient step");
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            throw NonPhysical("density driven nonpositive during transient step");
        }
    }
    throw NewtonDivergence("transient step: no convergence within iteration limit");
}

Trajectory simulate(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                    const std::vector<double>& unit_withdrawals, const SimulatorOptions& opts) {
    Trajectory traj;
    traj.unit_withdrawals = unit_withdrawals;
    traj.states.reserve(grid.time_points());
    traj.states.push_back(initial);
    traj.linepack.push_back(linepack(net, grid, initial));
    const std::vector<double> inj = fixed_injections(net, unit_withdrawals);
    for (int t = 1; t <= grid.n_steps; ++t) {
        traj.states.push_back(step(net, grid, traj.states.back(), inj, opts));
        traj.linepack.push_back(linepack(net, grid, traj.states.back()));
    }
    return traj;
}

SteadyResult solve_steady(const GasNetwork& net, const Grid& grid, const SteadyBoundary& bc,
                          const SimulatorOptions& opts) {
    const int n_level = grid.level_size;
    const bool has_slack = bc.slack_well >= 0;
    if (has_slack && bc.slack_well >= static_cast<int>(net.wells.size())) {
        throw ValidationError("slack well index out of range");
    }
    if (bc.reference_node < 0 || bc.reference_node >= grid.n_nodes) {
        throw ValidationError("reference node out of range");
    }
    if (!bc.well_outputs.empty() && bc.well_outputs.size() != net.wells.size()) {
        throw ValidationError("well output vector size does not match well count");
    }
    if (!bc.unit_withdrawals.empty() && bc.unit_withdrawals.size() != net.units.size()) {
        throw ValidationError("unit withdrawal vector size does not match unit count");
    }
    const int n = n_level + (has_slack ? 1 : 0);
    const int slack_var = n_level;

    std::vector<double> wells(net.wells.size());
    for (size_t w = 0; w < net.wells.size(); ++w) {
        wells[w] = bc.well_outputs.empty() ? net.wells[w].output : bc.well_outputs[w];
    }
    std::vector<double> withdrawals(net.units.size());
    for (size_t u = 0; u < net.units.size(); ++u) {
        withdrawals[u] = bc.unit_withdrawals.empty() ? net.units[u].dispatch : bc.unit_withdrawals[u];
    }

    // Fixed part of the nodal injections; the slack well enters via its variable.
    std::vector<double> inj(net.nodes.size(), 0.0);
    for (size_t w = 0; w < net.wells.size(); ++w) {
        if (has_slack && static_cast<int>(w) == bc.slack_well) continue;
        inj[net.wells[w].node] += wells[w];
    }
    for (const auto& l : net.loads) inj[l.node] -= l.demand;
    for (size_t u = 0; u < net.units.size(); ++u) inj[net.units[u].node] -= withdrawals[u];

    int rows = 0;
    for (const auto& pl : grid.pipes) rows += 2 * (pl.n_seg - 1);
    rows += 2 * static_cast<int>(grid.pipes.size()) + grid.n_nodes + 1;

    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (size_t p = 0; p < grid.pipes.size(); ++p) {
        for (int s = 0; s < grid.pipes[p].n_seg; ++s) {
            v[grid.level_rho(static_cast<int>(p), s)] = bc.reference_density;
        }
    }
    for (int j = 0; j < grid.n_nodes; ++j) v[grid.level_node(j)] = bc.reference_density;
    if (has_slack) {
        double guess = 0.0;
        for (double d : inj) guess -= d;
        v[slack_var] = guess;
    }

    auto assemble = [&](const Eigen::VectorXd& x, bool with_jacobian) {
        Assembly as(rows);
        momentum_rows(net, grid, x, as, with_jacobian);
        // Steady mass conservation: uniform flow along each pipe.
        for (size_t p = 0; p < grid.pipes.size(); ++p) {
            const auto& pl = grid.pipes[p];
            for (int s = 0; s + 1 < pl.n_seg; ++s) {
                const int im0 = grid.level_m(static_cast<int>(p), s);
                const int im1 = grid.level_m(static_cast<int>(p), s + 1);
                as.value(x[im1]);
                as.value(-x[im0]);
                if (with_jacobian) {
                    as.deriv(im1, 1.0);
                    as.deriv(im0, -1.0);
                }
                as.next();
            }
        }
        coupling_rows(net, grid, x, as, with_jacobian);
        for (int j = 0; j < grid.n_nodes; ++j) {
            const double kappa = net.compressor_flow_coeff(j);
            for (int k : net.pipes_to[j]) {
                const int idx = grid.level_m(k, grid.pipes[k].n_seg - 1);
                as.value(x[idx]);
                if (with_jacobian) as.deriv(idx, 1.0);
            }
            for (int k : net.pipes_from[j]) {
                const int idx = grid.level_m(k, 0);
                as.value(-(1.0 + kappa) * x[idx]);
                if (with_jacobian) as.deriv(idx, -(1.0 + kappa));
            }
            as.value(inj[j]);
            if (has_slack && net.wells[bc.slack_well].node == j) {
                as.value(x[slack_var]);
                if (with_jacobian) as.deriv(slack_var, 1.0);
            }
            as.next();
        }
        const int ref = grid.level_node(bc.reference_node);
        as.value(x[ref]);
        as.value(-bc.reference_density);
        if (with_jacobian) as.deriv(ref, 1.0);
        as.next();
        return as;
    };

    double norm = assemble(v, false).scaled_norm();
    for (int it = 0; it < opts.max_newton; ++it) {
        if (norm <= opts.newton_tol) {
            if (!physically_positive(grid, v)) {
                throw NonPhysical("nonpositive density in steady solution");
            }
            SteadyResult out;
            out.state.level.assign(v.data(), v.data() + n_level);
            out.well_outputs = wells;
            if (has_slack) out.well_outputs[bc.slack_well] = v[slack_var];
            return out;
        }
        Assembly as = assemble(v, true);
        SpMat jac(rows, n);
        jac.setFromTriplets(as.jac.begin(), as.jac.end());
        // Least-squares Newton handles the square (slack well) and the
        // overdetermined-but-consistent (all wells fixed) cases alike.
        SpMat normal = SpMat(jac.transpose()) * jac;
        for (int i = 0; i < n; ++i) normal.coeffRef(i, i) += 1e-12;
        Eigen::SimplicialLDLT<SpMat> ldlt(normal);
        if (ldlt.info() != Eigen::Success) {
            throw NewtonDivergence("singular normal equations in steady solve");
        }
        const Eigen::VectorXd dir = ldlt.solve(-(jac.transpose() * as.residual));

        double alpha = 1.0;
        bool moved = false;
        for (int d = 0; d <= opts.max_damping; ++d) {
            Eigen::VectorXd trial = v + alpha * dir;
            if (physically_positive(grid, trial)) {
                const double trial_norm = assemble(trial, false).scaled_norm();
                if (trial_norm < norm || d == opts.max_damping) {
                    v = trial;
                    norm = trial_norm;
                    moved = true;
                    break;
                }
            } else if (d == opts.max_damping) {
                throw NonPhysical("density driven nonpositive during steady solve");
            }
            alpha *= 0.5;
        }
        if (!moved) break;
    }
    throw NewtonDivergence("steady solve: no convergence within iteration limit");
}

SystemState initial_steady_state(const GasNetwork& net, const Grid& grid,
                                 const SimulatorOptions& opts) {
    if (net.wells.empty()) {
        throw ValidationError("initial steady state needs at least one well");
    }
    GasNetwork scenario = net;
    auto apply = [&](const std::vector<std::pair<std::string, double>>& overrides, auto& items,
                     auto member) {
        for (const auto& [id, value] : overrides) {
            bool found = false;
            for (auto& item : items) {
                if (item.id == id) {
                    item.*member = value;
                    found = true;
                    break;
                }
            }
            if (!found) throw ValidationError("initial block references unknown id '" + id + "'");
        }
    };
    apply(net.initial.well_outputs, scenario.wells, &GasWell::output);
    apply(net.initial.load_demands, scenario.loads, &GasLoad::demand);
    apply(net.initial.unit_withdrawals, scenario.units, &GasFiredUnit::dispatch);

    SteadyBoundary bc;
    bc.slack_well = 0;
    bc.reference_node = net.initial.reference_node.empty()
                            ? scenario.wells[0].node
                            : net.find_node(net.initial.reference_node);
    if (bc.reference_node < 0) {
        throw ValidationError("initial.reference_node '" + net.initial.reference_node +
                              "' is unknown");
    }
    const Node& ref = net.nodes[bc.reference_node];
    bc.reference_density = net.initial.reference_density > 0.0
                               ? net.initial.reference_density
                               : 0.5 * (ref.density_min + ref.density_max);
    return solve_steady(scenario, grid, bc, opts).state;
}

double linepack(const GasNetwork& net, const Grid& grid, const SystemState& state) {
    double total = 0.0;
    for (size_t p = 0; p < grid.pipes.size(); ++p) {
        const auto& pl = grid.pipes[p];
        if (net.linepack_printed_form) {
            constexpr double kPi = 3.14159265358979323846;
            const double d = net.pipes[p].diameter;
            const double w = kPi * d * d * pl.dx / (8.0 * grid.dt);
            for (int s = 0; s < pl.n_seg; ++s) {
                total += w * state.rho(grid, static_cast<int>(p), s);
            }
            continue;
        }
        const double area = net.cross_section(static_cast<int>(p));
        for (int s = 0; s < pl.n_seg; ++s) {
            const double weight = (s == 0 || s == pl.n_seg - 1) ? 0.5 : 1.0;
            total += weight * area * pl.dx * state.rho(grid, static_cast<int>(p), s);
        }
    }
    return total;
}

SecurityReport check_security(const Trajectory& traj, const GasNetwork& net, const Grid& grid,
                              double tol) {
    SecurityReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    auto consider = [&](ConstraintKind kind, const std::string& where, int t, double margin,
                        double bound_scale) {
        rep.min_margin = std::min(rep.min_margin, margin);
        if (margin < -tol * std::max(1.0, std::abs(bound_scale))) {
            rep.violations.push_back({kind, where, t, -margin});
        }
    };

    for (int t = 1; t < static_cast<int>(traj.states.size()); ++t) {
        const SystemState& st = traj.states[t];
        for (int j = 0; j < grid.n_nodes; ++j) {
            const Node& node = net.nodes[j];
            const double rho = st.node_rho(grid, j);
            consider(ConstraintKind::DensityBound, node.id, t, rho - node.density_min,
                     node.density_min);
            consider(ConstraintKind::DensityBound, node.id, t, node.density_max - rho,
                     node.density_max);
        }
        consider(ConstraintKind::Linepack, "system", t, traj.linepack[t] - net.linepack_min,
                 net.linepack_min);
    }
    for (size_t u = 0; u < net.units.size(); ++u) {
        consider(ConstraintKind::NonnegOutput, net.units[u].id, -1,
                 traj.unit_withdrawals[u] - net.units[u].fuel_intercept, 1.0);
    }
    return rep;
}

} // namespace gasdsr
