#include "gasdsr/program_builder.hpp"

#include <algorithm>
#include <cmath>

#include "gasdsr/errors.hpp"

namespace gasdsr {

namespace {

struct BuildConfig {
    Direction direction = Direction::Upper;
    bool rank_min_objective = true; // else minimize -(signed) dG
    bool steady = false;
    double eta = std::numeric_limits<double>::quiet_NaN();
};

// Loose presolve boxes that keep the relaxation bounded without touching the
// model: interior-point densities may roam well past the node bounds, flows
// and lifting variables are capped from the configured flow cap.
struct Boxes {
    double rho_floor;
    double rho_ceil;
    double m_cap;
    double gamma_cap;
};

Boxes presolve_boxes(const GasNetwork& net) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    double boost = 1.0;
    for (const auto& n : net.nodes) {
        lo = std::min(lo, n.density_min);
        hi = std::max(hi, n.density_max);
        if (n.compressor) boost = std::max(boost, n.compressor->ratio);
    }
    Boxes b;
    b.rho_floor = 0.4 * lo;
    b.rho_ceil = 1.5 * boost * hi;
    b.m_cap = net.effective_flow_cap();
    b.gamma_cap = b.m_cap * b.m_cap / b.rho_floor;
    return b;
}

ConicProgram assemble(const GasNetwork& net, const Grid& grid, const SystemState* initial,
                      const BuildConfig& cfg) {
    if (!cfg.steady && initial == nullptr) {
        throw BuildError("transient program requires an initial state");
    }
    const Boxes box = presolve_boxes(net);
    const int n_pipes = static_cast<int>(net.pipes.size());
    const int T = grid.n_steps;
    ConicProgram prog;

    // Total adjustment. Nonnegative electric output floors each unit's
    // withdrawal at its fuel intercept, which translates into a lower bound.
    double dg_lo = -box.m_cap;
    for (const auto& u : net.units) {
        if (u.beta > 0.0) {
            dg_lo = std::max(dg_lo, (u.fuel_intercept - u.dispatch) / u.beta);
        }
    }
    double dg_hi = box.m_cap;
    if (std::isfinite(cfg.eta)) {
        if (cfg.direction == Direction::Upper) {
            dg_lo = std::max(dg_lo, -cfg.eta);
        } else {
            dg_hi = std::min(dg_hi, cfg.eta);
        }
        if (dg_lo > dg_hi) throw BuildError("adjustment cap leaves an empty box");
    }
    const double dg_cost = cfg.rank_min_objective ? 0.0
                           : (cfg.direction == Direction::Upper ? -1.0 : 1.0);
    prog.dg_index = prog.add_var("dG", dg_lo, dg_hi, dg_cost);

    // State variables mirror the grid layout, offset by the dG slot.
    const int state_base = prog.n_vars;
    for (int t = 1; t <= T; ++t) {
        for (int p = 0; p < n_pipes; ++p) {
            const auto& pl = grid.pipes[p];
            for (int s = 0; s < pl.n_seg; ++s) {
                prog.add_var("rho[" + net.pipes[p].id + "," + std::to_string(s) + "," +
                                 std::to_string(t) + "]",
                             box.rho_floor, box.rho_ceil);
            }
            for (int s = 0; s < pl.n_seg; ++s) {
                prog.add_var("m[" + net.pipes[p].id + "," + std::to_string(s) + "," +
                                 std::to_string(t) + "]",
                             -box.m_cap, box.m_cap);
            }
        }
        for (const auto& node : net.nodes) {
            prog.add_var("rhoN[" + node.id + "," + std::to_string(t) + "]", node.density_min,
                         node.density_max);
        }
    }
    auto rho_var = [&](int p, int s, int t) { return state_base + grid.rho_index(p, s, t); };
    auto m_var = [&](int p, int s, int t) { return state_base + grid.m_index(p, s, t); };
    auto node_var = [&](int j, int t) { return state_base + grid.node_index(j, t); };

    // Lifting variables, one per pipe segment per decision time.
    std::vector<int> gamma_base(n_pipes);
    int gamma_per_level = 0;
    for (int p = 0; p < n_pipes; ++p) {
        gamma_base[p] = gamma_per_level;
        gamma_per_level += grid.pipes[p].n_seg - 1;
    }
    const int gamma0 = prog.n_vars;
    for (int t = 1; t <= T; ++t) {
        for (int p = 0; p < n_pipes; ++p) {
            for (int s = 0; s + 1 < grid.pipes[p].n_seg; ++s) {
                prog.add_var("gamma[" + net.pipes[p].id + "," + std::to_string(s) + "," +
                                 std::to_string(t) + "]",
                             0.0, box.gamma_cap, cfg.rank_min_objective ? 1.0 : 0.0);
            }
        }
    }
    auto gamma_var = [&](int p, int s, int t) {
        return gamma0 + (t - 1) * gamma_per_level + gamma_base[p] + s;
    };

    // Dispatchable wells (steady mode): capacity range when given, else fixed.
    std::vector<int> well_var(net.wells.size(), -1);
    if (cfg.steady) {
        for (size_t w = 0; w < net.wells.size(); ++w) {
            const auto& well = net.wells[w];
            if (well.output_min || well.output_max) {
                well_var[w] = prog.add_var("well[" + well.id + "]",
                                           well.output_min.value_or(0.0),
                                           well.output_max.value_or(box.m_cap));
            }
        }
    }

    // Lifted momentum balance: rho[s+1] - rho[s] + dx K gamma = 0.
    for (int t = 1; t <= T; ++t) {
        for (int p = 0; p < n_pipes; ++p) {
            const auto& pl = grid.pipes[p];
            const double dxK = pl.dx * net.friction_coeff(p);
            for (int s = 0; s + 1 < pl.n_seg; ++s) {
                const int row = prog.add_row(0.0);
                prog.add_term(row, rho_var(p, s + 1, t), 1.0);
                prog.add_term(row, rho_var(p, s, t), -1.0);
                prog.add_term(row, gamma_var(p, s, t), dxK);
            }
        }
    }

    // Mass conservation (transient) or uniform pipe flow (steady).
    for (int t = 1; t <= T; ++t) {
        for (int p = 0; p < n_pipes; ++p) {
            const auto& pl = grid.pipes[p];
            const double c = net.cross_section(p) * pl.dx / (2.0 * grid.dt);
            for (int s = 0; s + 1 < pl.n_seg; ++s) {
                if (cfg.steady) {
                    const int row = prog.add_row(0.0);
                    prog.add_term(row, m_var(p, s + 1, t), 1.0);
                    prog.add_term(row, m_var(p, s, t), -1.0);
                    continue;
                }
                double b = 0.0;
                const int row = prog.add_row(0.0);
                prog.add_term(row, rho_var(p, s, t), c);
                prog.add_term(row, rho_var(p, s + 1, t), c);
                prog.add_term(row, m_var(p, s + 1, t), 1.0);
                prog.add_term(row, m_var(p, s, t), -1.0);
                if (t == 1) {
                    b = c * (initial->rho(grid, p, s) + initial->rho(grid, p, s + 1));
                } else {
                    prog.add_term(row, rho_var(p, s, t - 1), -c);
                    prog.add_term(row, rho_var(p, s + 1, t - 1), -c);
                }
                prog.rhs[row] = b;
            }
        }
    }

    // Pipe-end densities tied to node densities (boosted at compressor outlets).
    for (int t = 1; t <= T; ++t) {
        for (int p = 0; p < n_pipes; ++p) {
            const Pipe& pipe = net.pipes[p];
            const double boost = net.nodes[pipe.from_node].compressor
                                     ? net.nodes[pipe.from_node].compressor->ratio
                                     : 1.0;
            int row = prog.add_row(0.0);
            prog.add_term(row, rho_var(p, 0, t), 1.0);
            prog.add_term(row, node_var(pipe.from_node, t), -boost);
            row = prog.add_row(0.0);
            prog.add_term(row, rho_var(p, grid.pipes[p].n_seg - 1, t), 1.0);
            prog.add_term(row, node_var(pipe.to_node, t), -1.0);
        }
    }

    // Nodal balance; compressor draw is linear in the outgoing pipe flow and
    // the units contribute dispatch + beta * dG.
    for (int t = 1; t <= T; ++t) {
        for (int j = 0; j < grid.n_nodes; ++j) {
            double fixed = 0.0;
            for (int w : net.wells_at[j]) {
                if (well_var[w] < 0) fixed += net.wells[w].output;
            }
            for (int l : net.loads_at[j]) fixed -= net.loads[l].demand;
            double beta_sum = 0.0;
            for (int u : net.units_at[j]) {
                fixed -= net.units[u].dispatch;
                beta_sum += net.units[u].beta;
            }
            const double kappa = net.compressor_flow_coeff(j);
            const int row = prog.add_row(-fixed);
            for (int k : net.pipes_to[j]) {
                prog.add_term(row, m_var(k, grid.pipes[k].n_seg - 1, t), 1.0);
            }
            for (int k : net.pipes_from[j]) {
                prog.add_term(row, m_var(k, 0, t), -(1.0 + kappa));
            }
            prog.add_term(row, prog.dg_index, -beta_sum);
            for (int w : net.wells_at[j]) {
                if (well_var[w] >= 0) prog.add_term(row, well_var[w], 1.0);
            }
        }
    }

    // Minimum linepack at every decision time, scaled to density units.
    if (!cfg.steady) {
        double total_weight = 0.0;
        for (int p = 0; p < n_pipes; ++p) {
            total_weight += net.cross_section(p) * grid.pipes[p].dx * (grid.pipes[p].n_seg - 1);
        }
        for (int t = 1; t <= T; ++t) {
            const int slack = prog.add_var("linepack_slack[" + std::to_string(t) + "]", 0.0,
                                           ConicProgram::kInf);
            const int row = prog.add_row(net.linepack_min / total_weight);
            for (int p = 0; p < n_pipes; ++p) {
                const auto& pl = grid.pipes[p];
                const double w = net.cross_section(p) * pl.dx / total_weight;
                for (int s = 0; s < pl.n_seg; ++s) {
                    const double weight = (s == 0 || s == pl.n_seg - 1) ? 0.5 * w : w;
                    prog.add_term(row, rho_var(p, s, t), weight);
                }
            }
            prog.add_term(row, slack, -1.0);
        }
    }

    for (int t = 1; t <= T; ++t) {
        for (int p = 0; p < n_pipes; ++p) {
            for (int s = 0; s + 1 < grid.pipes[p].n_seg; ++s) {
                prog.add_cone(gamma_var(p, s, t), rho_var(p, s, t), m_var(p, s, t), p, s, t);
            }
        }
    }

    prog.check();
    return prog;
}

} // namespace

ConicProgram build_dsr1(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                        Direction direction) {
    BuildConfig cfg;
    cfg.direction = direction;
    cfg.rank_min_objective = true;
    return assemble(net, grid, &initial, cfg);
}

ConicProgram build_dsr2(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                        double eta, Direction direction) {
    if (!std::isfinite(eta)) throw BuildError("cap value must be finite");
    BuildConfig cfg;
    cfg.direction = direction;
    cfg.rank_min_objective = true;
    cfg.eta = eta;
    return assemble(net, grid, &initial, cfg);
}

ConicProgram build_relaxed_bound(const GasNetwork& net, const Grid& grid,
                                 const SystemState& initial, Direction direction) {
    BuildConfig cfg;
    cfg.direction = direction;
    cfg.rank_min_objective = false;
    return assemble(net, grid, &initial, cfg);
}

Grid ssr_grid(const GasNetwork& net) { return build_grid(net, 1.0, 1.0); }

ConicProgram build_ssr(const GasNetwork& net, Direction direction) {
    BuildConfig cfg;
    cfg.direction = direction;
    cfg.rank_min_objective = true;
    cfg.steady = true;
    const Grid grid = ssr_grid(net);
    return assemble(net, grid, nullptr, cfg);
}

ConicProgram build_ssr_capped(const GasNetwork& net, double eta, Direction direction) {
    if (!std::isfinite(eta)) throw BuildError("cap value must be finite");
    BuildConfig cfg;
    cfg.direction = direction;
    cfg.rank_min_objective = true;
    cfg.steady = true;
    cfg.eta = eta;
    const Grid grid = ssr_grid(net);
    return assemble(net, grid, nullptr, cfg);
}

ConicProgram build_ssr_relaxed_bound(const GasNetwork& net, Direction direction) {
    BuildConfig cfg;
    cfg.direction = direction;
    cfg.rank_min_objective = false;
    cfg.steady = true;
    const Grid grid = ssr_grid(net);
    return assemble(net, grid, nullptr, cfg);
}

RatioReport relaxation_ratio(const ConicProgram& prog, const std::vector<double>& x,
                             double threshold) {
    RatioReport rep;
    rep.threshold = threshold;
    rep.ratios.reserve(prog.cones.size());
    double worst = 12.0;
    for (size_t i = 0; i < prog.cones.size(); ++i) {
        const ConeMatrix cm = cone_matrix(prog, x, static_cast<int>(i));
        const double tr = cm.gamma + cm.rho;
        const double disc = std::sqrt(std::max(0.0, (cm.gamma - cm.rho) * (cm.gamma - cm.rho) +
                                                        4.0 * cm.m * cm.m));
        const double l1 = 0.5 * (tr + disc);
        const double l2 = 0.5 * (tr - disc);
        double ratio = 12.0; // lambda1 == 0 means the whole block vanishes
        if (l1 > 0.0) {
            ratio = std::log10(l1 / std::max(l2, 1e-12 * l1));
        }
        rep.ratios.push_back(ratio);
        worst = std::min(worst, ratio);
    }
    rep.min_ratio = worst;
    rep.rank_one = rep.min_ratio >= threshold;
    return rep;
}

} // namespace gasdsr
