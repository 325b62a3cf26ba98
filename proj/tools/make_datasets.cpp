// Regenerates the shipped datasets under data/. Topologies, unit locations,
// participation factors, pipe dimensions, and well capacities follow the
// published test systems; density bounds, friction, sound speed, schedules,
// and linepack floors are assumed values chosen around a balanced operating
// point (see data/README.md).

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "gasdsr/errors.hpp"
#include "gasdsr/grid.hpp"
#include "gasdsr/io.hpp"
#include "gasdsr/network.hpp"
#include "gasdsr/simulator.hpp"

using namespace gasdsr;

namespace {

std::string g_outdir = "data";

// Balance the schedule through the slack well, pin density bounds around the
// steady profile, and set the linepack floor a fixed drain below the initial
// inventory.
void calibrate(GasNetwork& net, double ref_density, double lo_margin, double hi_margin,
               double linepack_drain_s, double dg_floor) {
    // Unit floors: nonnegative electric output makes d_u >= fuel_intercept,
    // i.e. dG >= dg_floor once intercept = dispatch + beta * dg_floor.
    for (auto& u : net.units) {
        u.fuel_intercept = std::max(0.0, u.dispatch + u.beta * dg_floor);
    }

    net.initial.reference_node = net.nodes[net.wells[0].node].id;
    net.initial.reference_density = ref_density;

    // Provisional wide bounds so the steady solves validate.
    for (auto& n : net.nodes) {
        n.density_min = 1.0;
        n.density_max = 200.0;
    }
    net.finalize();

    const Grid grid = build_grid(net, 300.0, 900.0);
    SteadyBoundary bc;
    bc.slack_well = 0;
    bc.reference_node = net.wells[0].node;
    bc.reference_density = ref_density;

    // Slack output depends on compressor draw which depends on flows; a few
    // passes settle the fixed point.
    SteadyResult steady = solve_steady(net, grid, bc);
    for (int pass = 0; pass < 4; ++pass) {
        net.wells[0].output = steady.well_outputs[0];
        steady = solve_steady(net, grid, bc);
    }
    net.wells[0].output = steady.well_outputs[0];

    for (size_t j = 0; j < net.nodes.size(); ++j) {
        const double rho = steady.state.node_rho(grid, static_cast<int>(j));
        net.nodes[j].density_min = rho - lo_margin;
        net.nodes[j].density_max = rho + hi_margin;
    }
    net.linepack_min = linepack(net, grid, steady.state) - linepack_drain_s;
    net.finalize();

    if (net.wells[0].output_min && net.wells[0].output < *net.wells[0].output_min) {
        throw ValidationError(net.name + ": balanced well output below its capacity floor");
    }
    std::cout << net.name << ": well0=" << net.wells[0].output
              << " kg/s, linepack0=" << linepack(net, grid, steady.state)
              << " kg, L_min=" << net.linepack_min << " kg\n";
}

// Every shipped file must hold a secure dispatch point: simulate the schedule
// from the file's own initial state and demand a clean report.
void verify_dispatch_secure(const GasNetwork& net) {
    const Grid grid = build_grid(net, 300.0, 900.0);
    const SystemState initial = initial_steady_state(net, grid);
    std::vector<double> dispatch;
    for (const auto& u : net.units) dispatch.push_back(u.dispatch);
    const Trajectory traj = simulate(net, grid, initial, dispatch);
    const SecurityReport rep = check_security(traj, net, grid);
    if (!rep.secure()) {
        std::string msg = net.name + ": dispatch point insecure:";
        for (const auto& v : rep.violations) {
            msg += " [" + v.location + " t=" + std::to_string(v.time) + " by " +
                   std::to_string(v.magnitude) + "]";
        }
        throw ValidationError(msg);
    }
    std::cout << net.name << ": dispatch margin " << rep.min_margin << "\n";
}

void emit(const GasNetwork& net, const std::string& filename) {
    verify_dispatch_secure(net);
    write_file_atomic(g_outdir + "/" + filename, serialize_network(net));
    std::cout << "wrote " << g_outdir << "/" << filename << "\n";
}

GasNetwork three_node() {
    GasNetwork net;
    net.name = "3-node demonstration system";
    net.sound_speed = 350.0;
    net.sound_speed_in_momentum = true;
    net.flow_cap = 500.0;
    for (int i = 1; i <= 3; ++i) {
        Node n;
        n.id = "N" + std::to_string(i);
        n.density_min = 1.0;
        n.density_max = 200.0;
        net.nodes.push_back(n);
    }
    auto pipe = [&](const char* id, int from, int to, double km, double d) {
        Pipe p;
        p.id = id;
        p.from_node = from;
        p.to_node = to;
        p.length = km * 1000.0;
        p.diameter = d;
        p.friction = 0.01;
        net.pipes.push_back(p);
    };
    pipe("P1", 2, 0, 60.0, 0.868); // N3 -> N1
    pipe("P2", 0, 1, 80.0, 0.868); // N1 -> N2
    net.wells.push_back({"S1", 2, 160.0, 120.0, 220.0});
    net.loads.push_back({"L1", 1, 40.0});
    net.units.push_back({"G1", 0, 60.0, 0.5, 5.0, 0.0});
    net.units.push_back({"G2", 1, 60.0, 0.5, 5.0, 0.0});
    return net;
}

GasNetwork ten_node() {
    GasNetwork net;
    net.name = "10-node test system";
    net.sound_speed = 350.0;
    net.sound_speed_in_momentum = true;
    net.flow_cap = 800.0;
    for (int i = 1; i <= 10; ++i) {
        Node n;
        n.id = "N" + std::to_string(i);
        n.density_min = 1.0;
        n.density_max = 200.0;
        net.nodes.push_back(n);
    }
    struct Row {
        const char* id;
        int from, to;
        double km, d;
    };
    const Row rows[] = {
        {"P1", 0, 1, 100.0, 0.868}, {"P2", 1, 2, 150.0, 0.868}, {"P3", 2, 3, 50.0, 0.868},
        {"P4", 3, 4, 15.0, 0.603},  {"P5", 4, 5, 10.0, 0.603},  {"P6", 4, 6, 5.0, 0.603},
        {"P7", 6, 7, 10.0, 0.603},  {"P8", 1, 8, 5.0, 0.868},   {"P9", 8, 9, 60.0, 0.868},
    };
    for (const Row& r : rows) {
        Pipe p;
        p.id = r.id;
        p.from_node = r.from;
        p.to_node = r.to;
        p.length = r.km * 1000.0;
        p.diameter = r.d;
        p.friction = 0.01;
        net.pipes.push_back(p);
    }
    net.nodes[8].compressor = CompressorSpec{1.2, 0.05, 0.236}; // boost toward N10

    net.wells.push_back({"S1", 0, 260.0, 150.0, 400.0});
    // Traditional loads, 112 kg/s in total at the reference load level.
    net.loads.push_back({"L1", 2, 30.0});
    net.loads.push_back({"L2", 3, 26.0});
    net.loads.push_back({"L3", 5, 32.0});
    net.loads.push_back({"L4", 6, 24.0});

    // Units at N8 and N10 with the reference participation factors.
    struct UnitRow {
        const char* id;
        int node;
        double beta;
    };
    const UnitRow units[] = {
        {"G1", 9, 0.0782},  {"G2", 9, 0.0735},  {"G3", 9, 0.0758},  {"G4", 9, 0.1439},
        {"G5", 9, 0.1397},  {"G6", 9, 0.1421},  {"G7", 9, 0.0054},  {"G8", 9, 0.0122},
        {"G9", 9, 0.0039},  {"G10", 9, 0.0042}, {"G11", 9, 0.0053}, {"G12", 9, 0.0988},
        {"G13", 7, 0.0417}, {"G14", 7, 0.0371}, {"G15", 7, 0.0327}, {"G16", 7, 0.0414},
        {"G17", 7, 0.0288}, {"G18", 7, 0.0354},
    };
    // Dispatch splits the nodal schedule (N8: 23.5, N10: 122.5) by factor share.
    double beta8 = 0.0, beta10 = 0.0;
    for (const auto& u : units) (u.node == 7 ? beta8 : beta10) += u.beta;
    for (const auto& u : units) {
        const double nodal = u.node == 7 ? 23.5 : 122.5;
        const double share = u.beta / (u.node == 7 ? beta8 : beta10);
        net.units.push_back({u.id, u.node, nodal * share, u.beta, 5.0, 0.0});
    }
    return net;
}

GasNetwork sixty_seven_node() {
    GasNetwork net;
    net.name = "67-node test system";
    net.sound_speed = 350.0;
    net.sound_speed_in_momentum = true;
    net.flow_cap = 1500.0;
    for (int i = 1; i <= 67; ++i) {
        Node n;
        n.id = "N" + std::to_string(i);
        n.density_min = 1.0;
        n.density_max = 200.0;
        net.nodes.push_back(n);
    }
    // Trunk N1..N20, with side chains hanging off trunk nodes. Lengths cycle
    // through a fixed pattern to vary the segment counts.
    int pipe_no = 0;
    auto pipe = [&](int from, int to, double km, double d) {
        Pipe p;
        p.id = "P" + std::to_string(++pipe_no);
        p.from_node = from;
        p.to_node = to;
        p.length = km * 1000.0;
        p.diameter = d;
        p.friction = 0.01;
        net.pipes.push_back(p);
    };
    const double trunk_km[] = {45, 35, 50, 40, 30, 55, 35, 45, 40, 50,
                               35, 45, 30, 40, 55, 35, 45, 40, 30};
    for (int i = 0; i < 19; ++i) pipe(i, i + 1, trunk_km[i], 1.2);
    // Side chains: (anchor trunk node, chain length) pairs covering N21..N67.
    const int anchors[] = {2, 4, 5, 7, 9, 10, 12, 14, 15, 17, 18, 19, 6, 11, 3};
    const int chain_len[] = {4, 3, 3, 4, 3, 3, 4, 3, 3, 3, 3, 3, 3, 3, 2};
    const double side_km[] = {20, 15, 25, 18, 22, 16, 24, 14, 20, 18, 15, 22, 17, 19, 21};
    int next = 20; // first side node index (N21)
    for (int c = 0; c < 15 && next < 67; ++c) {
        int prev = anchors[c];
        for (int k = 0; k < chain_len[c] && next < 67; ++k) {
            pipe(prev, next, side_km[(c + k) % 15], 0.603);
            prev = next++;
        }
    }
    net.nodes[9].compressor = CompressorSpec{1.15, 0.05, 0.236};
    net.nodes[14].compressor = CompressorSpec{1.10, 0.04, 0.236};

    net.wells.push_back({"S1", 0, 700.0, 350.0, 1100.0});
    net.wells.push_back({"S2", 11, 150.0, 100.0, 300.0});

    // Loads over the side chains and a few trunk nodes, 450 kg/s in total.
    const int load_nodes[] = {21, 23, 25, 27, 29, 31, 33, 36, 38, 40, 42, 44,
                              46, 48, 51, 53, 56, 58, 60, 62, 64, 66, 7, 11, 16};
    const double load_values[] = {22, 14, 19, 16, 24, 12, 18, 21, 15, 17, 20, 13,
                                  23, 16, 19, 14, 22, 17, 15, 20, 18, 16, 21, 19, 19};
    double load_total = 0.0;
    for (int k = 0; k < 25; ++k) {
        net.loads.push_back({"L" + std::to_string(k + 1), load_nodes[k] - 1, load_values[k]});
        load_total += load_values[k];
    }
    std::cout << "67-node load total " << load_total << " kg/s\n";

    const int unit_nodes[] = {4, 6, 9, 13, 17, 23, 31, 44, 49, 50, 55, 59, 64};
    const double betas[] = {0.0482, 0.1600, 0.1417, 0.0406, 0.2438, 0.0969, 0.0377,
                            0.0696, 0.0195, 0.0135, 0.0357, 0.0280, 0.0648};
    for (int k = 0; k < 13; ++k) {
        net.units.push_back({"G" + std::to_string(k + 1), unit_nodes[k] - 1, 250.0 * betas[k],
                             betas[k], 5.0, 0.0});
    }
    return net;
}

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_outdir = argv[1];

    GasNetwork n3 = three_node();
    calibrate(n3, 55.0, 6.0, 2.0, 900.0 * 25.0, -35.0);
    emit(n3, "n3.json");

    // Same network and schedule, different operating points: the initial
    // block reshapes the t=0 flow pattern without touching the schedule.
    {
        GasNetwork b = n3;
        b.name = "3-node system, initial state B";
        b.initial.reference_density = 55.6;
        b.initial.load_demands = {{"L1", 70.0}};
        b.initial.unit_withdrawals = {{"G1", 80.0}, {"G2", 30.0}};
        emit(b, "n3_b.json");

        GasNetwork c = n3;
        c.name = "3-node system, initial state C";
        c.initial.reference_density = 55.2;
        c.initial.load_demands = {{"L1", 15.0}};
        c.initial.unit_withdrawals = {{"G1", 35.0}, {"G2", 85.0}};
        emit(c, "n3_c.json");
    }

    GasNetwork n10 = ten_node();
    calibrate(n10, 75.0, 7.0, 2.5, 900.0 * 21.0, -30.0);
    emit(n10, "n10.json");

    // Participation sweeps: factors at N10 scaled by +/-20% with the N8 side
    // renormalized, mirroring the published sensitivity columns.
    {
        double sum10 = 0.0;
        for (const auto& u : n10.units) {
            if (n10.nodes[u.node].id == "N10") sum10 += u.beta;
        }
        const double sum8 = 1.0 - sum10;
        for (int variant = 0; variant < 2; ++variant) {
            const double scale10 = variant == 0 ? 1.2 : 0.8;
            const double scale8 = (1.0 - scale10 * sum10) / sum8;
            std::string body = "{\n  \"units\": [\n";
            char buf[128];
            for (size_t k = 0; k < n10.units.size(); ++k) {
                const auto& u = n10.units[k];
                const double beta =
                    (n10.nodes[u.node].id == "N10" ? scale10 : scale8) * u.beta;
                std::snprintf(buf, sizeof(buf), "    {\"id\": \"%s\", \"beta\": %.6f}%s\n",
                              u.id.c_str(), beta, k + 1 < n10.units.size() ? "," : "");
                body += buf;
            }
            body += "  ]\n}\n";
            const std::string filename = variant == 0 ? "n10_agc2.json" : "n10_agc3.json";
            write_file_atomic(g_outdir + "/" + filename, body);
            std::cout << "wrote " << g_outdir << "/" << filename << "\n";
        }
    }

    GasNetwork n67 = sixty_seven_node();
    calibrate(n67, 75.0, 8.0, 2.5, 900.0 * 40.0, -60.0);
    emit(n67, "n67.json");

    return 0;
}
