#include <doctest.h>

#include <cmath>
#include <random>

#include "gasdsr/errors.hpp"
#include "gasdsr/grid.hpp"
#include "gasdsr/network.hpp"
#include "gasdsr/simulator.hpp"

using namespace gasdsr;

namespace {

constexpr double kPi = 3.14159265358979323846;

// A -> B -> C chain with a compressor at B, well at A, load at C, unit at B.
GasNetwork chain_net() {
    const char* doc = R"({
        "globals": {"sound_speed": 300.0, "sound_speed_in_momentum": true, "flow_cap": 400.0},
        "nodes": [
            {"id": "A", "density_min": 30, "density_max": 80},
            {"id": "B", "density_min": 30, "density_max": 80},
            {"id": "C", "density_min": 30, "density_max": 95}
        ],
        "compressors": [{"node": "B", "ratio": 1.2, "coeff_a": 0.05, "exponent_k": 0.236}],
        "pipes": [
            {"id": "P1", "from": "A", "to": "B", "length_km": 20, "diameter": 0.6, "n_seg": 3},
            {"id": "P2", "from": "B", "to": "C", "length_km": 10, "diameter": 0.6, "n_seg": 2}
        ],
        "wells": [{"id": "W", "node": "A", "output": 50.0}],
        "loads": [{"id": "L", "node": "C", "demand": 29.0}],
        "units": [{"id": "G", "node": "B", "dispatch": 20.0, "beta": 1.0}]
    })";
    return parse_network(doc);
}

// Well feeding a single pipe with a matching load at the far end.
GasNetwork single_pipe_net(bool scaled_momentum, double flow) {
    std::string doc = R"({
        "globals": {"sound_speed": 300.0, "sound_speed_in_momentum": )";
    doc += scaled_momentum ? "true" : "false";
    doc += R"(},
        "nodes": [
            {"id": "A", "density_min": 5, "density_max": 90},
            {"id": "B", "density_min": 5, "density_max": 90}
        ],
        "pipes": [{"id": "P", "from": "A", "to": "B", "length_km": 10, "diameter": 0.6, "n_seg": 3}],
        "wells": [{"id": "W", "node": "A", "output": )";
    doc += std::to_string(flow);
    doc += R"(}],
        "loads": [{"id": "L", "node": "B", "demand": )";
    doc += std::to_string(flow);
    doc += R"(}]
    })";
    return parse_network(doc);
}

SystemState uniform_state(const Grid& grid, double rho) {
    SystemState st;
    st.level.assign(grid.level_size, 0.0);
    for (size_t p = 0; p < grid.pipes.size(); ++p) {
        for (int s = 0; s < grid.pipes[p].n_seg; ++s) {
            st.level[grid.level_rho(static_cast<int>(p), s)] = rho;
        }
    }
    for (int j = 0; j < grid.n_nodes; ++j) st.level[grid.level_node(j)] = rho;
    return st;
}

} // namespace

TEST_CASE("zero net injection keeps a uniform state fixed") {
    const char* doc = R"({
        "globals": {"sound_speed": 300.0, "sound_speed_in_momentum": true},
        "nodes": [
            {"id": "A", "density_min": 30, "density_max": 80},
            {"id": "B", "density_min": 30, "density_max": 80}
        ],
        "pipes": [{"id": "P", "from": "A", "to": "B", "length_km": 15, "diameter": 0.6, "n_seg": 4}]
    })";
    const GasNetwork net = parse_network(doc);
    const Grid grid = build_grid(net, 300.0, 900.0);
    const SystemState st = uniform_state(grid, 50.0);
    const SystemState next = step(net, grid, st, std::vector<double>(net.nodes.size(), 0.0));
    for (int i = 0; i < grid.level_size; ++i) {
        CHECK(next.level[i] == doctest::Approx(st.level[i]).epsilon(1e-9));
    }
}

TEST_CASE("steady single pipe follows the friction-drop recursion") {
    // Oracle: the density recursion evaluated directly in the test.
    auto oracle = [](double rho0, double m, double dx, double diameter, double friction,
                     double alpha2, int segments) {
        std::vector<double> rho{rho0};
        const double coeff = 8.0 * friction / (kPi * kPi * std::pow(diameter, 5)) / alpha2;
        for (int s = 0; s < segments; ++s) {
            rho.push_back(rho.back() - dx * coeff * m * m / rho.back());
        }
        return rho;
    };

    SUBCASE("gradient scaled by the squared sound speed") {
        const GasNetwork net = single_pipe_net(true, 50.0);
        const Grid grid = build_grid(net, 300.0, 300.0);
        SteadyBoundary bc;
        bc.reference_node = 0;
        bc.reference_density = 45.0;
        const SteadyResult res = solve_steady(net, grid, bc);
        const auto want = oracle(45.0, 50.0, 5000.0, 0.6, 0.01, 300.0 * 300.0, 2);
        for (int s = 0; s < 3; ++s) {
            CHECK(res.state.rho(grid, 0, s) == doctest::Approx(want[s]).epsilon(1e-9));
            CHECK(res.state.flow(grid, 0, s) == doctest::Approx(50.0).epsilon(1e-9));
        }
        CHECK(res.state.node_rho(grid, 1) == doctest::Approx(want[2]).epsilon(1e-9));
    }
    SUBCASE("literal momentum form") {
        const GasNetwork net = single_pipe_net(false, 1.0);
        const Grid grid = build_grid(net, 300.0, 300.0);
        SteadyBoundary bc;
        bc.reference_node = 0;
        bc.reference_density = 45.0;
        const SteadyResult res = solve_steady(net, grid, bc);
        const auto want = oracle(45.0, 1.0, 5000.0, 0.6, 0.01, 1.0, 2);
        CHECK(res.state.rho(grid, 0, 1) == doctest::Approx(want[1]).epsilon(1e-9));
        CHECK(res.state.rho(grid, 0, 2) == doctest::Approx(want[2]).epsilon(1e-9));
    }
}

TEST_CASE("unity compression ratio consumes nothing") {
    GasNetwork net = chain_net();
    net.nodes[1].compressor->ratio = 1.0;
    net.finalize();
    CHECK(net.compressor_flow_coeff(1) == doctest::Approx(0.0));
}

TEST_CASE("steady state is a fixed point of the transient step") {
    const GasNetwork net = chain_net();
    const Grid grid = build_grid(net, 300.0, 900.0);
    SteadyBoundary bc;
    bc.reference_node = 0;
    bc.reference_density = 50.0;
    bc.slack_well = 0;
    const SteadyResult steady = solve_steady(net, grid, bc);

    GasNetwork balanced = net;
    balanced.wells[0].output = steady.well_outputs[0];
    const std::vector<double> inj =
        fixed_injections(balanced, {balanced.units[0].dispatch});
    const SystemState next = step(balanced, grid, steady.state, inj);
    for (int i = 0; i < grid.level_size; ++i) {
        CHECK(std::abs(next.level[i] - steady.state.level[i]) < 1e-8);
    }
}

TEST_CASE("mass conservation ties linepack change to net injection") {
    const GasNetwork net = chain_net();
    const Grid grid = build_grid(net, 300.0, 900.0);
    SteadyBoundary bc;
    bc.reference_node = 0;
    bc.reference_density = 50.0;
    bc.slack_well = 0;
    const SteadyResult steady = solve_steady(net, grid, bc);
    GasNetwork scenario = net;
    scenario.wells[0].output = steady.well_outputs[0];

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> pert(-8.0, 8.0);
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<double> withdrawals{scenario.units[0].dispatch + pert(rng)};
        const Trajectory traj = simulate(scenario, grid, steady.state, withdrawals);
        for (int t = 1; t <= grid.n_steps; ++t) {
            // net injection includes the flow-dependent compressor draw
            double net_inj = scenario.wells[0].output - scenario.loads[0].demand - withdrawals[0];
            for (int j = 0; j < grid.n_nodes; ++j) {
                const double kappa = scenario.compressor_flow_coeff(j);
                if (kappa == 0.0) continue;
                for (int k : scenario.pipes_from[j]) {
                    net_inj -= kappa * traj.states[t].flow(grid, k, 0);
                }
            }
            const double change = traj.linepack[t] - traj.linepack[t - 1];
            const double want = grid.dt * net_inj;
            CHECK(std::abs(change - want) <= 1e-6 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST_CASE("friction makes density non-increasing along positive flow") {
    const GasNetwork net = single_pipe_net(true, 80.0);
    const Grid grid = build_grid(net, 300.0, 900.0);
    SteadyBoundary bc;
    bc.reference_node = 0;
    bc.reference_density = 55.0;
    const SteadyResult steady = solve_steady(net, grid, bc);
    const Trajectory traj = simulate(net, grid, steady.state, {});
    for (const auto& st : traj.states) {
        for (int s = 0; s + 1 < grid.pipes[0].n_seg; ++s) {
            CHECK(st.rho(grid, 0, s + 1) <= st.rho(grid, 0, s) + 1e-12);
        }
    }
}

TEST_CASE("simulation is bit-reproducible") {
    const GasNetwork net = chain_net();
    const Grid grid = build_grid(net, 300.0, 900.0);
    SteadyBoundary bc;
    bc.reference_node = 0;
    bc.reference_density = 50.0;
    bc.slack_well = 0;
    const SteadyResult steady = solve_steady(net, grid, bc);
    GasNetwork scenario = net;
    scenario.wells[0].output = steady.well_outputs[0];
    const std::vector<double> withdrawals{23.0};
    const Trajectory a = simulate(scenario, grid, steady.state, withdrawals);
    const Trajectory b = simulate(scenario, grid, steady.state, withdrawals);
    REQUIRE(a.states.size() == b.states.size());
    for (size_t t = 0; t < a.states.size(); ++t) {
        for (int i = 0; i < grid.level_size; ++i) {
            CHECK(a.states[t].level[i] == b.states[t].level[i]); // bitwise
        }
    }
}

TEST_CASE("linepack of a uniform pipe equals density times volume") {
    const GasNetwork net = single_pipe_net(true, 10.0);
    const Grid grid = build_grid(net, 300.0, 300.0);
    const SystemState st = uniform_state(grid, 52.0);
    const double area = kPi * 0.6 * 0.6 / 4.0;
    CHECK(linepack(net, grid, st) == doctest::Approx(52.0 * area * 10000.0).epsilon(1e-12));
}

TEST_CASE("security report flags exactly the planted violation") {
    const GasNetwork net = chain_net();
    const Grid grid = build_grid(net, 300.0, 900.0);
    SteadyBoundary bc;
    bc.reference_node = 0;
    bc.reference_density = 50.0;
    bc.slack_well = 0;
    const SteadyResult steady = solve_steady(net, grid, bc);
    GasNetwork scenario = net;
    scenario.wells[0].output = steady.well_outputs[0];
    scenario.linepack_min = 0.0;

    Trajectory traj = simulate(scenario, grid, steady.state, {scenario.units[0].dispatch});
    REQUIRE(check_security(traj, scenario, grid).secure());

    // clamp one node density above its cap at one time point
    const int node = 1;
    traj.states[2].level[grid.level_node(node)] = scenario.nodes[node].density_max + 1.0;
    const SecurityReport rep = check_security(traj, scenario, grid);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].kind == ConstraintKind::DensityBound);
    CHECK(rep.violations[0].location == "B");
    CHECK(rep.violations[0].time == 2);
    CHECK(rep.violations[0].magnitude == doctest::Approx(1.0));
}

TEST_CASE("infeasible fixed boundary diverges") {
    GasNetwork net = single_pipe_net(true, 50.0);
    net.loads[0].demand = 90.0; // exceeds the fixed well output
    net.finalize();
    const Grid grid = build_grid(net, 300.0, 300.0);
    SteadyBoundary bc;
    bc.reference_node = 0;
    bc.reference_density = 45.0;
    CHECK_THROWS_AS(solve_steady(net, grid, bc), NewtonDivergence);
}

TEST_CASE("zero-flow network is uniform per pressure zone") {
    GasNetwork net = chain_net();
    net.wells[0].output = 0.0;
    net.loads[0].demand = 0.0;
    net.units[0].dispatch = 0.0;
    net.finalize();
    const Grid grid = build_grid(net, 300.0, 300.0);
    SteadyBoundary bc;
    bc.reference_node = 0;
    bc.reference_density = 50.0;
    const SteadyResult res = solve_steady(net, grid, bc);
    // zone A-B at the reference level, zone beyond the compressor boosted
    CHECK(res.state.node_rho(grid, 0) == doctest::Approx(50.0));
    CHECK(res.state.node_rho(grid, 1) == doctest::Approx(50.0));
    CHECK(res.state.node_rho(grid, 2) == doctest::Approx(60.0)); // 1.2x
    for (int s = 0; s < grid.pipes[1].n_seg; ++s) {
        CHECK(res.state.rho(grid, 1, s) == doctest::Approx(60.0));
    }
}
