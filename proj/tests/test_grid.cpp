#include <doctest.h>

#include <set>

#include "gasdsr/errors.hpp"
#include "gasdsr/grid.hpp"
#include "gasdsr/network.hpp"

using namespace gasdsr;

namespace {

GasNetwork small_net() {
    const char* doc = R"({
        "globals": {},
        "nodes": [
            {"id": "A", "density_min": 40, "density_max": 60},
            {"id": "B", "density_min": 40, "density_max": 60},
            {"id": "C", "density_min": 40, "density_max": 60}
        ],
        "pipes": [
            {"id": "P1", "from": "A", "to": "B", "length_km": 60, "diameter": 0.8, "n_seg": 7},
            {"id": "P2", "from": "B", "to": "C", "length_km": 30, "diameter": 0.6, "n_seg": 4}
        ]
    })";
    return parse_network(doc);
}

} // namespace

TEST_CASE("grid dimensions") {
    const GasNetwork net = small_net();
    const Grid grid = build_grid(net, 300.0, 900.0);
    CHECK(grid.n_steps == 3);
    CHECK(grid.time_points() == 4);
    CHECK(grid.pipes[0].dx == doctest::Approx(10000.0)); // 60 km over 6 segments
    CHECK(grid.pipes[1].dx == doctest::Approx(10000.0));
    CHECK(grid.level_size == 2 * (7 + 4) + 3);
    CHECK(grid.state_vars() == grid.level_size * 3);
}

TEST_CASE("horizon must divide evenly") {
    const GasNetwork net = small_net();
    CHECK_THROWS_AS(build_grid(net, 300.0, 1000.0), GridError);
    CHECK_THROWS_AS(build_grid(net, -1.0, 900.0), GridError);
    CHECK_NOTHROW(build_grid(net, 300.0, 300.0));
}

TEST_CASE("index map is a bijection onto the state variables") {
    const GasNetwork net = small_net();
    const Grid grid = build_grid(net, 300.0, 900.0);
    std::set<int> seen;
    for (int t = 1; t <= grid.n_steps; ++t) {
        for (size_t p = 0; p < grid.pipes.size(); ++p) {
            for (int s = 0; s < grid.pipes[p].n_seg; ++s) {
                seen.insert(grid.rho_index(static_cast<int>(p), s, t));
                seen.insert(grid.m_index(static_cast<int>(p), s, t));
            }
        }
        for (int j = 0; j < grid.n_nodes; ++j) seen.insert(grid.node_index(j, t));
    }
    REQUIRE(static_cast<int>(seen.size()) == grid.state_vars()); // all distinct
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == grid.state_vars() - 1); // contiguous
}

TEST_CASE("construction is deterministic") {
    const GasNetwork net = small_net();
    const Grid a = build_grid(net, 300.0, 900.0);
    const Grid b = build_grid(net, 300.0, 900.0);
    CHECK(a.level_size == b.level_size);
    for (size_t p = 0; p < a.pipes.size(); ++p) {
        CHECK(a.pipes[p].rho0 == b.pipes[p].rho0);
        CHECK(a.pipes[p].m0 == b.pipes[p].m0);
        CHECK(a.pipes[p].dx == b.pipes[p].dx);
    }
}

TEST_CASE("density precedes flow within each pipe block") {
    const GasNetwork net = small_net();
    const Grid grid = build_grid(net, 300.0, 300.0);
    CHECK(grid.level_rho(0, 0) == 0);
    CHECK(grid.level_m(0, 0) == grid.pipes[0].n_seg);
    CHECK(grid.level_rho(1, 0) == 2 * grid.pipes[0].n_seg);
    CHECK(grid.level_node(0) == grid.level_size - 3);
}
