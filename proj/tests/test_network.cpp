#include <doctest.h>

#include <cmath>

#include "gasdsr/errors.hpp"
#include "gasdsr/io.hpp"
#include "gasdsr/network.hpp"

using namespace gasdsr;

namespace {
const std::string kDataDir = GASDSR_DATA_DIR;
}

TEST_CASE("3-node file matches the published tables") {
    const GasNetwork net = load_network(kDataDir + "/n3.json");
    REQUIRE(net.pipes.size() == 2);
    const Pipe& p1 = net.pipes[0];
    CHECK(net.nodes[p1.from_node].id == "N3");
    CHECK(net.nodes[p1.to_node].id == "N1");
    CHECK(p1.length == doctest::Approx(60000.0)); // stored in metres
    CHECK(p1.diameter == doctest::Approx(0.868));
    CHECK(net.pipes[1].length == doctest::Approx(80000.0));

    REQUIRE(net.wells.size() == 1);
    CHECK(net.wells[0].id == "S1");
    CHECK(net.nodes[net.wells[0].node].id == "N3");
    CHECK(net.wells[0].output_min.value() == doctest::Approx(120.0));
    CHECK(net.wells[0].output_max.value() == doctest::Approx(220.0));
}

TEST_CASE("validation rejects inverted density bounds") {
    const char* doc = R"({
        "globals": {"sound_speed": 350.0},
        "nodes": [
            {"id": "A", "density_min": 60.0, "density_max": 50.0},
            {"id": "B", "density_min": 40.0, "density_max": 60.0}
        ],
        "pipes": [{"id": "P", "from": "A", "to": "B", "length_km": 10.0, "diameter": 0.6}]
    })";
    CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("density_min"), ValidationError);
}

TEST_CASE("validation rejects unknown pipe endpoints and disconnection") {
    const char* bad_ref = R"({
        "globals": {},
        "nodes": [{"id": "A", "density_min": 40, "density_max": 60}],
        "pipes": [{"id": "P", "from": "A", "to": "Z", "length_km": 5, "diameter": 0.6}]
    })";
    CHECK_THROWS_AS(parse_network(bad_ref), ValidationError);

    const char* disconnected = R"({
        "globals": {},
        "nodes": [
            {"id": "A", "density_min": 40, "density_max": 60},
            {"id": "B", "density_min": 40, "density_max": 60},
            {"id": "C", "density_min": 40, "density_max": 60}
        ],
        "pipes": [{"id": "P", "from": "A", "to": "B", "length_km": 5, "diameter": 0.6}]
    })";
    CHECK_THROWS_WITH_AS(parse_network(disconnected), doctest::Contains("connected"),
                         ValidationError);
}

TEST_CASE("missing file raises ParseError") {
    CHECK_THROWS_AS(load_network(kDataDir + "/does_not_exist.json"), ParseError);
}

TEST_CASE("default segmentation follows pipe length") {
    const char* doc = R"({
        "globals": {},
        "nodes": [
            {"id": "A", "density_min": 40, "density_max": 60},
            {"id": "B", "density_min": 40, "density_max": 60}
        ],
        "pipes": [{"id": "P", "from": "A", "to": "B", "length_km": 60, "diameter": 0.8}]
    })";
    const GasNetwork net = parse_network(doc);
    CHECK(net.pipes[0].n_seg == 7); // ceil(60/10) + 1
}

TEST_CASE("participation report on shipped factor tables") {
    SUBCASE("10-node factors sum to one") {
        const GasNetwork net = load_network(kDataDir + "/n10.json");
        const ParticipationReport rep = validate_participation(net);
        CHECK(std::abs(rep.beta_sum - 1.0) < 1e-3);
        CHECK_FALSE(rep.warning);
        REQUIRE(rep.per_node.size() == 2); // units sit on two coupling nodes
        double groups = 0.0;
        for (const auto& [id, beta] : rep.per_node) groups += beta;
        CHECK(groups == doctest::Approx(rep.beta_sum));
    }
    SUBCASE("67-node factors sum to one") {
        const GasNetwork net = load_network(kDataDir + "/n67.json");
        const ParticipationReport rep = validate_participation(net);
        CHECK(std::abs(rep.beta_sum - 1.0) < 1e-4);
        CHECK(rep.per_node.size() == 13);
    }
    SUBCASE("halved factors trigger the warning") {
        GasNetwork net = load_network(kDataDir + "/n10.json");
        for (auto& u : net.units) u.beta *= 0.5;
        const ParticipationReport rep = validate_participation(net);
        CHECK(rep.beta_sum == doctest::Approx(0.5).epsilon(1e-3));
        CHECK(rep.warning);
    }
    SUBCASE("single unit with beta one") {
        const char* doc = R"({
            "globals": {},
            "nodes": [
                {"id": "A", "density_min": 40, "density_max": 60},
                {"id": "B", "density_min": 40, "density_max": 60}
            ],
            "pipes": [{"id": "P", "from": "A", "to": "B", "length_km": 10, "diameter": 0.6}],
            "units": [{"id": "G", "node": "B", "dispatch": 10.0, "beta": 1.0}]
        })";
        const ParticipationReport rep = validate_participation(parse_network(doc));
        CHECK(rep.beta_sum == doctest::Approx(1.0));
        CHECK_FALSE(rep.warning);
    }
}

TEST_CASE("serialization round-trips structurally") {
    for (const char* name : {"/n3.json", "/n10.json", "/n67.json"}) {
        const GasNetwork net = load_network(kDataDir + name);
        const GasNetwork back = parse_network(serialize_network(net), "roundtrip");
        REQUIRE(back.nodes.size() == net.nodes.size());
        REQUIRE(back.pipes.size() == net.pipes.size());
        REQUIRE(back.units.size() == net.units.size());
        for (size_t j = 0; j < net.nodes.size(); ++j) {
            CHECK(back.nodes[j].id == net.nodes[j].id);
            CHECK(back.nodes[j].density_min == net.nodes[j].density_min);
            CHECK(back.nodes[j].density_max == net.nodes[j].density_max);
            CHECK(back.nodes[j].compressor.has_value() == net.nodes[j].compressor.has_value());
        }
        for (size_t k = 0; k < net.pipes.size(); ++k) {
            CHECK(back.pipes[k].length == net.pipes[k].length);
            CHECK(back.pipes[k].n_seg == net.pipes[k].n_seg);
        }
        for (size_t u = 0; u < net.units.size(); ++u) {
            CHECK(back.units[u].beta == net.units[u].beta);
            CHECK(back.units[u].dispatch == net.units[u].dispatch);
            CHECK(back.units[u].fuel_intercept == net.units[u].fuel_intercept);
        }
        CHECK(back.linepack_min == net.linepack_min);
        CHECK(back.sound_speed_in_momentum == net.sound_speed_in_momentum);
        // normalization is idempotent: serializing again is byte-identical
        CHECK(serialize_network(back) == serialize_network(net));
    }
}

TEST_CASE("schedule overrides by id") {
    GasNetwork net = load_network(kDataDir + "/n10.json");
    const double before = net.units[0].beta;
    apply_schedule(net, kDataDir + "/n10_agc2.json");
    CHECK(net.units[0].beta != before);
    const ParticipationReport rep = validate_participation(net);
    CHECK(std::abs(rep.beta_sum - 1.0) < 1e-3); // renormalized sweep still sums to one
}

TEST_CASE("well output outside capacity is rejected") {
    const char* doc = R"({
        "globals": {},
        "nodes": [
            {"id": "A", "density_min": 40, "density_max": 60},
            {"id": "B", "density_min": 40, "density_max": 60}
        ],
        "pipes": [{"id": "P", "from": "A", "to": "B", "length_km": 10, "diameter": 0.6}],
        "wells": [{"id": "W", "node": "A", "output": 90.0, "output_min": 100.0, "output_max": 200.0}]
    })";
    CHECK_THROWS_WITH_AS(parse_network(doc), doctest::Contains("output"), ValidationError);
}
