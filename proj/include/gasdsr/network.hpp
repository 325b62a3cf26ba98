#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace gasdsr {

/// Fixed intraday compression: densities of pipes leaving the node are
/// boosted by `ratio`; the booster itself consumes
///   d_c = coeff_a * m * (ratio^exponent_k - 1)
/// where m is the flow entering the node's outgoing pipes.
struct CompressorSpec {
    double ratio = 1.0;      // >= 1
    double coeff_a = 0.0;    // >= 0
    double exponent_k = 0.0;
};

struct Node {
    std::string id;
    double density_min = 0.0; // kg/m^3
    double density_max = 0.0; // kg/m^3
    std::optional<CompressorSpec> compressor;
};

struct Pipe {
    std::string id;
    int from_node = -1;
    int to_node = -1;
    double length = 0.0;   // m (file format uses km)
    double diameter = 0.0; // m
    double friction = 0.0;
    int n_seg = 0;         // segmentation points along the pipe, >= 2
};

struct GasWell {
    std::string id;
    int node = -1;
    double output = 0.0; // kg/s, fixed over the evaluation horizon
    std::optional<double> output_min; // capacity range, used by steady-state dispatch
    std::optional<double> output_max;
};

struct GasLoad {
    std::string id;
    int node = -1;
    double demand = 0.0; // kg/s, >= 0
};

/// Gas-fired unit: withdrawal follows the dispatch value plus a share of the
/// total adjustment, d_u = dispatch + beta * dG. Fuel use is affine in
/// electric output, d = fuel_slope * e + fuel_intercept, so e >= 0 puts a
/// floor of fuel_intercept under the withdrawal.
struct GasFiredUnit {
    std::string id;
    int node = -1;
    double dispatch = 0.0;       // kg/s
    double beta = 0.0;           // participation factor, >= 0
    double fuel_slope = 5.0;
    double fuel_intercept = 0.0;
};

/// Overrides applied only when computing the initial steady state, so one
/// file pins both the operating point and the intraday schedule.
struct InitialCondition {
    std::string reference_node;     // empty: node of the first well
    double reference_density = 0.0; // kg/m^3; 0: midpoint of that node's bounds
    std::vector<std::pair<std::string, double>> well_outputs;
    std::vector<std::pair<std::string, double>> load_demands;
    std::vector<std::pair<std::string, double>> unit_withdrawals;
};

struct GasNetwork {
    std::string name;
    std::vector<Node> nodes;
    std::vector<Pipe> pipes;
    std::vector<GasWell> wells;
    std::vector<GasLoad> loads;
    std::vector<GasFiredUnit> units;
    InitialCondition initial;

    double sound_speed = 350.0;  // m/s
    double linepack_min = 0.0;   // kg
    double flow_cap = 0.0;       // kg/s, presolve box for flows (0 = derive)
    // When set, the density-gradient term of the momentum balance is scaled
    // by sound_speed^2 (pressure = a^2 * rho); otherwise the gradient enters
    // unscaled. Shipped datasets enable the scaling.
    bool sound_speed_in_momentum = false;
    // Alternate linepack accounting: rho * pi D^2 dx / (8 dt) per point
    // instead of the trapezoidal volume integral. Off by default.
    bool linepack_printed_form = false;

    // Derived lookups (filled by finalize()).
    std::unordered_map<std::string, int> node_index;
    std::vector<std::vector<int>> pipes_from; // per node: pipes leaving it
    std::vector<std::vector<int>> pipes_to;   // per node: pipes entering it
    std::vector<std::vector<int>> wells_at;
    std::vector<std::vector<int>> loads_at;
    std::vector<std::vector<int>> units_at;

    int find_node(const std::string& id) const;
    double cross_section(int pipe) const; // pi D^2 / 4
    /// 8 f / (pi^2 D^5), divided by a^2 when the momentum scaling is on.
    double friction_coeff(int pipe) const;
    /// coeff_a * (ratio^exponent_k - 1) for the node's compressor, else 0.
    double compressor_flow_coeff(int node) const;
    double effective_flow_cap() const;

    /// Rebuild the derived lookups and check every structural invariant.
    /// Throws ValidationError with a field path on the first violation.
    void finalize();
};

struct ParticipationReport {
    double beta_sum = 0.0;
    std::vector<std::pair<std::string, double>> per_node; // coupling nodes only
    bool warning = false; // |sum - 1| > 1e-3
};

GasNetwork load_network(const std::string& path);
GasNetwork parse_network(const std::string& json_text, const std::string& origin = "<string>");
std::string serialize_network(const GasNetwork& net);
void save_network(const GasNetwork& net, const std::string& path);

/// Merge a schedule file (wells/loads/units overrides, matched by id) into
/// an already-validated network.
void apply_schedule(GasNetwork& net, const std::string& path);

ParticipationReport validate_participation(const GasNetwork& net);

} // namespace gasdsr
