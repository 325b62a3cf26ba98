#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gasdsr/fe_driver.hpp"

namespace gasdsr {

enum class RegionMode { Dynamic, Steady };

struct UnitInterval {
    std::string id;
    std::string node;
    double lo = 0.0;
    double hi = 0.0;
    double beta = 0.0;
};

struct NodeInterval {
    std::string id;
    double lo = 0.0;
    double hi = 0.0;
};

/// Secure range of total withdrawal adjustment, allocated to units and
/// aggregated per coupling node. `area` is the per-node rectangle area and is
/// populated only for systems with exactly two coupling nodes.
struct DSRegion {
    RegionMode mode = RegionMode::Dynamic;
    double dg_lower = 0.0;
    double dg_upper = 0.0;
    std::vector<UnitInterval> units;
    std::vector<NodeInterval> nodes;
    double area = std::numeric_limits<double>::quiet_NaN();

    struct Diagnostics {
        double min_ratio = 0.0;
        int rounds_upper = 0;
        int rounds_lower = 0;
        double wallclock_s = 0.0;
        bool certified_upper = false;
        bool certified_lower = false;
        bool verified_upper = false;
        bool verified_lower = false;
    } diagnostics;

    BisectionTrace trace_upper;
    BisectionTrace trace_lower;
};

struct RegionOptions {
    EvaluateOptions fe;
    bool verify = true;        // re-check boundaries with the matching oracle
    double security_tol = 1e-6;
};

DSRegion evaluate_dsr(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                      const RegionOptions& opts = {});

DSRegion evaluate_ssr(const GasNetwork& net, const RegionOptions& opts = {});

/// Steady feasibility oracle for one adjustment value: balances the system
/// through the slack well and scans the free density level for a profile
/// meeting every node bound and the well capacity range.
bool steady_secure(const GasNetwork& net, double dg, int slack_well = 0);

struct RasterSpec {
    std::string axis1;            // node id (default) or unit id
    std::string axis2;
    bool axes_are_nodes = true;
    double w1_min = 0.0, w1_max = 0.0;
    double w2_min = 0.0, w2_max = 0.0;
    int res1 = 50, res2 = 50;     // each <= 200
};

struct RasterResult {
    RasterSpec spec;
    std::vector<std::uint8_t> secure;   // res1*res2, index j*res1+i
    std::vector<std::uint8_t> diverged; // simulation failures, counted insecure
    int diverged_count = 0;

    int index(int i, int j) const { return j * spec.res1 + i; }
    double w1_at(int i) const;
    double w2_at(int j) const;
};

/// Brute-force security map over a 2-d grid of withdrawals: every cell is
/// simulated with constant withdrawals and checked. Node axes distribute the
/// nodal total over the co-located units in proportion to their factors.
RasterResult raster_region(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                           const RasterSpec& spec, int threads = 0);

struct Containment {
    bool inside = false;
    bool ray_certified = false; // point lies on the participation ray
};

/// Interval membership per unit; ray certification marks points reachable by
/// some adjustment value inside [dg_lower, dg_upper].
Containment region_contains(const DSRegion& region, const GasNetwork& net,
                            const std::vector<double>& withdrawals, double tol = 1e-9);

std::string region_to_json(const DSRegion& region);
DSRegion region_from_json(const std::string& text);

std::string raster_to_csv(const RasterResult& raster);
RasterResult raster_from_csv(const std::string& text);

} // namespace gasdsr
