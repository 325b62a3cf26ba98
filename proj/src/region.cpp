#include "gasdsr/region.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gasdsr/errors.hpp"
#include "gasdsr/thread_pool.hpp"

namespace gasdsr {

namespace {

std::vector<int> coupling_nodes(const GasNetwork& net) {
    std::vector<int> nodes;
    for (int j = 0; j < static_cast<int>(net.nodes.size()); ++j) {
        if (!net.units_at[j].empty()) nodes.push_back(j);
    }
    return nodes;
}

DSRegion assemble_region(const GasNetwork& net, RegionMode mode, const BoundaryResult& upper,
                         const BoundaryResult& lower) {
    DSRegion region;
    region.mode = mode;
    region.dg_upper = upper.dg;
    region.dg_lower = lower.dg;
    for (const auto& u : net.units) {
        UnitInterval iv;
        iv.id = u.id;
        iv.node = net.nodes[u.node].id;
        iv.beta = u.beta;
        iv.lo = u.dispatch + u.beta * region.dg_lower;
        iv.hi = u.dispatch + u.beta * region.dg_upper;
        region.units.push_back(std::move(iv));
    }
    const std::vector<int> cnodes = coupling_nodes(net);
    for (int j : cnodes) {
        NodeInterval iv;
        iv.id = net.nodes[j].id;
        for (int u : net.units_at[j]) {
            iv.lo += net.units[u].dispatch + net.units[u].beta * region.dg_lower;
            iv.hi += net.units[u].dispatch + net.units[u].beta * region.dg_upper;
        }
        region.nodes.push_back(std::move(iv));
    }
    if (cnodes.size() == 2) {
        region.area = (region.nodes[0].hi - region.nodes[0].lo) *
                      (region.nodes[1].hi - region.nodes[1].lo);
    }
    region.diagnostics.min_ratio = std::min(upper.ratios.min_ratio, lower.ratios.min_ratio);
    region.diagnostics.rounds_upper = static_cast<int>(upper.trace.rounds.size());
    region.diagnostics.rounds_lower = static_cast<int>(lower.trace.rounds.size());
    region.diagnostics.certified_upper = upper.certified;
    region.diagnostics.certified_lower = lower.certified;
    region.trace_upper = upper.trace;
    region.trace_lower = lower.trace;
    return region;
}

} // namespace

DSRegion evaluate_dsr(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                      const RegionOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    const ProgramFamily up = dsr_family(net, grid, initial, Direction::Upper);
    const ProgramFamily dn = dsr_family(net, grid, initial, Direction::Lower);
    auto upper_future = std::async(std::launch::async,
                                   [&] { return evaluate_boundary(up, Direction::Upper, opts.fe); });
    const BoundaryResult lower = evaluate_boundary(dn, Direction::Lower, opts.fe);
    const BoundaryResult upper = upper_future.get();
    DSRegion region = assemble_region(net, RegionMode::Dynamic, upper, lower);
    if (opts.verify) {
        region.diagnostics.verified_upper =
            verify_boundary(net, grid, initial, upper, opts.security_tol).secure();
        region.diagnostics.verified_lower =
            verify_boundary(net, grid, initial, lower, opts.security_tol).secure();
    }
    region.diagnostics.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return region;
}

bool steady_secure(const GasNetwork& net, double dg, int slack_well) {
    if (net.wells.empty()) return false;
    const Grid grid = ssr_grid(net);
    SteadyBoundary bc;
    bc.slack_well = slack_well;
    bc.unit_withdrawals = withdrawals_for(net, dg);
    for (double w : bc.unit_withdrawals) {
        if (w < -1e-9) return false;
    }
    bc.reference_node = net.wells[slack_well].node;

    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& n : net.nodes) {
        lo = std::min(lo, n.density_min);
        hi = std::max(hi, n.density_max);
    }

    // Worst bound violation over nodes and the slack well for a given free
    // density level; quasiconvex in the level, so a golden-section scan finds
    // its minimizer.
    auto violation = [&](double ref) -> double {
        bc.reference_density = ref;
        SteadyResult res;
        try {
            res = solve_steady(net, grid, bc);
        } catch (const NewtonDivergence&) {
            return std::numeric_limits<double>::infinity();
        } catch (const NonPhysical&) {
            return std::numeric_limits<double>::infinity();
        }
        double worst = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < grid.n_nodes; ++j) {
            const double rho = res.state.node_rho(grid, j);
            worst = std::max(worst, net.nodes[j].density_min - rho);
            worst = std::max(worst, rho - net.nodes[j].density_max);
        }
        for (size_t w = 0; w < net.wells.size(); ++w) {
            const auto& well = net.wells[w];
            const double out = res.well_outputs[w];
            if (well.output_min) worst = std::max(worst, *well.output_min - out);
            if (well.output_max) worst = std::max(worst, out - *well.output_max);
        }
        return worst;
    };

    double a = 0.8 * lo, b = 1.2 * hi;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = violation(x1), f2 = violation(x2);
    for (int i = 0; i < 60; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = violation(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = violation(x2);
        }
    }
    return std::min(f1, f2) <= 1e-7;
}

DSRegion evaluate_ssr(const GasNetwork& net, const RegionOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    const ProgramFamily up = ssr_family(net, Direction::Upper);
    const ProgramFamily dn = ssr_family(net, Direction::Lower);
    auto upper_future = std::async(std::launch::async,
                                   [&] { return evaluate_boundary(up, Direction::Upper, opts.fe); });
    const BoundaryResult lower = evaluate_boundary(dn, Direction::Lower, opts.fe);
    const BoundaryResult upper = upper_future.get();
    DSRegion region = assemble_region(net, RegionMode::Steady, upper, lower);
    if (opts.verify) {
        region.diagnostics.verified_upper = steady_secure(net, upper.dg);
        region.diagnostics.verified_lower = steady_secure(net, lower.dg);
    }
    region.diagnostics.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return region;
}

double RasterResult::w1_at(int i) const {
    return spec.res1 == 1 ? spec.w1_min
                          : spec.w1_min + (spec.w1_max - spec.w1_min) * i / (spec.res1 - 1.0);
}

double RasterResult::w2_at(int j) const {
    return spec.res2 == 1 ? spec.w2_min
                          : spec.w2_min + (spec.w2_max - spec.w2_min) * j / (spec.res2 - 1.0);
}

RasterResult raster_region(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                           const RasterSpec& spec, int threads) {
    if (spec.res1 < 1 || spec.res2 < 1 || spec.res1 > 200 || spec.res2 > 200) {
        throw ValidationError("raster resolution must lie in 1..200 per axis");
    }

    // Resolve the two axes into per-unit weight vectors: withdrawals =
    // dispatch + weights1 * (w1 - base1) ... i.e. each axis pins the total at
    // its node (or one unit) and scales members by participation share.
    auto axis_weights = [&](const std::string& id) {
        std::vector<double> weights(net.units.size(), 0.0);
        double base = 0.0;
        if (spec.axes_are_nodes) {
            const int j = net.find_node(id);
            if (j < 0 || net.units_at[j].empty()) {
                throw ValidationError("raster axis '" + id + "' is not a coupling node");
            }
            double beta_sum = 0.0;
            for (int u : net.units_at[j]) beta_sum += net.units[u].beta;
            double disp_sum = 0.0;
            for (int u : net.units_at[j]) disp_sum += net.units[u].dispatch;
            for (int u : net.units_at[j]) {
                if (beta_sum > 0.0) {
                    weights[u] = net.units[u].beta / beta_sum;
                } else if (disp_sum > 0.0) {
                    weights[u] = net.units[u].dispatch / disp_sum;
                } else {
                    weights[u] = 1.0 / net.units_at[j].size();
                }
                base += net.units[u].dispatch;
            }
            return std::make_pair(weights, base);
        }
        for (size_t u = 0; u < net.units.size(); ++u) {
            if (net.units[u].id == id) {
                weights[u] = 1.0;
                return std::make_pair(weights, net.units[u].dispatch);
            }
        }
        throw ValidationError("raster axis '" + id + "' is not a unit id");
    };
    const auto [weights1, base1] = axis_weights(spec.axis1);
    const auto [weights2, base2] = axis_weights(spec.axis2);

    RasterResult raster;
    raster.spec = spec;
    raster.secure.assign(static_cast<size_t>(spec.res1) * spec.res2, 0);
    raster.diverged.assign(raster.secure.size(), 0);

    const int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    std::atomic<int> diverged_count{0};
    parallel_for(spec.res1 * spec.res2, std::max(1, n_threads), [&](int cell) {
        const int i = cell % spec.res1;
        const int j = cell / spec.res1;
        std::vector<double> withdrawals(net.units.size());
        for (size_t u = 0; u < net.units.size(); ++u) {
            withdrawals[u] = net.units[u].dispatch +
                             weights1[u] * (raster.w1_at(i) - base1) +
                             weights2[u] * (raster.w2_at(j) - base2);
        }
        bool negative = false;
        for (double w : withdrawals) {
            if (w < 0.0) negative = true;
        }
        if (negative) return; // outside the model: withdrawal below zero
        try {
            const Trajectory traj = simulate(net, grid, initial, withdrawals);
            if (check_security(traj, net, grid).secure()) {
                raster.secure[cell] = 1;
            }
        } catch (const NewtonDivergence&) {
            raster.diverged[cell] = 1;
            diverged_count.fetch_add(1);
        } catch (const NonPhysical&) {
            raster.diverged[cell] = 1;
            diverged_count.fetch_add(1);
        }
    });
    raster.diverged_count = diverged_count.load();
    return raster;
}

Containment region_contains(const DSRegion& region, const GasNetwork& net,
                            const std::vector<double>& withdrawals, double tol) {
    if (withdrawals.size() != net.units.size()) {
        throw ValidationError("withdrawal vector size does not match unit count");
    }
    Containment c;
    c.inside = true;
    for (size_t u = 0; u < region.units.size(); ++u) {
        const auto& iv = region.units[u];
        const double pad = tol * std::max(1.0, std::max(std::abs(iv.lo), std::abs(iv.hi)));
        if (withdrawals[u] < iv.lo - pad || withdrawals[u] > iv.hi + pad) {
            c.inside = false;
        }
    }
    // Ray membership: least-squares adjustment along the participation vector
    // must reproduce the point and land inside the accepted range.
    double num = 0.0, den = 0.0;
    for (size_t u = 0; u < net.units.size(); ++u) {
        num += net.units[u].beta * (withdrawals[u] - net.units[u].dispatch);
        den += net.units[u].beta * net.units[u].beta;
    }
    if (den > 0.0) {
        const double dg = num / den;
        double residual = 0.0;
        for (size_t u = 0; u < net.units.size(); ++u) {
            residual = std::max(residual,
                                std::abs(withdrawals[u] - net.units[u].dispatch -
                                         net.units[u].beta * dg));
        }
        const double pad = tol * std::max(1.0, std::abs(dg));
        c.ray_certified = residual <= 1e-7 * std::max(1.0, std::abs(dg)) &&
                          dg >= region.dg_lower - pad && dg <= region.dg_upper + pad;
    }
    return c;
}

std::string region_to_json(const DSRegion& region) {
    nlohmann::json doc;
    doc["mode"] = region.mode == RegionMode::Dynamic ? "dynamic" : "steady";
    doc["dG_lower"] = region.dg_lower;
    doc["dG_upper"] = region.dg_upper;
    doc["units"] = nlohmann::json::array();
    for (const auto& u : region.units) {
        doc["units"].push_back({{"id", u.id}, {"node", u.node}, {"lo", u.lo}, {"hi", u.hi},
                                {"beta", u.beta}});
    }
    doc["nodes"] = nlohmann::json::array();
    for (const auto& n : region.nodes) {
        doc["nodes"].push_back({{"id", n.id}, {"lo", n.lo}, {"hi", n.hi}});
    }
    if (std::isfinite(region.area)) doc["area"] = region.area;
    doc["diagnostics"] = {{"min_ratio", region.diagnostics.min_ratio},
                          {"rounds", region.diagnostics.rounds_upper +
                                         region.diagnostics.rounds_lower},
                          {"rounds_upper", region.diagnostics.rounds_upper},
                          {"rounds_lower", region.diagnostics.rounds_lower},
                          {"wallclock", region.diagnostics.wallclock_s},
                          {"certified_upper", region.diagnostics.certified_upper},
                          {"certified_lower", region.diagnostics.certified_lower},
                          {"verified_upper", region.diagnostics.verified_upper},
                          {"verified_lower", region.diagnostics.verified_lower}};
    return doc.dump(2) + "\n";
}

DSRegion region_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("region json: ") + e.what());
    }
    DSRegion region;
    region.mode = doc.value("mode", "dynamic") == std::string("steady") ? RegionMode::Steady
                                                                        : RegionMode::Dynamic;
    region.dg_lower = doc.at("dG_lower").get<double>();
    region.dg_upper = doc.at("dG_upper").get<double>();
    for (const auto& ju : doc.value("units", nlohmann::json::array())) {
        UnitInterval u;
        u.id = ju.at("id").get<std::string>();
        u.node = ju.value("node", "");
        u.lo = ju.at("lo").get<double>();
        u.hi = ju.at("hi").get<double>();
        u.beta = ju.value("beta", 0.0);
        region.units.push_back(std::move(u));
    }
    for (const auto& jn : doc.value("nodes", nlohmann::json::array())) {
        NodeInterval n;
        n.id = jn.at("id").get<std::string>();
        n.lo = jn.at("lo").get<double>();
        n.hi = jn.at("hi").get<double>();
        region.nodes.push_back(std::move(n));
    }
    if (doc.contains("area")) region.area = doc["area"].get<double>();
    if (doc.contains("diagnostics")) {
        const auto& d = doc["diagnostics"];
        region.diagnostics.min_ratio = d.value("min_ratio", 0.0);
        region.diagnostics.rounds_upper = d.value("rounds_upper", 0);
        region.diagnostics.rounds_lower = d.value("rounds_lower", 0);
        region.diagnostics.wallclock_s = d.value("wallclock", 0.0);
        region.diagnostics.certified_upper = d.value("certified_upper", false);
        region.diagnostics.certified_lower = d.value("certified_lower", false);
        region.diagnostics.verified_upper = d.value("verified_upper", false);
        region.diagnostics.verified_lower = d.value("verified_lower", false);
    }
    return region;
}

std::string raster_to_csv(const RasterResult& raster) {
    std::ostringstream out;
    out << "# axis1=" << raster.spec.axis1 << " axis2=" << raster.spec.axis2
        << " kind=" << (raster.spec.axes_are_nodes ? "node" : "unit")
        << " res=" << raster.spec.res1 << "x" << raster.spec.res2
        << " w1=" << raster.spec.w1_min << ":" << raster.spec.w1_max
        << " w2=" << raster.spec.w2_min << ":" << raster.spec.w2_max << "\n";
    out << "i,j,w1,w2,secure,diverged\n";
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    for (int j = 0; j < raster.spec.res2; ++j) {
        for (int i = 0; i < raster.spec.res1; ++i) {
            const int cell = raster.index(i, j);
            out << i << "," << j << "," << fmt(raster.w1_at(i)) << "," << fmt(raster.w2_at(j))
                << "," << int(raster.secure[cell]) << "," << int(raster.diverged[cell]) << "\n";
        }
    }
    return out.str();
}

RasterResult raster_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header) || header.rfind("# axis1=", 0) != 0) {
        throw ParseError("raster csv: missing header");
    }
    RasterResult raster;
    auto grab = [&](const std::string& key) {
        const auto pos = header.find(key + "=");
        if (pos == std::string::npos) throw ParseError("raster csv: missing " + key);
        const auto end = header.find(' ', pos);
        return header.substr(pos + key.size() + 1, end - pos - key.size() - 1);
    };
    raster.spec.axis1 = grab("axis1");
    raster.spec.axis2 = grab("axis2");
    raster.spec.axes_are_nodes = grab("kind") == "node";
    {
        const std::string res = grab("res");
        const auto x = res.find('x');
        raster.spec.res1 = std::stoi(res.substr(0, x));
        raster.spec.res2 = std::stoi(res.substr(x + 1));
        const std::string w1 = grab("w1");
        const std::string w2 = grab("w2");
        raster.spec.w1_min = std::stod(w1.substr(0, w1.find(':')));
        raster.spec.w1_max = std::stod(w1.substr(w1.find(':') + 1));
        raster.spec.w2_min = std::stod(w2.substr(0, w2.find(':')));
        raster.spec.w2_max = std::stod(w2.substr(w2.find(':') + 1));
    }
    std::string line;
    std::getline(in, line); // column header
    raster.secure.assign(static_cast<size_t>(raster.spec.res1) * raster.spec.res2, 0);
    raster.diverged.assign(raster.secure.size(), 0);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int i = 0, j = 0, secure = 0, diverged = 0;
        double w1 = 0.0, w2 = 0.0;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%d,%d", &i, &j, &w1, &w2, &secure,
                        &diverged) != 6) {
            throw ParseError("raster csv: malformed row '" + line + "'");
        }
        raster.secure[raster.index(i, j)] = static_cast<std::uint8_t>(secure);
        raster.diverged[raster.index(i, j)] = static_cast<std::uint8_t>(diverged);
        if (diverged) ++raster.diverged_count;
    }
    return raster;
}

} // namespace gasdsr
