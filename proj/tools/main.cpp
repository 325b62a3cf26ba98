// Command-line front end: evaluation runs, transient simulations, brute-force
// rasters, and plot re-rendering. Exit codes: 0 ok, 1 parse, 2 validation,
// 3 solver, 4 verification.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gasdsr/errors.hpp"
#include "gasdsr/fe_driver.hpp"
#include "gasdsr/io.hpp"
#include "gasdsr/network.hpp"
#include "gasdsr/program.hpp"
#include "gasdsr/region.hpp"
#include "gasdsr/simulator.hpp"
#include "gasdsr/svg.hpp"

namespace {

using namespace gasdsr;

struct RunConfig {
    std::string network_path;
    std::string schedule_path;
    double dt = 300.0;
    double horizon = 900.0;
    std::string mode = "dynamic";
    double epsilon = 0.0;
    int samples = 11;
    int threads = 0;
    double rank_threshold = 6.0;
    std::string out = "region.json";
    bool plot = false;
    std::string dump_program_path;
    std::string raster_overlay;
};

int thread_override(int configured) {
    if (const char* env = std::getenv("GASDSR_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return configured;
}

GasNetwork load_with_schedule(const std::string& network_path, const std::string& schedule_path) {
    GasNetwork net = load_network(network_path);
    if (!schedule_path.empty()) apply_schedule(net, schedule_path);
    return net;
}

std::string stem_path(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    std::filesystem::path dir = p.parent_path();
    return (dir / (p.stem().string() + suffix)).string();
}

EvaluateOptions fe_options(const RunConfig& cfg) {
    EvaluateOptions fe;
    fe.epsilon = cfg.epsilon;
    fe.samples = cfg.samples;
    fe.threads = thread_override(cfg.threads);
    fe.ratio_threshold = cfg.rank_threshold;
    return fe;
}

void write_trace_file(const RunConfig& cfg, const DSRegion& primary, const DSRegion* secondary);

int cmd_eval(const RunConfig& cfg) {
    const GasNetwork net = load_with_schedule(cfg.network_path, cfg.schedule_path);
    RegionOptions opts;
    opts.fe = fe_options(cfg);

    std::optional<DSRegion> dynamic_region;
    std::optional<DSRegion> steady_region;
    std::string dump_text;

    if (cfg.mode == "dynamic" || cfg.mode == "both") {
        const Grid grid = build_grid(net, cfg.dt, cfg.horizon);
        const SystemState initial = initial_steady_state(net, grid);
        if (!cfg.dump_program_path.empty()) {
            dump_text = dump_program(build_dsr1(net, grid, initial, Direction::Upper));
        }
        dynamic_region = evaluate_dsr(net, grid, initial, opts);
    }
    if (cfg.mode == "steady" || cfg.mode == "both") {
        steady_region = evaluate_ssr(net, opts);
    }

    const DSRegion& primary = dynamic_region ? *dynamic_region : *steady_region;
    const DSRegion* secondary =
        (dynamic_region && steady_region) ? &*steady_region : nullptr;

    std::optional<RasterResult> raster;
    if (!cfg.raster_overlay.empty()) {
        raster = raster_from_csv(read_file(cfg.raster_overlay));
    }

    // All computation succeeded; only now touch the filesystem.
    write_file_atomic(cfg.out, region_to_json(primary));
    if (secondary) {
        write_file_atomic(stem_path(cfg.out, "_ssr.json"), region_to_json(*secondary));
    }
    write_trace_file(cfg, primary, secondary);
    if (cfg.plot) {
        write_file_atomic(stem_path(cfg.out, ".svg"),
                          render_region_svg(primary, secondary, raster ? &*raster : nullptr));
    }
    if (!cfg.dump_program_path.empty() && !dump_text.empty()) {
        write_file_atomic(cfg.dump_program_path, dump_text);
    }

    std::cout << "dG range [" << primary.dg_lower << ", " << primary.dg_upper
              << "] kg/s, min ratio " << primary.diagnostics.min_ratio << ", "
              << (primary.diagnostics.certified_upper && primary.diagnostics.certified_lower
                      ? "certified"
                      : "NOT certified")
              << "\n";
    if (secondary) {
        std::cout << "steady dG range [" << secondary->dg_lower << ", " << secondary->dg_upper
                  << "] kg/s\n";
    }
    return 0;
}

int cmd_simulate(const RunConfig& cfg, double dg, const std::string& node_spec,
                 const std::string& unit_spec) {
    const GasNetwork net = load_with_schedule(cfg.network_path, cfg.schedule_path);
    const Grid grid = build_grid(net, cfg.dt, cfg.horizon);
    const SystemState initial = initial_steady_state(net, grid);

    std::vector<double> withdrawals = withdrawals_for(net, dg);
    auto parse_pairs = [&](const std::string& spec, auto apply) {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) {
                throw ValidationError("expected id=value in '" + item + "'");
            }
            apply(item.substr(0, eq), std::stod(item.substr(eq + 1)));
        }
    };
    if (!node_spec.empty()) {
        parse_pairs(node_spec, [&](const std::string& id, double total) {
            const int j = net.find_node(id);
            if (j < 0 || net.units_at[j].empty()) {
                throw ValidationError("'" + id + "' is not a coupling node");
            }
            double beta_sum = 0.0;
            for (int u : net.units_at[j]) beta_sum += net.units[u].beta;
            double disp_sum = 0.0;
            for (int u : net.units_at[j]) disp_sum += net.units[u].dispatch;
            for (int u : net.units_at[j]) {
                const double share =
                    beta_sum > 0.0 ? net.units[u].beta / beta_sum
                                   : (disp_sum > 0.0 ? net.units[u].dispatch / disp_sum
                                                     : 1.0 / net.units_at[j].size());
                withdrawals[u] = net.units[u].dispatch +
                                 share * (total - disp_sum) * 1.0;
            }
        });
    }
    if (!unit_spec.empty()) {
        parse_pairs(unit_spec, [&](const std::string& id, double value) {
            for (size_t u = 0; u < net.units.size(); ++u) {
                if (net.units[u].id == id) {
                    withdrawals[u] = value;
                    return;
                }
            }
            throw ValidationError("unknown unit '" + id + "'");
        });
    }

    const Trajectory traj = simulate(net, grid, initial, withdrawals);
    const SecurityReport report = check_security(traj, net, grid);

    if (!cfg.out.empty()) {
        write_file_atomic(cfg.out, trajectory_to_csv(traj, net, grid));
        write_file_atomic(stem_path(cfg.out, "_linepack.csv"), linepack_to_csv(traj));
    }

    std::cout << (report.secure() ? "secure" : "insecure") << "\n";
    if (!report.secure()) {
        std::cout << "constraint,location,time,magnitude\n";
        for (const auto& v : report.violations) {
            const char* kind = v.kind == ConstraintKind::DensityBound ? "density_bound"
                               : v.kind == ConstraintKind::Linepack   ? "linepack"
                                                                      : "nonneg_output";
            std::cout << kind << "," << v.location << "," << v.time << "," << v.magnitude << "\n";
        }
    }
    return 0;
}

int cmd_raster(const RunConfig& cfg, const std::string& axes, bool axes_units,
               const std::string& w1_range, const std::string& w2_range, int res,
               const std::string& region_path) {
    const GasNetwork net = load_with_schedule(cfg.network_path, cfg.schedule_path);
    const Grid grid = build_grid(net, cfg.dt, cfg.horizon);
    const SystemState initial = initial_steady_state(net, grid);

    RasterSpec spec;
    {
        std::stringstream ss(axes);
        std::string a, b, extra;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || std::getline(ss, extra, ',')) {
            throw ValidationError("raster needs exactly two axes, got '" + axes + "'");
        }
        spec.axis1 = a;
        spec.axis2 = b;
    }
    spec.axes_are_nodes = !axes_units;
    spec.res1 = spec.res2 = res;

    auto parse_range = [](const std::string& r, double& lo, double& hi) {
        const auto colon = r.find(':');
        if (colon == std::string::npos) throw ValidationError("range must be lo:hi, got '" + r + "'");
        lo = std::stod(r.substr(0, colon));
        hi = std::stod(r.substr(colon + 1));
        if (!(lo < hi)) throw ValidationError("range must satisfy lo < hi");
    };
    parse_range(w1_range, spec.w1_min, spec.w1_max);
    parse_range(w2_range, spec.w2_min, spec.w2_max);

    const RasterResult raster = raster_region(net, grid, initial, spec, thread_override(cfg.threads));

    std::optional<DSRegion> region;
    if (!region_path.empty()) region = region_from_json(read_file(region_path));

    write_file_atomic(cfg.out, raster_to_csv(raster));
    if (cfg.plot) {
        write_file_atomic(stem_path(cfg.out, ".svg"),
                          render_raster_svg(raster, region ? &*region : nullptr));
    }
    int secure_cells = 0;
    for (auto v : raster.secure) secure_cells += v;
    std::cout << "raster " << spec.res1 << "x" << spec.res2 << ": " << secure_cells
              << " secure cells, " << raster.diverged_count << " diverged\n";
    if (secure_cells == 0) {
        std::cout << "warning: secure set is empty\n";
    }
    return 0;
}

int cmd_plot(const std::string& region_path, const std::string& second_path,
             const std::string& raster_path, const std::string& out) {
    std::optional<DSRegion> region;
    std::optional<DSRegion> second;
    std::optional<RasterResult> raster;
    if (!region_path.empty()) region = region_from_json(read_file(region_path));
    if (!second_path.empty()) second = region_from_json(read_file(second_path));
    if (!raster_path.empty()) raster = raster_from_csv(read_file(raster_path));

    std::string svg;
    if (region) {
        svg = render_region_svg(*region, second ? &*second : nullptr, raster ? &*raster : nullptr);
    } else if (raster) {
        svg = render_raster_svg(*raster, nullptr);
    } else {
        throw ValidationError("plot needs --region and/or --raster");
    }
    write_file_atomic(out, svg);
    std::cout << "wrote " << out << "\n";
    return 0;
}

void write_trace_file(const RunConfig& cfg, const DSRegion& primary, const DSRegion* secondary) {
    nlohmann::json doc;
    doc["upper"] = nlohmann::json::parse(trace_to_json(primary.trace_upper));
    doc["lower"] = nlohmann::json::parse(trace_to_json(primary.trace_lower));
    if (secondary) {
        doc["steady_upper"] = nlohmann::json::parse(trace_to_json(secondary->trace_upper));
        doc["steady_lower"] = nlohmann::json::parse(trace_to_json(secondary->trace_lower));
    }
    write_file_atomic(stem_path(cfg.out, "_trace.json"), doc.dump(2) + "\n");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gas-network withdrawal security region evaluator"};
    app.require_subcommand(1);

    RunConfig cfg;
    double dg = 0.0;
    std::string node_spec, unit_spec;
    std::string axes, w1_range = "0:1", w2_range = "0:1";
    bool axes_units = false;
    int res = 50;
    std::string region_path, second_path, raster_path;

    auto add_common = [&](CLI::App* cmd, bool needs_network) {
        auto* net_opt = cmd->add_option("--network", cfg.network_path, "network JSON file");
        if (needs_network) net_opt->required();
        cmd->add_option("--schedule", cfg.schedule_path, "schedule overrides JSON");
        cmd->add_option("--dt", cfg.dt, "time step in seconds")->check(CLI::PositiveNumber);
        cmd->add_option("--horizon", cfg.horizon, "evaluation horizon in seconds")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
    };

    CLI::App* eval = app.add_subcommand("eval", "evaluate the security region");
    add_common(eval, true);
    eval->add_option("--mode", cfg.mode, "dynamic | steady | both")
        ->check(CLI::IsMember({"dynamic", "steady", "both"}));
    eval->add_option("--epsilon", cfg.epsilon, "bisection bracket tolerance (0 = auto)");
    eval->add_option("--samples", cfg.samples, "cap samples per round")->check(CLI::Range(3, 101));
    eval->add_option("--rank-threshold", cfg.rank_threshold, "rank-one ratio threshold");
    eval->add_option("--out", cfg.out, "region JSON output path");
    eval->add_flag("--plot", cfg.plot, "also render an SVG");
    eval->add_option("--dump-program", cfg.dump_program_path, "write a sparse-triplet dump");
    eval->add_option("--raster", cfg.raster_overlay, "raster CSV drawn under the plot");

    CLI::App* sim = app.add_subcommand("simulate", "run the transient solver and check security");
    add_common(sim, true);
    sim->add_option("--dg", dg, "total withdrawal adjustment along the participation vector");
    sim->add_option("--node-withdrawals", node_spec, "per-node totals, e.g. N8=24.1,N10=125.6");
    sim->add_option("--unit-withdrawals", unit_spec, "per-unit values, e.g. G1=12.5");
    sim->add_option("--out", cfg.out, "trajectory CSV output path")->default_val("trajectory.csv");

    CLI::App* ras = app.add_subcommand("raster", "brute-force security map over two axes");
    add_common(ras, true);
    ras->add_option("--axes", axes, "two node ids (or unit ids with --units)")->required();
    ras->add_flag("--units", axes_units, "axes name units instead of nodes");
    ras->add_option("--w1", w1_range, "axis 1 range lo:hi")->required();
    ras->add_option("--w2", w2_range, "axis 2 range lo:hi")->required();
    ras->add_option("--res", res, "cells per axis")->check(CLI::Range(1, 200));
    ras->add_option("--out", cfg.out, "raster CSV output path")->default_val("raster.csv");
    ras->add_flag("--plot", cfg.plot, "also render an SVG heatmap");
    ras->add_option("--region", region_path, "region JSON overlaid on the plot");

    CLI::App* plot = app.add_subcommand("plot", "re-render SVG from saved JSON/CSV");
    plot->add_option("--region", region_path, "region JSON");
    plot->add_option("--ssr", second_path, "second region JSON (overlay)");
    plot->add_option("--raster", raster_path, "raster CSV");
    plot->add_option("--out", cfg.out, "SVG output path")->default_val("region.svg");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (eval->parsed()) return cmd_eval(cfg);
        if (sim->parsed()) return cmd_simulate(cfg, dg, node_spec, unit_spec);
        if (ras->parsed()) {
            return cmd_raster(cfg, axes, axes_units, w1_range, w2_range, res, region_path);
        }
        if (plot->parsed()) return cmd_plot(region_path, second_path, raster_path, cfg.out);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const GridError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const BuildError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const VerificationFailed& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return 4;
    } catch (const NewtonDivergence& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const NonPhysical& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalFailure& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const NoRankOneFound& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
