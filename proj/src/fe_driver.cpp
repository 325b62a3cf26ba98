#include "gasdsr/fe_driver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "gasdsr/errors.hpp"
#include "gasdsr/thread_pool.hpp"

namespace gasdsr {

ProgramFamily dsr_family(const GasNetwork& net, const Grid& grid, const SystemState& initial,
                         Direction direction) {
    ProgramFamily fam;
    fam.relaxed_bound = [&net, &grid, &initial, direction] {
        return build_relaxed_bound(net, grid, initial, direction);
    };
    fam.capped = [&net, &grid, &initial, direction](double eta) {
        return build_dsr2(net, grid, initial, eta, direction);
    };
    fam.rank_min = [&net, &grid, &initial, direction] {
        return build_dsr1(net, grid, initial, direction);
    };
    return fam;
}

ProgramFamily ssr_family(const GasNetwork& net, Direction direction) {
    ProgramFamily fam;
    fam.relaxed_bound = [&net, direction] { return build_ssr_relaxed_bound(net, direction); };
    fam.capped = [&net, direction](double eta) { return build_ssr_capped(net, eta, direction); };
    fam.rank_min = [&net, direction] { return build_ssr(net, direction); };
    return fam;
}

namespace {

SampleRecord solve_sample(const ProgramFamily& family, double eta, const EvaluateOptions& opts,
                          LiftedSolution* solution_out, RatioReport* ratios_out) {
    const ConicProgram prog = family.capped(eta);
    const SolveResult res = solve(prog, opts.solver);
    SampleRecord rec;
    rec.eta = eta;
    rec.status = res.status;
    rec.fresh = true;
    if (res.status == SolveStatus::Optimal) {
        const RatioReport ratios = relaxation_ratio(prog, res.x, opts.ratio_threshold);
        rec.min_ratio = ratios.min_ratio;
        rec.rank_one = ratios.rank_one;
        rec.dg = prog.dg_index >= 0 ? res.x[prog.dg_index] : 0.0;
        if (solution_out) {
            solution_out->x = res.x;
            solution_out->objective = res.objective;
            solution_out->dg = rec.dg;
        }
        if (ratios_out) *ratios_out = ratios;
    }
    return rec;
}

} // namespace

BoundaryResult evaluate_boundary(const ProgramFamily& family, Direction direction,
                                 const EvaluateOptions& opts) {
    if (opts.samples < 3) throw BuildError("bisection needs at least 3 samples per round");

    BoundaryResult out;
    out.direction = direction;

    // Relaxation bound seeds the bracket.
    const SolveResult relaxed = solve(family.relaxed_bound(), opts.solver);
    if (relaxed.status != SolveStatus::Optimal) {
        throw NumericalFailure(std::string("relaxed bound program not optimal: ") +
                               to_string(relaxed.status));
    }
    double eta_min = std::min(relaxed.objective, 0.0);
    out.trace.eta_min = eta_min;
    const double epsilon =
        opts.epsilon > 0.0 ? opts.epsilon : 1e-3 * std::max(std::abs(eta_min), 1.0);
    out.trace.epsilon = epsilon;

    // Tightest cap first: if it is already rank-one the bound is exact.
    LiftedSolution best_solution;
    RatioReport best_ratios;
    SampleRecord at_min = solve_sample(family, eta_min, opts, &best_solution, &best_ratios);
    if (at_min.rank_one) {
        out.trace.short_circuit = true;
        out.certified = true;
        out.eta = eta_min;
        out.dg = at_min.dg;
        out.solution = best_solution;
        out.ratios = best_ratios;
        return out;
    }

    const int N = opts.samples;
    double lo = eta_min, hi = 0.0;
    SampleRecord lo_rec = at_min;
    SampleRecord hi_rec; // unknown until the first round solves it
    bool have_hi = false;

    struct Cached {
        LiftedSolution solution;
        RatioReport ratios;
    };
    Cached accepted;

    const int max_rounds = 200;
    for (int round = 0; round < max_rounds; ++round) {
        std::vector<double> etas(N);
        for (int i = 0; i < N; ++i) {
            etas[i] = lo + (hi - lo) * static_cast<double>(i) / (N - 1);
        }
        etas.front() = lo;
        etas.back() = hi;

        std::vector<SampleRecord> recs(N);
        std::vector<Cached> payload(N);
        recs.front() = lo_rec;
        recs.front().fresh = false;
        if (have_hi) {
            recs.back() = hi_rec;
            recs.back().fresh = false;
        }

        std::vector<int> to_solve;
        for (int i = 1; i < N - 1; ++i) to_solve.push_back(i);
        if (!have_hi) to_solve.push_back(N - 1);

        const int workers = opts.threads > 0 ? opts.threads : std::max(1, N - 2);
        {
            ThreadPool pool(std::min<int>(workers, static_cast<int>(to_solve.size())));
            std::vector<std::future<void>> futures;
            futures.reserve(to_solve.size());
            for (int i : to_solve) {
                futures.push_back(pool.submit([&, i] {
                    recs[i] = solve_sample(family, etas[i], opts, &payload[i].solution,
                                           &payload[i].ratios);
                }));
            }
            for (auto& f : futures) f.get(); // rethrows solver errors
        }

        int accepted_idx = -1;
        for (int i = 0; i < N; ++i) {
            if (recs[i].rank_one) {
                accepted_idx = i;
                break;
            }
        }

        BisectionRound trace_round;
        trace_round.samples = recs;
        if (accepted_idx < 0) {
            trace_round.bracket_lo = lo;
            trace_round.bracket_hi = hi;
            out.trace.rounds.push_back(std::move(trace_round));
            // Search failure: fall back to the uncapped rank-minimization
            // solution and flag the result as uncertified.
            const ConicProgram fallback = family.rank_min();
            const SolveResult res = solve(fallback, opts.solver);
            if (res.status != SolveStatus::Optimal) {
                throw NoRankOneFound("no rank-one sample and fallback solve failed");
            }
            out.certified = false;
            out.eta = 0.0;
            out.solution.x = res.x;
            out.solution.objective = res.objective;
            out.solution.dg = fallback.dg_index >= 0 ? res.x[fallback.dg_index] : 0.0;
            out.dg = out.solution.dg;
            out.ratios = relaxation_ratio(fallback, res.x, opts.ratio_threshold);
            return out;
        }

        // Smallest rank-one sample becomes the new upper end; its left
        // neighbour (clamped to the bracket) the new lower end.
        const int left = std::max(accepted_idx - 1, 0);
        lo = etas[left];
        hi = etas[accepted_idx];
        lo_rec = recs[left];
        hi_rec = recs[accepted_idx];
        have_hi = true;
        if (recs[accepted_idx].fresh) {
            accepted = payload[accepted_idx];
        }
        trace_round.bracket_lo = lo;
        trace_round.bracket_hi = hi;
        out.trace.rounds.push_back(std::move(trace_round));

        if (hi - lo <= epsilon) break;
    }

    out.certified = true;
    out.eta = hi;
    out.dg = hi_rec.dg;
    out.solution = accepted.solution;
    out.ratios = accepted.ratios;
    return out;
}

std::vector<double> withdrawals_for(const GasNetwork& net, double dg) {
    std::vector<double> w(net.units.size());
    for (size_t u = 0; u < net.units.size(); ++u) {
        w[u] = net.units[u].dispatch + net.units[u].beta * dg;
    }
    return w;
}

SecurityReport verify_boundary(const GasNetwork& net, const Grid& grid,
                               const SystemState& initial, const BoundaryResult& result,
                               double tol) {
    const Trajectory traj = simulate(net, grid, initial, withdrawals_for(net, result.dg));
    SecurityReport rep = check_security(traj, net, grid, tol);
    if (!rep.secure()) {
        std::ostringstream msg;
        msg << "boundary dG=" << result.dg << " fails security: ";
        for (const auto& v : rep.violations) {
            msg << "[" << v.location << " t=" << v.time << " by " << v.magnitude << "] ";
        }
        throw VerificationFailed(msg.str());
    }
    return rep;
}

std::string trace_to_json(const BisectionTrace& trace) {
    nlohmann::json doc;
    doc["eta_min"] = trace.eta_min;
    doc["epsilon"] = trace.epsilon;
    doc["short_circuit"] = trace.short_circuit;
    doc["rounds"] = nlohmann::json::array();
    for (const auto& round : trace.rounds) {
        nlohmann::json jr;
        jr["bracket"] = {round.bracket_lo, round.bracket_hi};
        jr["samples"] = nlohmann::json::array();
        for (const auto& s : round.samples) {
            nlohmann::json js;
            js["eta"] = s.eta;
            js["status"] = to_string(s.status);
            js["min_ratio"] = s.min_ratio;
            js["rank_one"] = s.rank_one;
            js["fresh"] = s.fresh;
            js["dg"] = s.dg;
            jr["samples"].push_back(std::move(js));
        }
        doc["rounds"].push_back(std::move(jr));
    }
    return doc.dump(2) + "\n";
}

} // namespace gasdsr
