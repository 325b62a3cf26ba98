#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gasdsr/errors.hpp"
#include "gasdsr/program.hpp"
#include "gasdsr/solver.hpp"

using namespace gasdsr;

namespace {

// ---------------------------------------------------------------------------
// Independent oracles. These never call the interior-point code path: LPs are
// brute-forced by vertex enumeration with dense LU solves; conic instances
// are generated backwards from a dense KKT certificate, so their optimal
// value is known by construction.
// ---------------------------------------------------------------------------

struct LpOracle {
    bool feasible = false;
    double objective = 0.0;
};

// Enumerate active-bound subsets: a vertex of {Ax = b, lo <= x <= hi} pins
// n - rank(A) variables at bounds. Feasible bounded LPs attain their optimum
// at a vertex.
LpOracle lp_vertex_oracle(const ConicProgram& prog) {
    const int n = prog.n_vars;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(prog.n_rows, n);
    for (const auto& e : prog.entries) A(e.row(), e.col()) = e.value();
    Eigen::VectorXd b(prog.n_rows);
    for (int r = 0; r < prog.n_rows; ++r) b[r] = prog.rhs[r];

    const int free_count = n - prog.n_rows;
    LpOracle oracle;
    if (free_count < 0) return oracle;

    std::vector<int> pick(free_count);
    std::function<void(int, int)> recurse = [&](int start, int depth) {
        if (depth == free_count) {
            // For each pinned choice, try every lo/hi side combination.
            const int combos = 1 << free_count;
            for (int mask = 0; mask < combos; ++mask) {
                Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
                Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
                M.topRows(prog.n_rows) = A;
                rhs.head(prog.n_rows) = b;
                for (int k = 0; k < free_count; ++k) {
                    M(prog.n_rows + k, pick[k]) = 1.0;
                    rhs[prog.n_rows + k] =
                        (mask >> k) & 1 ? prog.upper[pick[k]] : prog.lower[pick[k]];
                }
                Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
                if (!lu.isInvertible()) continue;
                Eigen::VectorXd x = lu.solve(rhs);
                bool ok = true;
                for (int v = 0; v < n; ++v) {
                    if (x[v] < prog.lower[v] - 1e-9 || x[v] > prog.upper[v] + 1e-9) ok = false;
                }
                if ((A * x - b).cwiseAbs().maxCoeff() > 1e-9) ok = false;
                if (!ok) continue;
                double obj = 0.0;
                for (int v = 0; v < n; ++v) obj += prog.objective[v] * x[v];
                if (!oracle.feasible || obj < oracle.objective) {
                    oracle.feasible = true;
                    oracle.objective = obj;
                }
            }
            return;
        }
        for (int v = start; v < n; ++v) {
            pick[depth] = v;
            recurse(v + 1, depth + 1);
        }
    };
    recurse(0, 0);
    return oracle;
}

ConicProgram random_box_lp(std::mt19937& rng) {
    std::uniform_int_distribution<int> nd(3, 7);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    const int n = nd(rng);
    const int p = std::uniform_int_distribution<int>(1, n - 2)(rng);
    ConicProgram prog;
    for (int v = 0; v < n; ++v) {
        const double lo = ud(rng) - 1.5;
        prog.add_var("x" + std::to_string(v), lo, lo + std::abs(ud(rng)) + 0.3, ud(rng));
    }
    std::uniform_real_distribution<double> coef(-1.5, 1.5);
    for (int r = 0; r < p; ++r) {
        const int row = prog.add_row(0.0);
        double lhs_at_mid = 0.0;
        for (int v = 0; v < n; ++v) {
            const double c = coef(rng);
            if (std::abs(c) < 0.35) continue;
            prog.add_term(row, v, c);
            lhs_at_mid += c * 0.5 * (prog.lower[v] + prog.upper[v]);
        }
        // Anchor the right-hand side near the box midpoint so roughly half of
        // the instances stay feasible.
        prog.rhs[row] = lhs_at_mid + 0.25 * coef(rng);
    }
    return prog;
}

// Random conic program with a known optimal value: choose the primal point,
// the active set, and the multipliers; then derive c from stationarity.
struct Constructed {
    ConicProgram prog;
    double objective = 0.0;
};

Constructed constructed_socp(std::mt19937& rng) {
    std::uniform_int_distribution<int> nd(6, 30);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    const int n = nd(rng);
    const int n_cones = std::uniform_int_distribution<int>(1, std::min(10, n / 3))(rng);

    ConicProgram prog;
    Eigen::VectorXd xstar(n);
    // c0 encodes the complementary multipliers with y = 0; equality duals are
    // folded in afterwards (c = c0 - A'y keeps x* optimal for any y).
    Eigen::VectorXd c0 = Eigen::VectorXd::Zero(n);

    // Cone triples gamma*rho >= m^2: either active (gamma = m^2/rho, dual on
    // the boundary of the dual cone, orthogonal to the primal point) or slack
    // (zero dual).
    int v = 0;
    for (int k = 0; k < n_cones; ++k) {
        const double rho = 0.7 + std::abs(ud(rng));
        const double m = (ud(rng) < 0 ? -1.0 : 1.0) * (0.1 + std::abs(ud(rng)));
        const bool active = rng() % 2 == 0;
        const double gamma = m * m / rho + (active ? 0.0 : 0.4 + std::abs(ud(rng)));
        const int vg = prog.add_var("g" + std::to_string(k), 0.0, 50.0);
        const int vr = prog.add_var("r" + std::to_string(k), 0.05, 50.0);
        const int vm = prog.add_var("m" + std::to_string(k), -50.0, 50.0);
        prog.add_cone(vg, vr, vm, k, 0, 1);
        xstar[vg] = gamma;
        xstar[vr] = rho;
        xstar[vm] = m;
        if (active) {
            // z = t*(rho, gamma, -2m) lies in the dual cone and z.x* = 0.
            const double t = 0.2 + std::abs(ud(rng));
            c0[vg] = t * rho;
            c0[vr] = t * gamma;
            c0[vm] = t * (-2.0 * m);
        }
        v += 3;
    }
    // Remaining variables pinned at a box side or left interior.
    while (v < n) {
        const double lo = ud(rng) - 1.0;
        const double hi = lo + 0.5 + std::abs(ud(rng));
        const int idx = prog.add_var("x" + std::to_string(v), lo, hi);
        const int mode = static_cast<int>(rng() % 3);
        if (mode == 0) {
            xstar[idx] = lo;
            c0[idx] = 0.3 + std::abs(ud(rng)); // positive cost holds it down
        } else if (mode == 1) {
            xstar[idx] = hi;
            c0[idx] = -(0.3 + std::abs(ud(rng)));
        } else {
            xstar[idx] = 0.5 * (lo + hi);
        }
        ++v;
    }

    // A few equality rows through x*, with random duals shifted into c.
    const int p = std::uniform_int_distribution<int>(1, 4)(rng);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, n);
    Eigen::VectorXd y(p);
    for (int r = 0; r < p; ++r) {
        const int row = prog.add_row(0.0);
        for (int col = 0; col < n; ++col) {
            const double cval = ud(rng);
            if (std::abs(cval) < 0.5) continue;
            A(r, col) = cval;
            prog.add_term(row, col, cval);
        }
        prog.rhs[row] = A.row(r).dot(xstar);
        y[r] = ud(rng);
    }
    const Eigen::VectorXd c = c0 - A.transpose() * y;

    Constructed out;
    for (int col = 0; col < n; ++col) prog.objective[col] = c[col];
    out.prog = std::move(prog);
    out.objective = c.dot(xstar);
    return out;
}

ConicProgram infeasible_lp(std::mt19937& rng) {
    ConicProgram prog = random_box_lp(rng);
    // Two parallel rows demanding different values of the same expression.
    std::uniform_real_distribution<double> ud(0.5, 1.5);
    const int r1 = prog.add_row(0.0);
    const int r2 = prog.add_row(1.0 + ud(rng));
    for (int v = 0; v < prog.n_vars; ++v) {
        const double c = ud(rng);
        prog.add_term(r1, v, c);
        prog.add_term(r2, v, c);
    }
    return prog;
}

} // namespace

TEST_CASE("pinned variable") {
    ConicProgram prog;
    prog.add_var("x", 0.0, 10.0, 1.0);
    const int row = prog.add_row(1.0);
    prog.add_term(row, 0, 1.0);
    const SolveResult res = solve(prog);
    CHECK(res.status == SolveStatus::Optimal);
    CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("cone boundary minimum") {
    // min t s.t. (t, rho, m) in the rotated cone with rho = m = 1: t >= 1.
    ConicProgram prog;
    const int t = prog.add_var("t", 0.0, 100.0, 1.0);
    const int rho = prog.add_var("rho", 1.0, 1.0);
    const int m = prog.add_var("m", 1.0, 1.0);
    prog.add_cone(t, rho, m, 0, 0, 1);
    const SolveResult res = solve(prog);
    CHECK(res.status == SolveStatus::Optimal);
    CHECK(res.x[t] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.x[rho] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.x[m] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("free minimum inside a cone") {
    // min gamma + 0*others with m free and no pressure: gamma -> 0.
    ConicProgram prog;
    const int g = prog.add_var("g", 0.0, 10.0, 1.0);
    const int r = prog.add_var("r", 0.5, 2.0);
    const int m = prog.add_var("m", -5.0, 5.0);
    prog.add_cone(g, r, m, 0, 0, 1);
    const SolveResult res = solve(prog);
    CHECK(res.status == SolveStatus::Optimal);
    CHECK(res.objective == doctest::Approx(0.0).epsilon(1e-6));
    // returned point satisfies the cone
    CHECK(res.x[g] * res.x[r] >= res.x[m] * res.x[m] - 1e-8);
}

TEST_CASE("LP oracle agreement") {
    std::mt19937 rng(7);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const ConicProgram prog = random_box_lp(rng);
        const LpOracle oracle = lp_vertex_oracle(prog);
        const SolveResult res = solve(prog);
        if (oracle.feasible) {
            REQUIRE_MESSAGE(res.status == SolveStatus::Optimal, "trial ", trial);
            const double scale = std::max(1.0, std::abs(oracle.objective));
            CHECK_MESSAGE(std::abs(res.objective - oracle.objective) / scale < 1e-6, "trial ",
                          trial, " got ", res.objective, " want ", oracle.objective);
            ++checked;
        } else {
            CHECK_MESSAGE(res.status == SolveStatus::PrimalInfeasible, "trial ", trial);
        }
    }
    CHECK(checked > 10);
}

TEST_CASE("constructed conic optima") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const Constructed inst = constructed_socp(rng);
        const SolveResult res = solve(inst.prog);
        REQUIRE_MESSAGE(res.status == SolveStatus::Optimal, "trial ", trial);
        const double scale = std::max(1.0, std::abs(inst.objective));
        CHECK_MESSAGE(std::abs(res.objective - inst.objective) / scale < 1e-6, "trial ", trial,
                      " got ", res.objective, " want ", inst.objective);
        // every cone satisfied at the returned point
        for (const auto& cone : inst.prog.cones) {
            const double g = res.x[cone.gamma], r = res.x[cone.rho], m = res.x[cone.m];
            CHECK(2.0 * g * r - 2.0 * m * m >= -1e-7 * std::max(1.0, g + r));
        }
    }
}

TEST_CASE("infeasibility certificates") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 15; ++trial) {
        const ConicProgram prog = infeasible_lp(rng);
        const SolveResult res = solve(prog);
        CHECK_MESSAGE(res.status == SolveStatus::PrimalInfeasible, "trial ", trial);
    }
}

TEST_CASE("deterministic iterate sequence") {
    std::mt19937 rng(31);
    const Constructed inst = constructed_socp(rng);
    const SolveResult a = solve(inst.prog);
    const SolveResult b = solve(inst.prog);
    REQUIRE(a.mu_trace.size() == b.mu_trace.size());
    for (size_t i = 0; i < a.mu_trace.size(); ++i) {
        CHECK(a.mu_trace[i] == b.mu_trace[i]); // bitwise
    }
    REQUIRE(a.x.size() == b.x.size());
    for (size_t i = 0; i < a.x.size(); ++i) CHECK(a.x[i] == b.x[i]);
}

TEST_CASE("gap decreases overall") {
    std::mt19937 rng(43);
    const Constructed inst = constructed_socp(rng);
    const SolveResult res = solve(inst.prog);
    REQUIRE(res.status == SolveStatus::Optimal);
    REQUIRE(res.mu_trace.size() >= 2);
    CHECK(res.mu_trace.back() < res.mu_trace.front());
}
