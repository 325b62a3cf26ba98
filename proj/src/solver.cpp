#include "gasdsr/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "gasdsr/errors.hpp"

namespace gasdsr {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730951;

// ---------------------------------------------------------------------------
// Standard-form data: min c'x  s.t.  A x = b,  G x + s = h,  s in K,
// K = nonnegative orthant (n_lp coordinates) x (3-d second-order cones).
// Rotated cones gamma*rho >= m^2 are mapped onto plain second-order cones via
// the orthogonal change of coordinates ((g+r)/sqrt2, (g-r)/sqrt2, sqrt2 m).
// ---------------------------------------------------------------------------
struct Standard {
    int n = 0;
    int p = 0;
    int m = 0;
    int n_lp = 0;
    int n_soc = 0;
    SpMat A, At;
    SpMat G, Gt;
    Vec b, c, h;
    Vec col_scale;          // original x = x_scaled ./ col_scale
    Vec eq_row_scale;       // original y = y_scaled ./ eq_row_scale
    Vec in_row_scale;
    double data_norm = 1.0;
};

Standard to_standard(const ConicProgram& prog, int equil_iters) {
    prog.check();
    Standard sd;
    sd.n = prog.n_vars;

    std::vector<Triplet> a_entries = prog.entries;
    std::vector<double> b = prog.rhs;
    int n_eq = prog.n_rows;

    std::vector<Triplet> g_entries;
    std::vector<double> h;
    auto add_g = [&](int var, double coef, double rhs_val) {
        g_entries.emplace_back(static_cast<int>(h.size()), var, coef);
        h.push_back(rhs_val);
    };

    for (int v = 0; v < sd.n; ++v) {
        const double lo = prog.lower[v];
        const double hi = prog.upper[v];
        if (lo == hi) { // pinned variable: emit an equality instead of a slab
            a_entries.emplace_back(n_eq, v, 1.0);
            b.push_back(lo);
            ++n_eq;
            continue;
        }
        if (lo > -kInf) add_g(v, -1.0, -lo);
        if (hi < kInf) add_g(v, 1.0, hi);
    }
    sd.n_lp = static_cast<int>(h.size());
    sd.n_soc = static_cast<int>(prog.cones.size());
    for (const auto& cone : prog.cones) {
        g_entries.emplace_back(static_cast<int>(h.size()), cone.gamma, -1.0 / kSqrt2);
        g_entries.emplace_back(static_cast<int>(h.size()), cone.rho, -1.0 / kSqrt2);
        h.push_back(0.0);
        g_entries.emplace_back(static_cast<int>(h.size()), cone.gamma, -1.0 / kSqrt2);
        g_entries.emplace_back(static_cast<int>(h.size()), cone.rho, 1.0 / kSqrt2);
        h.push_back(0.0);
        g_entries.emplace_back(static_cast<int>(h.size()), cone.m, -kSqrt2);
        h.push_back(0.0);
    }
    if (h.empty()) { // keep the conic part nonempty
        g_entries.emplace_back(0, 0, 0.0);
        h.push_back(1.0);
        sd.n_lp = 1;
    }

    sd.p = n_eq;
    sd.m = static_cast<int>(h.size());
    sd.A.resize(sd.p, sd.n);
    sd.A.setFromTriplets(a_entries.begin(), a_entries.end());
    sd.G.resize(sd.m, sd.n);
    sd.G.setFromTriplets(g_entries.begin(), g_entries.end());
    sd.b = Eigen::Map<const Vec>(b.data(), sd.p);
    sd.h = Eigen::Map<const Vec>(h.data(), sd.m);
    sd.c = Eigen::Map<const Vec>(prog.objective.data(), sd.n);

    // Ruiz equilibration over the stacked constraint matrix. Rows belonging
    // to one second-order cone share a single scale so the cone geometry is
    // preserved.
    sd.col_scale = Vec::Ones(sd.n);
    Vec row_a = Vec::Ones(sd.p);
    Vec row_g = Vec::Ones(sd.m);
    for (int pass = 0; pass < equil_iters; ++pass) {
        Vec cnorm = Vec::Zero(sd.n);
        Vec ra = Vec::Zero(sd.p);
        Vec rg = Vec::Zero(sd.m);
        for (int j = 0; j < sd.n; ++j) {
            for (SpMat::InnerIterator it(sd.A, j); it; ++it) {
                const double v = std::abs(it.value());
                cnorm[j] = std::max(cnorm[j], v);
                ra[it.row()] = std::max(ra[it.row()], v);
            }
            for (SpMat::InnerIterator it(sd.G, j); it; ++it) {
                const double v = std::abs(it.value());
                cnorm[j] = std::max(cnorm[j], v);
                rg[it.row()] = std::max(rg[it.row()], v);
            }
        }
        for (int k = 0; k < sd.n_soc; ++k) {
            const int k0 = sd.n_lp + 3 * k;
            const double blk = std::max({rg[k0], rg[k0 + 1], rg[k0 + 2]});
            rg[k0] = rg[k0 + 1] = rg[k0 + 2] = blk;
        }
        auto scale_of = [](double v) { return v > 0.0 ? std::sqrt(v) : 1.0; };
        Vec dc(sd.n), da(sd.p), dg(sd.m);
        for (int j = 0; j < sd.n; ++j) dc[j] = scale_of(cnorm[j]);
        for (int i = 0; i < sd.p; ++i) da[i] = scale_of(ra[i]);
        for (int i = 0; i < sd.m; ++i) dg[i] = scale_of(rg[i]);
        for (int j = 0; j < sd.n; ++j) {
            for (SpMat::InnerIterator it(sd.A, j); it; ++it) {
                it.valueRef() /= da[it.row()] * dc[j];
            }
            for (SpMat::InnerIterator it(sd.G, j); it; ++it) {
                it.valueRef() /= dg[it.row()] * dc[j];
            }
        }
        sd.col_scale.array() *= dc.array();
        row_a.array() *= da.array();
        row_g.array() *= dg.array();
    }
    sd.b.array() /= row_a.array();
    sd.h.array() /= row_g.array();
    sd.c.array() /= sd.col_scale.array();
    sd.eq_row_scale = row_a;
    sd.in_row_scale = row_g;

    sd.At = sd.A.transpose();
    sd.Gt = sd.G.transpose();
    for (int j = 0; j < sd.n; ++j) {
        for (SpMat::InnerIterator it(sd.A, j); it; ++it) {
            sd.data_norm = std::max(sd.data_norm, std::abs(it.value()));
        }
        for (SpMat::InnerIterator it(sd.G, j); it; ++it) {
            sd.data_norm = std::max(sd.data_norm, std::abs(it.value()));
        }
    }
    sd.data_norm = std::max({sd.data_norm, sd.b.size() ? sd.b.cwiseAbs().maxCoeff() : 0.0,
                             sd.h.cwiseAbs().maxCoeff(),
                             sd.c.size() ? sd.c.cwiseAbs().maxCoeff() : 0.0});
    return sd;
}

// --------------------------- cone utilities -------------------------------

struct SocScaling {
    double eta2 = 1.0;       // scaling magnitude squared
    double q[3] = {1, 0, 0}; // unit scaling point (J-norm 1)
    double lam[3] = {0, 0, 0};
};

double soc_residual(const double* u) { return u[0] * u[0] - u[1] * u[1] - u[2] * u[2]; }

void soc_w_apply(const SocScaling& sc, const double* u, double* out) {
    const double eta = std::sqrt(sc.eta2);
    const double dot = sc.q[1] * u[1] + sc.q[2] * u[2];
    const double coef = u[0] + dot / (1.0 + sc.q[0]);
    out[0] = eta * (sc.q[0] * u[0] + dot);
    out[1] = eta * (u[1] + coef * sc.q[1]);
    out[2] = eta * (u[2] + coef * sc.q[2]);
}

void soc_winv_apply(const SocScaling& sc, const double* u, double* out) {
    const double eta = std::sqrt(sc.eta2);
    const double dot = sc.q[1] * u[1] + sc.q[2] * u[2];
    const double coef = -u[0] + dot / (1.0 + sc.q[0]);
    out[0] = (sc.q[0] * u[0] - dot) / eta;
    out[1] = (u[1] + coef * sc.q[1]) / eta;
    out[2] = (u[2] + coef * sc.q[2]) / eta;
}

void soc_w2_apply(const SocScaling& sc, const double* u, double* out) {
    const double dot = sc.q[0] * u[0] + sc.q[1] * u[1] + sc.q[2] * u[2];
    out[0] = sc.eta2 * (2.0 * sc.q[0] * dot - u[0]);
    out[1] = sc.eta2 * (2.0 * sc.q[1] * dot + u[1]);
    out[2] = sc.eta2 * (2.0 * sc.q[2] * dot + u[2]);
}

void jordan_prod(const double* u, const double* v, double* out) {
    out[0] = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    out[1] = u[0] * v[1] + v[0] * u[1];
    out[2] = u[0] * v[2] + v[0] * u[2];
}

// solve lam o x = d for x
bool jordan_div(const double* lam, const double* d, double* out) {
    const double res = soc_residual(lam);
    if (!(lam[0] > 0.0) || !(res > 0.0)) return false;
    out[0] = (lam[0] * d[0] - lam[1] * d[1] - lam[2] * d[2]) / res;
    out[1] = (d[1] - lam[1] * out[0]) / lam[0];
    out[2] = (d[2] - lam[2] * out[0]) / lam[0];
    return true;
}

// Largest step alpha with u + alpha * du staying in the cone.
double soc_step(const double* u, const double* du) {
    const double c2 = du[0] * du[0] - du[1] * du[1] - du[2] * du[2];
    const double c1 = 2.0 * (u[0] * du[0] - u[1] * du[1] - u[2] * du[2]);
    const double c0 = soc_residual(u);
    double alpha = kInf;
    if (du[0] < 0.0) alpha = std::min(alpha, -u[0] / du[0]);
    if (std::abs(c2) < 1e-300) {
        if (c1 < 0.0) alpha = std::min(alpha, -c0 / c1);
        return alpha;
    }
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) {
        // no boundary crossing on this ray
        return c2 > 0.0 ? alpha : 0.0;
    }
    const double sq = std::sqrt(disc);
    const double r1 = (-c1 - sq) / (2.0 * c2);
    const double r2 = (-c1 + sq) / (2.0 * c2);
    const double lo = std::min(r1, r2);
    const double hi = std::max(r1, r2);
    if (lo > 0.0) alpha = std::min(alpha, lo);
    else if (hi > 0.0) alpha = std::min(alpha, hi);
    return alpha;
}

// --------------------------- KKT system -----------------------------------

class KktSystem {
public:
    KktSystem(const Standard& sd, double static_reg) : sd_(sd), reg_(static_reg) {
        const int dim = sd.n + sd.p + sd.m;
        std::vector<Triplet> tri;
        tri.reserve(sd.A.nonZeros() + sd.G.nonZeros() + dim + 9 * sd.n_soc);
        for (int j = 0; j < sd.n; ++j) tri.emplace_back(j, j, reg_);
        for (int j = 0; j < sd.n; ++j) {
            for (SpMat::InnerIterator it(sd.A, j); it; ++it) {
                tri.emplace_back(sd.n + static_cast<int>(it.row()), j, it.value());
            }
            for (SpMat::InnerIterator it(sd.G, j); it; ++it) {
                tri.emplace_back(sd.n + sd.p + static_cast<int>(it.row()), j, it.value());
            }
        }
        for (int i = 0; i < sd.p; ++i) tri.emplace_back(sd.n + i, sd.n + i, -reg_);
        for (int k = 0; k < sd.n_lp; ++k) {
            const int i = sd.n + sd.p + k;
            tri.emplace_back(i, i, -1.0 - reg_);
        }
        for (int k = 0; k < sd.n_soc; ++k) {
            const int base = sd.n + sd.p + sd.n_lp + 3 * k;
            for (int a = 0; a < 3; ++a) {
                for (int bb = 0; bb <= a; ++bb) {
                    tri.emplace_back(base + a, base + bb, (a == bb) ? -1.0 - reg_ : 0.0);
                }
            }
        }
        K_.resize(dim, dim);
        K_.setFromTriplets(tri.begin(), tri.end());
        K_.makeCompressed();

        x_idx_.resize(sd.n);
        for (int j = 0; j < sd.n; ++j) x_idx_[j] = value_index(j, j);
        y_idx_.resize(sd.p);
        for (int i = 0; i < sd.p; ++i) y_idx_[i] = value_index(sd.n + i, sd.n + i);
        lp_idx_.resize(sd.n_lp);
        for (int k = 0; k < sd.n_lp; ++k) {
            lp_idx_[k] = value_index(sd.n + sd.p + k, sd.n + sd.p + k);
        }
        soc_idx_.resize(sd.n_soc);
        for (int k = 0; k < sd.n_soc; ++k) {
            const int base = sd.n + sd.p + sd.n_lp + 3 * k;
            int slot = 0;
            for (int a = 0; a < 3; ++a) {
                for (int bb = 0; bb <= a; ++bb) {
                    soc_idx_[k][slot++] = value_index(base + a, base + bb);
                }
            }
        }
        ldlt_.analyzePattern(K_);
    }

    /// Refresh the scaling block and refactor; escalates the regularization
    /// when the factorization degenerates. The perturbation scales with the
    /// entry magnitude so nearly-active constraints (tiny scaling weights)
    /// are not swamped.
    void factor(const Vec& w2_lp, const std::vector<SocScaling>& socs, int iteration) {
        double delta = reg_;
        for (int attempt = 0; attempt < 6; ++attempt) {
            double* vals = K_.valuePtr();
            for (int j = 0; j < sd_.n; ++j) vals[x_idx_[j]] = delta;
            for (int i = 0; i < sd_.p; ++i) vals[y_idx_[i]] = -delta;
            for (int k = 0; k < sd_.n_lp; ++k) {
                vals[lp_idx_[k]] = -w2_lp[k] * (1.0 + delta) - delta * delta;
            }
            for (int k = 0; k < sd_.n_soc; ++k) {
                const SocScaling& sc = socs[k];
                double blk[3][3];
                for (int a = 0; a < 3; ++a) {
                    for (int bb = 0; bb < 3; ++bb) {
                        const double jab = (a == bb) ? (a == 0 ? 1.0 : -1.0) : 0.0;
                        blk[a][bb] = sc.eta2 * (2.0 * sc.q[a] * sc.q[bb] - jab);
                    }
                }
                int slot = 0;
                for (int a = 0; a < 3; ++a) {
                    for (int bb = 0; bb <= a; ++bb) {
                        const double pert =
                            (a == bb) ? delta * std::max(delta, std::abs(blk[a][a])) : 0.0;
                        vals[soc_idx_[k][slot++]] = -blk[a][bb] - pert;
                    }
                }
            }
            ldlt_.factorize(K_);
            if (ldlt_.info() == Eigen::Success) {
                bool clean = true;
                const auto& d = ldlt_.vectorD();
                for (int i = 0; i < d.size(); ++i) {
                    if (!std::isfinite(d[i]) || d[i] == 0.0) {
                        clean = false;
                        break;
                    }
                }
                if (clean) return;
            }
            delta = std::max(delta * 100.0, 1e-8);
        }
        throw NumericalFailure("KKT factorization breakdown at iteration " +
                               std::to_string(iteration));
    }

    /// Solve with iterative refinement against the unregularized operator.
    /// Refinement is guarded: steps that fail to shrink the residual are
    /// rolled back (the regularized solve can otherwise feed divergence).
    Vec solve(const Vec& rhs, const Vec& w2_lp, const std::vector<SocScaling>& socs,
              int refine_steps) const {
        Vec xi = ldlt_.solve(rhs);
        double best_norm = (rhs - apply(xi, w2_lp, socs)).cwiseAbs().maxCoeff();
        const double first_norm = best_norm;
        for (int r = 0; r < refine_steps; ++r) {
            const Vec res = rhs - apply(xi, w2_lp, socs);
            const Vec trial = xi + ldlt_.solve(res);
            const double trial_norm = (rhs - apply(trial, w2_lp, socs)).cwiseAbs().maxCoeff();
            if (!(trial_norm < best_norm)) break;
            xi = trial;
            best_norm = trial_norm;
        }
        if (std::getenv("GASDSR_KKT_TRACE")) {
            std::fprintf(stderr, "  kkt solve: rhs %.3e raw %.3e refined %.3e\n",
                         rhs.cwiseAbs().maxCoeff(), first_norm, best_norm);
        }
        return xi;
    }

    /// [0 A' G'; A 0 0; G 0 -W^2] * v, without regularization.
    Vec apply(const Vec& v, const Vec& w2_lp, const std::vector<SocScaling>& socs) const {
        Vec out(sd_.n + sd_.p + sd_.m);
        const auto vx = v.head(sd_.n);
        const auto vy = v.segment(sd_.n, sd_.p);
        const auto vz = v.tail(sd_.m);
        out.head(sd_.n) = sd_.At * vy + sd_.Gt * vz;
        out.segment(sd_.n, sd_.p) = sd_.A * vx;
        Vec gz = sd_.G * vx;
        for (int k = 0; k < sd_.n_lp; ++k) gz[k] -= w2_lp[k] * vz[k];
        for (int k = 0; k < sd_.n_soc; ++k) {
            const int base = sd_.n_lp + 3 * k;
            double w2u[3];
            const double u[3] = {vz[base], vz[base + 1], vz[base + 2]};
            soc_w2_apply(socs[k], u, w2u);
            gz[base] -= w2u[0];
            gz[base + 1] -= w2u[1];
            gz[base + 2] -= w2u[2];
        }
        out.tail(sd_.m) = gz;
        return out;
    }

private:
    int value_index(int row, int col) const {
        for (int i = K_.outerIndexPtr()[col]; i < K_.outerIndexPtr()[col + 1]; ++i) {
            if (K_.innerIndexPtr()[i] == row) return i;
        }
        throw NumericalFailure("KKT pattern lookup failed");
    }

    const Standard& sd_;
    double reg_;
    SpMat K_;
    std::vector<int> x_idx_;
    std::vector<int> y_idx_;
    std::vector<int> lp_idx_;
    std::vector<std::array<int, 6>> soc_idx_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
};

} // namespace

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::PrimalInfeasible: return "primal_infeasible";
        case SolveStatus::DualInfeasible: return "dual_infeasible";
        case SolveStatus::MaxIterations: return "max_iterations";
    }
    return "unknown";
}

SolveResult solve(const ConicProgram& prog, const SolverOptions& opts) {
    const Standard sd = to_standard(prog, opts.equilibrate_iters);
    const int n = sd.n, p = sd.p, m = sd.m;
    KktSystem kkt(sd, opts.static_reg);

    Vec x = Vec::Zero(n), y = Vec::Zero(p), z = Vec::Zero(m), s = Vec::Zero(m);
    double tau = 1.0, kappa = 1.0;
    Vec w2_lp = Vec::Ones(sd.n_lp);
    std::vector<SocScaling> socs(sd.n_soc);
    Vec lam_lp = Vec::Zero(sd.n_lp);

    // Shift a candidate point into the cone interior (used only at setup).
    auto bring_to_cone = [&](Vec& u) {
        double alpha = -1.0;
        for (int k = 0; k < sd.n_lp; ++k) alpha = std::max(alpha, -u[k]);
        for (int k = 0; k < sd.n_soc; ++k) {
            const int base = sd.n_lp + 3 * k;
            alpha = std::max(alpha, std::hypot(u[base + 1], u[base + 2]) - u[base]);
        }
        if (alpha >= 0.0) {
            for (int k = 0; k < sd.n_lp; ++k) u[k] += 1.0 + alpha;
            for (int k = 0; k < sd.n_soc; ++k) u[sd.n_lp + 3 * k] += 1.0 + alpha;
        }
    };

    // Initial point from two least-squares-type solves with identity scaling.
    kkt.factor(w2_lp, socs, 0);
    {
        Vec rhs = Vec::Zero(n + p + m);
        rhs.segment(n, p) = sd.b;
        rhs.tail(m) = sd.h;
        Vec sol = kkt.solve(rhs, w2_lp, socs, opts.refine_steps);
        x = sol.head(n);
        s = -sol.tail(m);
        bring_to_cone(s);

        rhs.setZero();
        rhs.head(n) = -sd.c;
        sol = kkt.solve(rhs, w2_lp, socs, opts.refine_steps);
        y = sol.segment(n, p);
        z = sol.tail(m);
        bring_to_cone(z);
    }

    const double degree = sd.n_lp + sd.n_soc + 1.0;
    SolveResult result;

    auto cone_step = [&](const Vec& u, const Vec& du) {
        double alpha = kInf;
        for (int k = 0; k < sd.n_lp; ++k) {
            if (du[k] < 0.0) alpha = std::min(alpha, -u[k] / du[k]);
        }
        for (int k = 0; k < sd.n_soc; ++k) {
            const int base = sd.n_lp + 3 * k;
            alpha = std::min(alpha, soc_step(&u[base], &du[base]));
        }
        return alpha;
    };

    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        // Residuals of the self-dual system.
        Vec rx = sd.At * y + sd.Gt * z + sd.c * tau;
        Vec ry = sd.A * x - sd.b * tau;
        Vec rz = sd.G * x + s - sd.h * tau;
        const double ctx = sd.c.dot(x);
        const double bty = p ? sd.b.dot(y) : 0.0;
        const double htz = sd.h.dot(z);
        const double rkap = ctx + bty + htz + kappa;
        const double mu = (s.dot(z) + tau * kappa) / degree;
        result.mu_trace.push_back(mu);

        // Convergence and certificate tests on the tau-scaled point.
        const double pobj = ctx / tau;
        const double dobj = -(bty + htz) / tau;
        const double gap = s.dot(z) / (tau * tau);
        const double rel_gap = std::abs(gap) / std::max({1.0, std::abs(pobj), std::abs(dobj)});
        const double pres = std::max(p ? ry.cwiseAbs().maxCoeff() : 0.0,
                                     rz.cwiseAbs().maxCoeff()) /
                            (tau * (1.0 + std::max(p ? sd.b.cwiseAbs().maxCoeff() : 0.0,
                                                   sd.h.cwiseAbs().maxCoeff())));
        const double dres = rx.cwiseAbs().maxCoeff() /
                            (tau * (1.0 + (n ? sd.c.cwiseAbs().maxCoeff() : 0.0)));
        result.gap = gap;
        result.rel_gap = rel_gap;
        result.primal_residual = pres;
        result.dual_residual = dres;

        if (std::getenv("GASDSR_SOLVER_TRACE")) {
            std::fprintf(stderr, "it %3d mu %.3e tau %.3e kappa %.3e pres %.3e dres %.3e gap %.3e\n",
                         it, mu, tau, kappa, pres, dres, rel_gap);
        }

        if (pres <= opts.feas_tol && dres <= opts.feas_tol && rel_gap <= opts.gap_tol) {
            result.status = SolveStatus::Optimal;
            break;
        }
        // Farkas-type certificates. Scale-free: normalize by the certificate's
        // own objective value.
        const double infeas_tol = opts.feas_tol * sd.data_norm;
        if (bty + htz < -1e-10) {
            const double nu = -(bty + htz);
            const double res = (sd.At * y + sd.Gt * z).cwiseAbs().maxCoeff() / nu;
            if (res <= infeas_tol && tau <= 1e-6 * kappa) {
                result.status = SolveStatus::PrimalInfeasible;
                break;
            }
        }
        if (ctx < -1e-10) {
            const double nu = -ctx;
            const double res_eq = p ? (sd.A * x).cwiseAbs().maxCoeff() / nu : 0.0;
            const double res_in = (sd.G * x + s).cwiseAbs().maxCoeff() / nu;
            if (std::max(res_eq, res_in) <= infeas_tol && tau <= 1e-6 * kappa) {
                result.status = SolveStatus::DualInfeasible;
                break;
            }
        }

        // Nesterov-Todd scalings.
        bool scaling_ok = true;
        for (int k = 0; k < sd.n_lp; ++k) {
            if (!(s[k] > 0.0) || !(z[k] > 0.0)) {
                scaling_ok = false;
                break;
            }
            w2_lp[k] = s[k] / z[k];
            lam_lp[k] = std::sqrt(s[k] * z[k]);
        }
        if (scaling_ok) {
            for (int k = 0; k < sd.n_soc; ++k) {
                const int base = sd.n_lp + 3 * k;
                const double sres = soc_residual(&s[base]);
                const double zres = soc_residual(&z[base]);
                if (!(sres > 0.0) || !(zres > 0.0)) {
                    scaling_ok = false;
                    break;
                }
                SocScaling& sc = socs[k];
                sc.eta2 = std::sqrt(sres / zres);
                const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
                double sbar[3], zbar[3];
                for (int d = 0; d < 3; ++d) {
                    sbar[d] = s[base + d] / snorm;
                    zbar[d] = z[base + d] / znorm;
                }
                const double gamma = std::sqrt(
                    (1.0 + sbar[0] * zbar[0] + sbar[1] * zbar[1] + sbar[2] * zbar[2]) / 2.0);
                sc.q[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
                sc.q[1] = (sbar[1] - zbar[1]) / (2.0 * gamma);
                sc.q[2] = (sbar[2] - zbar[2]) / (2.0 * gamma);
                double wz[3];
                soc_w_apply(sc, &z[base], wz);
                sc.lam[0] = wz[0];
                sc.lam[1] = wz[1];
                sc.lam[2] = wz[2];
            }
        }
        if (!scaling_ok) {
            result.status = SolveStatus::MaxIterations;
            break;
        }

        kkt.factor(w2_lp, socs, it + 1);

        // Constant-column solve, reused for both step computations.
        Vec rhs1(n + p + m);
        rhs1.head(n) = -sd.c;
        rhs1.segment(n, p) = sd.b;
        rhs1.tail(m) = sd.h;
        const Vec xi1 = kkt.solve(rhs1, w2_lp, socs, opts.refine_steps);
        const double denom_raw = sd.c.dot(xi1.head(n)) + (p ? sd.b.dot(xi1.segment(n, p)) : 0.0) +
                                 sd.h.dot(xi1.tail(m)) - kappa / tau;

        // d_c is the target of the scaled complementarity equation
        // lam o (W dz + W^-T ds) = d_c; ds is eliminated through it. Returns
        // false when a cone scaling degenerated (iterate on the boundary).
        auto take_step = [&](double f, const Vec& dc_lp, const std::vector<std::array<double, 3>>& dc_soc,
                             double d_taukappa, Vec& dx, Vec& dy, Vec& dz, Vec& ds, double& dtau,
                             double& dkappa) -> bool {
            Vec rhs0(n + p + m);
            rhs0.head(n) = -f * rx;
            rhs0.segment(n, p) = -f * ry;
            // -f*rz - W(lam \ d_c)
            Vec zpart = -f * rz;
            for (int k = 0; k < sd.n_lp; ++k) {
                zpart[k] -= std::sqrt(w2_lp[k]) * (dc_lp[k] / lam_lp[k]);
            }
            for (int k = 0; k < sd.n_soc; ++k) {
                const int base = sd.n_lp + 3 * k;
                double div[3], wdiv[3];
                if (!jordan_div(socs[k].lam, dc_soc[k].data(), div)) return false;
                soc_w_apply(socs[k], div, wdiv);
                zpart[base] -= wdiv[0];
                zpart[base + 1] -= wdiv[1];
                zpart[base + 2] -= wdiv[2];
            }
            rhs0.tail(m) = zpart;
            const Vec xi0 = kkt.solve(rhs0, w2_lp, socs, opts.refine_steps);

            const double num = -f * rkap - d_taukappa / tau -
                               (sd.c.dot(xi0.head(n)) + (p ? sd.b.dot(xi0.segment(n, p)) : 0.0) +
                                sd.h.dot(xi0.tail(m)));
            dtau = num / denom_raw;
            // The constant-column solution xi1 grows ill-conditioned as the
            // embedding degenerates; it is only trusted for the dtau scalar.
            // The direction itself comes from a fresh solve with dtau folded
            // into the right-hand side, which stays residual-sized.
            Vec rhs_full = rhs0;
            rhs_full.head(n) -= dtau * sd.c;
            rhs_full.segment(n, p) += dtau * sd.b;
            rhs_full.tail(m) += dtau * sd.h;
            const Vec xi = kkt.solve(rhs_full, w2_lp, socs, opts.refine_steps);
            dx = xi.head(n);
            dy = xi.segment(n, p);
            dz = xi.tail(m);
            // ds = W(lam \ d_c - W dz)
            ds.resize(m);
            for (int k = 0; k < sd.n_lp; ++k) {
                const double w = std::sqrt(w2_lp[k]);
                ds[k] = w * (dc_lp[k] / lam_lp[k] - w * dz[k]);
            }
            for (int k = 0; k < sd.n_soc; ++k) {
                const int base = sd.n_lp + 3 * k;
                double div[3] = {0, 0, 0}, wdz[3], tmp[3], out[3];
                if (!jordan_div(socs[k].lam, dc_soc[k].data(), div)) return false;
                soc_w_apply(socs[k], &dz[base], wdz);
                for (int d = 0; d < 3; ++d) tmp[d] = div[d] - wdz[d];
                soc_w_apply(socs[k], tmp, out);
                ds[base] = out[0];
                ds[base + 1] = out[1];
                ds[base + 2] = out[2];
            }
            dkappa = (d_taukappa - kappa * dtau) / tau;
            return true;
        };

        // Predictor: pure Newton direction, d_c = -lam o lam.
        Vec dc_lp_aff(sd.n_lp);
        for (int k = 0; k < sd.n_lp; ++k) dc_lp_aff[k] = -lam_lp[k] * lam_lp[k];
        std::vector<std::array<double, 3>> dc_soc_aff(sd.n_soc);
        for (int k = 0; k < sd.n_soc; ++k) {
            double ll[3];
            jordan_prod(socs[k].lam, socs[k].lam, ll);
            dc_soc_aff[k] = {-ll[0], -ll[1], -ll[2]};
        }
        Vec dxa, dya, dza, dsa;
        double dtaua, dkappaa;
        if (!take_step(1.0, dc_lp_aff, dc_soc_aff, -tau * kappa, dxa, dya, dza, dsa, dtaua,
                       dkappaa)) {
            result.status = SolveStatus::MaxIterations;
            break;
        }

        double alpha_aff = std::min(cone_step(s, dsa), cone_step(z, dza));
        if (dtaua < 0.0) alpha_aff = std::min(alpha_aff, -tau / dtaua);
        if (dkappaa < 0.0) alpha_aff = std::min(alpha_aff, -kappa / dkappaa);
        alpha_aff = std::min(alpha_aff, 1.0);

        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), 1e-8, 0.999);

        // Corrector: recenters toward sigma*mu and removes the Mehrotra
        // second-order term (W^-T ds_aff) o (W dz_aff).
        Vec dc_lp(sd.n_lp);
        for (int k = 0; k < sd.n_lp; ++k) {
            dc_lp[k] = sigma * mu - lam_lp[k] * lam_lp[k] - dsa[k] * dza[k];
        }
        std::vector<std::array<double, 3>> dc_soc(sd.n_soc);
        for (int k = 0; k < sd.n_soc; ++k) {
            const int base = sd.n_lp + 3 * k;
            double ll[3], winv_ds[3], w_dz[3], corr[3];
            jordan_prod(socs[k].lam, socs[k].lam, ll);
            soc_winv_apply(socs[k], &dsa[base], winv_ds);
            soc_w_apply(socs[k], &dza[base], w_dz);
            jordan_prod(winv_ds, w_dz, corr);
            dc_soc[k] = {sigma * mu - ll[0] - corr[0], -ll[1] - corr[1], -ll[2] - corr[2]};
        }
        Vec dx, dy, dz, ds;
        double dtau, dkappa;
        if (!take_step(1.0 - sigma, dc_lp, dc_soc, sigma * mu - tau * kappa - dtaua * dkappaa, dx,
                       dy, dz, ds, dtau, dkappa)) {
            result.status = SolveStatus::MaxIterations;
            break;
        }

        double alpha = std::min(cone_step(s, ds), cone_step(z, dz));
        if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
        if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
        alpha = std::min(opts.step_fraction * alpha, 1.0);
        if (!std::isfinite(alpha) || alpha <= 0.0) {
            result.status = SolveStatus::MaxIterations;
            break;
        }

        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if (!(tau > 0.0) || !(kappa > 0.0) || !std::isfinite(tau)) {
            result.status = SolveStatus::MaxIterations;
            break;
        }
    }
    result.iterations = it;

    // Unscale into the original variable space.
    result.x.resize(n);
    for (int j = 0; j < n; ++j) result.x[j] = x[j] / (sd.col_scale[j] * tau);
    result.y.resize(p);
    for (int i = 0; i < p; ++i) result.y[i] = y[i] / (sd.eq_row_scale[i] * tau);
    result.z.resize(m);
    for (int i = 0; i < m; ++i) result.z[i] = z[i] / (sd.in_row_scale[i] * tau);
    result.objective = 0.0;
    for (int j = 0; j < n; ++j) result.objective += prog.objective[j] * result.x[j];
    return result;
}

} // namespace gasdsr

