#include "gasdsr/program.hpp"

#include <cstdio>
#include <sstream>

#include "gasdsr/errors.hpp"

namespace gasdsr {

void ConicProgram::add_cone(int gamma, int rho, int m, int pipe, int seg, int t) {
    Cone c;
    c.gamma = gamma;
    c.rho = rho;
    c.m = m;
    c.pipe = pipe;
    c.seg = seg;
    c.t = t;
    cones.push_back(c);
}

void ConicProgram::check() const {
    auto in_range = [&](int v) { return v >= 0 && v < n_vars; };
    for (size_t i = 0; i < cones.size(); ++i) {
        const Cone& c = cones[i];
        if (!in_range(c.gamma) || !in_range(c.rho) || !in_range(c.m)) {
            throw BuildError("cone " + std::to_string(i) + " references a variable out of range");
        }
        if (c.gamma == c.rho || c.gamma == c.m || c.rho == c.m) {
            throw BuildError("cone " + std::to_string(i) + " references duplicate variables");
        }
    }
    for (const auto& e : entries) {
        if (e.row() < 0 || e.row() >= n_rows || !in_range(e.col())) {
            throw BuildError("matrix entry out of range");
        }
    }
    for (int v = 0; v < n_vars; ++v) {
        if (lower[v] > upper[v]) {
            throw BuildError("variable '" + var_names[v] + "' has an empty bound interval");
        }
    }
}

ConeMatrix cone_matrix(const ConicProgram& prog, const std::vector<double>& x, int cone) {
    const auto& c = prog.cones[cone];
    return {x[c.gamma], x[c.m], x[c.rho]};
}

std::string dump_program(const ConicProgram& prog) {
    std::ostringstream out;
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "vars " << prog.n_vars << "\nrows " << prog.n_rows << "\n";
    out << "objective\n";
    for (int v = 0; v < prog.n_vars; ++v) {
        if (prog.objective[v] != 0.0) out << v << " " << fmt(prog.objective[v]) << "\n";
    }
    out << "equalities\n";
    for (const auto& e : prog.entries) {
        out << e.row() << " " << e.col() << " " << fmt(e.value()) << "\n";
    }
    out << "rhs\n";
    for (int r = 0; r < prog.n_rows; ++r) out << r << " " << fmt(prog.rhs[r]) << "\n";
    out << "bounds\n";
    for (int v = 0; v < prog.n_vars; ++v) {
        out << v << " " << fmt(prog.lower[v]) << " " << fmt(prog.upper[v]) << "\n";
    }
    out << "cones\n";
    for (const auto& c : prog.cones) {
        out << c.gamma << " " << c.rho << " " << c.m << "\n";
    }
    return out.str();
}

} // namespace gasdsr
