#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

namespace gasdsr {

/// Linear objective, sparse linear equalities, variable boxes, and
/// three-variable rotated second-order cones gamma * rho >= m^2 referencing
/// variable triples. Cones carry their (pipe, segment, time) origin so lifted
/// solutions can be mapped back onto the grid.
struct ConicProgram {
    struct Cone {
        int gamma = -1;
        int rho = -1;
        int m = -1;
        int pipe = -1;
        int seg = -1;
        int t = -1;
    };

    int n_vars = 0;
    int n_rows = 0;
    std::vector<double> objective;
    std::vector<Eigen::Triplet<double>> entries; // equality system A x = b
    std::vector<double> rhs;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<Cone> cones;
    std::vector<std::string> var_names;
    int dg_index = -1; // total-adjustment variable, -1 if absent

    static constexpr double kInf = std::numeric_limits<double>::infinity();

    int add_var(std::string name, double lo, double hi, double cost = 0.0) {
        var_names.push_back(std::move(name));
        lower.push_back(lo);
        upper.push_back(hi);
        objective.push_back(cost);
        return n_vars++;
    }

    int add_row(double b) {
        rhs.push_back(b);
        return n_rows++;
    }

    void add_term(int row, int var, double coef) {
        if (coef != 0.0) entries.emplace_back(row, var, coef);
    }

    void add_cone(int gamma, int rho, int m, int pipe, int seg, int t);

    /// Throws BuildError if a cone or matrix entry is out of range or a cone
    /// references duplicate variables.
    void check() const;
};

/// Primal point of a lifted program together with its objective value and the
/// recovered total withdrawal adjustment.
struct LiftedSolution {
    std::vector<double> x;
    double objective = 0.0;
    double dg = 0.0;
};

/// 2x2 symmetric matrix [gamma m; m rho] for cone i at a primal point.
struct ConeMatrix {
    double gamma = 0.0;
    double m = 0.0;
    double rho = 0.0;
};

ConeMatrix cone_matrix(const ConicProgram& prog, const std::vector<double>& x, int cone);

/// Plain-text sparse-triplet dump (objective, equalities, bounds, cones) for
/// cross-checking against external tools.
std::string dump_program(const ConicProgram& prog);

} // namespace gasdsr
