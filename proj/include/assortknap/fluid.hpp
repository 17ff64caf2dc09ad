#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "assortknap/errors.hpp"
#include "assortknap/linprog.hpp"
#include "assortknap/model.hpp"

namespace assortknap {

/// Solution of a fluid relaxation. For the bisection solver the objective is
/// R(x); for the denominator-budget LP it is the un-normalized sum r_i v_i x_i.
struct FractionalSolution {
    std::vector<double> x;
    double objective = 0.0;
    double denominator = 1.0; // 1 + sum v_i x_i
    std::optional<double> lambda_final;
    std::vector<int> active_constraints;
};

namespace detail {

inline void check_gamma(const ModelInstance& instance, const std::vector<double>& gamma) {
    if (gamma.size() != static_cast<std::size_t>(instance.n_resources()))
        throw InputError("gamma must have M entries");
    for (double g : gamma)
        if (!(g >= 0.0) || !std::isfinite(g))
            throw InputError("gamma entries must be nonnegative and finite");
}

// Shared constraint block: cardinality row, then one row per resource with the
// consumption constraint rearranged into linear form,
//   sum_i (A_ij - gamma_j) v_i x_i <= gamma_j.
inline LinearProgram fluid_lp_base(const ModelInstance& instance,
                                   const std::vector<double>& gamma, int extra_rows) {
    const int n = instance.n_products();
    const int m = instance.n_resources();
    LinearProgram lp;
    lp.objective.assign(static_cast<std::size_t>(n), 0.0);
    lp.lower_bounds.assign(static_cast<std::size_t>(n), 0.0);
    lp.upper_bounds.assign(static_cast<std::size_t>(n), 1.0);
    const int rows = 1 + m + extra_rows;
    lp.constraint_matrix.assign(static_cast<std::size_t>(rows) * n, 0.0);
    lp.constraint_rhs.assign(static_cast<std::size_t>(rows), 0.0);
    for (int i = 0; i < n; ++i) lp.constraint_matrix[static_cast<std::size_t>(i)] = 1.0;
    lp.constraint_rhs[0] = instance.cardinality_cap();
    for (int j = 0; j < m; ++j) {
        const auto row = static_cast<std::size_t>(1 + j) * n;
        for (int i = 0; i < n; ++i)
            lp.constraint_matrix[row + static_cast<std::size_t>(i)] =
                (instance.consumption_at(i, j) - gamma[static_cast<std::size_t>(j)]) *
                instance.preference(i);
        lp.constraint_rhs[static_cast<std::size_t>(1 + j)] = gamma[static_cast<std::size_t>(j)];
    }
    return lp;
}

} // namespace detail

/// One bisection subproblem: maximize sum (r_i - lambda) v_i x_i over the
/// fluid feasible region.
inline LpSolution lambda_lp(const ModelInstance& instance, const std::vector<double>& gamma,
                            double lambda) {
    detail::check_gamma(instance, gamma);
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0,1]");
    LinearProgram lp = detail::fluid_lp_base(instance, gamma, 0);
    for (int i = 0; i < instance.n_products(); ++i)
        lp.objective[static_cast<std::size_t>(i)] =
            (instance.revenue(i) - lambda) * instance.preference(i);
    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal)
        throw SolverError("bisection subproblem did not solve to optimality");
    return sol;
}

/// Bisection solver for the fluid approximation. Returns a feasible point
/// whose revenue is within epsilon of the optimum; the bracket [0,1] halves
/// once per LP solve, so exactly ceil(log2(1/epsilon)) LPs are solved.
inline FractionalSolution solve_phi(const ModelInstance& instance,
                                    const std::vector<double>& gamma, double epsilon,
                                    int* lp_count = nullptr) {
    detail::check_gamma(instance, gamma);
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in (0,1)");
    double lambda_lo = 0.0, lambda_hi = 1.0;
    FractionalSolution best;
    best.x.assign(static_cast<std::size_t>(instance.n_products()), 0.0);
    int solves = 0;
    while (lambda_hi - lambda_lo > epsilon) {
        const double lambda = 0.5 * (lambda_lo + lambda_hi);
        LpSolution sol = lambda_lp(instance, gamma, lambda);
        ++solves;
        if (sol.objective_value >= lambda - 1e-12) {
            lambda_lo = lambda;
            best.x = detail::clip_unit_box(instance, sol.x);
            best.active_constraints = sol.active_constraints;
            best.lambda_final = lambda;
        } else {
            lambda_hi = lambda;
        }
    }
    if (lp_count) *lp_count = solves;
    best.denominator = 1.0;
    for (int i = 0; i < instance.n_products(); ++i)
        best.denominator += instance.preference(i) * best.x[static_cast<std::size_t>(i)];
    best.objective = fractional_revenue(instance, best.x);
    if (!best.lambda_final) best.lambda_final = lambda_lo; // nothing accepted: x = 0
    return best;
}

/// Denominator-budget relaxation: maximize sum r_i v_i x_i subject to the
/// fluid constraints plus 1 + sum v_i x_i <= s. The objective is stored
/// un-normalized.
inline FractionalSolution solve_psi(const ModelInstance& instance,
                                    const std::vector<double>& gamma, double s) {
    detail::check_gamma(instance, gamma);
    if (!(s >= 1.0)) throw InputError("denominator budget s must be >= 1");
    const int n = instance.n_products();
    const int m = instance.n_resources();
    LinearProgram lp = detail::fluid_lp_base(instance, gamma, 1);
    for (int i = 0; i < n; ++i)
        lp.objective[static_cast<std::size_t>(i)] = instance.revenue(i) * instance.preference(i);
    const auto denom_row = static_cast<std::size_t>(1 + m) * n;
    for (int i = 0; i < n; ++i)
        lp.constraint_matrix[denom_row + static_cast<std::size_t>(i)] = instance.preference(i);
    lp.constraint_rhs[static_cast<std::size_t>(1 + m)] = s - 1.0;
    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal)
        throw SolverError("denominator-budget LP did not solve to optimality");
    FractionalSolution out;
    out.x = detail::clip_unit_box(instance, sol.x);
    out.objective = sol.objective_value;
    out.denominator = 1.0;
    for (int i = 0; i < n; ++i)
        out.denominator += instance.preference(i) * out.x[static_cast<std::size_t>(i)];
    out.active_constraints = sol.active_constraints;
    return out;
}

/// Numerical check of the identity Phi(gamma) = Psi(gamma, 1 + sum v_i x^F_i)
/// / (1 + sum v_i x^F_i); returns the absolute discrepancy.
inline double lemma1_check(const ModelInstance& instance, const std::vector<double>& gamma,
                           double epsilon) {
    const FractionalSolution phi = solve_phi(instance, gamma, epsilon);
    const double s = phi.denominator;
    if (s <= 1.0 + 1e-15) {
        // x^F = 0: both sides are zero (Psi at s = 1 forces x = 0).
        return std::fabs(phi.objective);
    }
    const FractionalSolution psi = solve_psi(instance, gamma, s);
    return std::fabs(phi.objective - psi.objective / s);
}

} // namespace assortknap
