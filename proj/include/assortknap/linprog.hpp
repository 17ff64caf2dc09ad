#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "assortknap/errors.hpp"

namespace assortknap {

/// maximize c^T x  subject to  A x <= b,  lb <= x <= ub.
struct LinearProgram {
    std::vector<double> objective;         // n
    std::vector<double> constraint_matrix; // m x n, row-major
    std::vector<double> constraint_rhs;    // m
    std::vector<double> lower_bounds;      // n
    std::vector<double> upper_bounds;      // n

    int n_vars() const { return static_cast<int>(objective.size()); }
    int n_rows() const { return static_cast<int>(constraint_rhs.size()); }
    double coef(int row, int col) const {
        return constraint_matrix[static_cast<std::size_t>(row) * objective.size() + col];
    }
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;
    double objective_value = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> active_constraints; // rows with slack <= feas_tol
    std::vector<double> row_duals;       // multipliers of Ax <= b at the optimum
    int iterations = 0;
};

namespace detail {

/// Dense LU with partial pivoting; enough for basis matrices of a few dozen rows.
class LuFactors {
public:
    // Returns false when the matrix is numerically singular.
    bool factor(std::vector<double> a, int n) {
        n_ = n;
        lu_ = std::move(a);
        perm_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) perm_[static_cast<std::size_t>(i)] = i;
        for (int k = 0; k < n; ++k) {
            int piv = k;
            double best = std::fabs(at(k, k));
            for (int i = k + 1; i < n; ++i) {
                const double v = std::fabs(at(i, k));
                if (v > best) {
                    best = v;
                    piv = i;
                }
            }
            if (best < 1e-13) return false;
            if (piv != k) {
                std::swap(perm_[static_cast<std::size_t>(piv)], perm_[static_cast<std::size_t>(k)]);
                for (int j = 0; j < n; ++j) std::swap(at(piv, j), at(k, j));
            }
            const double d = at(k, k);
            for (int i = k + 1; i < n; ++i) {
                const double f = at(i, k) / d;
                at(i, k) = f;
                if (f == 0.0) continue;
                for (int j = k + 1; j < n; ++j) at(i, j) -= f * at(k, j);
            }
        }
        return true;
    }

    // Solves B x = rhs.
    void solve(const std::vector<double>& rhs, std::vector<double>& x) const {
        x.resize(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) x[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])];
        for (int i = 1; i < n_; ++i) {
            double s = x[static_cast<std::size_t>(i)];
            for (int j = 0; j < i; ++j) s -= at(i, j) * x[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(i)] = s;
        }
        for (int i = n_ - 1; i >= 0; --i) {
            double s = x[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < n_; ++j) s -= at(i, j) * x[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(i)] = s / at(i, i);
        }
    }

    // Solves B^T y = rhs.
    void solve_transpose(const std::vector<double>& rhs, std::vector<double>& y) const {
        std::vector<double> w(static_cast<std::size_t>(n_));
        // U^T z = rhs (forward), then L^T w = z (backward), then undo the row
        // permutation: y[perm[i]] = w[i].
        for (int i = 0; i < n_; ++i) {
            double s = rhs[static_cast<std::size_t>(i)];
            for (int j = 0; j < i; ++j) s -= at(j, i) * w[static_cast<std::size_t>(j)];
            w[static_cast<std::size_t>(i)] = s / at(i, i);
        }
        for (int i = n_ - 1; i >= 0; --i) {
            double s = w[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < n_; ++j) s -= at(j, i) * w[static_cast<std::size_t>(j)];
            w[static_cast<std::size_t>(i)] = s;
        }
        y.resize(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) y[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])] = w[static_cast<std::size_t>(i)];
    }

private:
    double& at(int i, int j) { return lu_[static_cast<std::size_t>(i) * n_ + j]; }
    double at(int i, int j) const { return lu_[static_cast<std::size_t>(i) * n_ + j]; }

    int n_ = 0;
    std::vector<double> lu_;
    std::vector<int> perm_;
};

/// Bounded-variable primal simplex over the working system [A I -E] = b,
/// where E holds one artificial column per initially violated row.
class BoundedSimplex {
public:
    BoundedSimplex(const LinearProgram& lp, double feas_tol, double opt_tol)
        : lp_(lp), feas_tol_(feas_tol), opt_tol_(opt_tol), n_(lp.n_vars()), m_(lp.n_rows()) {
        if (lp_.constraint_matrix.size() != static_cast<std::size_t>(n_) * m_)
            throw InputError("LP constraint matrix shape mismatch");
        if (static_cast<int>(lp_.lower_bounds.size()) != n_ ||
            static_cast<int>(lp_.upper_bounds.size()) != n_)
            throw InputError("LP bound vector shape mismatch");
        for (int j = 0; j < n_; ++j) {
            if (!(lp_.lower_bounds[static_cast<std::size_t>(j)] <= lp_.upper_bounds[static_cast<std::size_t>(j)]))
                throw InputError("LP lower bound exceeds upper bound");
            if (!std::isfinite(lp_.lower_bounds[static_cast<std::size_t>(j)]) ||
                !std::isfinite(lp_.upper_bounds[static_cast<std::size_t>(j)]))
                throw InputError("LP variable bounds must be finite");
        }
        for (double v : lp_.objective)
            if (!std::isfinite(v)) throw InputError("LP objective entries must be finite");
        for (double v : lp_.constraint_matrix)
            if (!std::isfinite(v)) throw InputError("LP matrix entries must be finite");
        for (double v : lp_.constraint_rhs)
            if (!std::isfinite(v)) throw InputError("LP rhs entries must be finite");
    }

    LpSolution run() {
        setup();
        LpSolution sol;
        if (need_phase1_) {
            const PhaseResult p1 = optimize(phase1_cost_);
            if (p1.outcome != PhaseResult::kOptimal)
                throw SolverError("phase-1 subproblem failed to converge");
            double infeasibility = 0.0;
            for (int r = 0; r < m_; ++r)
                if (art_index_[static_cast<std::size_t>(r)] >= 0)
                    infeasibility += value_of(art_index_[static_cast<std::size_t>(r)]);
            if (infeasibility > feas_tol_) {
                sol.status = LpStatus::infeasible;
                sol.iterations = iterations_;
                return sol;
            }
            // Artificials stay representable but pinned at zero for phase 2.
            for (int r = 0; r < m_; ++r) {
                const int a = art_index_[static_cast<std::size_t>(r)];
                if (a >= 0) ub_[static_cast<std::size_t>(a)] = 0.0;
            }
        }
        const PhaseResult p2 = optimize(phase2_cost_);
        sol.iterations = iterations_;
        if (p2.outcome == PhaseResult::kUnbounded) {
            sol.status = LpStatus::unbounded;
            return sol;
        }
        if (p2.outcome != PhaseResult::kOptimal)
            throw SolverError("simplex failed to converge within the iteration cap");
        finalize(sol);
        return sol;
    }

private:
    struct PhaseResult {
        enum Outcome { kOptimal, kUnbounded, kIterationCap } outcome = kOptimal;
    };

    static constexpr double kInf = std::numeric_limits<double>::infinity();
    static constexpr double kPivotTol = 1e-10;
    static constexpr int kIterationCap = 20000;

    void setup() {
        total_ = n_ + m_; // structural + slack; artificials appended on demand
        lb_.assign(static_cast<std::size_t>(total_), 0.0);
        ub_.assign(static_cast<std::size_t>(total_), kInf);
        for (int j = 0; j < n_; ++j) {
            lb_[static_cast<std::size_t>(j)] = lp_.lower_bounds[static_cast<std::size_t>(j)];
            ub_[static_cast<std::size_t>(j)] = lp_.upper_bounds[static_cast<std::size_t>(j)];
        }
        at_upper_.assign(static_cast<std::size_t>(total_), 0);
        in_basis_.assign(static_cast<std::size_t>(total_), 0);
        basis_.resize(static_cast<std::size_t>(m_));
        art_index_.assign(static_cast<std::size_t>(m_), -1);

        // All structural variables start nonbasic at their lower bound.
        std::vector<double> residual(lp_.constraint_rhs);
        for (int r = 0; r < m_; ++r)
            for (int j = 0; j < n_; ++j)
                residual[static_cast<std::size_t>(r)] -= lp_.coef(r, j) * lb_[static_cast<std::size_t>(j)];

        need_phase1_ = false;
        for (int r = 0; r < m_; ++r) {
            if (residual[static_cast<std::size_t>(r)] >= -1e-11) {
                basis_[static_cast<std::size_t>(r)] = n_ + r; // slack
                in_basis_[static_cast<std::size_t>(n_ + r)] = 1;
            } else {
                const int art = total_;
                lb_.push_back(0.0);
                ub_.push_back(kInf);
                at_upper_.push_back(0);
                in_basis_.push_back(1);
                art_row_.push_back(r);
                art_index_[static_cast<std::size_t>(r)] = art;
                basis_[static_cast<std::size_t>(r)] = art;
                ++total_;
                need_phase1_ = true;
            }
        }
        phase2_cost_.assign(static_cast<std::size_t>(total_), 0.0);
        for (int j = 0; j < n_; ++j) phase2_cost_[static_cast<std::size_t>(j)] = lp_.objective[static_cast<std::size_t>(j)];
        phase1_cost_.assign(static_cast<std::size_t>(total_), 0.0);
        for (int r = 0; r < m_; ++r)
            if (art_index_[static_cast<std::size_t>(r)] >= 0)
                phase1_cost_[static_cast<std::size_t>(art_index_[static_cast<std::size_t>(r)])] = -1.0;
        iterations_ = 0;
    }

    // Column of working variable j into out (dense, length m).
    void column(int j, std::vector<double>& out) const {
        out.assign(static_cast<std::size_t>(m_), 0.0);
        if (j < n_) {
            for (int r = 0; r < m_; ++r) out[static_cast<std::size_t>(r)] = lp_.coef(r, j);
        } else if (j < n_ + m_) {
            out[static_cast<std::size_t>(j - n_)] = 1.0;
        } else {
            out[static_cast<std::size_t>(art_row_[static_cast<std::size_t>(j - n_ - m_)])] = -1.0;
        }
    }

    double column_dot(int j, const std::vector<double>& y) const {
        if (j < n_) {
            double s = 0.0;
            for (int r = 0; r < m_; ++r) s += lp_.coef(r, j) * y[static_cast<std::size_t>(r)];
            return s;
        }
        if (j < n_ + m_) return y[static_cast<std::size_t>(j - n_)];
        return -y[static_cast<std::size_t>(art_row_[static_cast<std::size_t>(j - n_ - m_)])];
    }

    double bound_value(int j) const {
        return at_upper_[static_cast<std::size_t>(j)] ? ub_[static_cast<std::size_t>(j)] : lb_[static_cast<std::size_t>(j)];
    }

    double value_of(int j) const {
        if (in_basis_[static_cast<std::size_t>(j)]) {
            for (int r = 0; r < m_; ++r)
                if (basis_[static_cast<std::size_t>(r)] == j) return xb_[static_cast<std::size_t>(r)];
        }
        return bound_value(j);
    }

    void refactorize() {
        std::vector<double> bmat(static_cast<std::size_t>(m_) * m_, 0.0);
        std::vector<double> col;
        for (int r = 0; r < m_; ++r) {
            column(basis_[static_cast<std::size_t>(r)], col);
            for (int i = 0; i < m_; ++i) bmat[static_cast<std::size_t>(i) * m_ + r] = col[static_cast<std::size_t>(i)];
        }
        if (!lu_.factor(std::move(bmat), m_))
            throw SolverError("singular basis matrix in simplex");
        // x_B = B^{-1} (b - sum over nonbasic bound contributions)
        std::vector<double> rhs(lp_.constraint_rhs);
        std::vector<double> colbuf;
        for (int j = 0; j < total_; ++j) {
            if (in_basis_[static_cast<std::size_t>(j)]) continue;
            const double v = bound_value(j);
            if (v == 0.0) continue;
            column(j, colbuf);
            for (int r = 0; r < m_; ++r) rhs[static_cast<std::size_t>(r)] -= colbuf[static_cast<std::size_t>(r)] * v;
        }
        lu_.solve(rhs, xb_);
    }

    PhaseResult optimize(const std::vector<double>& cost) {
        PhaseResult result;
        int degenerate_streak = 0;
        bool bland = false;
        std::vector<double> cb(static_cast<std::size_t>(m_));
        std::vector<double> y, w, ecol;
        while (true) {
            if (++iterations_ > kIterationCap) {
                result.outcome = PhaseResult::kIterationCap;
                return result;
            }
            refactorize();
            for (int r = 0; r < m_; ++r) cb[static_cast<std::size_t>(r)] = cost[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])];
            lu_.solve_transpose(cb, y);

            // entering variable
            int enter = -1;
            double best_score = opt_tol_;
            for (int j = 0; j < total_; ++j) {
                if (in_basis_[static_cast<std::size_t>(j)]) continue;
                if (ub_[static_cast<std::size_t>(j)] - lb_[static_cast<std::size_t>(j)] <= 0.0) continue; // fixed
                const double d = cost[static_cast<std::size_t>(j)] - column_dot(j, y);
                const bool eligible = at_upper_[static_cast<std::size_t>(j)] ? (d < -opt_tol_) : (d > opt_tol_);
                if (!eligible) continue;
                if (bland) {
                    enter = j;
                    break;
                }
                if (std::fabs(d) > best_score) {
                    best_score = std::fabs(d);
                    enter = j;
                }
            }
            if (enter < 0) {
                result.outcome = PhaseResult::kOptimal;
                last_duals_ = y;
                return result;
            }

            const int dir = at_upper_[static_cast<std::size_t>(enter)] ? -1 : 1;
            column(enter, ecol);
            lu_.solve(ecol, w);

            // ratio test; candidate t for each blocking basic plus the bound flip
            double best_t = ub_[static_cast<std::size_t>(enter)] - lb_[static_cast<std::size_t>(enter)];
            int leave_row = -1; // -1 means bound flip
            bool leave_at_upper = false;
            double leave_pivot = 0.0;
            for (int r = 0; r < m_; ++r) {
                const double g = dir * w[static_cast<std::size_t>(r)];
                const int bv = basis_[static_cast<std::size_t>(r)];
                double t;
                bool hits_upper;
                if (g > kPivotTol) {
                    t = (xb_[static_cast<std::size_t>(r)] - lb_[static_cast<std::size_t>(bv)]) / g;
                    hits_upper = false;
                } else if (g < -kPivotTol) {
                    if (ub_[static_cast<std::size_t>(bv)] == kInf) continue;
                    t = (ub_[static_cast<std::size_t>(bv)] - xb_[static_cast<std::size_t>(r)]) / (-g);
                    hits_upper = true;
                } else {
                    continue;
                }
                if (t < 0.0) t = 0.0;
                bool take;
                if (leave_row < 0 && !(t < best_t + 1e-12)) {
                    take = false;
                } else if (t < best_t - 1e-12) {
                    take = true;
                } else if (t < best_t + 1e-12) {
                    if (leave_row < 0) {
                        take = true; // any genuine pivot beats a tied bound flip
                    } else if (bland) {
                        take = bv < basis_[static_cast<std::size_t>(leave_row)];
                    } else {
                        take = std::fabs(g) > std::fabs(leave_pivot);
                    }
                } else {
                    take = false;
                }
                if (take) {
                    best_t = std::min(best_t, t);
                    leave_row = r;
                    leave_at_upper = hits_upper;
                    leave_pivot = g;
                }
            }

            if (best_t == kInf) {
                result.outcome = PhaseResult::kUnbounded;
                return result;
            }
            if (best_t <= 1e-13) {
                if (++degenerate_streak > 2 * (n_ + m_) + 16) bland = true;
            } else {
                degenerate_streak = 0;
            }

            if (leave_row < 0) {
                at_upper_[static_cast<std::size_t>(enter)] ^= 1;
            } else {
                const int leaving = basis_[static_cast<std::size_t>(leave_row)];
                in_basis_[static_cast<std::size_t>(leaving)] = 0;
                at_upper_[static_cast<std::size_t>(leaving)] = leave_at_upper ? 1 : 0;
                basis_[static_cast<std::size_t>(leave_row)] = enter;
                in_basis_[static_cast<std::size_t>(enter)] = 1;
            }
        }
    }

    void finalize(LpSolution& sol) {
        refactorize();
        sol.x.resize(static_cast<std::size_t>(n_));
        for (int j = 0; j < n_; ++j) sol.x[static_cast<std::size_t>(j)] = value_of(j);
        sol.objective_value = 0.0;
        for (int j = 0; j < n_; ++j) sol.objective_value += lp_.objective[static_cast<std::size_t>(j)] * sol.x[static_cast<std::size_t>(j)];
        sol.status = LpStatus::optimal;
        sol.row_duals = last_duals_;
        sol.row_duals.resize(static_cast<std::size_t>(m_));
        sol.active_constraints.clear();
        double max_violation = 0.0;
        for (int r = 0; r < m_; ++r) {
            double slack = lp_.constraint_rhs[static_cast<std::size_t>(r)];
            for (int j = 0; j < n_; ++j) slack -= lp_.coef(r, j) * sol.x[static_cast<std::size_t>(j)];
            if (slack <= feas_tol_) sol.active_constraints.push_back(r);
            max_violation = std::max(max_violation, -slack);
        }
        for (int j = 0; j < n_; ++j) {
            max_violation = std::max(max_violation, lb_[static_cast<std::size_t>(j)] - sol.x[static_cast<std::size_t>(j)]);
            max_violation = std::max(max_violation, sol.x[static_cast<std::size_t>(j)] - ub_[static_cast<std::size_t>(j)]);
        }
        if (max_violation > feas_tol_)
            throw SolverError("simplex returned an infeasible point (violation " +
                              std::to_string(max_violation) + ")");
    }

    const LinearProgram& lp_;
    double feas_tol_;
    double opt_tol_;
    int n_;
    int m_;
    int total_ = 0;
    bool need_phase1_ = false;

    std::vector<double> lb_, ub_;
    std::vector<std::uint8_t> at_upper_, in_basis_;
    std::vector<int> basis_;
    std::vector<int> art_index_; // per row, -1 if none
    std::vector<int> art_row_;   // per artificial, its row
    std::vector<double> phase1_cost_, phase2_cost_;
    std::vector<double> xb_;
    std::vector<double> last_duals_;
    LuFactors lu_;
    int iterations_ = 0;
};

} // namespace detail

/// Solves a small dense LP. Deterministic: identical inputs give identical
/// outputs (Dantzig pricing, lowest-index tie breaks, Bland fallback after a
/// degenerate stall).
inline LpSolution solve_lp(const LinearProgram& lp, double feas_tol = 1e-9,
                           double opt_tol = 1e-9) {
    detail::BoundedSimplex simplex(lp, feas_tol, opt_tol);
    return simplex.run();
}

} // namespace assortknap
