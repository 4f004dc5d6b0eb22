#include "sess/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace sess {

namespace {

constexpr double kFeasTol = 1e-7;
constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-11;
constexpr double kDropTol = 1e-13;

// Bounded-variable simplex working state. All nonbasic variables sit at 0 in
// the working coordinates: a variable parked at its upper bound is stored
// complemented (x_hat = u - x), so the textbook lower-bound pivot rules apply
// throughout and only the readout needs to undo the complement.
struct Tableau {
    std::size_t m = 0;       // rows
    std::size_t ncols = 0;   // structural + slack + artificial columns
    std::size_t width = 0;   // ncols + 1 (rhs)
    std::vector<double> t;   // m x width, row-major
    std::vector<double> cost;        // width: reduced costs + (-objective)
    std::vector<double> upper;       // per column; kInf when unbounded above
    std::vector<char> flipped;       // complemented state per column
    std::vector<char> enterable;     // artificials/fixed vars are blocked
    std::vector<int> basis;          // column basic in each row

    double* row(std::size_t i) { return t.data() + i * width; }
    double rhs(std::size_t i) const { return t[i * width + ncols]; }
    double& rhs_ref(std::size_t i) { return t[i * width + ncols]; }
};

void axpy(double* y, const double* x, double a, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] -= a * x[k];
}

// Gauss-Jordan pivot on (r, e), cost row included.
void pivot(Tableau& tb, std::size_t r, std::size_t e) {
    double* pr = tb.row(r);
    const double p = pr[e];
    const double inv = 1.0 / p;
    for (std::size_t k = 0; k < tb.width; ++k) pr[k] *= inv;
    pr[e] = 1.0;
    for (std::size_t i = 0; i < tb.m; ++i) {
        if (i == r) continue;
        double* ri = tb.row(i);
        const double f = ri[e];
        if (std::fabs(f) > kDropTol) {
            axpy(ri, pr, f, tb.width);
            ri[e] = 0.0;
        } else {
            ri[e] = 0.0;
        }
    }
    const double f = tb.cost[e];
    if (std::fabs(f) > 0.0) {
        axpy(tb.cost.data(), pr, f, tb.width);
        tb.cost[e] = 0.0;
    }
    tb.basis[r] = static_cast<int>(e);
}

// Re-anchor nonbasic column e from 0 to its upper bound (bound flip).
void flip_column(Tableau& tb, std::size_t e) {
    const double u = tb.upper[e];
    for (std::size_t i = 0; i < tb.m; ++i) {
        double* ri = tb.row(i);
        const double a = ri[e];
        if (a != 0.0) {
            ri[tb.ncols] -= a * u;
            ri[e] = -a;
        }
    }
    tb.cost[tb.ncols] -= tb.cost[e] * u;
    tb.cost[e] = -tb.cost[e];
    tb.flipped[e] = !tb.flipped[e];
}

// Substitute a basic variable by its complement so it can leave at 0.
// Its column is the unit vector of row r, so only that row changes.
void flip_basic_row(Tableau& tb, std::size_t r) {
    const std::size_t b = static_cast<std::size_t>(tb.basis[r]);
    const double u = tb.upper[b];
    double* pr = tb.row(r);
    for (std::size_t k = 0; k < tb.width; ++k) pr[k] = -pr[k];
    pr[b] = 1.0;
    pr[tb.ncols] += u;
    tb.flipped[b] = !tb.flipped[b];
}

struct StepResult {
    enum Kind { done, moved, unbounded, stuck } kind = done;
};

// One simplex iteration. `bland` forces the anti-cycling entering rule.
StepResult step(Tableau& tb, bool bland, bool& degenerate) {
    // Entering column: most negative reduced cost, lowest index on ties;
    // under Bland's rule, the lowest eligible index.
    std::size_t e = tb.ncols;
    double best = -kCostTol;
    for (std::size_t j = 0; j < tb.ncols; ++j) {
        if (!tb.enterable[j]) continue;
        const double d = tb.cost[j];
        if (d < best || (bland && d < -kCostTol)) {
            best = d;
            e = j;
            if (bland) break;
        }
    }
    if (e == tb.ncols) return {StepResult::done};

    // Ratio test: entering grows from 0; basics must stay within [0, upper].
    // Pass 1 finds the minimum ratio.
    double limit = tb.upper[e];
    bool row_limited = false;
    bool suspicious = false;
    for (std::size_t i = 0; i < tb.m; ++i) {
        const double* ri = tb.row(i);
        const double y = ri[e];
        const double ay = std::fabs(y);
        if (ay <= kPivotTol) {
            if (ay > kDropTol) suspicious = true;
            continue;
        }
        double ratio;
        if (y > 0.0) {
            ratio = ri[tb.ncols] / y;
        } else {
            const double u = tb.upper[static_cast<std::size_t>(tb.basis[i])];
            if (u == kInf) continue;
            ratio = (u - ri[tb.ncols]) / (-y);
        }
        if (ratio < 0.0) ratio = 0.0;
        if (ratio <= limit) {
            limit = ratio;
            row_limited = true;
        }
    }

    if (limit == kInf) {
        StepResult r;
        r.kind = suspicious ? StepResult::stuck : StepResult::unbounded;
        return r;
    }

    degenerate = (limit <= 1e-12);

    if (!row_limited) {
        flip_column(tb, e);   // entering variable travels to its own bound
        return {StepResult::moved};
    }

    // Pass 2: among rows within tolerance of the minimum, pick the largest
    // pivot magnitude (lowest row on ties); Bland mode picks the lowest
    // basic-variable index instead, which is what the anti-cycling proof needs.
    const double cutoff = limit + 1e-12 * (1.0 + limit);
    std::size_t lrow = tb.m;
    double best_mag = 0.0;
    int best_var = -1;
    for (std::size_t i = 0; i < tb.m; ++i) {
        const double* ri = tb.row(i);
        const double y = ri[e];
        if (std::fabs(y) <= kPivotTol) continue;
        double ratio;
        if (y > 0.0) {
            ratio = ri[tb.ncols] / y;
        } else {
            const double u = tb.upper[static_cast<std::size_t>(tb.basis[i])];
            if (u == kInf) continue;
            ratio = (u - ri[tb.ncols]) / (-y);
        }
        if (ratio < 0.0) ratio = 0.0;
        if (ratio > cutoff) continue;
        if (bland) {
            if (best_var < 0 || tb.basis[i] < best_var) {
                best_var = tb.basis[i];
                lrow = i;
            }
        } else if (std::fabs(y) > best_mag) {
            best_mag = std::fabs(y);
            lrow = i;
        }
    }
    if (lrow == tb.m) {   // numerically ambiguous; fall back to the bound
        if (tb.upper[e] == kInf) return {StepResult::stuck};
        flip_column(tb, e);
        return {StepResult::moved};
    }
    if (tb.row(lrow)[e] < 0.0) flip_basic_row(tb, lrow);
    pivot(tb, lrow, e);
    return {StepResult::moved};
}

// Runs simplex to optimality of the current cost row.
// Returns done/unbounded/stuck.
StepResult::Kind optimize(Tableau& tb, std::size_t iter_cap) {
    std::size_t degen_streak = 0;
    const std::size_t bland_after = 64 + 2 * (tb.m + tb.ncols);
    bool bland = false;
    for (std::size_t it = 0; it < iter_cap; ++it) {
        bool degenerate = false;
        const StepResult r = step(tb, bland, degenerate);
        if (r.kind != StepResult::moved) return r.kind;
        if (degenerate) {
            if (++degen_streak > bland_after) bland = true;
        } else {
            degen_streak = 0;
            bland = false;
        }
    }
    return StepResult::stuck;
}

} // namespace

void LpProblem::add_eq_row(const std::vector<double>& coeffs, double rhs) {
    if (coeffs.size() != num_vars()) throw std::invalid_argument("lp: eq row width mismatch");
    const std::size_t n = num_vars();
    Mat next(a_eq.rows() + 1, n);
    std::memcpy(next.data().data(), a_eq.data().data(), a_eq.data().size() * sizeof(double));
    std::memcpy(next.row(a_eq.rows()), coeffs.data(), n * sizeof(double));
    a_eq = std::move(next);
    b_eq.push_back(rhs);
}

void LpProblem::add_ub_row(const std::vector<double>& coeffs, double rhs) {
    if (coeffs.size() != num_vars()) throw std::invalid_argument("lp: ub row width mismatch");
    const std::size_t n = num_vars();
    Mat next(a_ub.rows() + 1, n);
    std::memcpy(next.data().data(), a_ub.data().data(), a_ub.data().size() * sizeof(double));
    std::memcpy(next.row(a_ub.rows()), coeffs.data(), n * sizeof(double));
    a_ub = std::move(next);
    b_ub.push_back(rhs);
}

void LpProblem::check() const {
    const std::size_t n = num_vars();
    if (lo.size() != n || hi.size() != n) throw std::invalid_argument("lp: bounds size mismatch");
    if (!a_eq.empty() && a_eq.cols() != n) throw std::invalid_argument("lp: a_eq width mismatch");
    if (!a_ub.empty() && a_ub.cols() != n) throw std::invalid_argument("lp: a_ub width mismatch");
    if (a_eq.rows() != b_eq.size()) throw std::invalid_argument("lp: b_eq size mismatch");
    if (a_ub.rows() != b_ub.size()) throw std::invalid_argument("lp: b_ub size mismatch");
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(lo[j])) throw std::invalid_argument("lp: lower bound must be finite");
        if (lo[j] > hi[j]) throw std::invalid_argument("lp: lo > hi");
    }
}

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::numerical_error: return "numerical_error";
    }
    return "?";
}

LpSolution solve_lp(const LpProblem& p) {
    p.check();
    const std::size_t n = p.num_vars();
    const std::size_t me = p.a_eq.rows();
    const std::size_t mi = p.a_ub.rows();
    const std::size_t m = me + mi;

    LpSolution sol;

    // Shift to x' = x - lo, so all structural variables live in [0, u].
    std::vector<double> u(n);
    double shift_cost = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        u[j] = p.hi[j] - p.lo[j];
        shift_cost += p.objective[j] * p.lo[j];
    }

    std::vector<double> beq(me), bub(mi);
    for (std::size_t i = 0; i < me; ++i) {
        double b = p.b_eq[i];
        const double* a = p.a_eq.row(i);
        for (std::size_t j = 0; j < n; ++j) b -= a[j] * p.lo[j];
        beq[i] = b;
    }
    for (std::size_t i = 0; i < mi; ++i) {
        double b = p.b_ub[i];
        const double* a = p.a_ub.row(i);
        for (std::size_t j = 0; j < n; ++j) b -= a[j] * p.lo[j];
        bub[i] = b;
    }

    // Decide which rows need an artificial: equalities always (after sign
    // normalization), inequalities only when the slack basis is infeasible.
    std::size_t n_art = me;
    for (std::size_t i = 0; i < mi; ++i)
        if (bub[i] < 0.0) ++n_art;

    Tableau tb;
    tb.m = m;
    tb.ncols = n + mi + n_art;
    tb.width = tb.ncols + 1;
    tb.t.assign(m * tb.width, 0.0);
    tb.cost.assign(tb.width, 0.0);
    tb.upper.assign(tb.ncols, kInf);
    tb.flipped.assign(tb.ncols, 0);
    tb.enterable.assign(tb.ncols, 1);
    tb.basis.assign(m, -1);

    for (std::size_t j = 0; j < n; ++j) {
        tb.upper[j] = u[j];
        if (u[j] <= 0.0) tb.enterable[j] = 0;   // fixed variable
    }

    double bscale = 1.0;
    std::size_t art = n + mi;
    for (std::size_t i = 0; i < m; ++i) {
        double* r = tb.row(i);
        const bool is_eq = i < me;
        const double* a = is_eq ? p.a_eq.row(i) : p.a_ub.row(i - me);
        double b = is_eq ? beq[i] : bub[i - me];
        double sgn = 1.0;
        if (b < 0.0) {
            sgn = -1.0;
            b = -b;
        }
        bscale = std::max(bscale, b);
        for (std::size_t j = 0; j < n; ++j) r[j] = sgn * a[j];
        if (!is_eq) r[n + (i - me)] = sgn;          // slack
        r[tb.ncols] = b;
        if (is_eq || sgn < 0.0) {
            r[art] = 1.0;
            tb.basis[i] = static_cast<int>(art);
            tb.enterable[art] = 0;
            ++art;
        } else {
            tb.basis[i] = static_cast<int>(n + (i - me));
        }
    }

    const std::size_t iter_cap = 50000 + 200 * (m + tb.ncols);

    // Phase 1: minimize the artificial total when any artificial is basic.
    if (n_art > 0) {
        for (std::size_t i = 0; i < m; ++i) {
            if (static_cast<std::size_t>(tb.basis[i]) >= n + mi) {
                axpy(tb.cost.data(), tb.row(i), 1.0, tb.width);
            }
        }
        const auto k = optimize(tb, iter_cap);
        if (k == StepResult::stuck) {
            sol.status = LpStatus::numerical_error;
            sol.message = "phase 1 stalled: pivot candidates below 1e-11";
            return sol;
        }
        const double infeas = -tb.cost[tb.ncols];
        if (infeas > kFeasTol * (1.0 + bscale)) {
            sol.status = LpStatus::infeasible;
            sol.message = "phase 1 residual " + std::to_string(infeas);
            return sol;
        }
        // Pivot leftover artificials out where possible; redundant rows keep
        // a zero-valued artificial pinned down by a zero upper bound.
        for (std::size_t i = 0; i < m; ++i) {
            const auto b = static_cast<std::size_t>(tb.basis[i]);
            if (b < n + mi) continue;
            const double* ri = tb.row(i);
            std::size_t piv = tb.ncols;
            for (std::size_t j = 0; j < n + mi; ++j) {
                if (tb.upper[j] <= 0.0 && j < n) continue;
                if (std::fabs(ri[j]) > 1e-9) {
                    piv = j;
                    break;
                }
            }
            if (piv < tb.ncols) pivot(tb, i, piv);
        }
        for (std::size_t j = n + mi; j < tb.ncols; ++j) tb.upper[j] = 0.0;
    }

    // Phase 2 cost row for the shifted/complemented coordinates.
    std::fill(tb.cost.begin(), tb.cost.end(), 0.0);
    double const_obj = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double c = tb.flipped[j] ? -p.objective[j] : p.objective[j];
        tb.cost[j] = c;
        if (tb.flipped[j]) const_obj += p.objective[j] * u[j];
    }
    tb.cost[tb.ncols] = -const_obj;
    for (std::size_t i = 0; i < m; ++i) {
        const double cb = tb.cost[static_cast<std::size_t>(tb.basis[i])];
        if (cb != 0.0) axpy(tb.cost.data(), tb.row(i), cb, tb.width);
    }
    for (std::size_t i = 0; i < m; ++i) tb.cost[static_cast<std::size_t>(tb.basis[i])] = 0.0;

    const auto k = optimize(tb, iter_cap);
    if (k == StepResult::stuck) {
        sol.status = LpStatus::numerical_error;
        sol.message = "phase 2 stalled: pivot candidates below 1e-11";
        return sol;
    }
    if (k == StepResult::unbounded) {
        sol.status = LpStatus::unbounded;
        sol.message = "objective unbounded below";
        return sol;
    }

    // Read out: basics from the rhs column, nonbasics at their anchor.
    std::vector<double> xi(tb.ncols, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        xi[static_cast<std::size_t>(tb.basis[i])] = tb.rhs(i);
    }
    sol.x.assign(n, 0.0);
    double obj = shift_cost;
    for (std::size_t j = 0; j < n; ++j) {
        double v = tb.flipped[j] ? u[j] - xi[j] : xi[j];
        if (v < 0.0 && v > -kFeasTol) v = 0.0;
        if (v > u[j] && v < u[j] + kFeasTol) v = u[j];
        sol.x[j] = p.lo[j] + v;
        obj += p.objective[j] * v;
    }
    sol.objective_value = obj;
    sol.status = LpStatus::optimal;
    return sol;
}

} // namespace sess
