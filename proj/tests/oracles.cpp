#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sess::testing {

namespace {

// Solves B x = b by Gaussian elimination with partial pivoting.
// Returns false when B is numerically singular.
bool solve_square(std::vector<double> B, std::vector<double> b, int m, std::vector<double>& x) {
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    for (int k = 0; k < m; ++k) {
        int piv = k;
        double best = std::fabs(B[k * m + k]);
        for (int i = k + 1; i < m; ++i) {
            const double v = std::fabs(B[i * m + k]);
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < 1e-9) return false;
        if (piv != k) {
            for (int j = 0; j < m; ++j) std::swap(B[k * m + j], B[piv * m + j]);
            std::swap(b[k], b[piv]);
        }
        for (int i = k + 1; i < m; ++i) {
            const double f = B[i * m + k] / B[k * m + k];
            if (f == 0.0) continue;
            for (int j = k; j < m; ++j) B[i * m + j] -= f * B[k * m + j];
            b[i] -= f * b[k];
        }
    }
    x.assign(m, 0.0);
    for (int i = m - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < m; ++j) s -= B[i * m + j] * x[j];
        x[i] = s / B[i * m + i];
    }
    return true;
}

} // namespace

EnumeratedOptimum enumerate_lp_optimum(const LpProblem& p) {
    const int n = static_cast<int>(p.num_vars());
    const int me = static_cast<int>(p.a_eq.rows());
    const int mi = static_cast<int>(p.a_ub.rows());

    // Standard form over x' = x - lo: finite upper bounds become rows, every
    // inequality row gets a slack column.
    std::vector<int> bounded;
    for (int j = 0; j < n; ++j)
        if (p.hi[j] != kInf) bounded.push_back(j);
    const int nb = static_cast<int>(bounded.size());
    const int m = me + mi + nb;
    const int cols = n + mi + nb;

    std::vector<double> A(static_cast<std::size_t>(m) * cols, 0.0);
    std::vector<double> b(m, 0.0);
    double shift = 0.0;
    for (int j = 0; j < n; ++j) shift += p.objective[j] * p.lo[j];

    for (int i = 0; i < me; ++i) {
        double rhs = p.b_eq[i];
        for (int j = 0; j < n; ++j) {
            A[static_cast<std::size_t>(i) * cols + j] = p.a_eq(i, j);
            rhs -= p.a_eq(i, j) * p.lo[j];
        }
        b[i] = rhs;
    }
    for (int i = 0; i < mi; ++i) {
        const int r = me + i;
        double rhs = p.b_ub[i];
        for (int j = 0; j < n; ++j) {
            A[static_cast<std::size_t>(r) * cols + j] = p.a_ub(i, j);
            rhs -= p.a_ub(i, j) * p.lo[j];
        }
        A[static_cast<std::size_t>(r) * cols + n + i] = 1.0;
        b[r] = rhs;
    }
    for (int k = 0; k < nb; ++k) {
        const int r = me + mi + k;
        A[static_cast<std::size_t>(r) * cols + bounded[k]] = 1.0;
        A[static_cast<std::size_t>(r) * cols + n + mi + k] = 1.0;
        b[r] = p.hi[bounded[k]] - p.lo[bounded[k]];
    }

    EnumeratedOptimum best;
    if (m == 0) {
        // No constraints: the minimum sits at a bound of each variable.
        best.feasible = true;
        best.x.assign(n, 0.0);
        best.objective = shift;
        for (int j = 0; j < n; ++j) {
            if (p.objective[j] >= 0.0) {
                best.x[j] = p.lo[j];
            } else {
                if (p.hi[j] == kInf) throw std::invalid_argument("enumerate: unbounded instance");
                best.x[j] = p.hi[j];
                best.objective += p.objective[j] * (p.hi[j] - p.lo[j]);
            }
        }
        return best;
    }
    if (m > cols) return best;

    std::vector<int> pick(m);
    for (int i = 0; i < m; ++i) pick[i] = i;
    std::vector<double> B(static_cast<std::size_t>(m) * m), xb;
    while (true) {
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k) B[static_cast<std::size_t>(i) * m + k] = A[static_cast<std::size_t>(i) * cols + pick[k]];
        if (solve_square(B, b, m, xb)) {
            bool ok = true;
            for (double v : xb)
                if (v < -1e-7) { ok = false; break; }
            if (ok) {
                double obj = shift;
                for (int k = 0; k < m; ++k)
                    if (pick[k] < n) obj += p.objective[pick[k]] * xb[k];
                if (!best.feasible || obj < best.objective) {
                    best.feasible = true;
                    best.objective = obj;
                    best.x.assign(n, 0.0);
                    for (int k = 0; k < m; ++k)
                        if (pick[k] < n) best.x[pick[k]] = xb[k];
                    for (int j = 0; j < n; ++j) best.x[j] += p.lo[j];
                }
            }
        }
        // Next combination in lexicographic order.
        int i = m - 1;
        while (i >= 0 && pick[i] == cols - m + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int k = i + 1; k < m; ++k) pick[k] = pick[k - 1] + 1;
    }
    return best;
}

bool lp_point_feasible(const LpProblem& p, const std::vector<double>& x, double tol) {
    const int n = static_cast<int>(p.num_vars());
    for (int j = 0; j < n; ++j)
        if (x[j] < p.lo[j] - tol || x[j] > p.hi[j] + tol) return false;
    for (std::size_t i = 0; i < p.a_eq.rows(); ++i) {
        double s = -p.b_eq[i];
        for (int j = 0; j < n; ++j) s += p.a_eq(i, j) * x[j];
        if (std::fabs(s) > tol) return false;
    }
    for (std::size_t i = 0; i < p.a_ub.rows(); ++i) {
        double s = -p.b_ub[i];
        for (int j = 0; j < n; ++j) s += p.a_ub(i, j) * x[j];
        if (s > tol) return false;
    }
    return true;
}

LpProblem random_lp(Rng& rng) {
    const int n = static_cast<int>(rng.uniform_int(1, 8));
    const int me = n >= 2 && rng.uniform() < 0.3 ? static_cast<int>(rng.uniform_int(1, std::min(2, n - 1))) : 0;
    int rows_left = 8 - me;

    LpProblem p = LpProblem::with_vars(n);
    std::vector<double> x0(n);
    std::vector<bool> has_hi(n, false);
    int nb = 0;
    for (int j = 0; j < n; ++j) {
        p.lo[j] = rng.uniform() < 0.7 ? 0.0 : -rng.uniform(0.0, 1.0);
        if (nb < rows_left - 1 && rng.uniform() < 0.4) {
            has_hi[j] = true;
            p.hi[j] = p.lo[j] + rng.uniform(0.5, 4.0);
            ++nb;
        }
        const double top = has_hi[j] ? p.hi[j] : p.lo[j] + 2.0;
        x0[j] = rng.uniform(p.lo[j], top);
    }
    rows_left -= nb;
    const int mi = static_cast<int>(rng.uniform_int(0, rows_left));

    for (int j = 0; j < n; ++j) {
        // Unbounded-above variables get nonnegative costs so the optimum is
        // always attained at a basic solution (keeps enumeration complete).
        p.objective[j] = has_hi[j] ? rng.uniform(-2.0, 2.0) : rng.uniform(0.05, 2.0);
    }

    if (me > 0) {
        p.a_eq = Mat(me, n);
        p.b_eq.assign(me, 0.0);
        for (int i = 0; i < me; ++i) {
            double rhs = 0.0;
            for (int j = 0; j < n; ++j) {
                const double a = static_cast<double>(rng.uniform_int(-3, 3));
                p.a_eq(i, j) = a;
                rhs += a * x0[j];
            }
            p.b_eq[i] = rhs;   // feasible at x0 by construction
        }
    }
    if (mi > 0) {
        p.a_ub = Mat(mi, n);
        p.b_ub.assign(mi, 0.0);
        for (int i = 0; i < mi; ++i) {
            double lhs = 0.0;
            for (int j = 0; j < n; ++j) {
                const double a = static_cast<double>(rng.uniform_int(-3, 3));
                p.a_ub(i, j) = a;
                lhs += a * x0[j];
            }
            p.b_ub[i] = rng.uniform() < 0.75 ? lhs + rng.uniform(0.0, 3.0)
                                             : lhs + rng.uniform(-2.0, 2.0);
        }
    }
    return p;
}

namespace {

UserProfile canonical_user(const std::string& id, std::vector<double> renewable,
                           std::vector<double> fixed) {
    UserProfile u;
    u.id = id;
    u.weight = 0.5;
    u.renewable = std::move(renewable);
    u.fixed_load = std::move(fixed);
    u.cost_coeffs.price = {1.0, 1.0, 1.0};
    return u;
}

} // namespace

ScenarioConfig canonical_two_user() {
    ScenarioConfig cfg;
    cfg.description = "two users, three slots, lossless shared store";
    cfg.horizon = 3;
    cfg.grid_cap = 10.0;
    cfg.users.push_back(canonical_user("a", {2.0, 0.0, 0.0}, {0.0, 0.0, 1.0}));
    cfg.users.push_back(canonical_user("b", {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}));
    cfg.shared_ess = {0.0, 2.0, 0.0, 2.0, 2.0, 1.0, 1.0};
    return cfg;
}

ScenarioConfig canonical_no_storage() {
    ScenarioConfig cfg = canonical_two_user();
    cfg.description = "canonical instance with the store disabled";
    // Zero capacity alone still allows same-slot pass-through (the state
    // recursion nets charge against discharge within the slot), so a true
    // no-storage instance must zero the rates as well.
    cfg.shared_ess.max_state = 0.0;
    cfg.shared_ess.max_charge_per_user = 0.0;
    cfg.shared_ess.max_discharge_per_user = 0.0;
    return cfg;
}

double canonical_brute_force(const ScenarioConfig& cfg, double step) {
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    const auto& e = cfg.shared_ess;
    if (e.charge_eff != 1.0 || e.discharge_eff != 1.0)
        throw std::invalid_argument("brute force assumes lossless storage");
    for (const auto& u : cfg.users)
        if (!u.controllable_loads.empty())
            throw std::invalid_argument("brute force assumes no controllable loads");

    const Mat delta = net_profiles(cfg);
    const int cells = M * N;
    const int span = static_cast<int>(std::lround((e.max_charge_per_user + e.max_discharge_per_user) / step)) + 1;
    std::vector<int> idx(cells, 0);
    double best = kInf;
    while (true) {
        double cost = 0.0;
        // Cumulative net inflow must stay inside the state corridor.
        bool ok = true;
        double state = e.initial_state;
        for (int n = 0; n < N && ok; ++n) {
            for (int m = 0; m < M; ++m) {
                const double u = -e.max_discharge_per_user + step * idx[m * N + n];
                state += u;
                const double g = std::max(0.0, u - delta(m, n));
                cost += cfg.users[m].weight * cfg.users[m].cost_coeffs.price_at(n) * g;
            }
            if (state < e.min_state - 1e-9 || state > e.max_state + 1e-9) ok = false;
        }
        if (ok) best = std::min(best, cost);

        int i = cells - 1;
        while (i >= 0 && idx[i] == span - 1) idx[i--] = 0;
        if (i < 0) break;
        ++idx[i];
    }
    return best;
}

double canonical_split_brute_force(const ScenarioConfig& cfg, double step) {
    if (!cfg.distributed_ess) throw std::invalid_argument("needs distributed_ess");
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    const Mat delta = net_profiles(cfg);
    double total = 0.0;
    for (int m = 0; m < M; ++m) {
        const auto& e = (*cfg.distributed_ess)[m];
        if (e.charge_eff != 1.0 || e.discharge_eff != 1.0)
            throw std::invalid_argument("brute force assumes lossless storage");
        const int span = static_cast<int>(std::lround((e.max_charge + e.max_discharge) / step)) + 1;
        std::vector<int> idx(N, 0);
        double best = kInf;
        while (true) {
            double cost = 0.0;
            bool ok = true;
            double state = e.initial_state;
            for (int n = 0; n < N && ok; ++n) {
                const double u = -e.max_discharge + step * idx[n];
                state += u;
                if (state < e.min_state - 1e-9 || state > e.max_state + 1e-9) ok = false;
                const double g = std::max(0.0, u - delta(m, n));
                cost += cfg.users[m].weight * cfg.users[m].cost_coeffs.price_at(n) * g;
            }
            if (ok) best = std::min(best, cost);
            int i = N - 1;
            while (i >= 0 && idx[i] == span - 1) idx[i--] = 0;
            if (i < 0) break;
            ++idx[i];
        }
        total += best;
    }
    return total;
}

} // namespace sess::testing
