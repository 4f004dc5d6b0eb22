#include "sess/offline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "sess/lp.hpp"
#include "sess/parallel.hpp"
#include "sess/rng.hpp"

namespace sess {

namespace {

constexpr int kCostSegments = 32;   // piecewise-linear pieces per quadratic entry
constexpr double kTiePenalty = 1e-9;

// Column layout shared by the full LP and its per-user variants. Grid
// purchases use one column when the slot cost is linear and kCostSegments
// otherwise; convexity makes the segment split exact at every LP vertex.
struct GridCols {
    std::size_t base = 0;
    int segs = 1;
    double seg_cap = 0.0;
};

struct LoadCols {
    int m = 0;
    int q = 0;
    int start = 1;   // 1-based window
    int end = 1;
    std::size_t base = 0;
};

GridCols add_grid_cols(LpProblem& p, const UserProfile& user, int n, double grid_cap) {
    GridCols g;
    g.base = p.num_vars();
    const double beta = user.weight;
    const double price = user.cost_coeffs.price_at(n);
    const double a = user.cost_coeffs.quad_at(n);
    if (a > 0.0) {
        g.segs = kCostSegments;
        g.seg_cap = grid_cap / kCostSegments;
        for (int s = 1; s <= kCostSegments; ++s) {
            p.objective.push_back(beta * (price + a * g.seg_cap * (2 * s - 1)));
            p.lo.push_back(0.0);
            p.hi.push_back(g.seg_cap);
        }
    } else {
        g.segs = 1;
        g.seg_cap = grid_cap;
        p.objective.push_back(beta * price);
        p.lo.push_back(0.0);
        p.hi.push_back(grid_cap);
    }
    return g;
}

std::size_t add_box_var(LpProblem& p, double cost, double lo, double hi) {
    p.objective.push_back(cost);
    p.lo.push_back(lo);
    p.hi.push_back(hi);
    return p.num_vars() - 1;
}

double grid_value(const LpSolution& sol, const GridCols& g) {
    double v = 0.0;
    for (int s = 0; s < g.segs; ++s) v += sol.x[g.base + s];
    return v;
}

// ---------------------------------------------------------------------------
// Monolithic LP over all users and the shared store.

struct MonolithicMap {
    std::vector<GridCols> grid;   // m * N + n
    std::size_t c_base = 0;       // then m * N + n
    std::size_t d_base = 0;
    std::vector<LoadCols> loads;
    std::size_t nvars = 0;
};

LpProblem build_monolithic(const ScenarioConfig& cfg, const Mat& delta, MonolithicMap& map) {
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    const auto& ess = cfg.shared_ess;

    LpProblem p = LpProblem::with_vars(0);
    map.grid.reserve(static_cast<std::size_t>(M) * N);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n)
            map.grid.push_back(add_grid_cols(p, cfg.users[m], n, cfg.grid_cap));
    map.c_base = p.num_vars();
    for (int i = 0; i < M * N; ++i) add_box_var(p, kTiePenalty, 0.0, ess.max_charge_per_user);
    map.d_base = p.num_vars();
    for (int i = 0; i < M * N; ++i) add_box_var(p, kTiePenalty, 0.0, ess.max_discharge_per_user);
    for (int m = 0; m < M; ++m) {
        const auto& loads = cfg.users[m].controllable_loads;
        for (int q = 0; q < static_cast<int>(loads.size()); ++q) {
            LoadCols lc{m, q, loads[q].start_slot, loads[q].end_slot, p.num_vars()};
            for (int n = lc.start; n <= lc.end; ++n)
                add_box_var(p, 0.0, loads[q].min_rate, loads[q].max_rate);
            map.loads.push_back(lc);
        }
    }
    map.nvars = p.num_vars();

    const std::size_t mi = static_cast<std::size_t>(M) * N + 2 * N;
    p.a_ub = Mat(mi, map.nvars);
    p.b_ub.assign(mi, 0.0);

    // Neutralization: -G + C - D + sum(L) <= delta.
    std::size_t row = 0;
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n, ++row) {
            double* r = p.a_ub.row(row);
            const auto& g = map.grid[static_cast<std::size_t>(m) * N + n];
            for (int s = 0; s < g.segs; ++s) r[g.base + s] = -1.0;
            r[map.c_base + static_cast<std::size_t>(m) * N + n] = 1.0;
            r[map.d_base + static_cast<std::size_t>(m) * N + n] = -1.0;
            p.b_ub[row] = delta(m, n);
        }
    }
    for (const auto& lc : map.loads) {
        for (int n = lc.start; n <= lc.end; ++n) {
            const std::size_t r = static_cast<std::size_t>(lc.m) * N + (n - 1);
            p.a_ub.row(r)[lc.base + (n - lc.start)] = 1.0;
        }
    }

    // Storage corridor: running net charge stays within [smin - s1, smax - s1].
    const double up = ess.max_state - ess.initial_state;
    const double dn = ess.initial_state - ess.min_state;
    for (int n = 0; n < N; ++n) {
        double* rup = p.a_ub.row(row);
        double* rdn = p.a_ub.row(row + 1);
        for (int m = 0; m < M; ++m) {
            for (int i = 0; i <= n; ++i) {
                const std::size_t c = map.c_base + static_cast<std::size_t>(m) * N + i;
                const std::size_t d = map.d_base + static_cast<std::size_t>(m) * N + i;
                rup[c] = ess.charge_eff;
                rup[d] = -1.0 / ess.discharge_eff;
                rdn[c] = -ess.charge_eff;
                rdn[d] = 1.0 / ess.discharge_eff;
            }
        }
        p.b_ub[row] = up;
        p.b_ub[row + 1] = dn;
        row += 2;
    }

    // Each load must receive exactly its total energy.
    p.a_eq = Mat(map.loads.size(), map.nvars);
    p.b_eq.assign(map.loads.size(), 0.0);
    for (std::size_t f = 0; f < map.loads.size(); ++f) {
        const auto& lc = map.loads[f];
        double* r = p.a_eq.row(f);
        for (int n = lc.start; n <= lc.end; ++n) r[lc.base + (n - lc.start)] = 1.0;
        p.b_eq[f] = cfg.users[lc.m].controllable_loads[lc.q].total_energy;
    }
    return p;
}

Schedule extract_schedule(const ScenarioConfig& cfg, const LpSolution& sol,
                          const MonolithicMap& map) {
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    Schedule s;
    s.grid = Mat(M, N);
    s.charge = Mat(M, N);
    s.discharge = Mat(M, N);
    s.ctrl_load.resize(M);
    for (int m = 0; m < M; ++m)
        s.ctrl_load[m].assign(cfg.users[m].controllable_loads.size(), std::vector<double>(N, 0.0));
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            const std::size_t i = static_cast<std::size_t>(m) * N + n;
            s.grid(m, n) = grid_value(sol, map.grid[i]);
            s.charge(m, n) = sol.x[map.c_base + i];
            s.discharge(m, n) = sol.x[map.d_base + i];
        }
    }
    for (const auto& lc : map.loads)
        for (int n = lc.start; n <= lc.end; ++n)
            s.ctrl_load[lc.m][lc.q][n - 1] = sol.x[lc.base + (n - lc.start)];
    s.ess_states = ess_trajectory(cfg.shared_ess, s.charge, s.discharge);
    s.weighted_cost = weighted_cost_of(cfg, s.grid);
    return s;
}

// ---------------------------------------------------------------------------
// Per-user LP used both for primal recovery (c, d fixed) and the individual
// storage benchmark (own c, d columns and own state corridor).

struct PerUserLp {
    std::vector<GridCols> grid;   // per slot
    std::size_t c_base = 0, d_base = 0;   // benchmark mode only
    std::vector<LoadCols> loads;
};

LpSolution solve_user_lp(const ScenarioConfig& cfg, const Mat& delta, int m,
                         const EssUnitSpec* own_ess, const double* c_fixed, const double* d_fixed,
                         PerUserLp& map) {
    const int N = cfg.horizon;
    const auto& user = cfg.users[m];
    LpProblem p = LpProblem::with_vars(0);
    for (int n = 0; n < N; ++n) map.grid.push_back(add_grid_cols(p, user, n, cfg.grid_cap));
    if (own_ess) {
        map.c_base = p.num_vars();
        for (int n = 0; n < N; ++n) add_box_var(p, kTiePenalty, 0.0, own_ess->max_charge);
        map.d_base = p.num_vars();
        for (int n = 0; n < N; ++n) add_box_var(p, kTiePenalty, 0.0, own_ess->max_discharge);
    }
    for (int q = 0; q < static_cast<int>(user.controllable_loads.size()); ++q) {
        const auto& load = user.controllable_loads[q];
        LoadCols lc{m, q, load.start_slot, load.end_slot, p.num_vars()};
        for (int n = lc.start; n <= lc.end; ++n) add_box_var(p, 0.0, load.min_rate, load.max_rate);
        map.loads.push_back(lc);
    }

    const std::size_t mi = static_cast<std::size_t>(N) + (own_ess ? 2 * N : 0);
    p.a_ub = Mat(mi, p.num_vars());
    p.b_ub.assign(mi, 0.0);
    for (int n = 0; n < N; ++n) {
        double* r = p.a_ub.row(n);
        const auto& g = map.grid[n];
        for (int s = 0; s < g.segs; ++s) r[g.base + s] = -1.0;
        double rhs = delta(m, n);
        if (own_ess) {
            r[map.c_base + n] = 1.0;
            r[map.d_base + n] = -1.0;
        } else {
            rhs += -c_fixed[n] + d_fixed[n];
        }
        p.b_ub[n] = rhs;
    }
    for (const auto& lc : map.loads)
        for (int n = lc.start; n <= lc.end; ++n)
            p.a_ub.row(n - 1)[lc.base + (n - lc.start)] = 1.0;
    if (own_ess) {
        const double up = own_ess->max_state - own_ess->initial_state;
        const double dn = own_ess->initial_state - own_ess->min_state;
        std::size_t row = N;
        for (int n = 0; n < N; ++n) {
            double* rup = p.a_ub.row(row);
            double* rdn = p.a_ub.row(row + 1);
            for (int i = 0; i <= n; ++i) {
                rup[map.c_base + i] = own_ess->charge_eff;
                rup[map.d_base + i] = -1.0 / own_ess->discharge_eff;
                rdn[map.c_base + i] = -own_ess->charge_eff;
                rdn[map.d_base + i] = 1.0 / own_ess->discharge_eff;
            }
            p.b_ub[row] = up;
            p.b_ub[row + 1] = dn;
            row += 2;
        }
    }

    p.a_eq = Mat(map.loads.size(), p.num_vars());
    p.b_eq.assign(map.loads.size(), 0.0);
    for (std::size_t f = 0; f < map.loads.size(); ++f) {
        const auto& lc = map.loads[f];
        for (int n = lc.start; n <= lc.end; ++n) p.a_eq.row(f)[lc.base + (n - lc.start)] = 1.0;
        p.b_eq[f] = user.controllable_loads[lc.q].total_energy;
    }
    return solve_lp(p);
}

} // namespace

// ---------------------------------------------------------------------------

Schedule solve_monolithic(const ScenarioConfig& cfg) {
    return solve_monolithic(cfg, net_profiles(cfg));
}

Schedule solve_monolithic(const ScenarioConfig& cfg, const Mat& delta) {
    MonolithicMap map;
    const LpProblem p = build_monolithic(cfg, delta, map);
    const LpSolution sol = solve_lp(p);
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error(std::string("monolithic solve failed: ") + to_string(sol.status) +
                                 (sol.message.empty() ? "" : " (" + sol.message + ")"));
    return extract_schedule(cfg, sol, map);
}

UserSubproblemResult solve_user_subproblem(const UserProfile& user, const std::vector<double>& y,
                                           double grid_cap) {
    const int N = static_cast<int>(y.size());
    UserSubproblemResult res;
    res.grid.assign(N, 0.0);
    const double beta = user.weight;
    for (int n = 0; n < N; ++n) {
        const double p = user.cost_coeffs.price_at(n);
        const double a = user.cost_coeffs.quad_at(n);
        double g = 0.0;
        if (beta * a > 0.0) {
            g = std::clamp((y[n] - beta * p) / (2.0 * beta * a), 0.0, grid_cap);
        } else if (y[n] > beta * p) {
            g = grid_cap;   // priced above marginal cost; ties stay at zero
        }
        res.grid[n] = g;
        res.objective += beta * (p * g + a * g * g) - y[n] * g;
    }

    res.loads.reserve(user.controllable_loads.size());
    for (const auto& load : user.controllable_loads) {
        std::vector<double> l(N, 0.0);
        const int wl = load.window_len();
        std::vector<int> order(wl);
        std::iota(order.begin(), order.end(), load.start_slot - 1);
        std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return y[i] < y[j]; });
        double rem = load.total_energy;
        for (int n = load.start_slot - 1; n < load.end_slot; ++n) {
            l[n] = load.min_rate;
            rem -= load.min_rate;
        }
        for (int n : order) {
            if (rem <= 0.0) break;
            const double add = std::min(load.max_rate - load.min_rate, rem);
            l[n] += add;
            rem -= add;
        }
        for (int n = 0; n < N; ++n) res.objective += y[n] * l[n];
        res.loads.push_back(std::move(l));
    }
    return res;
}

ControllerResult solve_controller_subproblem(const ScenarioConfig& cfg, const Mat& y) {
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    const auto& ess = cfg.shared_ess;

    LpProblem p = LpProblem::with_vars(0);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) add_box_var(p, y(m, n) + kTiePenalty, 0.0, ess.max_charge_per_user);
    const std::size_t d_base = p.num_vars();
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) add_box_var(p, -y(m, n) + kTiePenalty, 0.0, ess.max_discharge_per_user);

    p.a_ub = Mat(2 * static_cast<std::size_t>(N), p.num_vars());
    p.b_ub.assign(2 * static_cast<std::size_t>(N), 0.0);
    const double up = ess.max_state - ess.initial_state;
    const double dn = ess.initial_state - ess.min_state;
    for (int n = 0; n < N; ++n) {
        double* rup = p.a_ub.row(2 * static_cast<std::size_t>(n));
        double* rdn = p.a_ub.row(2 * static_cast<std::size_t>(n) + 1);
        for (int m = 0; m < M; ++m) {
            for (int i = 0; i <= n; ++i) {
                const std::size_t c = static_cast<std::size_t>(m) * N + i;
                rup[c] = ess.charge_eff;
                rup[d_base + c] = -1.0 / ess.discharge_eff;
                rdn[c] = -ess.charge_eff;
                rdn[d_base + c] = 1.0 / ess.discharge_eff;
            }
        }
        p.b_ub[2 * static_cast<std::size_t>(n)] = up;
        p.b_ub[2 * static_cast<std::size_t>(n) + 1] = dn;
    }

    const LpSolution sol = solve_lp(p);
    if (sol.status != LpStatus::optimal)
        throw std::runtime_error(std::string("controller subproblem failed: ") + to_string(sol.status));

    ControllerResult res;
    res.charge = Mat(M, N);
    res.discharge = Mat(M, N);
    double value = 0.0;
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            const std::size_t i = static_cast<std::size_t>(m) * N + n;
            res.charge(m, n) = sol.x[i];
            res.discharge(m, n) = sol.x[d_base + i];
            value += y(m, n) * (res.charge(m, n) - res.discharge(m, n));
        }
    }
    // Subtract the worst-case tie-penalty distortion so the reported value
    // never overstates the true minimum (keeps weak duality airtight).
    res.objective = value - kTiePenalty * M * N * (ess.max_charge_per_user + ess.max_discharge_per_user);
    return res;
}

void update_running_average(DualState& state, const Mat& c_hat, const Mat& d_hat) {
    const double k = state.iter;
    if (state.c_avg.empty()) {
        state.c_avg = Mat(c_hat.rows(), c_hat.cols());
        state.d_avg = Mat(d_hat.rows(), d_hat.cols());
    }
    for (std::size_t i = 0; i < c_hat.data().size(); ++i) {
        state.c_avg.data()[i] += (c_hat.data()[i] - state.c_avg.data()[i]) / k;
        state.d_avg.data()[i] += (d_hat.data()[i] - state.d_avg.data()[i]) / k;
    }
}

SubgradientReport compute_subgradient(const Mat& grid, const Mat& load_sum, const Mat& delta,
                                      const Mat& c_avg, const Mat& d_avg) {
    SubgradientReport rep;
    rep.z = Mat(grid.rows(), grid.cols());
    rep.v = Mat(grid.rows(), grid.cols());
    for (std::size_t i = 0; i < grid.data().size(); ++i) {
        rep.z.data()[i] = grid.data()[i] - load_sum.data()[i] + delta.data()[i];
        rep.v.data()[i] = rep.z.data()[i] - c_avg.data()[i] + d_avg.data()[i];
    }
    return rep;
}

double dual_update(DualState& state, const Mat& v, const SolverOptions& opts, const Mat* cap,
                   double step_scale) {
    double alpha = opts.alpha0 / std::sqrt(static_cast<double>(state.iter));
    if (opts.normalize_step) {
        double norm = 0.0;
        for (double x : v.data()) norm += x * x;
        norm = std::sqrt(norm);
        alpha = norm > 1e-15 ? alpha * step_scale / norm : 0.0;
    }
    double max_change = 0.0;
    for (std::size_t i = 0; i < v.data().size(); ++i) {
        const double before = state.y.data()[i];
        double after = before - alpha * v.data()[i];
        if (after < 0.0) after = 0.0;
        if (cap && after > cap->data()[i]) after = cap->data()[i];
        state.y.data()[i] = after;
        max_change = std::max(max_change, std::fabs(after - before));
    }
    state.iter += 1;
    return max_change;
}

Mat dual_cap_matrix(const ScenarioConfig& cfg) {
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    Mat cap(M, N);
    for (int m = 0; m < M; ++m) {
        const auto& u = cfg.users[m];
        for (int n = 0; n < N; ++n)
            cap(m, n) = u.weight * (u.cost_coeffs.price_at(n) +
                                    2.0 * u.cost_coeffs.quad_at(n) * cfg.grid_cap);
    }
    return cap;
}

Schedule recover_primal(const ScenarioConfig& cfg, const Mat& c_star, const Mat& d_star) {
    return recover_primal(cfg, net_profiles(cfg), c_star, d_star);
}

Schedule recover_primal(const ScenarioConfig& cfg, const Mat& delta, const Mat& c_star,
                        const Mat& d_star) {
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    Schedule s;
    s.charge = c_star;
    s.discharge = d_star;
    const auto& ess = cfg.shared_ess;
    for (auto& v : s.charge.data()) v = std::clamp(v, 0.0, ess.max_charge_per_user);
    for (auto& v : s.discharge.data()) v = std::clamp(v, 0.0, ess.max_discharge_per_user);
    s.grid = Mat(M, N);
    s.ctrl_load.resize(M);

    std::vector<std::string> errors(M);
    std::vector<Mat> grids(M, Mat(1, N));
    std::vector<std::vector<std::vector<double>>> loads(M);
    // Each user independently re-solves its own small LP with the announced
    // charge/discharge values held fixed.
    for (int m = 0; m < M; ++m) {
        PerUserLp map;
        const LpSolution sol =
            solve_user_lp(cfg, delta, m, nullptr, s.charge.row(m), s.discharge.row(m), map);
        if (sol.status != LpStatus::optimal) {
            errors[m] = to_string(sol.status);
            continue;
        }
        loads[m].assign(cfg.users[m].controllable_loads.size(), std::vector<double>(N, 0.0));
        for (int n = 0; n < N; ++n) grids[m](0, n) = grid_value(sol, map.grid[n]);
        for (const auto& lc : map.loads)
            for (int n = lc.start; n <= lc.end; ++n)
                loads[m][lc.q][n - 1] = sol.x[lc.base + (n - lc.start)];
    }
    for (int m = 0; m < M; ++m) {
        if (!errors[m].empty())
            throw std::runtime_error("primal recovery failed for user " + std::to_string(m + 1) +
                                     ": " + errors[m]);
        for (int n = 0; n < N; ++n) s.grid(m, n) = grids[m](0, n);
        s.ctrl_load[m] = std::move(loads[m]);
    }
    s.ess_states = ess_trajectory(ess, s.charge, s.discharge);
    s.weighted_cost = weighted_cost_of(cfg, s.grid);
    return s;
}

DistributedEssSpec split_shared_ess(const SharedEssSpec& ess, int num_users) {
    DistributedEssSpec spec;
    const double inv = 1.0 / num_users;
    for (int m = 0; m < num_users; ++m) {
        EssUnitSpec d;
        d.min_state = ess.min_state * inv;
        d.max_state = ess.max_state * inv;
        d.initial_state = ess.initial_state * inv;
        d.max_charge = ess.max_charge_per_user * inv;
        d.max_discharge = ess.max_discharge_per_user * inv;
        d.charge_eff = ess.charge_eff;
        d.discharge_eff = ess.discharge_eff;
        spec.push_back(d);
    }
    return spec;
}

Schedule solve_distributed_ess(const ScenarioConfig& cfg) {
    return solve_distributed_ess(cfg, net_profiles(cfg));
}

Schedule solve_distributed_ess(const ScenarioConfig& cfg, const Mat& delta) {
    if (!cfg.distributed_ess)
        throw std::invalid_argument("solve_distributed_ess: scenario has no distributed_ess spec");
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    Schedule s;
    s.distributed = true;
    s.grid = Mat(M, N);
    s.charge = Mat(M, N);
    s.discharge = Mat(M, N);
    s.ctrl_load.resize(M);
    s.ess_states_per_user = Mat(M, N + 1);

    for (int m = 0; m < M; ++m) {
        const auto& own = (*cfg.distributed_ess)[m];
        PerUserLp map;
        const LpSolution sol = solve_user_lp(cfg, delta, m, &own, nullptr, nullptr, map);
        if (sol.status != LpStatus::optimal)
            throw std::runtime_error("user " + std::to_string(m + 1) +
                                     " storage benchmark infeasible: " + to_string(sol.status));
        s.ctrl_load[m].assign(cfg.users[m].controllable_loads.size(), std::vector<double>(N, 0.0));
        for (int n = 0; n < N; ++n) {
            s.grid(m, n) = grid_value(sol, map.grid[n]);
            s.charge(m, n) = sol.x[map.c_base + n];
            s.discharge(m, n) = sol.x[map.d_base + n];
        }
        for (const auto& lc : map.loads)
            for (int n = lc.start; n <= lc.end; ++n)
                s.ctrl_load[m][lc.q][n - 1] = sol.x[lc.base + (n - lc.start)];
        double st = own.initial_state;
        s.ess_states_per_user(m, 0) = st;
        for (int n = 0; n < N; ++n) {
            st += own.charge_eff * s.charge(m, n) - s.discharge(m, n) / own.discharge_eff;
            s.ess_states_per_user(m, n + 1) = st;
        }
    }
    s.weighted_cost = weighted_cost_of(cfg, s.grid);
    return s;
}

// ---------------------------------------------------------------------------
// The coordination loop.

namespace {

void write_trace(const std::string& path, const std::vector<IterationLog>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file '" + path + "'");
    out << "iter,dual_value,max_dual_change,messages_exchanged\n";
    char buf[160];
    for (const auto& r : rows) {
        snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%lld\n", r.iter, r.dual_value,
                 r.max_dual_change, r.messages_exchanged);
        out << buf;
    }
}

} // namespace

DistributedResult solve_dual_decomposition(const ScenarioConfig& cfg, const SolverOptions& opts) {
    return solve_dual_decomposition(cfg, net_profiles(cfg), opts);
}

DistributedResult solve_dual_decomposition(const ScenarioConfig& cfg, const Mat& delta,
                                           const SolverOptions& opts) {
    const int M = cfg.num_users();
    const int N = cfg.horizon;

    const Mat cap = dual_cap_matrix(cfg);
    double cap_norm = 0.0;
    for (double c : cap.data()) cap_norm += c * c;
    const double step_scale = std::max(0.5 * std::sqrt(cap_norm), 1e-6);

    DualState state;
    state.y = Mat(M, N);
    state.c_avg = Mat(M, N);
    state.d_avg = Mat(M, N);
    if (opts.random_init_seed != 0) {
        Rng rng(opts.random_init_seed);
        for (std::size_t i = 0; i < state.y.data().size(); ++i)
            state.y.data()[i] = rng.uniform() * cap.data()[i];
    }

    DistributedResult out;
    auto& diag = out.diagnostics;
    double best_cost = kInf;
    bool have_schedule = false;
    const long long per_iter_msgs = 2LL * M * N;

    Mat grid(M, N), load_sum(M, N);
    std::vector<UserSubproblemResult> user_res(M);

    for (int k = 1; k <= opts.max_iters; ++k) {
        // Every user prices its own decisions against the announced
        // multipliers; solves are independent.
        parallel_for(M, opts.jobs, [&](std::size_t m) {
            std::vector<double> ym(state.y.row(m), state.y.row(m) + N);
            user_res[m] = solve_user_subproblem(cfg.users[m], ym, cfg.grid_cap);
        });
        double dual_value = 0.0;
        for (int m = 0; m < M; ++m) {
            dual_value += user_res[m].objective;
            for (int n = 0; n < N; ++n) {
                grid(m, n) = user_res[m].grid[n];
                double lsum = 0.0;
                for (const auto& l : user_res[m].loads) lsum += l[n];
                load_sum(m, n) = lsum;
                dual_value -= state.y(m, n) * delta(m, n);
            }
        }

        const ControllerResult ctrl = solve_controller_subproblem(cfg, state.y);
        dual_value += ctrl.objective;
        update_running_average(state, ctrl.charge, ctrl.discharge);
        const SubgradientReport sub =
            compute_subgradient(grid, load_sum, delta, state.c_avg, state.d_avg);

        state.best_dual_value = std::max(state.best_dual_value, dual_value);
        diag.messages_exchanged += per_iter_msgs;

        const double max_change =
            dual_update(state, sub.v, opts, opts.cap_duals ? &cap : nullptr, step_scale);
        diag.iterations.push_back({k, dual_value, max_change, diag.messages_exchanged});

        const bool last = k == opts.max_iters;
        const bool dual_done = max_change < opts.eps;
        if (k % opts.recovery_interval == 0 || last || dual_done) {
            Schedule sched = recover_primal(cfg, delta, state.c_avg, state.d_avg);
            if (sched.weighted_cost < best_cost) {
                best_cost = sched.weighted_cost;
                out.schedule = std::move(sched);
                have_schedule = true;
            }
            const double gap = std::max(0.0, best_cost - state.best_dual_value);
            diag.certified_gap = gap;
            const double scale = std::max(std::fabs(best_cost), std::fabs(state.best_dual_value));
            if (gap <= opts.gap_abs_tol || gap <= opts.gap_rel_tol * scale) {
                diag.converged = true;
                diag.stop_reason = "duality gap certified";
                break;
            }
        }
        if (dual_done) {
            diag.converged = true;
            diag.stop_reason = "dual variables converged";
            break;
        }
        if (last) {
            diag.converged = false;
            diag.stop_reason = "iteration limit reached";
        }
    }

    if (!have_schedule) {
        out.schedule = recover_primal(cfg, delta, state.c_avg, state.d_avg);
        best_cost = out.schedule.weighted_cost;
    }
    diag.messages_exchanged += per_iter_msgs;   // final charge/discharge broadcast
    diag.best_dual_value = state.best_dual_value;
    diag.recovered_cost = best_cost;
    diag.certified_gap = std::max(0.0, best_cost - state.best_dual_value);
    if (!opts.trace_path.empty()) write_trace(opts.trace_path, diag.iterations);
    return out;
}

} // namespace sess
