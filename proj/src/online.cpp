#include "sess/online.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sess/parallel.hpp"
#include "sess/rng.hpp"

namespace sess {

const char* to_string(PolicyKind p) {
    switch (p) {
        case PolicyKind::rhc: return "rhc";
        case PolicyKind::ps: return "ps";
        case PolicyKind::obf: return "obf";
    }
    return "?";
}

PolicyKind policy_from_string(const std::string& s) {
    if (s == "rhc") return PolicyKind::rhc;
    if (s == "ps") return PolicyKind::ps;
    if (s == "obf") return PolicyKind::obf;
    throw std::invalid_argument("unknown policy '" + s + "' (expected rhc, ps, or obf)");
}

Mat sample_realization(const ScenarioConfig& cfg, const PredictionErrorModel& model) {
    Mat delta = net_profiles(cfg);
    if (model.variance < 0.0) throw std::invalid_argument("variance must be >= 0");
    if (model.variance == 0.0) return delta;
    Rng rng(model.seed);
    const double sigma = std::sqrt(model.variance);
    for (double& d : delta.data()) d += rng.normal(0.0, sigma);
    return delta;
}

double modified_ctrl_load(const ControllableLoad& load, double remaining, int slot) {
    if (!load.in_window(slot)) return 0.0;
    const int left = load.end_slot - slot + 1;
    if (slot == load.end_slot) {
        // Last chance: everything still owed is due now. The prorating rule
        // keeps the residual inside [min_rate, max_rate], so this is feasible.
        return std::max(remaining, 0.0);
    }
    const double share = std::max(remaining, 0.0) / left;
    return std::clamp(share, load.min_rate, load.max_rate);
}

double modified_net_profile(const UserProfile& user, const std::vector<double>& remaining,
                            double realized_delta, int slot) {
    double reserved = 0.0;
    for (std::size_t q = 0; q < user.controllable_loads.size(); ++q)
        reserved += modified_ctrl_load(user.controllable_loads[q], remaining[q], slot);
    return realized_delta - reserved;
}

OnlineState make_online_state(const ScenarioConfig& cfg) {
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    OnlineState st;
    st.slot = 1;
    st.ess_state.assign(1, cfg.shared_ess.initial_state);
    st.remaining_energy.resize(M);
    for (int m = 0; m < M; ++m) {
        for (const auto& load : cfg.users[m].controllable_loads)
            st.remaining_energy[m].push_back(load.total_energy);
    }
    st.realized = Mat(M, N);
    st.ledger.grid = Mat(M, N);
    st.ledger.charge = Mat(M, N);
    st.ledger.discharge = Mat(M, N);
    st.ledger.ctrl_load.resize(M);
    for (int m = 0; m < M; ++m)
        st.ledger.ctrl_load[m].assign(cfg.users[m].controllable_loads.size(),
                                      std::vector<double>(N, 0.0));
    st.ledger.ess_states.assign(N + 1, cfg.shared_ess.initial_state);
    return st;
}

namespace {

// Advances the stored state by the recursion and fills the ledger.
void commit_slot(const ScenarioConfig& cfg, OnlineState& st, const Mat& charge_col,
                 const Mat& discharge_col, const Mat& grid_col,
                 const std::vector<std::vector<double>>& load_col,
                 const std::vector<double>& realized_col) {
    const int M = cfg.num_users();
    const int n = st.slot - 1;
    const auto& ess = cfg.shared_ess;
    double csum = 0.0, dsum = 0.0;
    for (int m = 0; m < M; ++m) {
        st.ledger.charge(m, n) = charge_col(m, 0);
        st.ledger.discharge(m, n) = discharge_col(m, 0);
        st.ledger.grid(m, n) = grid_col(m, 0);
        st.realized(m, n) = realized_col[m];
        csum += charge_col(m, 0);
        dsum += discharge_col(m, 0);
        for (std::size_t q = 0; q < load_col[m].size(); ++q) {
            st.ledger.ctrl_load[m][q][n] = load_col[m][q];
            st.remaining_energy[m][q] -= load_col[m][q];
            if (std::fabs(st.remaining_energy[m][q]) < 1e-12) st.remaining_energy[m][q] = 0.0;
        }
    }
    const double next = st.ess_state[0] + ess.charge_eff * csum - dsum / ess.discharge_eff;
    st.ess_state[0] = next;
    st.ledger.ess_states[n + 1] = next;
    st.slot += 1;
}

// Common slot body for the two one-round policies. `proportional` selects
// the deficit-weighted split; otherwise the pool is divided evenly.
void one_round_step(const ScenarioConfig& cfg, OnlineState& st,
                    const std::vector<double>& realized_col, bool proportional,
                    MessageCount& messages) {
    const int M = cfg.num_users();
    const int slot = st.slot;
    const auto& ess = cfg.shared_ess;

    Mat c(M, 1), d(M, 1), g(M, 1);
    std::vector<std::vector<double>> l(M);
    std::vector<double> dtilde(M, 0.0);
    std::vector<int> deficit_users;

    for (int m = 0; m < M; ++m) {
        const auto& user = cfg.users[m];
        l[m].resize(user.controllable_loads.size());
        double reserved = 0.0;
        for (std::size_t q = 0; q < user.controllable_loads.size(); ++q) {
            l[m][q] = modified_ctrl_load(user.controllable_loads[q], st.remaining_energy[m][q], slot);
            reserved += l[m][q];
        }
        dtilde[m] = realized_col[m] - reserved;
        if (dtilde[m] < 0.0) deficit_users.push_back(m);
        if (proportional) {
            if (dtilde[m] < 0.0) messages.scalars_uplink += 1;   // announces its deficit
        } else {
            messages.bits_uplink += 1;   // every user sends its indicator bit
        }
    }

    // Charging pass: surplus users charge in id order against the headroom
    // left at the start of the slot; the remainder is curtailed.
    double headroom = std::max(0.0, ess.max_state - st.ess_state[0]) / ess.charge_eff;
    for (int m = 0; m < M; ++m) {
        if (dtilde[m] <= 0.0) continue;
        const double take = std::min({dtilde[m], ess.max_charge_per_user, headroom});
        c(m, 0) = take;
        headroom -= take;
    }

    // Discharge pass: the pool is limited by the usable start-of-slot energy
    // and by the aggregate rate; each user additionally caps its own share at
    // its deficit and per-user rate, with no second round of redistribution.
    const double usable = std::max(0.0, st.ess_state[0] - ess.min_state);
    const double pool = std::min(ess.discharge_eff * usable,
                                 M * ess.max_discharge_per_user);
    double denom = 0.0;
    for (int m : deficit_users) denom += -dtilde[m];
    for (int m : deficit_users) {
        const double need = -dtilde[m];
        double offered;
        if (proportional) {
            offered = denom > 0.0 ? pool * (need / denom) : 0.0;
        } else {
            offered = pool / static_cast<double>(deficit_users.size());
        }
        const double take = std::min({offered, ess.max_discharge_per_user, need});
        d(m, 0) = take;
        g(m, 0) = need - take;
        messages.scalars_downlink += 1;   // controller returns the granted value
    }

    commit_slot(cfg, st, c, d, g, l, realized_col);
}

} // namespace

void ps_step(const ScenarioConfig& cfg, OnlineState& state, const std::vector<double>& realized_col,
             MessageCount& messages) {
    one_round_step(cfg, state, realized_col, true, messages);
}

void obf_step(const ScenarioConfig& cfg, OnlineState& state, const std::vector<double>& realized_col,
              MessageCount& messages) {
    one_round_step(cfg, state, realized_col, false, messages);
}

namespace {

// Remaining-horizon instance: slot `slot` uses the realized column, later
// slots the predictions; loads carry their outstanding energy and clipped
// windows; the store starts from the current state.
struct TailInstance {
    ScenarioConfig cfg;
    Mat delta;
    std::vector<std::pair<int, int>> load_origin;   // (m, q) per tail load, flattened
};

TailInstance make_tail(const ScenarioConfig& cfg, const OnlineState& st, const Mat& predicted,
                       const std::vector<double>& realized_col) {
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    const int slot = st.slot;
    const int tail_n = N - slot + 1;

    TailInstance t;
    t.cfg.horizon = tail_n;
    t.cfg.grid_cap = cfg.grid_cap;
    t.cfg.shared_ess = cfg.shared_ess;
    t.cfg.shared_ess.initial_state = st.ess_state[0];
    t.delta = Mat(M, tail_n);

    for (int m = 0; m < M; ++m) {
        const auto& user = cfg.users[m];
        UserProfile tu;
        tu.id = user.id;
        tu.weight = user.weight;
        tu.fixed_load.assign(tail_n, 0.0);   // profiles enter via the delta matrix
        tu.renewable.assign(tail_n, 0.0);
        tu.cost_coeffs.price.assign(user.cost_coeffs.price.begin() + (slot - 1),
                                    user.cost_coeffs.price.end());
        if (!user.cost_coeffs.quad.empty())
            tu.cost_coeffs.quad.assign(user.cost_coeffs.quad.begin() + (slot - 1),
                                       user.cost_coeffs.quad.end());
        for (int q = 0; q < static_cast<int>(user.controllable_loads.size()); ++q) {
            const auto& load = user.controllable_loads[q];
            if (load.end_slot < slot) continue;
            ControllableLoad tl = load;
            tl.start_slot = std::max(load.start_slot, slot) - slot + 1;
            tl.end_slot = load.end_slot - slot + 1;
            tl.total_energy = st.remaining_energy[m][q];
            tu.controllable_loads.push_back(tl);
            t.load_origin.emplace_back(m, q);
        }
        t.cfg.users.push_back(std::move(tu));

        t.delta(m, 0) = realized_col[m];
        for (int i = 1; i < tail_n; ++i) t.delta(m, i) = predicted(m, slot - 1 + i);
    }
    return t;
}

} // namespace

void rhc_step(const ScenarioConfig& cfg, OnlineState& state, const Mat& predicted,
              const std::vector<double>& realized_col, const OnlineOptions& opts,
              MessageCount& messages) {
    const int M = cfg.num_users();
    const TailInstance tail = make_tail(cfg, state, predicted, realized_col);

    Schedule plan;
    if (opts.rhc_distributed_inner) {
        SolverOptions sopts = opts.rhc_solver;
        sopts.trace_path.clear();
        DistributedResult res = solve_dual_decomposition(tail.cfg, tail.delta, sopts);
        plan = std::move(res.schedule);
        messages.scalars_uplink += res.diagnostics.messages_exchanged / 2;
        messages.scalars_downlink += res.diagnostics.messages_exchanged / 2;
    } else {
        plan = solve_monolithic(tail.cfg, tail.delta);
        // Centralized solve: users upload their remaining-window profiles and
        // load state, the controller returns this slot's decisions.
        for (int m = 0; m < M; ++m) {
            messages.scalars_uplink += tail.cfg.horizon + 2 * tail.cfg.users[m].controllable_loads.size();
            messages.scalars_downlink += 3 + tail.cfg.users[m].controllable_loads.size();
        }
    }

    Mat c(M, 1), d(M, 1), g(M, 1);
    std::vector<std::vector<double>> l(M);
    for (int m = 0; m < M; ++m) {
        c(m, 0) = plan.charge(m, 0);
        d(m, 0) = plan.discharge(m, 0);
        g(m, 0) = plan.grid(m, 0);
        l[m].assign(cfg.users[m].controllable_loads.size(), 0.0);
    }
    // Committed load values come straight from the tail plan's first column.
    {
        std::size_t f = 0;
        for (int m = 0; m < M; ++m) {
            const auto& tl = tail.cfg.users[m].controllable_loads;
            for (std::size_t i = 0; i < tl.size(); ++i, ++f) {
                const auto [om, oq] = tail.load_origin[f];
                double commit = plan.ctrl_load[m][i][0];
                const auto& load = cfg.users[om].controllable_loads[oq];
                if (tl[i].in_window(1)) {
                    // Snap against drift so the residual window stays schedulable.
                    const int left = tl[i].end_slot - 1;
                    const double rem = state.remaining_energy[om][oq];
                    double lo = std::max(load.min_rate, rem - left * load.max_rate);
                    double hi = std::min(load.max_rate, rem - left * load.min_rate);
                    if (tl[i].end_slot == 1) lo = hi = rem;   // final slot: everything due
                    if (lo > hi) lo = hi = 0.5 * (lo + hi);
                    commit = std::clamp(commit, lo, hi);
                } else {
                    commit = 0.0;
                }
                l[om][oq] = commit;
            }
        }
    }

    commit_slot(cfg, state, c, d, g, l, realized_col);
}

std::vector<OnlineRunResult> run_online(const ScenarioConfig& cfg, const OnlineOptions& opts) {
    if (opts.runs < 1) throw std::invalid_argument("run_online: runs must be >= 1");
    const Mat predicted = net_profiles(cfg);
    std::vector<OnlineRunResult> results(opts.runs);

    parallel_for(opts.runs, opts.jobs, [&](std::size_t i) {
        PredictionErrorModel model = opts.model;
        model.seed = opts.model.seed + i;
        const Mat realized = sample_realization(cfg, model);

        OnlineState st = make_online_state(cfg);
        MessageCount messages;
        for (int slot = 1; slot <= cfg.horizon; ++slot) {
            std::vector<double> col(cfg.num_users());
            for (int m = 0; m < cfg.num_users(); ++m) col[m] = realized(m, slot - 1);
            switch (opts.policy) {
                case PolicyKind::ps: ps_step(cfg, st, col, messages); break;
                case PolicyKind::obf: obf_step(cfg, st, col, messages); break;
                case PolicyKind::rhc: rhc_step(cfg, st, predicted, col, opts, messages); break;
            }
        }
        OnlineRunResult& r = results[i];
        r.policy = opts.policy;
        r.run_index = static_cast<int>(i);
        r.seed = model.seed;
        r.realized_cost = weighted_cost_of(cfg, st.ledger.grid);
        st.ledger.weighted_cost = r.realized_cost;
        r.feasible = check_schedule(cfg, st.ledger, realized).ok();
        r.ledger = std::move(st.ledger);
        r.realized = realized;
        r.messages = messages;
    });
    return results;
}

} // namespace sess
