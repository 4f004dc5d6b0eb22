#include "sess/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <stdexcept>

namespace sess {

namespace {

constexpr double kBoxTol = 1e-6;      // decision boxes, state bounds, neutralization
constexpr double kEnergyTol = 1e-7;   // controllable-load completion
constexpr double kStateTol = 1e-9;    // stored trajectory vs recursion

std::string fmt(const char* pattern, ...) {
    char buf[256];
    va_list args;
    va_start(args, pattern);
    vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

} // namespace

bool CostCoeffs::is_linear() const {
    for (double a : quad)
        if (a != 0.0) return false;
    return true;
}

double weighted_cost_of(const ScenarioConfig& cfg, const Mat& grid) {
    double total = 0.0;
    for (int m = 0; m < cfg.num_users(); ++m) {
        const auto& u = cfg.users[m];
        double user_cost = 0.0;
        for (int n = 0; n < cfg.horizon; ++n) {
            const double g = grid(m, n);
            user_cost += u.cost_coeffs.price_at(n) * g + u.cost_coeffs.quad_at(n) * g * g;
        }
        total += u.weight * user_cost;
    }
    return total;
}

std::vector<double> net_profile(const UserProfile& user) {
    if (user.renewable.size() != user.fixed_load.size())
        throw std::invalid_argument("net_profile: renewable/fixed_load length mismatch");
    std::vector<double> d(user.renewable.size());
    for (std::size_t n = 0; n < d.size(); ++n) d[n] = user.renewable[n] - user.fixed_load[n];
    return d;
}

Mat net_profiles(const ScenarioConfig& cfg) {
    Mat d(cfg.users.size(), cfg.horizon);
    for (int m = 0; m < cfg.num_users(); ++m) {
        const auto v = net_profile(cfg.users[m]);
        for (int n = 0; n < cfg.horizon; ++n) d(m, n) = v[n];
    }
    return d;
}

Report validate_scenario(const ScenarioConfig& cfg) {
    Report rep;
    const int N = cfg.horizon;
    const int M = cfg.num_users();
    if (N < 1) rep.fail("horizon must be >= 1");
    if (M < 1) rep.fail("at least one user required");
    if (!rep.ok()) return rep;

    double weight_sum = 0.0;
    double demand_peak = 0.0;
    for (int m = 0; m < M; ++m) {
        const auto& u = cfg.users[m];
        const std::string who = "user " + std::to_string(m + 1);
        if (u.weight < 0.0 || u.weight > 1.0)
            rep.fail(who + ": weight outside [0, 1]");
        weight_sum += u.weight;

        if (static_cast<int>(u.fixed_load.size()) != N)
            rep.fail(who + ": fixed_load length != horizon");
        if (static_cast<int>(u.renewable.size()) != N)
            rep.fail(who + ": renewable length != horizon");
        if (static_cast<int>(u.cost_coeffs.price.size()) != N)
            rep.fail(who + ": cost_coeffs.price length != horizon");
        if (!u.cost_coeffs.quad.empty() && static_cast<int>(u.cost_coeffs.quad.size()) != N)
            rep.fail(who + ": cost_coeffs.quad length != horizon");
        for (double v : u.fixed_load)
            if (v < 0.0) { rep.fail(who + ": fixed_load entry < 0"); break; }
        for (double v : u.renewable)
            if (v < 0.0) { rep.fail(who + ": renewable entry < 0"); break; }
        for (double v : u.cost_coeffs.price)
            if (v < 0.0) { rep.fail(who + ": price entry < 0"); break; }
        for (double v : u.cost_coeffs.quad)
            if (v < 0.0) { rep.fail(who + ": quad entry < 0"); break; }

        for (const auto& load : u.controllable_loads) {
            const std::string lw = who + " load '" + load.id + "'";
            if (!(1 <= load.start_slot && load.start_slot < load.end_slot && load.end_slot <= N)) {
                rep.fail(lw + ": window must satisfy 1 <= start < end <= horizon");
                continue;
            }
            if (!(0.0 <= load.min_rate && load.min_rate < load.max_rate))
                rep.fail(lw + ": rates must satisfy 0 <= min_rate < max_rate");
            const double wl = load.window_len();
            if (load.total_energy < wl * load.min_rate - 1e-12 ||
                load.total_energy > wl * load.max_rate + 1e-12)
                rep.fail(lw + ": total_energy not schedulable within window rate bounds");
            if (load.total_energy < 0.0) rep.fail(lw + ": total_energy < 0");
        }

        // Worst-case single-slot demand this user can present to the grid.
        for (int n = 0; n < N && n < static_cast<int>(u.fixed_load.size()); ++n) {
            double d = u.fixed_load[n];
            for (const auto& load : u.controllable_loads)
                if (load.in_window(n + 1)) d += load.max_rate;
            demand_peak = std::max(demand_peak, d);
        }
    }
    if (std::fabs(weight_sum - 1.0) > 1e-9)
        rep.fail(fmt("weights sum != 1 (got %.12g)", weight_sum));

    const auto& e = cfg.shared_ess;
    if (e.min_state < 0.0) rep.fail("shared_ess: min_state < 0");
    if (e.max_state < e.min_state) rep.fail("shared_ess: max_state < min_state");
    if (e.initial_state < e.min_state - 1e-12 || e.initial_state > e.max_state + 1e-12)
        rep.fail("shared_ess: initial_state outside [min_state, max_state]");
    if (e.max_charge_per_user < 0.0) rep.fail("shared_ess: max_charge_per_user < 0");
    if (e.max_discharge_per_user < 0.0) rep.fail("shared_ess: max_discharge_per_user < 0");
    if (!(e.charge_eff > 0.0 && e.charge_eff <= 1.0)) rep.fail("shared_ess: charge_eff outside (0, 1]");
    if (!(e.discharge_eff > 0.0 && e.discharge_eff <= 1.0)) rep.fail("shared_ess: discharge_eff outside (0, 1]");

    if (cfg.distributed_ess) {
        if (static_cast<int>(cfg.distributed_ess->size()) != M)
            rep.fail("distributed_ess: one entry per user required");
        int m = 0;
        for (const auto& d : *cfg.distributed_ess) {
            const std::string who = "distributed_ess[" + std::to_string(m + 1) + "]";
            if (d.min_state < 0.0) rep.fail(who + ": min_state < 0");
            if (d.max_state < d.min_state) rep.fail(who + ": max_state < min_state");
            if (d.initial_state < d.min_state - 1e-12 || d.initial_state > d.max_state + 1e-12)
                rep.fail(who + ": initial_state outside [min_state, max_state]");
            if (d.max_charge < 0.0) rep.fail(who + ": max_charge < 0");
            if (d.max_discharge < 0.0) rep.fail(who + ": max_discharge < 0");
            if (!(d.charge_eff > 0.0 && d.charge_eff <= 1.0)) rep.fail(who + ": charge_eff outside (0, 1]");
            if (!(d.discharge_eff > 0.0 && d.discharge_eff <= 1.0)) rep.fail(who + ": discharge_eff outside (0, 1]");
            ++m;
        }
    }

    if (cfg.grid_cap <= 0.0) rep.fail("grid_cap must be > 0");
    if (cfg.grid_cap + 1e-9 < demand_peak)
        rep.fail(fmt("grid_cap %.6g below worst-case single-slot demand %.6g", cfg.grid_cap, demand_peak));
    return rep;
}

std::vector<double> ess_trajectory(const SharedEssSpec& ess, const Mat& charge, const Mat& discharge) {
    const std::size_t M = charge.rows(), N = charge.cols();
    std::vector<double> s(N + 1);
    s[0] = ess.initial_state;
    for (std::size_t n = 0; n < N; ++n) {
        double c = 0.0, d = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            c += charge(m, n);
            d += discharge(m, n);
        }
        s[n + 1] = s[n] + ess.charge_eff * c - d / ess.discharge_eff;
    }
    return s;
}

namespace {

void check_shared_states(const ScenarioConfig& cfg, const Schedule& sched, Report& rep) {
    const auto& e = cfg.shared_ess;
    const auto recomputed = ess_trajectory(e, sched.charge, sched.discharge);
    if (sched.ess_states.size() != recomputed.size()) {
        rep.fail("ess_states length != horizon + 1");
        return;
    }
    for (std::size_t n = 0; n < recomputed.size(); ++n) {
        if (std::fabs(sched.ess_states[n] - recomputed[n]) > kStateTol) {
            rep.fail(fmt("ess_states[%zu] deviates from recursion by %.3g", n,
                         std::fabs(sched.ess_states[n] - recomputed[n])));
            break;
        }
    }
    for (std::size_t n = 1; n < recomputed.size(); ++n) {
        if (recomputed[n] < e.min_state - kBoxTol)
            rep.fail(fmt("ess state below min_state at slot %zu (%.6g < %.6g)", n, recomputed[n], e.min_state));
        if (recomputed[n] > e.max_state + kBoxTol)
            rep.fail(fmt("ess state above max_state at slot %zu (%.6g > %.6g)", n, recomputed[n], e.max_state));
    }
}

void check_distributed_states(const ScenarioConfig& cfg, const Schedule& sched, Report& rep) {
    if (!cfg.distributed_ess) {
        rep.fail("schedule is distributed but scenario has no distributed_ess spec");
        return;
    }
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    if (sched.ess_states_per_user.rows() != static_cast<std::size_t>(M) ||
        sched.ess_states_per_user.cols() != static_cast<std::size_t>(N + 1)) {
        rep.fail("ess_states_per_user shape mismatch");
        return;
    }
    for (int m = 0; m < M; ++m) {
        const auto& spec = (*cfg.distributed_ess)[m];
        double s = spec.initial_state;
        if (std::fabs(sched.ess_states_per_user(m, 0) - s) > kStateTol)
            rep.fail(fmt("user %d ess_states[0] != initial_state", m + 1));
        for (int n = 0; n < N; ++n) {
            s += spec.charge_eff * sched.charge(m, n) - sched.discharge(m, n) / spec.discharge_eff;
            if (std::fabs(sched.ess_states_per_user(m, n + 1) - s) > kStateTol) {
                rep.fail(fmt("user %d ess state deviates from recursion at slot %d", m + 1, n + 1));
                break;
            }
            if (s < spec.min_state - kBoxTol)
                rep.fail(fmt("user %d ess state below min_state at slot %d", m + 1, n + 1));
            if (s > spec.max_state + kBoxTol)
                rep.fail(fmt("user %d ess state above max_state at slot %d", m + 1, n + 1));
        }
    }
}

} // namespace

Report check_schedule(const ScenarioConfig& cfg, const Schedule& sched, const Mat& delta) {
    Report rep;
    const std::size_t M = cfg.users.size();
    const std::size_t N = static_cast<std::size_t>(cfg.horizon);

    if (sched.grid.rows() != M || sched.grid.cols() != N ||
        !sched.grid.same_shape(sched.charge) || !sched.grid.same_shape(sched.discharge)) {
        rep.fail("decision matrices must all be M x N");
        return rep;
    }
    if (delta.rows() != M || delta.cols() != N) {
        rep.fail("net-profile matrix must be M x N");
        return rep;
    }
    if (sched.ctrl_load.size() != M) {
        rep.fail("ctrl_load must have one entry per user");
        return rep;
    }

    const auto& e = cfg.shared_ess;
    const double cmax = e.max_charge_per_user;
    const double dmax = e.max_discharge_per_user;

    for (std::size_t m = 0; m < M; ++m) {
        const auto& user = cfg.users[m];
        const auto& loads = user.controllable_loads;
        if (sched.ctrl_load[m].size() != loads.size()) {
            rep.fail(fmt("user %zu: ctrl_load count mismatch", m + 1));
            return rep;
        }
        double ub_c = cmax, ub_d = dmax;
        if (sched.distributed && cfg.distributed_ess) {
            ub_c = (*cfg.distributed_ess)[m].max_charge;
            ub_d = (*cfg.distributed_ess)[m].max_discharge;
        }
        for (std::size_t n = 0; n < N; ++n) {
            const double g = sched.grid(m, n), c = sched.charge(m, n), d = sched.discharge(m, n);
            if (g < -kBoxTol) rep.fail(fmt("grid < 0 at user %zu slot %zu", m + 1, n + 1));
            if (c < -kBoxTol) rep.fail(fmt("charge < 0 at user %zu slot %zu", m + 1, n + 1));
            if (d < -kBoxTol) rep.fail(fmt("discharge < 0 at user %zu slot %zu", m + 1, n + 1));
            if (g > cfg.grid_cap + kBoxTol) rep.fail(fmt("grid above grid_cap at user %zu slot %zu", m + 1, n + 1));
            if (c > ub_c + kBoxTol) rep.fail(fmt("charge above max rate at user %zu slot %zu", m + 1, n + 1));
            if (d > ub_d + kBoxTol) rep.fail(fmt("discharge above max rate at user %zu slot %zu", m + 1, n + 1));

            double lsum = 0.0;
            for (std::size_t q = 0; q < loads.size(); ++q) {
                const double l = sched.ctrl_load[m][q][n];
                const int slot = static_cast<int>(n) + 1;
                if (loads[q].in_window(slot)) {
                    if (l < loads[q].min_rate - kBoxTol || l > loads[q].max_rate + kBoxTol)
                        rep.fail(fmt("user %zu load %zu rate outside bounds at slot %d", m + 1, q + 1, slot));
                } else if (std::fabs(l) > kBoxTol) {
                    rep.fail(fmt("user %zu load %zu nonzero outside window at slot %d", m + 1, q + 1, slot));
                }
                lsum += l;
            }
            const double balance = g - c + d + delta(m, n) - lsum;
            if (balance < -kBoxTol)
                rep.fail(fmt("neutralization violated at user %zu slot %zu (residual %.3g)", m + 1, n + 1, balance));
        }
        for (std::size_t q = 0; q < loads.size(); ++q) {
            double total = 0.0;
            for (std::size_t n = 0; n < N; ++n) total += sched.ctrl_load[m][q][n];
            if (std::fabs(total - loads[q].total_energy) > kEnergyTol)
                rep.fail(fmt("user %zu load %zu total energy %.9g != %.9g", m + 1, q + 1, total,
                             loads[q].total_energy));
        }
    }

    if (sched.distributed)
        check_distributed_states(cfg, sched, rep);
    else
        check_shared_states(cfg, sched, rep);
    return rep;
}

Report check_schedule(const ScenarioConfig& cfg, const Schedule& sched) {
    return check_schedule(cfg, sched, net_profiles(cfg));
}

} // namespace sess
