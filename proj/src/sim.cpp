#include "sess/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sess/offline.hpp"
#include "sess/parallel.hpp"
#include "sess/rng.hpp"

namespace sess {

ScenarioConfig scale_storage(const ScenarioConfig& cfg, double rho) {
    if (rho < 0.0) throw std::invalid_argument("rho must be >= 0");
    ScenarioConfig scaled = cfg;
    auto& e = scaled.shared_ess;
    e.min_state *= rho;
    e.max_state *= rho;
    e.initial_state *= rho;
    e.max_charge_per_user *= rho;
    e.max_discharge_per_user *= rho;
    if (scaled.distributed_ess) {
        for (auto& d : *scaled.distributed_ess) {
            d.min_state *= rho;
            d.max_state *= rho;
            d.initial_state *= rho;
            d.max_charge *= rho;
            d.max_discharge *= rho;
        }
    }
    return scaled;
}

std::vector<CapacityRow> sweep_capacity(const ScenarioConfig& cfg,
                                        const std::vector<double>& rho_grid, int jobs) {
    if (!cfg.distributed_ess)
        throw std::invalid_argument("sweep_capacity: scenario needs a distributed_ess spec");
    std::vector<CapacityRow> rows(rho_grid.size());
    parallel_for(rho_grid.size(), jobs, [&](std::size_t i) {
        const ScenarioConfig scaled = scale_storage(cfg, rho_grid[i]);
        rows[i].rho = rho_grid[i];
        rows[i].shared_cost = solve_monolithic(scaled).weighted_cost;
        rows[i].distributed_cost = solve_distributed_ess(scaled).weighted_cost;
    });
    return rows;
}

std::vector<SigmaRow> sweep_sigma2(const ScenarioConfig& cfg, const std::vector<double>& grid,
                                   int runs, std::uint64_t seed, int jobs) {
    const PolicyKind policies[] = {PolicyKind::rhc, PolicyKind::ps, PolicyKind::obf};
    std::vector<SigmaRow> rows;

    for (double sigma2 : grid) {
        // The clairvoyant baseline re-solves the day with each realized
        // profile; every policy sees exactly the same realizations.
        std::vector<double> oracle_costs(runs);
        parallel_for(runs, jobs, [&](std::size_t i) {
            PredictionErrorModel model{sigma2, seed + i};
            const Mat realized = sample_realization(cfg, model);
            oracle_costs[i] = solve_monolithic(cfg, realized).weighted_cost;
        });
        double oracle_mean = 0.0;
        for (double c : oracle_costs) oracle_mean += c;
        oracle_mean /= runs;

        for (PolicyKind policy : policies) {
            OnlineOptions opts;
            opts.policy = policy;
            opts.model = {sigma2, seed};
            opts.runs = runs;
            opts.jobs = jobs;
            const auto results = run_online(cfg, opts);

            SigmaRow row;
            row.sigma2 = sigma2;
            row.policy = policy;
            row.oracle_mean_cost = oracle_mean;
            double bits = 0.0, scalars = 0.0;
            for (const auto& r : results) {
                if (!r.feasible)
                    throw std::runtime_error(std::string("infeasible ledger from policy ") +
                                             to_string(policy) + " run " +
                                             std::to_string(r.run_index));
                row.mean_cost += r.realized_cost;
                bits += static_cast<double>(r.messages.bits_uplink);
                scalars += static_cast<double>(r.messages.scalars_uplink +
                                               r.messages.scalars_downlink);
            }
            row.mean_cost /= runs;
            for (const auto& r : results) {
                const double d = r.realized_cost - row.mean_cost;
                row.std_cost += d * d;
            }
            row.std_cost = runs > 1 ? std::sqrt(row.std_cost / (runs - 1)) : 0.0;
            row.mean_bits = bits / runs;
            row.mean_scalars = scalars / runs;
            rows.push_back(row);
        }
    }
    return rows;
}

double charge_discharge_overlap(const Schedule& sched) {
    double overlap = 0.0;
    for (std::size_t n = 0; n < sched.charge.cols(); ++n) {
        double c = 0.0, d = 0.0;
        for (std::size_t m = 0; m < sched.charge.rows(); ++m) {
            c += sched.charge(m, n);
            d += sched.discharge(m, n);
        }
        overlap += std::min(c, d);
    }
    return overlap;
}

namespace {

std::vector<DiversityPoint> saving_curve(const ScenarioConfig& cfg,
                                         const std::vector<double>& rho_grid, int jobs) {
    const double base_cost = solve_monolithic(scale_storage(cfg, 0.0)).weighted_cost;
    std::vector<DiversityPoint> pts(rho_grid.size());
    parallel_for(rho_grid.size(), jobs, [&](std::size_t i) {
        const double cost = solve_monolithic(scale_storage(cfg, rho_grid[i])).weighted_cost;
        pts[i] = {rho_grid[i], cost, base_cost - cost};
    });
    return pts;
}

double saturation_rho(const std::vector<DiversityPoint>& pts) {
    const double plateau = pts.back().saving;
    for (const auto& p : pts) {
        if (p.saving >= plateau - 0.01 * std::fabs(plateau)) return p.rho;
    }
    return pts.back().rho;
}

} // namespace

DiversityResult diversity_experiment(const ScenarioConfig& high_div, const ScenarioConfig& low_div,
                                     const std::vector<double>& rho_grid, int jobs) {
    if (rho_grid.empty()) throw std::invalid_argument("diversity: empty rho grid");
    DiversityResult res;
    res.high = saving_curve(high_div, rho_grid, jobs);
    res.low = saving_curve(low_div, rho_grid, jobs);
    res.saturation_rho_high = saturation_rho(res.high);
    res.saturation_rho_low = saturation_rho(res.low);

    const Schedule sh = solve_monolithic(high_div);
    const Schedule sl = solve_monolithic(low_div);
    const auto totals = [](const Schedule& s, std::vector<double>& c, std::vector<double>& d) {
        c.assign(s.charge.cols(), 0.0);
        d.assign(s.charge.cols(), 0.0);
        for (std::size_t n = 0; n < s.charge.cols(); ++n)
            for (std::size_t m = 0; m < s.charge.rows(); ++m) {
                c[n] += s.charge(m, n);
                d[n] += s.discharge(m, n);
            }
    };
    totals(sh, res.charge_high, res.discharge_high);
    totals(sl, res.charge_low, res.discharge_low);
    res.overlap_high = charge_discharge_overlap(sh);
    res.overlap_low = charge_discharge_overlap(sl);
    return res;
}

// ---------------------------------------------------------------------------

namespace {

// Smooth daily shapes on a 24-hour clock, stretched to any horizon.
double solar_shape(double hour_frac) {
    const double x = (hour_frac - 0.54) * 3.6;   // peak around 13:00
    return std::max(0.0, 1.0 - x * x);
}

double wind_shape(double hour_frac, double phase) {
    return 0.55 + 0.45 * std::sin(2.0 * 3.14159265358979323846 * (hour_frac + phase));
}

double fixed_shape(double hour_frac) {
    const double morning = std::exp(-std::pow((hour_frac - 0.31) * 8.0, 2.0));
    const double evening = std::exp(-std::pow((hour_frac - 0.81) * 6.0, 2.0));
    return 0.35 + 0.8 * morning + 1.1 * evening;
}

} // namespace

ScenarioConfig gen_random_scenario(std::uint64_t seed, int users, int slots,
                                   const GenOptions& opts) {
    if (users < 1 || slots < 1) throw std::invalid_argument("gen_random_scenario: users/slots >= 1");
    Rng rng(seed);
    ScenarioConfig cfg;
    cfg.horizon = slots;
    cfg.description = "generated scenario, seed " + std::to_string(seed);

    // Shared time-of-use price curve, mildly perturbed per scenario.
    std::vector<double> price(slots);
    for (int n = 0; n < slots; ++n) {
        const double h = (n + 0.5) / slots;
        price[n] = opts.time_of_use_prices
                       ? 0.14 + 0.1 * fixed_shape(h) / 1.4 + 0.04 * rng.uniform()
                       : 0.2;
    }

    double weight_acc = 0.0;
    for (int m = 0; m < users; ++m) {
        UserProfile u;
        u.id = "user" + std::to_string(m + 1);
        u.weight = m + 1 < users ? 1.0 / users : 1.0 - weight_acc;
        weight_acc += u.weight;

        const double load_scale = rng.uniform(0.5, 1.5);
        const double gen_scale = rng.uniform(0.4, 1.6);
        const bool solar = rng.uniform() < 0.5;
        const double phase = rng.uniform(0.0, 0.5);
        u.fixed_load.resize(slots);
        u.renewable.resize(slots);
        for (int n = 0; n < slots; ++n) {
            const double h = (n + 0.5) / slots;
            u.fixed_load[n] = load_scale * fixed_shape(h) * (0.9 + 0.2 * rng.uniform());
            const double shape = solar ? solar_shape(h) : wind_shape(h, phase);
            u.renewable[n] = gen_scale * 1.6 * shape * (0.9 + 0.2 * rng.uniform());
        }

        u.cost_coeffs.price = price;
        if (opts.quadratic_costs) {
            u.cost_coeffs.quad.assign(slots, 0.0);
            for (int n = 0; n < slots; ++n) u.cost_coeffs.quad[n] = 0.01 + 0.02 * rng.uniform();
        }

        const int nloads = static_cast<int>(rng.uniform_int(0, opts.max_loads_per_user));
        for (int q = 0; q < nloads && slots >= 2; ++q) {
            ControllableLoad load;
            load.id = "task" + std::to_string(q + 1);
            load.start_slot = static_cast<int>(rng.uniform_int(1, slots - 1));
            load.end_slot = static_cast<int>(rng.uniform_int(load.start_slot + 1, slots));
            load.min_rate = 0.0;
            load.max_rate = rng.uniform(0.5, 3.0);
            const double wl = load.window_len();
            load.total_energy = rng.uniform(0.2, 0.85) * wl * load.max_rate;
            u.controllable_loads.push_back(load);
        }
        cfg.users.push_back(std::move(u));
    }

    // Storage sized against the fleet; initial state at the floor.
    auto& e = cfg.shared_ess;
    e.max_state = users * rng.uniform(1.0, 3.0);
    e.min_state = 0.1 * e.max_state;
    e.initial_state = e.min_state;
    e.max_charge_per_user = rng.uniform(0.1, 0.25) * e.max_state;
    e.max_discharge_per_user = rng.uniform(0.1, 0.25) * e.max_state;
    e.charge_eff = rng.uniform(0.8, 0.95);
    e.discharge_eff = rng.uniform(0.8, 0.95);

    if (opts.with_distributed_split) cfg.distributed_ess = split_shared_ess(e, users);

    double peak = 0.0;
    for (int n = 0; n < slots; ++n) {
        double total = 0.0;
        for (const auto& u : cfg.users) {
            double d = u.fixed_load[n];
            for (const auto& load : u.controllable_loads)
                if (load.in_window(n + 1)) d += load.max_rate;
            total = std::max(total, d);
        }
        peak = std::max(peak, total);
    }
    cfg.grid_cap = 10.0 * std::max(peak, 1.0);
    return cfg;
}

} // namespace sess
