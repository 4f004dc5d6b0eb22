// Experiment drivers: storage-capacity sweeps, error-variance sweeps, the
// renewable-diversity comparison, and seeded random scenario generation.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sess/model.hpp"
#include "sess/online.hpp"

namespace sess {

struct SweepSpec {
    std::string scenario_path;
    enum class Kind { capacity_rho, sigma2, diversity } kind = Kind::capacity_rho;
    std::vector<double> values;   // rho or sigma^2 grid
    int runs = 100;               // Monte Carlo runs per grid point (sigma2)
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out_dir;
    bool plot_data = false;
};

/// Returns a copy with all storage capacities and rates scaled by rho
/// (shared spec and, when present, every per-user unit).
ScenarioConfig scale_storage(const ScenarioConfig& cfg, double rho);

struct CapacityRow {
    double rho = 0.0;
    double shared_cost = 0.0;
    double distributed_cost = 0.0;
};

/// Optimal cost of the shared store vs the per-user benchmark at each rho.
/// Requires a distributed_ess spec (use split_shared_ess when absent).
std::vector<CapacityRow> sweep_capacity(const ScenarioConfig& cfg,
                                        const std::vector<double>& rho_grid, int jobs = 1);

struct SigmaRow {
    double sigma2 = 0.0;
    PolicyKind policy = PolicyKind::ps;
    double mean_cost = 0.0;
    double std_cost = 0.0;
    double mean_bits = 0.0;      // uplink indicator bits per run
    double mean_scalars = 0.0;   // uplink+downlink scalar values per run
    double oracle_mean_cost = 0.0;   // clairvoyant day-ahead solve per seed
};

/// Monte Carlo cost of each policy across the error-variance grid, with the
/// per-seed clairvoyant optimum as the baseline column.
std::vector<SigmaRow> sweep_sigma2(const ScenarioConfig& cfg, const std::vector<double>& grid,
                                   int runs, std::uint64_t seed, int jobs = 1);

struct DiversityPoint {
    double rho = 0.0;
    double cost = 0.0;
    double saving = 0.0;   // against the no-storage cost
};

struct DiversityResult {
    std::vector<DiversityPoint> high;   // diverse renewable mix
    std::vector<DiversityPoint> low;    // single-source mix
    double saturation_rho_high = 0.0;   // smallest rho within 1% of the plateau
    double saturation_rho_low = 0.0;
    std::vector<double> charge_high, discharge_high;   // per-slot totals at rho = 1
    std::vector<double> charge_low, discharge_low;
    double overlap_high = 0.0;   // sum over slots of min(total charge, total discharge)
    double overlap_low = 0.0;
};

DiversityResult diversity_experiment(const ScenarioConfig& high_div, const ScenarioConfig& low_div,
                                     const std::vector<double>& rho_grid, int jobs = 1);

struct GenOptions {
    int max_loads_per_user = 2;
    bool time_of_use_prices = true;
    bool quadratic_costs = false;
    bool with_distributed_split = true;
};

/// Feasible-by-construction random scenario; identical for identical seeds.
ScenarioConfig gen_random_scenario(std::uint64_t seed, int users, int slots,
                                   const GenOptions& opts = {});

/// Sum over slots of min(total charge, total discharge): concurrent cycling.
double charge_discharge_overlap(const Schedule& sched);

} // namespace sess
