// Domain types for the shared-storage scheduling problem, scenario
// validation, net-profile computation, and the schedule feasibility checker
// used by every solver and policy in this project.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sess/core.hpp"

namespace sess {

/// A deferrable task: fixed total energy inside a slot window, rate-bounded
/// per slot. Slots are 1-based and inclusive on both ends.
struct ControllableLoad {
    std::string id;
    int start_slot = 1;
    int end_slot = 1;
    double total_energy = 0.0;   // kWh over the window
    double min_rate = 0.0;       // kW, applies inside the window
    double max_rate = 0.0;       // kW

    int window_len() const { return end_slot - start_slot + 1; }
    bool in_window(int slot) const { return slot >= start_slot && slot <= end_slot; }
};

/// Per-slot purchase cost: price*G + quad*G^2. quad may be empty (linear).
struct CostCoeffs {
    std::vector<double> price;
    std::vector<double> quad;

    double price_at(std::size_t n) const { return price[n]; }
    double quad_at(std::size_t n) const { return quad.empty() ? 0.0 : quad[n]; }
    bool is_linear() const;
};

struct UserProfile {
    std::string id;
    std::vector<double> fixed_load;   // kWh per slot, length N
    std::vector<double> renewable;    // kWh per slot, length N
    std::vector<ControllableLoad> controllable_loads;
    double weight = 0.0;              // cost weight, sums to 1 across users
    CostCoeffs cost_coeffs;
};

struct SharedEssSpec {
    double min_state = 0.0;
    double max_state = 0.0;
    double initial_state = 0.0;
    double max_charge_per_user = 0.0;     // kW
    double max_discharge_per_user = 0.0;  // kW
    double charge_eff = 1.0;
    double discharge_eff = 1.0;
};

/// One user's privately owned storage unit in the benchmark setup.
struct EssUnitSpec {
    double min_state = 0.0;
    double max_state = 0.0;
    double initial_state = 0.0;
    double max_charge = 0.0;
    double max_discharge = 0.0;
    double charge_eff = 1.0;
    double discharge_eff = 1.0;
};

using DistributedEssSpec = std::vector<EssUnitSpec>;

struct ScenarioConfig {
    int horizon = 0;   // N
    std::vector<UserProfile> users;
    SharedEssSpec shared_ess;
    std::optional<DistributedEssSpec> distributed_ess;
    double grid_cap = 0.0;   // per-user per-slot purchase cap
    std::string description;

    int num_users() const { return static_cast<int>(users.size()); }
};

/// A complete decision set plus the storage trajectory it induces.
struct Schedule {
    Mat grid;        // M x N
    Mat charge;      // M x N
    Mat discharge;   // M x N
    std::vector<std::vector<std::vector<double>>> ctrl_load;  // [m][q][slot 0..N-1]
    std::vector<double> ess_states;   // length N+1, shared storage
    Mat ess_states_per_user;          // M x (N+1) in distributed mode
    bool distributed = false;
    double weighted_cost = 0.0;
};

/// Weighted purchase cost of a grid matrix under the scenario's cost model.
double weighted_cost_of(const ScenarioConfig& cfg, const Mat& grid);

/// Checks every type invariant; violations are returned, never thrown.
Report validate_scenario(const ScenarioConfig& cfg);

/// Renewable minus fixed load, length N. Throws on length mismatch.
std::vector<double> net_profile(const UserProfile& user);

/// All users' net profiles as an M x N matrix.
Mat net_profiles(const ScenarioConfig& cfg);

/// Recomputes the storage trajectory from the recursion and verifies every
/// schedule invariant (boxes, windows, totals, state bounds, neutralization).
Report check_schedule(const ScenarioConfig& cfg, const Schedule& sched);

/// Same, but neutralization is checked against an explicit net-profile matrix
/// (used for realized profiles in online runs).
Report check_schedule(const ScenarioConfig& cfg, const Schedule& sched, const Mat& delta);

/// Rebuilds ess_states (shared mode) from charge/discharge via the recursion.
std::vector<double> ess_trajectory(const SharedEssSpec& ess, const Mat& charge, const Mat& discharge);

} // namespace sess
