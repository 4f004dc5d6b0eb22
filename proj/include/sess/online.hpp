// Real-time policies: slot-by-slot operation on realized (error-corrupted)
// net profiles. Three policies trade optimality against the amount of
// information exchanged with the controller each slot.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sess/core.hpp"
#include "sess/model.hpp"
#include "sess/offline.hpp"

namespace sess {

/// Zero-mean i.i.d. Gaussian error added to every predicted net-profile entry.
struct PredictionErrorModel {
    double variance = 0.0;   // sigma^2
    std::uint64_t seed = 1;
};

enum class PolicyKind { rhc, ps, obf };

const char* to_string(PolicyKind p);
PolicyKind policy_from_string(const std::string& s);   // throws on unknown name

struct OnlineOptions {
    PolicyKind policy = PolicyKind::ps;
    PredictionErrorModel model;
    int runs = 1;
    int jobs = 1;
    bool rhc_distributed_inner = false;  // use the coordination loop inside RHC
    SolverOptions rhc_solver;            // options for the distributed inner solver
};

/// Rolling state of one policy run.
struct OnlineState {
    int slot = 1;                        // next slot to decide, 1-based
    std::vector<double> ess_state;       // element 0 holds the shared state
    std::vector<std::vector<double>> remaining_energy;   // per user, per load
    Mat realized;                        // M x N, columns < slot are filled
    Schedule ledger;                     // committed decisions so far
};

struct MessageCount {
    long long bits_uplink = 0;        // one-bit indicators
    long long scalars_uplink = 0;     // real-valued reports user -> controller
    long long scalars_downlink = 0;   // controller -> user values
};

struct OnlineRunResult {
    PolicyKind policy = PolicyKind::ps;
    int run_index = 0;
    std::uint64_t seed = 0;
    double realized_cost = 0.0;
    bool feasible = false;
    Schedule ledger;
    Mat realized;          // the sampled net profiles this run saw
    MessageCount messages;
};

/// Predicted profiles plus sampled errors; reproducible for a fixed seed.
/// Entries are drawn user-major, slot-minor. No truncation is applied.
Mat sample_realization(const ScenarioConfig& cfg, const PredictionErrorModel& model);

/// Per-slot reservation for one load: outstanding energy prorated over the
/// slots left in the window, clamped to the rate bounds. Zero outside.
double modified_ctrl_load(const ControllableLoad& load, double remaining, int slot);

/// Net profile after reserving every load's prorated share this slot.
double modified_net_profile(const UserProfile& user, const std::vector<double>& remaining,
                            double realized_delta, int slot);

OnlineState make_online_state(const ScenarioConfig& cfg);

/// One slot of the proportional-sharing policy: deficit users receive
/// discharge proportional to their announced deficit, surplus users charge
/// in id order up to the headroom, leftovers are bought from the grid.
void ps_step(const ScenarioConfig& cfg, OnlineState& state, const std::vector<double>& realized_col,
             MessageCount& messages);

/// Same flow, but the controller only learns a deficit bit per user and
/// splits the available discharge evenly across deficit users.
void obf_step(const ScenarioConfig& cfg, OnlineState& state, const std::vector<double>& realized_col,
              MessageCount& messages);

/// Re-optimizes the remaining horizon (realized value for the current slot,
/// predictions beyond) and commits only the current slot's decisions.
void rhc_step(const ScenarioConfig& cfg, OnlineState& state, const Mat& predicted,
              const std::vector<double>& realized_col, const OnlineOptions& opts,
              MessageCount& messages);

/// Runs `runs` seeded policy executions (seed + run index each); results are
/// ordered by run index and independent of the parallelism level.
std::vector<OnlineRunResult> run_online(const ScenarioConfig& cfg, const OnlineOptions& opts);

} // namespace sess
