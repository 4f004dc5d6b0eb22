// Day-ahead solvers: a monolithic LP oracle over all users, the iterative
// price-coordination solver that splits the work between users and a central
// controller, and the per-user-storage benchmark.
#pragma once

#include <string>
#include <vector>

#include "sess/core.hpp"
#include "sess/model.hpp"

namespace sess {

struct SolverOptions {
    int max_iters = 5000;
    double alpha0 = 1.0;           // step size alpha0 / sqrt(k)
    double eps = 1e-5;             // stop when max |dY| falls below this
    bool normalize_step = true;    // scale the step by price-box / ||v||
    bool cap_duals = true;         // clamp multipliers to the finite-dual box
    int recovery_interval = 25;    // iterations between feasibility checkpoints
    double gap_rel_tol = 4e-3;     // certified-gap stop, relative
    double gap_abs_tol = 2e-4;     // certified-gap stop for near-zero optima
    std::uint64_t random_init_seed = 0;  // 0 starts from zero multipliers
    int jobs = 1;                  // parallelism for the per-user solves
    std::string trace_path;        // per-iteration CSV when non-empty
};

/// Controller-side iteration state of the price-coordination loop.
struct DualState {
    Mat y;        // M x N multipliers, >= 0
    int iter = 1; // current iteration k, 1-based
    Mat c_avg;    // running averages of controller charge solutions
    Mat d_avg;
    double best_dual_value = -kInf;
};

struct SubgradientReport {
    Mat z;  // per-user mismatch before storage: grid - loads + net profile
    Mat v;  // z - c_avg + d_avg, the subgradient used by the dual update
};

struct IterationLog {
    int iter = 0;
    double dual_value = 0.0;
    double max_dual_change = 0.0;
    long long messages_exchanged = 0;  // cumulative scalars user<->controller
};

struct DistributedDiagnostics {
    std::vector<IterationLog> iterations;
    bool converged = false;
    std::string stop_reason;
    double best_dual_value = -kInf;
    double recovered_cost = kInf;
    double certified_gap = kInf;
    long long messages_exchanged = 0;
};

struct DistributedResult {
    Schedule schedule;
    DistributedDiagnostics diagnostics;
};

struct UserSubproblemResult {
    std::vector<double> grid;                // length N
    std::vector<std::vector<double>> loads;  // one length-N vector per load
    double objective = 0.0;                  // value of the priced subproblem
};

struct ControllerResult {
    Mat charge;      // M x N
    Mat discharge;   // M x N
    double objective = 0.0;  // guaranteed lower bound on the true minimum
};

/// Globally optimal schedule for the shared-storage problem, solved as one
/// LP (quadratic costs are piecewise-linearized with 32 segments).
/// Throws std::runtime_error if the instance is infeasible.
Schedule solve_monolithic(const ScenarioConfig& cfg);
Schedule solve_monolithic(const ScenarioConfig& cfg, const Mat& delta);

/// One user's priced subproblem: choose grid purchases (closed form per slot)
/// and window loads (greedy fill of the cheapest multipliers).
UserSubproblemResult solve_user_subproblem(const UserProfile& user,
                                           const std::vector<double>& y,
                                           double grid_cap);

/// Controller subproblem: minimize priced net charging subject to the
/// storage state corridor. Solved with solve_lp; a 1e-9 penalty on total
/// charge+discharge pins c = d = 0 wherever the multipliers leave ties.
ControllerResult solve_controller_subproblem(const ScenarioConfig& cfg, const Mat& y);

/// c_avg <- ((k-1) c_avg + c_hat) / k with k = state.iter, same for d_avg.
void update_running_average(DualState& state, const Mat& c_hat, const Mat& d_hat);

SubgradientReport compute_subgradient(const Mat& grid, const Mat& load_sum,
                                      const Mat& delta, const Mat& c_avg, const Mat& d_avg);

/// Y <- max(0, Y - alpha_k v), alpha_k = alpha0/sqrt(k); increments the
/// iteration counter and returns max |dY|. `cap` (optional) clamps Y to the
/// finite-dual box; `step_scale` rescales normalized steps.
double dual_update(DualState& state, const Mat& v, const SolverOptions& opts,
                   const Mat* cap = nullptr, double step_scale = 1.0);

/// The full iterative loop: per-user priced solves, controller solve with
/// running averages, subgradient dual updates, periodic primal recovery with
/// a certified duality-gap stop. Returns the best feasible schedule found.
DistributedResult solve_dual_decomposition(const ScenarioConfig& cfg,
                                           const SolverOptions& opts = {});
DistributedResult solve_dual_decomposition(const ScenarioConfig& cfg, const Mat& delta,
                                           const SolverOptions& opts = {});

/// With charge/discharge fixed, each user independently re-solves its own
/// small LP for grid purchases and load placement; always feasible when the
/// scenario validated. Returns the assembled feasibility-checked schedule.
Schedule recover_primal(const ScenarioConfig& cfg, const Mat& c_star, const Mat& d_star);
Schedule recover_primal(const ScenarioConfig& cfg, const Mat& delta,
                        const Mat& c_star, const Mat& d_star);

/// Benchmark: every user owns its own storage unit; M independent LPs.
/// Requires cfg.distributed_ess.
Schedule solve_distributed_ess(const ScenarioConfig& cfg);
Schedule solve_distributed_ess(const ScenarioConfig& cfg, const Mat& delta);

/// Equal per-user split of a shared spec so that the aggregates match
/// (sum of per-user capacities and rates equals the shared values).
DistributedEssSpec split_shared_ess(const SharedEssSpec& ess, int num_users);

/// Finite-dual clamp: per-entry marginal purchase cost at the grid cap.
Mat dual_cap_matrix(const ScenarioConfig& cfg);

} // namespace sess
