// Test-side oracles. Everything here is deliberately independent of the
// library's solution paths: enumeration and brute force only.
#pragma once

#include <optional>
#include <vector>

#include "sess/lp.hpp"
#include "sess/model.hpp"
#include "sess/rng.hpp"

namespace sess::testing {

struct EnumeratedOptimum {
    bool feasible = false;
    double objective = 0.0;
    std::vector<double> x;   // structural variables only
};

/// Exhaustive basic-solution enumeration of a bounded LP: converts finite
/// upper bounds into rows, adds slacks, and inspects every basis. Complete
/// when every improving ray is excluded (the fuzzer guarantees that by
/// giving unbounded-above variables nonnegative costs).
EnumeratedOptimum enumerate_lp_optimum(const LpProblem& p);

/// Random small LP with guaranteed-bounded optimum; roughly three quarters
/// of the draws are feasible by construction.
LpProblem random_lp(Rng& rng);

/// True iff x satisfies every constraint and bound of p within tol.
bool lp_point_feasible(const LpProblem& p, const std::vector<double>& x, double tol);

/// The hand-checkable two-user, three-slot scenario: lossless storage of
/// capacity 2, unit prices, opposite surplus/deficit profiles.
/// Optimal weighted cost 0 with storage, 1.0 without.
ScenarioConfig canonical_two_user();

/// Same instance with a zero-capacity store.
ScenarioConfig canonical_no_storage();

/// Brute-force optimum of the canonical instance over the per-(user, slot)
/// net storage flow u = C - D discretized at `step` kWh. Valid only for the
/// lossless canonical family (no controllable loads, efficiency 1).
double canonical_brute_force(const ScenarioConfig& cfg, double step);

/// Brute-force optimum of the per-user-storage split of the canonical
/// instance (independent users, own store), same discretization.
double canonical_split_brute_force(const ScenarioConfig& cfg, double step);

} // namespace sess::testing
