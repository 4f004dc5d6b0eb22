#include <doctest.h>

#include <atomic>

#include "sess/parallel.hpp"
#include "sess/scenario_io.hpp"
#include "sess/sim.hpp"

using namespace sess;

TEST_CASE("parallel_for covers every index exactly once") {
    std::vector<std::atomic<int>> hits(257);
    for (auto& h : hits) h = 0;
    parallel_for(hits.size(), 0, [&](std::size_t i) { hits[i] += 1; });
    for (auto& h : hits) CHECK(h == 1);
}

TEST_CASE("serial and OpenMP paths produce identical results") {
    const ScenarioConfig cfg = gen_random_scenario(19, 3, 8);

    // Monte Carlo batch.
    OnlineOptions opts;
    opts.policy = PolicyKind::ps;
    opts.model = {0.8, 7};
    opts.runs = 12;
    opts.jobs = 1;
    const auto serial = run_online(cfg, opts);
    opts.jobs = 4;
    const auto parallel = run_online(cfg, opts);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].realized_cost == parallel[i].realized_cost);
        CHECK(serial[i].ledger.grid == parallel[i].ledger.grid);
        CHECK(serial[i].ledger.charge == parallel[i].ledger.charge);
        CHECK(serial[i].ledger.discharge == parallel[i].ledger.discharge);
    }

    // Sweep grid.
    const std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
    const auto rows1 = sweep_capacity(cfg, grid, 1);
    const auto rows4 = sweep_capacity(cfg, grid, 4);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(rows1[i].shared_cost == rows4[i].shared_cost);
        CHECK(rows1[i].distributed_cost == rows4[i].distributed_cost);
    }

    // Coordination loop with parallel user solves.
    SolverOptions s1;
    s1.max_iters = 300;
    SolverOptions s4 = s1;
    s4.jobs = 4;
    const auto a = solve_dual_decomposition(cfg, s1);
    const auto b = solve_dual_decomposition(cfg, s4);
    CHECK(a.schedule.weighted_cost == b.schedule.weighted_cost);
    CHECK(a.schedule.grid == b.schedule.grid);
}
