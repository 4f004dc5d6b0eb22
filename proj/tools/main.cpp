// Command-line front end: every subcommand is a thin adapter over the
// library and writes its results as CSV/JSON files under --out.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sess/csv.hpp"
#include "sess/model.hpp"
#include "sess/offline.hpp"
#include "sess/online.hpp"
#include "sess/parallel.hpp"
#include "sess/report.hpp"
#include "sess/scenario_io.hpp"
#include "sess/sim.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Exit codes, also documented in the help footer.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitInvalidScenario = 4;
constexpr int kExitSolver = 5;

struct CommonOpts {
    std::string out_dir = ".";
    int jobs = 0;   // 0 = all cores
    bool json = false;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

sess::ScenarioConfig load_checked(const std::string& path, bool must_validate = true) {
    sess::ScenarioConfig cfg;
    try {
        cfg = sess::load_scenario(path);
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
    if (must_validate) {
        const auto rep = sess::validate_scenario(cfg);
        if (!rep.ok()) throw ScenarioError("invalid scenario '" + path + "':\n" + rep.to_string());
    }
    return cfg;
}

std::string out_path(const CommonOpts& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    return (fs::path(c.out_dir) / name).string();
}

void emit(const CommonOpts& c, const ordered_json& summary, const std::string& text) {
    if (c.json)
        std::cout << summary.dump(2) << "\n";
    else
        std::cout << text;
}

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> grid;
    std::string tok;
    for (char ch : spec + ",") {
        if (ch == ',') {
            if (!tok.empty()) grid.push_back(std::stod(tok));
            tok.clear();
        } else {
            tok += ch;
        }
    }
    if (grid.empty()) throw CLI::ValidationError("grid", "expected a comma-separated list of numbers");
    return grid;
}

void add_common(CLI::App* cmd, CommonOpts& c) {
    const char* env_out = std::getenv("SESS_OUT_DIR");
    if (env_out && *env_out) c.out_dir = env_out;
    cmd->add_option("-o,--out", c.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("-j,--jobs", c.jobs, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_flag("--json", c.json, "Print the result summary as JSON");
}

int cmd_validate(const std::string& path) {
    sess::ScenarioConfig cfg;
    try {
        cfg = sess::load_scenario(path);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitIo;
    }
    const auto rep = sess::validate_scenario(cfg);
    if (!rep.ok()) {
        std::cout << rep.to_string();
        return kExitInvalidScenario;
    }
    std::cout << "ok\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sess - shared energy-storage scheduling: day-ahead solvers, "
                 "real-time policies, and experiment sweeps"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 1 failure, 2 usage error, 3 file error, 4 invalid scenario, "
               "5 solver failure.\nThe SESS_OUT_DIR environment variable overrides the default "
               "output directory.");

    std::string scenario, scenario_low, out_file;
    CommonOpts common;

    // validate -----------------------------------------------------------
    auto* c_validate = app.add_subcommand("validate", "Check a scenario file against every invariant");
    c_validate->add_option("scenario", scenario, "Scenario JSON file")->required();

    // solve-offline ------------------------------------------------------
    auto* c_offline = app.add_subcommand(
        "solve-offline", "Day-ahead optimum over all users as one LP (the oracle)");
    c_offline->add_option("scenario", scenario)->required();
    add_common(c_offline, common);

    // solve-distributed-alg ----------------------------------------------
    auto* c_dist = app.add_subcommand(
        "solve-distributed-alg",
        "Day-ahead optimum via the user/controller coordination loop (limited information exchange)");
    c_dist->add_option("scenario", scenario)->required();
    sess::SolverOptions sopts;
    c_dist->add_option("--max-iters", sopts.max_iters)->capture_default_str();
    c_dist->add_option("--alpha0", sopts.alpha0, "Step size numerator")->capture_default_str();
    c_dist->add_option("--eps", sopts.eps, "Dual-change stop tolerance")->capture_default_str();
    c_dist->add_option("--gap-rel", sopts.gap_rel_tol, "Certified-gap stop (relative)")
        ->capture_default_str();
    c_dist->add_option("--recovery-interval", sopts.recovery_interval)->capture_default_str();
    c_dist->add_option("--init-seed", sopts.random_init_seed,
                       "Seed for a random initial dual point (0 = zeros)")
        ->capture_default_str();
    bool no_cap = false, no_normalize = false, trace = false;
    c_dist->add_flag("--no-cap", no_cap, "Disable the finite-dual clamp");
    c_dist->add_flag("--no-normalize", no_normalize, "Use raw alpha0/sqrt(k) steps");
    c_dist->add_flag("--trace", trace, "Write a per-iteration trace CSV");
    add_common(c_dist, common);

    // solve-p2 -----------------------------------------------------------
    auto* c_p2 = app.add_subcommand("solve-p2",
                                    "Benchmark: every user owns its own storage unit (no sharing)");
    c_p2->add_option("scenario", scenario)->required();
    bool split_shared = false;
    c_p2->add_flag("--split-shared", split_shared,
                   "Derive per-user units by equally splitting the shared spec when absent");
    add_common(c_p2, common);

    // run-online ----------------------------------------------------------
    auto* c_online = app.add_subcommand("run-online",
                                        "Real-time policy simulation under prediction errors");
    c_online->add_option("scenario", scenario)->required();
    std::string policy_name = "ps";
    double sigma2 = 0.0;
    int runs = 1;
    std::uint64_t seed = 1;
    std::string rhc_inner = "monolithic";
    c_online->add_option("--policy", policy_name, "rhc | ps | obf")->capture_default_str();
    c_online->add_option("--sigma2", sigma2, "Prediction-error variance")->capture_default_str();
    c_online->add_option("--runs", runs)->capture_default_str();
    c_online->add_option("--seed", seed)->capture_default_str();
    c_online->add_option("--rhc-inner", rhc_inner, "monolithic | distributed")->capture_default_str();
    c_online->add_flag("--trace", trace, "Write the per-slot decision trace CSV");
    add_common(c_online, common);

    // sweep-capacity ------------------------------------------------------
    auto* c_cap = app.add_subcommand("sweep-capacity",
                                     "Shared vs per-user storage cost across a capacity grid");
    c_cap->add_option("scenario", scenario)->required();
    std::string rho_spec = "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.25,2.5,2.75,3";
    c_cap->add_option("--rho", rho_spec, "Comma-separated capacity multipliers")
        ->capture_default_str();
    c_cap->add_flag("--split-shared", split_shared,
                    "Equally split the shared spec when distributed_ess is absent");
    bool plot_data = false;
    c_cap->add_flag("--plot-data", plot_data, "Also write a long-format (x,series,value) CSV");
    add_common(c_cap, common);

    // sweep-sigma2 ----------------------------------------------------------
    auto* c_sig = app.add_subcommand(
        "sweep-sigma2", "Mean policy cost across an error-variance grid (Monte Carlo)");
    c_sig->add_option("scenario", scenario)->required();
    std::string sigma_spec = "0,0.4,0.8,1.2";
    c_sig->add_option("--grid", sigma_spec, "Comma-separated variances")->capture_default_str();
    c_sig->add_option("--runs", runs = 100)->capture_default_str();
    c_sig->add_option("--seed", seed)->capture_default_str();
    c_sig->add_flag("--plot-data", plot_data);
    add_common(c_sig, common);

    // diversity -------------------------------------------------------------
    auto* c_div = app.add_subcommand(
        "diversity", "Cost-saving saturation for a diverse vs single-source renewable mix");
    c_div->add_option("scenario_high", scenario, "Diverse-mix scenario file")->required();
    c_div->add_option("scenario_low", scenario_low, "Single-source scenario file")->required();
    std::string div_rho_spec = "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.5,3";
    c_div->add_option("--rho", div_rho_spec)->capture_default_str();
    c_div->add_flag("--plot-data", plot_data);
    add_common(c_div, common);

    // gen-scenario ------------------------------------------------------------
    auto* c_gen = app.add_subcommand("gen-scenario", "Write a random feasible scenario file");
    int users = 4, slots = 24;
    sess::GenOptions gopts;
    c_gen->add_option("--seed", seed)->capture_default_str();
    c_gen->add_option("--users", users)->capture_default_str();
    c_gen->add_option("--slots", slots)->capture_default_str();
    c_gen->add_option("--max-loads", gopts.max_loads_per_user)->capture_default_str();
    bool flat_prices = false, quad = false, no_split = false;
    c_gen->add_flag("--flat-prices", flat_prices, "Constant price instead of time-of-use");
    c_gen->add_flag("--quad", quad, "Add convex quadratic cost terms");
    c_gen->add_flag("--no-distributed", no_split, "Skip the per-user storage split");
    c_gen->add_option("--out-file", out_file, "Destination path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c_validate->parsed()) return cmd_validate(scenario);

        if (c_offline->parsed()) {
            const auto cfg = load_checked(scenario);
            const sess::Schedule s = sess::solve_monolithic(cfg);
            const std::string csv = out_path(common, "schedule_offline.csv");
            sess::write_schedule_csv(csv, cfg, s);
            ordered_json j{{"command", "solve-offline"}, {"weighted_cost", s.weighted_cost},
                           {"schedule_csv", csv}};
            emit(common, j, "weighted_cost " + sess::csv_num(s.weighted_cost) + "\nschedule " + csv + "\n");
            return kExitOk;
        }

        if (c_dist->parsed()) {
            const auto cfg = load_checked(scenario);
            sopts.cap_duals = !no_cap;
            sopts.normalize_step = !no_normalize;
            sopts.jobs = common.jobs;
            if (trace) sopts.trace_path = out_path(common, "distributed_alg_trace.csv");
            const auto res = sess::solve_dual_decomposition(cfg, sopts);
            const std::string csv = out_path(common, "schedule_distributed_alg.csv");
            sess::write_schedule_csv(csv, cfg, res.schedule);
            const auto& d = res.diagnostics;
            ordered_json j{{"command", "solve-distributed-alg"},
                           {"weighted_cost", res.schedule.weighted_cost},
                           {"iterations", d.iterations.size()},
                           {"converged", d.converged},
                           {"stop_reason", d.stop_reason},
                           {"best_dual_value", d.best_dual_value},
                           {"certified_gap", d.certified_gap},
                           {"messages_exchanged", d.messages_exchanged},
                           {"schedule_csv", csv}};
            char line[256];
            snprintf(line, sizeof line,
                     "weighted_cost %.12g\niterations %zu (%s)\nbest_dual %.12g gap %.3g\n"
                     "messages %lld\nschedule %s\n",
                     res.schedule.weighted_cost, d.iterations.size(), d.stop_reason.c_str(),
                     d.best_dual_value, d.certified_gap, d.messages_exchanged, csv.c_str());
            emit(common, j, line);
            if (!d.converged) std::cerr << "warning: " << d.stop_reason << "; best recovered schedule written\n";
            return kExitOk;
        }

        if (c_p2->parsed()) {
            auto cfg = load_checked(scenario);
            if (!cfg.distributed_ess && split_shared)
                cfg.distributed_ess = sess::split_shared_ess(cfg.shared_ess, cfg.num_users());
            const sess::Schedule s = sess::solve_distributed_ess(cfg);
            const std::string csv = out_path(common, "schedule_p2.csv");
            sess::write_schedule_csv(csv, cfg, s);
            ordered_json j{{"command", "solve-p2"}, {"weighted_cost", s.weighted_cost},
                           {"schedule_csv", csv}};
            emit(common, j, "weighted_cost " + sess::csv_num(s.weighted_cost) + "\nschedule " + csv + "\n");
            return kExitOk;
        }

        if (c_online->parsed()) {
            const auto cfg = load_checked(scenario);
            sess::OnlineOptions oopts;
            oopts.policy = sess::policy_from_string(policy_name);
            oopts.model = {sigma2, seed};
            oopts.runs = runs;
            oopts.jobs = common.jobs;
            oopts.rhc_distributed_inner = rhc_inner == "distributed";
            const auto results = sess::run_online(cfg, oopts);
            const std::string runs_csv = out_path(common, "online_runs.csv");
            sess::write_online_runs_csv(runs_csv, results);
            if (trace) sess::write_online_trace_csv(out_path(common, "online_trace.csv"), cfg, results);
            sess::write_manifest(out_path(common, "run_manifest.json"),
                                 {{"command", "run-online"},
                                  {"scenario", scenario},
                                  {"policy", policy_name},
                                  {"sigma2", sess::csv_num(sigma2)},
                                  {"runs", std::to_string(runs)},
                                  {"seed", std::to_string(seed)}});
            double mean = 0.0;
            long long infeasible = 0, bits = 0;
            for (const auto& r : results) {
                mean += r.realized_cost;
                bits += sess::uplink_bits(r.messages);
                if (!r.feasible) ++infeasible;
            }
            mean /= results.size();
            double sd = 0.0;
            for (const auto& r : results) sd += (r.realized_cost - mean) * (r.realized_cost - mean);
            sd = results.size() > 1 ? std::sqrt(sd / (results.size() - 1)) : 0.0;
            ordered_json j{{"command", "run-online"},   {"policy", policy_name},
                           {"sigma2", sigma2},          {"runs", runs},
                           {"mean_cost", mean},         {"std_cost", sd},
                           {"infeasible_runs", infeasible},
                           {"mean_uplink_bits", bits / static_cast<double>(results.size())},
                           {"runs_csv", runs_csv}};
            char line[256];
            snprintf(line, sizeof line,
                     "policy %s sigma2 %.4g runs %d\nmean_cost %.12g std %.6g\n"
                     "mean_uplink_bits %.6g\ninfeasible_runs %lld\n",
                     policy_name.c_str(), sigma2, runs, mean, sd,
                     bits / static_cast<double>(results.size()), infeasible);
            emit(common, j, line);
            if (infeasible > 0) {
                std::cerr << "error: " << infeasible << " run(s) produced an infeasible ledger\n";
                return kExitSolver;
            }
            return kExitOk;
        }

        if (c_cap->parsed()) {
            auto cfg = load_checked(scenario);
            if (!cfg.distributed_ess && split_shared)
                cfg.distributed_ess = sess::split_shared_ess(cfg.shared_ess, cfg.num_users());
            const auto grid = parse_grid(rho_spec);
            const auto rows = sess::sweep_capacity(cfg, grid, common.jobs);
            const std::string csv = out_path(common, "capacity_sweep.csv");
            sess::write_capacity_csv(csv, rows);
            if (plot_data) sess::write_plot_data_capacity(out_path(common, "capacity_sweep_long.csv"), rows);
            sess::write_manifest(out_path(common, "run_manifest.json"),
                                 {{"command", "sweep-capacity"},
                                  {"scenario", scenario},
                                  {"rho", rho_spec}});
            std::string text = "rho shared distributed\n";
            ordered_json tbl = ordered_json::array();
            for (const auto& r : rows) {
                text += sess::csv_num(r.rho) + " " + sess::csv_num(r.shared_cost) + " " +
                        sess::csv_num(r.distributed_cost) + "\n";
                tbl.push_back({{"rho", r.rho},
                               {"shared_cost", r.shared_cost},
                               {"distributed_cost", r.distributed_cost}});
            }
            emit(common, ordered_json{{"command", "sweep-capacity"}, {"rows", tbl}, {"csv", csv}},
                 text + "table " + csv + "\n");
            return kExitOk;
        }

        if (c_sig->parsed()) {
            const auto cfg = load_checked(scenario);
            const auto grid = parse_grid(sigma_spec);
            const auto rows = sess::sweep_sigma2(cfg, grid, runs, seed, common.jobs);
            const std::string csv = out_path(common, "sigma2_sweep.csv");
            sess::write_sigma2_csv(csv, rows);
            if (plot_data) sess::write_plot_data_sigma2(out_path(common, "sigma2_sweep_long.csv"), rows);
            sess::write_manifest(out_path(common, "run_manifest.json"),
                                 {{"command", "sweep-sigma2"},
                                  {"scenario", scenario},
                                  {"grid", sigma_spec},
                                  {"runs", std::to_string(runs)},
                                  {"seed", std::to_string(seed)}});
            std::string text = "policy sigma2 mean_cost std oracle\n";
            ordered_json tbl = ordered_json::array();
            for (const auto& r : rows) {
                text += std::string(sess::to_string(r.policy)) + " " + sess::csv_num(r.sigma2) + " " +
                        sess::csv_num(r.mean_cost) + " " + sess::csv_num(r.std_cost) + " " +
                        sess::csv_num(r.oracle_mean_cost) + "\n";
                tbl.push_back({{"policy", sess::to_string(r.policy)},
                               {"sigma2", r.sigma2},
                               {"mean_cost", r.mean_cost},
                               {"std_cost", r.std_cost},
                               {"oracle_mean_cost", r.oracle_mean_cost}});
            }
            // Relative losses at the top of the grid, next to the reference
            // losses of 4.4% (proportional sharing) and 7.4% (one-bit).
            for (const auto& r : rows) {
                if (r.sigma2 != grid.back()) continue;
                if (r.policy == sess::PolicyKind::ps || r.policy == sess::PolicyKind::obf) {
                    const double gap = 100.0 * (r.mean_cost - r.oracle_mean_cost) /
                                       std::max(1e-12, r.oracle_mean_cost);
                    char line[160];
                    snprintf(line, sizeof line, "%s loss at sigma2=%.3g: %.2f%% (reference %s)\n",
                             sess::to_string(r.policy), r.sigma2, gap,
                             r.policy == sess::PolicyKind::ps ? "4.4%" : "7.4%");
                    text += line;
                }
            }
            emit(common, ordered_json{{"command", "sweep-sigma2"}, {"rows", tbl}, {"csv", csv}},
                 text + "table " + csv + "\n");
            return kExitOk;
        }

        if (c_div->parsed()) {
            const auto high = load_checked(scenario);
            const auto low = load_checked(scenario_low);
            const auto grid = parse_grid(div_rho_spec);
            const auto res = sess::diversity_experiment(high, low, grid, common.jobs);
            const std::string saving_csv = out_path(common, "diversity_saving.csv");
            const std::string trace_csv = out_path(common, "diversity_traces.csv");
            sess::write_diversity_csv(saving_csv, trace_csv, res);
            if (plot_data) sess::write_plot_data_diversity(out_path(common, "diversity_long.csv"), res);
            sess::write_manifest(out_path(common, "run_manifest.json"),
                                 {{"command", "diversity"},
                                  {"scenario_high", scenario},
                                  {"scenario_low", scenario_low},
                                  {"rho", div_rho_spec}});
            char line[320];
            snprintf(line, sizeof line,
                     "saturation_rho high %.6g low %.6g\noverlap high %.6g low %.6g\n"
                     "saving %s\ntraces %s\n",
                     res.saturation_rho_high, res.saturation_rho_low, res.overlap_high,
                     res.overlap_low, saving_csv.c_str(), trace_csv.c_str());
            ordered_json j{{"command", "diversity"},
                           {"saturation_rho_high", res.saturation_rho_high},
                           {"saturation_rho_low", res.saturation_rho_low},
                           {"overlap_high", res.overlap_high},
                           {"overlap_low", res.overlap_low},
                           {"saving_csv", saving_csv},
                           {"traces_csv", trace_csv}};
            emit(common, j, line);
            return kExitOk;
        }

        if (c_gen->parsed()) {
            gopts.time_of_use_prices = !flat_prices;
            gopts.quadratic_costs = quad;
            gopts.with_distributed_split = !no_split;
            const auto cfg = sess::gen_random_scenario(seed, users, slots, gopts);
            const auto parent = fs::path(out_file).parent_path();
            if (!parent.empty()) fs::create_directories(parent);
            sess::save_scenario(cfg, out_file);
            std::cout << out_file << "\n";
            return kExitOk;
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidScenario;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitFailure;
}
