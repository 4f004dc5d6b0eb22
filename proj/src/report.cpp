#include "sess/report.hpp"

#include <cmath>

#include <json.hpp>

#include "sess/csv.hpp"

namespace sess {

const char* const kVersion = "0.1.0";

long long uplink_bits(const MessageCount& m) {
    return m.bits_uplink + 64 * m.scalars_uplink;
}

void write_schedule_csv(const std::string& path, const ScenarioConfig& cfg, const Schedule& s) {
    CsvFile csv(path, "user,slot,grid,charge,discharge,loads_sum,state_after");
    const int M = cfg.num_users();
    const int N = cfg.horizon;
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            double lsum = 0.0;
            for (const auto& l : s.ctrl_load[m]) lsum += l[n];
            const double state = s.distributed ? s.ess_states_per_user(m, n + 1) : s.ess_states[n + 1];
            csv.line(std::to_string(m + 1) + "," + std::to_string(n + 1) + "," +
                     csv_num(s.grid(m, n)) + "," + csv_num(s.charge(m, n)) + "," +
                     csv_num(s.discharge(m, n)) + "," + csv_num(lsum) + "," + csv_num(state));
        }
    }
}

void write_online_runs_csv(const std::string& path, const std::vector<OnlineRunResult>& results) {
    CsvFile csv(path, "run,policy,seed,cost,feasible,bits_uplink,scalars_uplink,scalars_downlink");
    for (const auto& r : results) {
        csv.line(std::to_string(r.run_index) + "," + to_string(r.policy) + "," +
                 std::to_string(r.seed) + "," + csv_num(r.realized_cost) + "," +
                 (r.feasible ? "1" : "0") + "," + std::to_string(r.messages.bits_uplink) + "," +
                 std::to_string(r.messages.scalars_uplink) + "," +
                 std::to_string(r.messages.scalars_downlink));
    }
}

namespace {

// Per-user uplink bits for one slot, reconstructed from the ledger. The
// one-round policies have closed-form accounting; the rolling policy uploads
// its remaining-window profile and load state as scalars.
long long slot_bits(PolicyKind policy, const ScenarioConfig& cfg, const OnlineRunResult& r, int m,
                    int n) {
    switch (policy) {
        case PolicyKind::obf:
            return 1;
        case PolicyKind::ps: {
            double lsum = 0.0;
            for (const auto& l : r.ledger.ctrl_load[m]) lsum += l[n];
            return r.realized(m, n) - lsum < 0.0 ? 64 : 0;
        }
        case PolicyKind::rhc: {
            const int window = cfg.horizon - n;
            return 64 * (window + 2 * static_cast<long long>(cfg.users[m].controllable_loads.size()));
        }
    }
    return 0;
}

} // namespace

void write_online_trace_csv(const std::string& path, const ScenarioConfig& cfg,
                            const std::vector<OnlineRunResult>& results) {
    CsvFile csv(path, "run,slot,user,C,D,G,sum_L,S_n,bits_sent");
    for (const auto& r : results) {
        for (int n = 0; n < cfg.horizon; ++n) {
            for (int m = 0; m < cfg.num_users(); ++m) {
                double lsum = 0.0;
                for (const auto& l : r.ledger.ctrl_load[m]) lsum += l[n];
                csv.line(std::to_string(r.run_index) + "," + std::to_string(n + 1) + "," +
                         std::to_string(m + 1) + "," + csv_num(r.ledger.charge(m, n)) + "," +
                         csv_num(r.ledger.discharge(m, n)) + "," + csv_num(r.ledger.grid(m, n)) +
                         "," + csv_num(lsum) + "," + csv_num(r.ledger.ess_states[n]) + "," +
                         std::to_string(slot_bits(r.policy, cfg, r, m, n)));
            }
        }
    }
}

void write_capacity_csv(const std::string& path, const std::vector<CapacityRow>& rows) {
    CsvFile csv(path, "rho,shared_cost,distributed_cost");
    for (const auto& r : rows)
        csv.line(csv_num(r.rho) + "," + csv_num(r.shared_cost) + "," + csv_num(r.distributed_cost));
}

void write_sigma2_csv(const std::string& path, const std::vector<SigmaRow>& rows) {
    CsvFile csv(path, "policy,sigma2,mean_cost,std_cost,mean_bits,mean_scalars,oracle_mean_cost");
    for (const auto& r : rows)
        csv.line(std::string(to_string(r.policy)) + "," + csv_num(r.sigma2) + "," +
                 csv_num(r.mean_cost) + "," + csv_num(r.std_cost) + "," + csv_num(r.mean_bits) +
                 "," + csv_num(r.mean_scalars) + "," + csv_num(r.oracle_mean_cost));
}

void write_diversity_csv(const std::string& saving_path, const std::string& trace_path,
                         const DiversityResult& res) {
    {
        CsvFile csv(saving_path, "rho,high_cost,high_saving,low_cost,low_saving");
        for (std::size_t i = 0; i < res.high.size(); ++i)
            csv.line(csv_num(res.high[i].rho) + "," + csv_num(res.high[i].cost) + "," +
                     csv_num(res.high[i].saving) + "," + csv_num(res.low[i].cost) + "," +
                     csv_num(res.low[i].saving));
    }
    {
        CsvFile csv(trace_path, "slot,high_charge,high_discharge,low_charge,low_discharge");
        for (std::size_t n = 0; n < res.charge_high.size(); ++n)
            csv.line(std::to_string(n + 1) + "," + csv_num(res.charge_high[n]) + "," +
                     csv_num(res.discharge_high[n]) + "," + csv_num(res.charge_low[n]) + "," +
                     csv_num(res.discharge_low[n]));
    }
}

void write_plot_data_capacity(const std::string& path, const std::vector<CapacityRow>& rows) {
    CsvFile csv(path, "x,series,value");
    for (const auto& r : rows) {
        csv.line(csv_num(r.rho) + ",shared," + csv_num(r.shared_cost));
        csv.line(csv_num(r.rho) + ",distributed," + csv_num(r.distributed_cost));
    }
}

void write_plot_data_sigma2(const std::string& path, const std::vector<SigmaRow>& rows) {
    CsvFile csv(path, "x,series,value");
    double last_sigma = -1.0;
    for (const auto& r : rows) {
        if (r.sigma2 != last_sigma) {
            csv.line(csv_num(r.sigma2) + ",oracle," + csv_num(r.oracle_mean_cost));
            last_sigma = r.sigma2;
        }
        csv.line(csv_num(r.sigma2) + "," + to_string(r.policy) + "," + csv_num(r.mean_cost));
    }
}

void write_plot_data_diversity(const std::string& path, const DiversityResult& res) {
    CsvFile csv(path, "x,series,value");
    for (const auto& p : res.high) csv.line(csv_num(p.rho) + ",high_diversity," + csv_num(p.saving));
    for (const auto& p : res.low) csv.line(csv_num(p.rho) + ",low_diversity," + csv_num(p.saving));
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    for (const auto& [k, v] : entries) j[k] = v;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

} // namespace sess
