// CSV and manifest emission for solver results and experiment tables.
// All writers are deterministic: fixed column order, %.12g numbers, no
// timestamps, so a fixed seed reproduces byte-identical files.
#pragma once

#include <string>
#include <vector>

#include "sess/model.hpp"
#include "sess/offline.hpp"
#include "sess/online.hpp"
#include "sess/sim.hpp"

namespace sess {

void write_schedule_csv(const std::string& path, const ScenarioConfig& cfg, const Schedule& s);

/// One row per run: cost, feasibility, message totals.
void write_online_runs_csv(const std::string& path, const std::vector<OnlineRunResult>& results);

/// Per-slot decision trace: run,slot,user,C,D,G,sum_L,S_n,bits_sent.
void write_online_trace_csv(const std::string& path, const ScenarioConfig& cfg,
                            const std::vector<OnlineRunResult>& results);

void write_capacity_csv(const std::string& path, const std::vector<CapacityRow>& rows);

void write_sigma2_csv(const std::string& path, const std::vector<SigmaRow>& rows);

void write_diversity_csv(const std::string& saving_path, const std::string& trace_path,
                         const DiversityResult& res);

/// Long-format (x, series, value) table for external plotting tools.
void write_plot_data_capacity(const std::string& path, const std::vector<CapacityRow>& rows);
void write_plot_data_sigma2(const std::string& path, const std::vector<SigmaRow>& rows);
void write_plot_data_diversity(const std::string& path, const DiversityResult& res);

/// Machine-readable record of an experiment invocation (inputs, seeds,
/// version). Deliberately excludes wall-clock time.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);

/// Uplink volume in bits, counting one scalar as 64 bits.
long long uplink_bits(const MessageCount& m);

extern const char* const kVersion;

} // namespace sess
