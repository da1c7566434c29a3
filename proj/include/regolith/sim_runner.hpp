#pragma once

#include "regolith/scenario.hpp"
#include "regolith/scheduler.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace regolith {

struct TimingReport {
    double collide_seconds = 0.0;
    double contour_seconds = 0.0;
    double displace_seconds = 0.0;
    double erode_seconds = 0.0;
    double particle_seconds = 0.0;
    double wall_seconds = 0.0;
    int64_t steps = 0;
    int32_t characters = 0;
    int32_t workers = 0;
    int64_t active_cells_high_water = 0;

    double stage_sum() const {
        return collide_seconds + contour_seconds + displace_seconds + erode_seconds +
               particle_seconds;
    }
};

// Plain-text summary to `path`, machine-readable CSV to `path + ".csv"`.
void report_timing(const TimingReport& report, const std::string& path);
void write_timing_text(std::ostream& out, const TimingReport& report);
void write_timing_csv(std::ostream& out, const TimingReport& report);

struct RunOptions {
    int32_t workers = 0;          // 0 = serial; otherwise one worker per character
    bool stream_transport = false;
    std::string out_dir;          // empty disables file exports
    std::string trace_path;       // message log for replay comparisons
    uint64_t chaos_seed = 0;      // inject random worker delays
    bool quiet = false;
};

struct RunSummary {
    TimingReport timing;
    StepStats physics; // accumulated physics/volume counters
    std::vector<std::string> exported_files;
    double final_total_volume = 0.0;
};

// Steps the scenario from start to end, exporting frames between steps.
// Deterministic for a fixed scenario and seed: exports are byte-identical
// across runs, worker counts, transports, and injected delays.
RunSummary run_simulation(const Scenario& scenario, const RunOptions& options);

} // namespace regolith
