#include "regolith/sim_runner.hpp"

#include "regolith/heightmap_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace regolith {

namespace {

std::vector<int32_t> frame_step_list(int32_t steps, int32_t stride) {
    std::vector<int32_t> out;
    for (int32_t k = stride - 1; k < steps; k += stride) out.push_back(k);
    if (out.empty() || out.back() != steps - 1) out.push_back(steps - 1);
    return out;
}

std::string frame_name(const char* prefix, int32_t frame, const char* ext) {
    std::ostringstream os;
    os << prefix << '_' << std::setw(4) << std::setfill('0') << frame << ext;
    return os.str();
}

// Active-region quad mesh without touching the authoritative grid: copy the
// frame heights into a scratch grid restricted to the body rects.
void export_obj_frame(const std::string& path, const Coordinator& coordinator, int32_t step) {
    const WorldConfig& config = coordinator.config();
    SparseColumnGrid temp = create_grid(config.grid, config.init);
    for (int32_t c = 0; c < coordinator.character_count(); ++c) {
        temp.mark_active(coordinator.schedule(c).body_rect(step));
    }
    for (const CellIndex& cell : temp.active_cells()) {
        temp.materialize(cell).height = coordinator.grid().height_at(cell);
    }
    save_obj_active(path, temp);
}

void export_particles_frame(const std::string& path,
                            const std::map<int32_t, BodyParticleState>& carry, double t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.precision(17);
    out << "t,x,y,z,vx,vy,vz,volume\n";
    for (const auto& [body, state] : carry) {
        for (const Particle& p : state.airborne) {
            out << t << ',' << p.position.x << ',' << p.position.y << ',' << p.position.z << ','
                << p.velocity.x << ',' << p.velocity.y << ',' << p.velocity.z << ',' << p.volume
                << '\n';
        }
    }
}

} // namespace

void write_timing_text(std::ostream& out, const TimingReport& r) {
    out.precision(6);
    out << std::fixed;
    out << "characters        " << r.characters << "\n";
    out << "workers           " << r.workers << "\n";
    out << "steps             " << r.steps << "\n";
    out << "active high water " << r.active_cells_high_water << " cells\n";
    out << "collide           " << r.collide_seconds << " s\n";
    out << "contour           " << r.contour_seconds << " s\n";
    out << "displace          " << r.displace_seconds << " s\n";
    out << "erode             " << r.erode_seconds << " s\n";
    out << "particles         " << r.particle_seconds << " s\n";
    out << "stage sum         " << r.stage_sum() << " s\n";
    out << "wall clock        " << r.wall_seconds << " s\n";
}

void write_timing_csv(std::ostream& out, const TimingReport& r) {
    out.precision(9);
    out << "characters,workers,steps,active_high_water,collide_s,contour_s,displace_s,erode_s,"
           "particles_s,stage_sum_s,wall_s\n";
    out << r.characters << ',' << r.workers << ',' << r.steps << ','
        << r.active_cells_high_water << ',' << r.collide_seconds << ',' << r.contour_seconds
        << ',' << r.displace_seconds << ',' << r.erode_seconds << ',' << r.particle_seconds << ','
        << r.stage_sum() << ',' << r.wall_seconds << '\n';
}

void report_timing(const TimingReport& report, const std::string& path) {
    std::ofstream text(path);
    if (!text) throw std::runtime_error(path + ": cannot open for writing");
    write_timing_text(text, report);
    std::ofstream csv(path + ".csv");
    if (!csv) throw std::runtime_error(path + ".csv: cannot open for writing");
    write_timing_csv(csv, report);
}

RunSummary run_simulation(const Scenario& scenario, const RunOptions& options) {
    RunSummary summary;
    const WorldConfig& world = scenario.world;
    const bool exporting = !options.out_dir.empty();
    const std::vector<int32_t> frames =
        frame_step_list(world.steps, scenario.output.frame_stride);

    HeightRange range{0.0, 0.0};
    if (scenario.output.height_range) {
        range = {scenario.output.height_range->first, scenario.output.height_range->second};
    } else if (exporting && (scenario.output.pgm || scenario.output.text)) {
        // Quantization range from a dry pass so every frame shares one
        // height-to-gray mapping.
        Coordinator dry(world, scenario.characters);
        double lo = world.init.min_height(), hi = world.init.max_height();
        dry.set_frame_steps(frames, [&](int32_t) {
            for (const auto& [cell, col] : dry.grid().cells()) {
                lo = std::min(lo, col.height);
                hi = std::max(hi, col.height);
            }
        });
        run_serial(dry);
        range = {lo, hi};
    }

    if (exporting) std::filesystem::create_directories(options.out_dir);

    Coordinator coordinator(world, scenario.characters);
    std::ofstream trace;
    if (!options.trace_path.empty()) {
        trace.open(options.trace_path);
        if (!trace) throw std::runtime_error(options.trace_path + ": cannot open for writing");
        coordinator.set_trace(&trace);
    }

    int32_t frame_counter = 0;
    coordinator.set_frame_steps(frames, [&](int32_t step) {
        if (!exporting) return;
        const std::filesystem::path dir(options.out_dir);
        const int32_t frame = frame_counter++;
        if (scenario.output.pgm) {
            const std::string p = (dir / frame_name("frame", frame, ".pgm")).string();
            save_pgm16(p, snapshot(coordinator.grid(), world.grid.extent()), range);
            summary.exported_files.push_back(p);
            summary.exported_files.push_back(p + ".range");
        }
        if (scenario.output.text) {
            const std::string p = (dir / frame_name("frame", frame, ".txt")).string();
            save_text_heightmap(p, snapshot(coordinator.grid(), world.grid.extent()));
            summary.exported_files.push_back(p);
        }
        if (scenario.output.obj) {
            const std::string p = (dir / frame_name("terrain", frame, ".obj")).string();
            export_obj_frame(p, coordinator, step);
            summary.exported_files.push_back(p);
        }
        if (scenario.output.particles_csv) {
            const std::string p = (dir / frame_name("particles", frame, ".csv")).string();
            export_particles_frame(p, coordinator.carry_snapshot(), world.step_time(step));
            summary.exported_files.push_back(p);
        }
    });

    ExecutionOptions exec;
    exec.workers = options.workers;
    exec.stream_transport = options.stream_transport;
    exec.chaos_seed = options.chaos_seed;

    const auto t0 = std::chrono::steady_clock::now();
    run_scheduled(coordinator, exec);
    const auto t1 = std::chrono::steady_clock::now();

    const StepStats stats = coordinator.total_stats();
    summary.physics = stats;
    summary.timing.collide_seconds = stats.collide_seconds;
    summary.timing.contour_seconds = stats.contour_seconds;
    summary.timing.displace_seconds = stats.displace_seconds;
    summary.timing.erode_seconds = stats.erode_seconds;
    summary.timing.particle_seconds = stats.particle_seconds;
    summary.timing.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    summary.timing.steps = world.steps;
    summary.timing.characters = int32_t(scenario.characters.size());
    summary.timing.workers = options.workers;
    summary.timing.active_cells_high_water = coordinator.active_cells_high_water();
    summary.final_total_volume = coordinator.grid().total_volume(world.grid.extent());

    if (!options.quiet && exporting) {
        std::cerr << "wrote " << summary.exported_files.size() << " files to " << options.out_dir
                  << "\n";
    }
    return summary;
}

} // namespace regolith
