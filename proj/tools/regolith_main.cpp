#include "regolith/bench.hpp"
#include "regolith/heightmap_io.hpp"
#include "regolith/scenario.hpp"
#include "regolith/sim_runner.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int cmd_simulate(const std::string& scenario_path, regolith::RunOptions options,
                 int64_t seed_override, int32_t frames_every, const std::string& timing_path) {
    std::vector<std::string> warnings;
    regolith::Scenario scenario = regolith::load_scenario(scenario_path, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    if (seed_override >= 0) scenario.world.seed = uint64_t(seed_override);
    if (frames_every > 0) scenario.output.frame_stride = frames_every;

    const regolith::RunSummary summary = regolith::run_simulation(scenario, options);
    if (!timing_path.empty()) {
        regolith::report_timing(summary.timing, timing_path);
    }
    if (!options.quiet) {
        regolith::write_timing_text(std::cout, summary.timing);
        std::cout.precision(12);
        std::cout << "final total volume " << summary.final_total_volume << " m^3\n";
    }
    return 0;
}

int cmd_bench(int32_t characters, bool parallel, int32_t steps, int32_t repeats,
              const std::string& csv_path) {
    std::ostringstream csv;
    csv.precision(9);
    csv << "characters,workers,steps,active_high_water,wall_s\n";
    for (int32_t n = 1; n <= characters; ++n) {
        regolith::BenchOptions opt;
        opt.characters = n;
        opt.steps = steps;
        opt.repeats = repeats;
        opt.workers = 0;
        const regolith::BenchPoint serial = regolith::run_bench_point(opt);
        csv << serial.characters << ",0," << serial.steps << ','
            << serial.active_cells_high_water << ',' << serial.wall_seconds << '\n';
        if (parallel && n >= 2) {
            opt.workers = n;
            const regolith::BenchPoint par = regolith::run_bench_point(opt);
            csv << par.characters << ',' << par.workers << ',' << par.steps << ','
                << par.active_cells_high_water << ',' << par.wall_seconds << '\n';
        }
    }
    std::cout << csv.str();
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) {
            std::cerr << csv_path << ": cannot open for writing\n";
            return 1;
        }
        out << csv.str();
    }
    return 0;
}

int cmd_diff(const std::string& a_path, const std::string& b_path) {
    const regolith::HeightField a = regolith::load_heightmap_any(a_path);
    const regolith::HeightField b = regolith::load_heightmap_any(b_path);
    const regolith::HeightmapDiff d = regolith::diff_heightmaps(a, b);
    std::cout.precision(12);
    std::cout << "samples " << d.samples << "\n";
    std::cout << "max_abs_diff " << d.max_abs << "\n";
    std::cout << "mean_abs_diff " << d.mean_abs << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deformable ground simulation"};
    app.require_subcommand(1);

    // simulate
    std::string scenario_path, out_dir, trace_path, timing_path, transport = "inproc";
    int32_t workers = 0, frames_every = 0;
    int64_t seed_override = -1;
    uint64_t chaos_seed = 0;
    bool quiet = false;
    auto* sim = app.add_subcommand("simulate", "run a scenario file");
    sim->add_option("scenario", scenario_path, "scenario file")->required();
    sim->add_option("--workers", workers, "0 = serial; otherwise one worker per character");
    sim->add_option("--transport", transport, "inproc|stream")
        ->check(CLI::IsMember({"inproc", "stream"}));
    sim->add_option("--out", out_dir, "output directory for frames");
    sim->add_option("--seed", seed_override, "override the scenario seed");
    sim->add_option("--frames-every", frames_every, "override the frame stride");
    sim->add_option("--timing", timing_path, "write a timing report (text + .csv)");
    sim->add_option("--trace", trace_path, "write the coordinator message log");
    sim->add_option("--chaos", chaos_seed, "inject random worker delays (schedule stress)");
    sim->add_flag("--quiet", quiet, "suppress the summary printout");

    // bench
    int32_t bench_chars = 4, bench_steps = 150, bench_repeats = 1;
    bool bench_parallel = false;
    std::string bench_csv;
    auto* bench = app.add_subcommand("bench", "scaling study with synthetic characters");
    bench->add_option("--characters", bench_chars, "measure 1..N characters")->required();
    bench->add_flag("--parallel", bench_parallel, "also measure one-worker-per-character runs");
    bench->add_option("--steps", bench_steps, "steps per measurement");
    bench->add_option("--repeats", bench_repeats, "best-of repetitions");
    bench->add_option("--csv", bench_csv, "also write the CSV to a file");

    // diff-heightmaps
    std::string diff_a, diff_b;
    auto* diff = app.add_subcommand("diff-heightmaps", "absolute difference of two heightmaps");
    diff->add_option("a", diff_a, "first heightmap (.pgm with sidecar, or text)")->required();
    diff->add_option("b", diff_b, "second heightmap")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            regolith::RunOptions options;
            options.workers = workers;
            options.stream_transport = transport == "stream";
            options.out_dir = out_dir;
            options.trace_path = trace_path;
            options.chaos_seed = chaos_seed;
            options.quiet = quiet;
            return cmd_simulate(scenario_path, options, seed_override, frames_every, timing_path);
        }
        if (bench->parsed()) {
            return cmd_bench(bench_chars, bench_parallel, bench_steps, bench_repeats, bench_csv);
        }
        if (diff->parsed()) {
            return cmd_diff(diff_a, diff_b);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
