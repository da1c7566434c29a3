#include "regolith/bench.hpp"

#include "regolith/scheduler.hpp"

#include <chrono>
#include <cmath>

namespace regolith {

TriangleMesh make_uv_sphere(double radius, int segments, int rings) {
    TriangleMesh mesh;
    constexpr double kPi = 3.141592653589793;
    mesh.vertices.push_back({0.0, radius, 0.0});
    for (int r = 1; r < rings; ++r) {
        const double phi = kPi * double(r) / double(rings);
        const double y = radius * std::cos(phi);
        const double s = radius * std::sin(phi);
        for (int k = 0; k < segments; ++k) {
            const double theta = 2.0 * kPi * double(k) / double(segments);
            mesh.vertices.push_back({s * std::cos(theta), y, s * std::sin(theta)});
        }
    }
    mesh.vertices.push_back({0.0, -radius, 0.0});
    const int32_t bottom = int32_t(mesh.vertices.size()) - 1;
    auto ring_vertex = [&](int r, int k) { return int32_t(1 + (r - 1) * segments + (k % segments)); };

    for (int k = 0; k < segments; ++k) {
        mesh.triangles.push_back({0, ring_vertex(1, k + 1), ring_vertex(1, k)});
    }
    for (int r = 1; r + 1 < rings; ++r) {
        for (int k = 0; k < segments; ++k) {
            const int32_t a = ring_vertex(r, k), b = ring_vertex(r, k + 1);
            const int32_t c = ring_vertex(r + 1, k), d = ring_vertex(r + 1, k + 1);
            mesh.triangles.push_back({a, b, d});
            mesh.triangles.push_back({a, d, c});
        }
    }
    for (int k = 0; k < segments; ++k) {
        mesh.triangles.push_back({bottom, ring_vertex(rings - 1, k), ring_vertex(rings - 1, k + 1)});
    }
    mesh.compute_areas();
    return mesh;
}

CharacterSpec make_stamp_character(int32_t character_id, int32_t first_body_id, double lane_x,
                                   double duration) {
    constexpr double kRadius = 0.06;
    constexpr double kDip = 0.09;    // center drop; the sphere sinks ~3 cm into the ground
    constexpr double kPeriod = 0.4;  // one stamp per period
    constexpr double kSpeed = 0.25;  // lane advance along z

    std::vector<TrajectorySample> samples;
    for (double t = 0.0; t <= duration + 1e-9; t += 0.02) {
        const double swing = std::sin(3.141592653589793 * t / kPeriod);
        TrajectorySample s;
        s.t = t;
        s.position = {lane_x, kRadius + 0.01 - kDip * swing * swing, 0.15 + kSpeed * t};
        s.orientation = {1.0, 0.0, 0.0, 0.0};
        samples.push_back(s);
    }

    CharacterSpec chr;
    chr.character_id = character_id;
    chr.name = "stamper" + std::to_string(character_id);
    BodySpec body;
    body.body_id = first_body_id;
    body.mesh = std::make_shared<TriangleMesh>(make_uv_sphere(kRadius, 16, 12));
    body.trajectory = std::make_shared<Trajectory>(first_body_id, std::move(samples));
    chr.bodies.push_back(std::move(body));
    return chr;
}

BenchPoint run_bench_point(const BenchOptions& options) {
    WorldConfig world;
    world.grid.cell_size = options.cell_size;
    world.grid.origin_x = 0.0;
    world.grid.origin_z = 0.0;
    const double lane_gap = 0.6;
    world.grid.rows = int32_t((double(options.characters) * lane_gap + lane_gap) /
                              options.cell_size);
    world.grid.cols = int32_t(1.0 / options.cell_size);
    world.init = TerrainInitializer::flat(0.0);
    world.material = material_preset("sand");
    world.particles_enabled = false;
    world.t_start = 0.0;
    world.dt = 1.0 / 300.0;
    world.steps = options.steps;
    world.seed = 7;

    const double duration = double(options.steps) * world.dt;
    std::vector<CharacterSpec> characters;
    for (int32_t c = 0; c < options.characters; ++c) {
        characters.push_back(
            make_stamp_character(c, c, lane_gap * 0.5 + double(c) * lane_gap, duration));
    }

    BenchPoint point;
    point.characters = options.characters;
    point.workers = options.workers;
    point.steps = options.steps;
    point.wall_seconds = 1e300;

    for (int32_t rep = 0; rep < std::max(1, options.repeats); ++rep) {
        Coordinator coordinator(world, characters);
        ExecutionOptions exec;
        exec.workers = options.workers;
        const auto t0 = std::chrono::steady_clock::now();
        run_scheduled(coordinator, exec);
        const auto t1 = std::chrono::steady_clock::now();
        point.wall_seconds =
            std::min(point.wall_seconds, std::chrono::duration<double>(t1 - t0).count());
        point.active_cells_high_water = coordinator.active_cells_high_water();
    }
    return point;
}

} // namespace regolith
