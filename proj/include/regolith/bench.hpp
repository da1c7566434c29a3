#pragma once

#include "regolith/engine.hpp"

#include <vector>

namespace regolith {

// Axis-aligned unit-sphere style test mesh (UV tessellation).
TriangleMesh make_uv_sphere(double radius, int segments, int rings);

// Synthetic stamping character for scaling studies: a sphere that dips into
// the ground repeatedly while advancing along z on its own lane.
CharacterSpec make_stamp_character(int32_t character_id, int32_t first_body_id, double lane_x,
                                   double duration);

struct BenchOptions {
    int32_t characters = 2;
    int32_t workers = 0; // 0 = serial
    int32_t steps = 150;
    double cell_size = 0.01;
    int32_t repeats = 1; // best-of timing
};

struct BenchPoint {
    int32_t characters = 0;
    int32_t workers = 0;
    int64_t steps = 0;
    double wall_seconds = 0.0;
    int64_t active_cells_high_water = 0;
};

// Wall-clock for one configuration of disjoint synthetic characters.
BenchPoint run_bench_point(const BenchOptions& options);

} // namespace regolith
