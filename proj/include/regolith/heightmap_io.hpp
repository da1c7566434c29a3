#pragma once

#include "regolith/grid.hpp"

#include <string>
#include <vector>

namespace regolith {

// Dense row-major height snapshot used by the file formats.
struct HeightField {
    int32_t rows = 0;
    int32_t cols = 0;
    double cell_size = 0.0;
    std::vector<double> heights; // rows * cols, row-major

    double at(int32_t i, int32_t j) const { return heights[size_t(i) * size_t(cols) + size_t(j)]; }
};

// Heights of a rect of the grid (initializer heights for unmaterialized cells).
HeightField snapshot(const SparseColumnGrid& grid, CellRect rect);

// Plain-text grid: first line "rows cols cell_size", then row-major heights
// in meters.
HeightField load_text_heightmap(const std::string& path);
void save_text_heightmap(const std::string& path, const HeightField& field);

// Affine height <-> gray mapping for quantized export.
struct HeightRange {
    double min_height = 0.0;
    double max_height = 0.0;
};

// Binary 16-bit PGM (P5, maxval 65535, big-endian samples) plus a sidecar
// text file "<path>.range" recording min_height, max_height and the grid
// shape. Heights outside the range clamp to the gray extremes.
void save_pgm16(const std::string& path, const HeightField& field, const HeightRange& range);
HeightField load_pgm16(const std::string& path);

// Quad mesh over the active cells of the grid, one vertex per column top.
void save_obj_active(const std::string& path, const SparseColumnGrid& grid);

struct HeightmapDiff {
    double max_abs = 0.0;
    double mean_abs = 0.0;
    int64_t samples = 0;
};

// Absolute height difference between two fields. Fields of equal shape are
// compared cell by cell; fields with different resolutions are compared in
// world space by nearest-neighbor sampling of the coarser onto the finer
// over the shared area (both anchored at the same origin).
HeightmapDiff diff_heightmaps(const HeightField& a, const HeightField& b);

// Loads either format by extension: ".pgm" (with sidecar) or text.
HeightField load_heightmap_any(const std::string& path);

} // namespace regolith
