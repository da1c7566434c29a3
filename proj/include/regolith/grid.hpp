#pragma once

#include "regolith/cell.hpp"
#include "regolith/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <unordered_map>
#include <vector>

namespace regolith {

struct GridConfig {
    double cell_size = 0.01; // inter-column distance in meters
    double origin_x = 0.0;   // world x of column (0, 0)
    double origin_z = 0.0;   // world z of column (0, 0)
    int32_t rows = 1;        // addressable i count
    int32_t cols = 1;        // addressable j count
    double depth_margin = 10.0; // column bottom sits this far below the initial minimum

    bool valid() const { return cell_size > 0.0 && rows >= 1 && cols >= 1 && depth_margin >= 0.0; }

    CellRect extent() const { return {0, 0, rows - 1, cols - 1}; }
    bool in_extent(CellIndex c) const { return c.i >= 0 && c.i < rows && c.j >= 0 && c.j < cols; }

    double cell_x(int32_t i) const { return origin_x + double(i) * cell_size; }
    double cell_z(int32_t j) const { return origin_z + double(j) * cell_size; }

    // Column whose center square owns the world point (nearest center).
    CellIndex cell_of(double x, double z) const {
        const double u = (x - origin_x) / cell_size;
        const double v = (z - origin_z) / cell_size;
        return {int32_t(std::floor(u + 0.5)), int32_t(std::floor(v + 0.5))};
    }

    double cell_area() const { return cell_size * cell_size; }
};

struct NoiseParams {
    double lattice_spacing = 8.0; // knot spacing in cells, >= 1
    double amplitude = 0.0;       // meters
    uint64_t seed = 0;
};

struct Column {
    double height = 0.0;    // top of the column, meters, signed
    bool in_contact = false;
    int32_t contour = 0;    // 0 whenever not in contact
    double displaced = 0.0; // material removed from this column this step (height units)
};

// Catmull-Rom interpolation of values v0..v3 at knots -1,0,1,2, evaluated at u in [0,1].
inline double catmull_rom(double v0, double v1, double v2, double v3, double u) {
    const double a = -v0 + 3.0 * v1 - 3.0 * v2 + v3;
    const double b = 2.0 * v0 - 5.0 * v1 + 4.0 * v2 - v3;
    const double c = -v0 + v2;
    return 0.5 * (((a * u + b) * u + c) * u) + v1;
}

// Lattice value noise interpolated with cubic Catmull-Rom splines. Exact knot
// coordinates return the knot value (interpolating spline). Deterministic in
// (seed, i, j) and evaluation-order independent.
double initial_height_noise(const NoiseParams& params, int32_t i, int32_t j);

// Catmull-Rom can overshoot the [-1,1] lattice range by at most 25%.
inline double noise_amplitude_bound(const NoiseParams& p) { return 1.25 * p.amplitude; }

// Initial-condition source for unmaterialized columns: procedural noise, a
// constant height, or imported height data.
class TerrainInitializer {
public:
    static TerrainInitializer flat(double height);
    static TerrainInitializer noise(const NoiseParams& params);
    // Row-major heights, shape must match the grid extent at create time.
    static TerrainInitializer imported(int32_t rows, int32_t cols, std::vector<double> heights);

    double height_at(int32_t i, int32_t j) const;
    double min_height() const { return min_height_; }
    double max_height() const { return max_height_; }

    bool is_imported() const { return kind_ == Kind::Imported; }
    int32_t imported_rows() const { return rows_; }
    int32_t imported_cols() const { return cols_; }

private:
    enum class Kind { Flat, Noise, Imported };
    Kind kind_ = Kind::Flat;
    double flat_height_ = 0.0;
    NoiseParams noise_{};
    int32_t rows_ = 0, cols_ = 0;
    std::shared_ptr<const std::vector<double>> heights_;
    double min_height_ = 0.0, max_height_ = 0.0;
};

// Sparse, on-demand column height field. Cells absent from the map are
// semantically at their initializer height with no contact flag. Modified
// cells persist for the lifetime of the grid, active or not.
class SparseColumnGrid {
public:
    SparseColumnGrid() = default;
    SparseColumnGrid(const GridConfig& config, TerrainInitializer init);

    const GridConfig& config() const { return config_; }
    const TerrainInitializer& initializer() const { return init_; }

    // Stored height if materialized, else the initializer height. Never
    // materializes. Out-of-extent indices are an error.
    double height_at(int32_t i, int32_t j) const;
    double height_at(CellIndex c) const { return height_at(c.i, c.j); }

    const Column* find(CellIndex c) const;
    Column& materialize(CellIndex c);
    bool is_materialized(CellIndex c) const { return cells_.count(c) != 0; }

    // Materializes and activates every cell of rect clipped to the extent.
    void mark_active(CellRect rect);
    void clear_active();
    bool is_active(CellIndex c) const { return active_.count(c) != 0; }
    const std::set<CellIndex>& active_cells() const { return active_; }

    // Sum of height * cell_size^2 over the region (clipped to the extent),
    // initializer heights for unmaterialized cells.
    double total_volume(CellRect region) const;

    // Ray origin height for upward collision rays: initializer minimum minus
    // the configured depth margin.
    double min_height() const { return init_.min_height() - config_.depth_margin; }

    size_t materialized_count() const { return cells_.size(); }
    const std::unordered_map<CellIndex, Column, CellIndexHash>& cells() const { return cells_; }

private:
    GridConfig config_{};
    TerrainInitializer init_{};
    std::unordered_map<CellIndex, Column, CellIndexHash> cells_;
    std::set<CellIndex> active_;
};

// Factory mirroring the two initial-condition sources. Imported height data
// with a shape different from the extent is rejected.
SparseColumnGrid create_grid(const GridConfig& config, const TerrainInitializer& init);

struct Neighbor {
    CellIndex cell;
    double distance; // center-to-center, meters
};

// Up to eight in-extent neighbors: axis neighbors at cell_size, diagonal
// neighbors at cell_size * sqrt(2).
std::vector<Neighbor> neighbors8(const GridConfig& config, int32_t i, int32_t j);

// Fixed scan order for the eight neighbor offsets used by all grid passes.
inline constexpr std::array<std::pair<int32_t, int32_t>, 8> kNeighborOffsets = {
    {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};

} // namespace regolith
