#include "regolith/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace regolith {

double initial_height_noise(const NoiseParams& params, int32_t i, int32_t j) {
    if (params.amplitude == 0.0) return 0.0;
    const double spacing = params.lattice_spacing;
    const double u = double(i) / spacing;
    const double v = double(j) / spacing;
    const auto base_u = int64_t(std::floor(u));
    const auto base_v = int64_t(std::floor(v));
    const double fu = u - double(base_u);
    const double fv = v - double(base_v);

    double rows[4];
    for (int r = 0; r < 4; ++r) {
        const int64_t lu = base_u - 1 + r;
        double k[4];
        for (int c = 0; c < 4; ++c) {
            k[c] = lattice_uniform_pm1(params.seed, lu, base_v - 1 + c);
        }
        rows[r] = catmull_rom(k[0], k[1], k[2], k[3], fv);
    }
    return params.amplitude * catmull_rom(rows[0], rows[1], rows[2], rows[3], fu);
}

TerrainInitializer TerrainInitializer::flat(double height) {
    TerrainInitializer t;
    t.kind_ = Kind::Flat;
    t.flat_height_ = height;
    t.min_height_ = height;
    t.max_height_ = height;
    return t;
}

TerrainInitializer TerrainInitializer::noise(const NoiseParams& params) {
    if (params.lattice_spacing < 1.0) throw std::invalid_argument("noise lattice_spacing must be >= 1 cell");
    if (params.amplitude < 0.0) throw std::invalid_argument("noise amplitude must be >= 0");
    TerrainInitializer t;
    t.kind_ = Kind::Noise;
    t.noise_ = params;
    t.min_height_ = -noise_amplitude_bound(params);
    t.max_height_ = noise_amplitude_bound(params);
    return t;
}

TerrainInitializer TerrainInitializer::imported(int32_t rows, int32_t cols, std::vector<double> heights) {
    if (rows < 1 || cols < 1 || heights.size() != size_t(rows) * size_t(cols)) {
        throw std::invalid_argument("imported height data does not match its declared shape");
    }
    TerrainInitializer t;
    t.kind_ = Kind::Imported;
    t.rows_ = rows;
    t.cols_ = cols;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double h : heights) {
        if (!std::isfinite(h)) throw std::invalid_argument("imported height data contains non-finite values");
        lo = std::min(lo, h);
        hi = std::max(hi, h);
    }
    t.min_height_ = lo;
    t.max_height_ = hi;
    t.heights_ = std::make_shared<const std::vector<double>>(std::move(heights));
    return t;
}

double TerrainInitializer::height_at(int32_t i, int32_t j) const {
    switch (kind_) {
        case Kind::Flat: return flat_height_;
        case Kind::Noise: return initial_height_noise(noise_, i, j);
        case Kind::Imported: return (*heights_)[size_t(i) * size_t(cols_) + size_t(j)];
    }
    return 0.0;
}

SparseColumnGrid::SparseColumnGrid(const GridConfig& config, TerrainInitializer init)
    : config_(config), init_(std::move(init)) {
    if (!config_.valid()) throw std::invalid_argument("invalid grid config");
}

SparseColumnGrid create_grid(const GridConfig& config, const TerrainInitializer& init) {
    if (!config.valid()) throw std::invalid_argument("invalid grid config");
    if (init.is_imported() && (init.imported_rows() != config.rows || init.imported_cols() != config.cols)) {
        throw std::invalid_argument("imported height array shape does not match the grid extent");
    }
    return SparseColumnGrid(config, init);
}

double SparseColumnGrid::height_at(int32_t i, int32_t j) const {
    if (!config_.in_extent({i, j})) throw std::out_of_range("cell index outside the virtual extent");
    const auto it = cells_.find({i, j});
    return it != cells_.end() ? it->second.height : init_.height_at(i, j);
}

const Column* SparseColumnGrid::find(CellIndex c) const {
    const auto it = cells_.find(c);
    return it != cells_.end() ? &it->second : nullptr;
}

Column& SparseColumnGrid::materialize(CellIndex c) {
    if (!config_.in_extent(c)) throw std::out_of_range("cell index outside the virtual extent");
    const auto it = cells_.find(c);
    if (it != cells_.end()) return it->second;
    Column col;
    col.height = init_.height_at(c.i, c.j);
    return cells_.emplace(c, col).first->second;
}

void SparseColumnGrid::mark_active(CellRect rect) {
    const CellRect r = rect.intersection(config_.extent());
    if (r.is_empty()) return;
    for (int32_t i = r.i0; i <= r.i1; ++i) {
        for (int32_t j = r.j0; j <= r.j1; ++j) {
            materialize({i, j});
            active_.insert({i, j});
        }
    }
}

void SparseColumnGrid::clear_active() { active_.clear(); }

double SparseColumnGrid::total_volume(CellRect region) const {
    const CellRect r = region.intersection(config_.extent());
    if (r.is_empty()) return 0.0;
    double sum = 0.0;
    for (int32_t i = r.i0; i <= r.i1; ++i) {
        for (int32_t j = r.j0; j <= r.j1; ++j) {
            const auto it = cells_.find({i, j});
            sum += it != cells_.end() ? it->second.height : init_.height_at(i, j);
        }
    }
    return sum * config_.cell_area();
}

std::vector<Neighbor> neighbors8(const GridConfig& config, int32_t i, int32_t j) {
    std::vector<Neighbor> out;
    out.reserve(8);
    const double d = config.cell_size;
    const double diag = d * std::sqrt(2.0);
    for (const auto& [di, dj] : kNeighborOffsets) {
        const CellIndex c{i + di, j + dj};
        if (!config.in_extent(c)) continue;
        out.push_back({c, (di != 0 && dj != 0) ? diag : d});
    }
    return out;
}

} // namespace regolith
