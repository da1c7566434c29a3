#include "regolith/heightmap_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace regolith {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw std::runtime_error(path + ": " + why);
}

} // namespace

HeightField snapshot(const SparseColumnGrid& grid, CellRect rect) {
    const CellRect r = rect.intersection(grid.config().extent());
    HeightField f;
    if (r.is_empty()) return f;
    f.rows = int32_t(r.rows());
    f.cols = int32_t(r.cols());
    f.cell_size = grid.config().cell_size;
    f.heights.resize(size_t(f.rows) * size_t(f.cols));
    size_t k = 0;
    for (int32_t i = r.i0; i <= r.i1; ++i) {
        for (int32_t j = r.j0; j <= r.j1; ++j) {
            f.heights[k++] = grid.height_at(i, j);
        }
    }
    return f;
}

HeightField load_text_heightmap(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    HeightField f;
    if (!(in >> f.rows >> f.cols >> f.cell_size)) fail(path, "bad header, expected 'rows cols cell_size'");
    if (f.rows < 1 || f.cols < 1 || f.cell_size <= 0.0) fail(path, "non-positive shape or cell size");
    const size_t n = size_t(f.rows) * size_t(f.cols);
    f.heights.resize(n);
    for (size_t k = 0; k < n; ++k) {
        if (!(in >> f.heights[k])) fail(path, "truncated height data");
        if (!std::isfinite(f.heights[k])) fail(path, "non-finite height value");
    }
    return f;
}

void save_text_heightmap(const std::string& path, const HeightField& field) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    out.precision(17);
    out << field.rows << ' ' << field.cols << ' ' << field.cell_size << '\n';
    for (int32_t i = 0; i < field.rows; ++i) {
        for (int32_t j = 0; j < field.cols; ++j) {
            out << field.at(i, j) << (j + 1 == field.cols ? '\n' : ' ');
        }
    }
    if (!out) fail(path, "write failed");
}

void save_pgm16(const std::string& path, const HeightField& field, const HeightRange& range) {
    if (range.max_height < range.min_height) throw std::invalid_argument("inverted height range");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P5\n" << field.cols << ' ' << field.rows << "\n65535\n";
    const double span = range.max_height - range.min_height;
    std::vector<unsigned char> line(size_t(field.cols) * 2);
    for (int32_t i = 0; i < field.rows; ++i) {
        for (int32_t j = 0; j < field.cols; ++j) {
            double g = 0.0;
            if (span > 0.0) {
                g = std::round((field.at(i, j) - range.min_height) / span * 65535.0);
                g = std::clamp(g, 0.0, 65535.0);
            }
            const auto v = uint16_t(g);
            line[size_t(j) * 2] = (unsigned char)(v >> 8); // big-endian per the format
            line[size_t(j) * 2 + 1] = (unsigned char)(v & 0xff);
        }
        out.write(reinterpret_cast<const char*>(line.data()), std::streamsize(line.size()));
    }
    if (!out) fail(path, "write failed");

    std::ofstream side(path + ".range");
    if (!side) fail(path + ".range", "cannot open for writing");
    side.precision(17);
    side << range.min_height << ' ' << range.max_height << '\n';
    side << field.rows << ' ' << field.cols << ' ' << field.cell_size << '\n';
    if (!side) fail(path + ".range", "write failed");
}

HeightField load_pgm16(const std::string& path) {
    std::ifstream side(path + ".range");
    if (!side) fail(path + ".range", "missing sidecar range file");
    HeightRange range;
    if (!(side >> range.min_height >> range.max_height)) fail(path + ".range", "bad sidecar");
    double side_cell = 0.0;
    int32_t side_rows = 0, side_cols = 0;
    side >> side_rows >> side_cols >> side_cell; // optional shape line

    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    std::string magic;
    in >> magic;
    if (magic != "P5") fail(path, "not a binary PGM (P5)");
    int64_t w = 0, h = 0, maxval = 0;
    // Header tokens may be separated by whitespace or comment lines.
    auto next_int = [&](int64_t& v) {
        while (true) {
            int c = in.peek();
            if (c == '#') {
                std::string comment;
                std::getline(in, comment);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        if (!(in >> v)) fail(path, "bad PGM header");
    };
    next_int(w);
    next_int(h);
    next_int(maxval);
    if (maxval != 65535) fail(path, "expected 16-bit PGM with maxval 65535");
    in.get(); // single whitespace before raster

    HeightField f;
    f.rows = int32_t(h);
    f.cols = int32_t(w);
    f.cell_size = side_cell;
    const size_t n = size_t(w) * size_t(h);
    std::vector<unsigned char> raw(n * 2);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (in.gcount() != std::streamsize(raw.size())) fail(path, "truncated raster");
    f.heights.resize(n);
    const double span = range.max_height - range.min_height;
    for (size_t k = 0; k < n; ++k) {
        const uint16_t v = uint16_t(raw[k * 2]) << 8 | uint16_t(raw[k * 2 + 1]);
        f.heights[k] = range.min_height + double(v) / 65535.0 * span;
    }
    return f;
}

void save_obj_active(const std::string& path, const SparseColumnGrid& grid) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    out.precision(10);
    const auto& active = grid.active_cells();
    std::unordered_map<CellIndex, int64_t, CellIndexHash> vertex_id;
    vertex_id.reserve(active.size());
    int64_t next = 1;
    for (const CellIndex& c : active) {
        vertex_id[c] = next++;
        out << "v " << grid.config().cell_x(c.i) << ' ' << grid.height_at(c) << ' '
            << grid.config().cell_z(c.j) << '\n';
    }
    for (const CellIndex& c : active) {
        const CellIndex b{c.i + 1, c.j};
        const CellIndex d{c.i, c.j + 1};
        const CellIndex e{c.i + 1, c.j + 1};
        const auto ib = vertex_id.find(b), id_ = vertex_id.find(d), ie = vertex_id.find(e);
        if (ib == vertex_id.end() || id_ == vertex_id.end() || ie == vertex_id.end()) continue;
        out << "f " << vertex_id[c] << ' ' << ib->second << ' ' << ie->second << ' '
            << id_->second << '\n';
    }
    if (!out) fail(path, "write failed");
}

HeightmapDiff diff_heightmaps(const HeightField& a, const HeightField& b) {
    if (a.rows < 1 || b.rows < 1) throw std::invalid_argument("empty height field");
    HeightmapDiff d;
    double sum = 0.0;
    if (a.rows == b.rows && a.cols == b.cols &&
        (a.cell_size == b.cell_size || a.cell_size == 0.0 || b.cell_size == 0.0)) {
        for (size_t k = 0; k < a.heights.size(); ++k) {
            const double dv = std::abs(a.heights[k] - b.heights[k]);
            d.max_abs = std::max(d.max_abs, dv);
            sum += dv;
        }
        d.samples = int64_t(a.heights.size());
        d.mean_abs = sum / double(d.samples);
        return d;
    }
    if (a.cell_size <= 0.0 || b.cell_size <= 0.0) {
        throw std::invalid_argument("differently shaped height fields need cell sizes for world-space diff");
    }
    // Sample on the finer grid over the shared world rectangle.
    const HeightField& fine = a.cell_size <= b.cell_size ? a : b;
    const HeightField& coarse = a.cell_size <= b.cell_size ? b : a;
    const double wx = std::min(double(a.rows - 1) * a.cell_size, double(b.rows - 1) * b.cell_size);
    const double wz = std::min(double(a.cols - 1) * a.cell_size, double(b.cols - 1) * b.cell_size);
    for (int32_t i = 0; double(i) * fine.cell_size <= wx && i < fine.rows; ++i) {
        for (int32_t j = 0; double(j) * fine.cell_size <= wz && j < fine.cols; ++j) {
            const double x = double(i) * fine.cell_size;
            const double z = double(j) * fine.cell_size;
            const auto ci = int32_t(std::floor(x / coarse.cell_size + 0.5));
            const auto cj = int32_t(std::floor(z / coarse.cell_size + 0.5));
            if (ci >= coarse.rows || cj >= coarse.cols) continue;
            const double dv = std::abs(fine.at(i, j) - coarse.at(ci, cj));
            d.max_abs = std::max(d.max_abs, dv);
            sum += dv;
            ++d.samples;
        }
    }
    if (d.samples == 0) throw std::invalid_argument("height fields share no world area");
    d.mean_abs = sum / double(d.samples);
    return d;
}

HeightField load_heightmap_any(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pgm") == 0) return load_pgm16(path);
    return load_text_heightmap(path);
}

} // namespace regolith
