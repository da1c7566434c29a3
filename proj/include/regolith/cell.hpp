#pragma once

#include <algorithm>
#include <cstdint>
#include <cstddef>
#include <functional>

namespace regolith {

struct CellIndex {
    int32_t i = 0; // row index, maps to world x
    int32_t j = 0; // column index, maps to world z

    bool operator==(const CellIndex& o) const { return i == o.i && j == o.j; }
    bool operator!=(const CellIndex& o) const { return !(*this == o); }
    bool operator<(const CellIndex& o) const { return i != o.i ? i < o.i : j < o.j; }
};

struct CellIndexHash {
    size_t operator()(const CellIndex& c) const {
        uint64_t k = (uint64_t(uint32_t(c.i)) << 32) | uint64_t(uint32_t(c.j));
        k ^= k >> 33;
        k *= 0xff51afd7ed558ccdULL;
        k ^= k >> 33;
        k *= 0xc4ceb9fe1a85ec53ULL;
        k ^= k >> 33;
        return size_t(k);
    }
};

// Closed integer cell rectangle [i0,i1] x [j0,j1]. Empty when i1 < i0 or j1 < j0.
struct CellRect {
    int32_t i0 = 0;
    int32_t j0 = 0;
    int32_t i1 = -1;
    int32_t j1 = -1;

    static CellRect empty() { return {}; }

    bool is_empty() const { return i1 < i0 || j1 < j0; }
    int64_t rows() const { return is_empty() ? 0 : int64_t(i1) - i0 + 1; }
    int64_t cols() const { return is_empty() ? 0 : int64_t(j1) - j0 + 1; }
    int64_t count() const { return rows() * cols(); }

    bool contains(CellIndex c) const {
        return !is_empty() && c.i >= i0 && c.i <= i1 && c.j >= j0 && c.j <= j1;
    }

    // Touching at a single shared cell counts as overlap (closed-rect rule).
    bool intersects(const CellRect& o) const {
        if (is_empty() || o.is_empty()) return false;
        return i0 <= o.i1 && o.i0 <= i1 && j0 <= o.j1 && o.j0 <= j1;
    }

    CellRect intersection(const CellRect& o) const {
        if (!intersects(o)) return empty();
        return {std::max(i0, o.i0), std::max(j0, o.j0), std::min(i1, o.i1), std::min(j1, o.j1)};
    }

    CellRect union_with(const CellRect& o) const {
        if (is_empty()) return o;
        if (o.is_empty()) return *this;
        return {std::min(i0, o.i0), std::min(j0, o.j0), std::max(i1, o.i1), std::max(j1, o.j1)};
    }

    CellRect inflated(int32_t cells) const {
        if (is_empty()) return *this;
        return {i0 - cells, j0 - cells, i1 + cells, j1 + cells};
    }

    bool operator==(const CellRect& o) const {
        if (is_empty() && o.is_empty()) return true;
        return i0 == o.i0 && j0 == o.j0 && i1 == o.i1 && j1 == o.j1;
    }
};

} // namespace regolith
