#pragma once

#include "regolith/cell.hpp"
#include "regolith/grid.hpp"
#include "regolith/mesh.hpp"
#include "regolith/trajectory.hpp"
#include "regolith/vec.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace regolith {

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void include(const Vec3& p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    void include(const Aabb& o) {
        include(o.lo);
        include(o.hi);
    }
    bool valid() const { return lo.x <= hi.x; }
};

struct UpHit {
    double y = 0.0;        // world height of the intersection
    int32_t triangle = -1; // mesh triangle index (ties break to the lowest index)
};

// Binary bounding-box hierarchy over the triangles of one mesh posed in
// world space. Rebuilt per step; bodies are small enough that refitting is
// not worth the bookkeeping.
class AabbTree {
public:
    AabbTree() = default;
    AabbTree(const TriangleMesh& mesh, const BodyState& state);

    bool empty() const { return nodes_.empty(); }
    const Aabb& world_bounds() const { return bounds_; }

    // Lowest intersection of the vertical ray from (x, y_from, z) along +y
    // with any triangle. Edge and vertex grazes count as hits.
    std::optional<UpHit> raycast_up(double x, double z, double y_from) const;

    size_t triangle_count() const { return tri_vertices_.size() / 3; }
    // World-space vertices of triangle k: elements 3k, 3k+1, 3k+2.
    const std::vector<Vec3>& world_vertices() const { return tri_vertices_; }

private:
    struct Node {
        Aabb box;
        int32_t left = -1;   // internal when >= 0
        int32_t right = -1;
        int32_t first = 0;   // leaf triangle range [first, last)
        int32_t last = 0;
    };

    int32_t build(std::vector<int32_t>& order, int32_t first, int32_t last);

    std::vector<Node> nodes_;
    std::vector<int32_t> leaf_tris_;   // triangle indices in leaf order
    std::vector<Vec3> tri_vertices_;   // posed vertices, 3 per triangle
    Aabb bounds_;
    int32_t root_ = -1;
};

// Reference intersection used by tests and by the tree itself: lowest upward
// hit by exhaustive triangle checks.
std::optional<UpHit> raycast_up_brute(const std::vector<Vec3>& tri_vertices, double x, double z,
                                      double y_from);

// Inclusive ray/triangle test for a vertical +y ray; returns the hit height.
std::optional<double> ray_up_triangle(const Vec3& a, const Vec3& b, const Vec3& c, double x,
                                      double z, double y_from);

// World bounding box of the posed mesh, inflated horizontally by margin and
// converted to the covering cell rectangle, clipped to the extent. Cells
// count as covered when their center square touches the inflated box.
CellRect projected_bounds(const TriangleMesh& mesh, const BodyState& state, double margin,
                          const GridConfig& config);
CellRect projected_bounds(const Aabb& world_box, double margin, const GridConfig& config);

} // namespace regolith
