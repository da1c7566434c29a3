#include "regolith/aabb_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace regolith {

std::optional<double> ray_up_triangle(const Vec3& a, const Vec3& b, const Vec3& c, double x,
                                      double z, double y_from) {
    // Moller-Trumbore specialized to direction (0, 1, 0), inclusive at the
    // triangle boundary so edge and vertex grazes count as hits.
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const double det = e1.x * e2.z - e1.z * e2.x;
    if (det == 0.0) return std::nullopt; // vertical or degenerate triangle
    const double inv = 1.0 / det;
    const double sx = x - a.x;
    const double sy = y_from - a.y;
    const double sz = z - a.z;
    const double u = (sx * e2.z - sz * e2.x) * inv;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    // q = s x e1; v = dot(dir, q) = q.y
    const double qy = sz * e1.x - sx * e1.z;
    const double v = qy * inv;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double qx = sy * e1.z - sz * e1.y;
    const double qz = sx * e1.y - sy * e1.x;
    const double t = (e2.x * qx + e2.y * qy + e2.z * qz) * inv;
    if (t < 0.0) return std::nullopt;
    return y_from + t;
}

std::optional<UpHit> raycast_up_brute(const std::vector<Vec3>& tri_vertices, double x, double z,
                                      double y_from) {
    std::optional<UpHit> best;
    const size_t n = tri_vertices.size() / 3;
    for (size_t k = 0; k < n; ++k) {
        const auto y = ray_up_triangle(tri_vertices[3 * k], tri_vertices[3 * k + 1],
                                       tri_vertices[3 * k + 2], x, z, y_from);
        if (!y) continue;
        if (!best || *y < best->y) best = UpHit{*y, int32_t(k)};
    }
    return best;
}

AabbTree::AabbTree(const TriangleMesh& mesh, const BodyState& state) {
    const size_t n = mesh.triangles.size();
    tri_vertices_.resize(n * 3);
    std::vector<Vec3> posed(mesh.vertices.size());
    for (size_t k = 0; k < mesh.vertices.size(); ++k) {
        posed[k] = state.position + state.orientation.rotate(mesh.vertices[k]);
    }
    for (size_t k = 0; k < n; ++k) {
        const auto& t = mesh.triangles[k];
        tri_vertices_[3 * k] = posed[size_t(t.a)];
        tri_vertices_[3 * k + 1] = posed[size_t(t.b)];
        tri_vertices_[3 * k + 2] = posed[size_t(t.c)];
    }
    if (n == 0) return;
    std::vector<int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    nodes_.reserve(2 * n);
    root_ = build(order, 0, int32_t(n));
    bounds_ = nodes_[size_t(root_)].box;
}

int32_t AabbTree::build(std::vector<int32_t>& order, int32_t first, int32_t last) {
    Node node;
    Aabb centroid_box;
    for (int32_t k = first; k < last; ++k) {
        const int32_t t = order[size_t(k)];
        Aabb tb;
        tb.include(tri_vertices_[size_t(3 * t)]);
        tb.include(tri_vertices_[size_t(3 * t + 1)]);
        tb.include(tri_vertices_[size_t(3 * t + 2)]);
        node.box.include(tb);
        centroid_box.include((tb.lo + tb.hi) * 0.5);
    }
    constexpr int32_t kLeafSize = 4;
    if (last - first <= kLeafSize) {
        node.first = int32_t(leaf_tris_.size());
        for (int32_t k = first; k < last; ++k) leaf_tris_.push_back(order[size_t(k)]);
        node.last = int32_t(leaf_tris_.size());
        nodes_.push_back(node);
        return int32_t(nodes_.size()) - 1;
    }
    const Vec3 span = centroid_box.hi - centroid_box.lo;
    int axis = 0;
    if (span.y > span.x) axis = 1;
    if (span.z > (axis == 0 ? span.x : span.y)) axis = 2;
    auto centroid_coord = [&](int32_t t) {
        const Vec3& a = tri_vertices_[size_t(3 * t)];
        const Vec3& b = tri_vertices_[size_t(3 * t + 1)];
        const Vec3& c = tri_vertices_[size_t(3 * t + 2)];
        const Vec3 m = (a + b + c) / 3.0;
        return axis == 0 ? m.x : axis == 1 ? m.y : m.z;
    };
    // Sort with the triangle index as tie-break to keep the layout
    // reproducible across standard libraries.
    std::sort(order.begin() + first, order.begin() + last, [&](int32_t ta, int32_t tb) {
        const double ca = centroid_coord(ta), cb = centroid_coord(tb);
        return ca != cb ? ca < cb : ta < tb;
    });
    const int32_t mid = (first + last) / 2;
    const size_t self = nodes_.size();
    nodes_.push_back(node);
    const int32_t l = build(order, first, mid);
    const int32_t r = build(order, mid, last);
    nodes_[self].left = l;
    nodes_[self].right = r;
    nodes_[self].box = node.box;
    return int32_t(self);
}

std::optional<UpHit> AabbTree::raycast_up(double x, double z, double y_from) const {
    if (nodes_.empty()) return std::nullopt;
    std::optional<UpHit> best;
    int32_t stack[64];
    int top = 0;
    stack[top++] = root_;
    while (top > 0) {
        const Node& node = nodes_[size_t(stack[--top])];
        const Aabb& b = node.box;
        if (x < b.lo.x || x > b.hi.x || z < b.lo.z || z > b.hi.z) continue;
        if (b.hi.y < y_from) continue;
        if (best && b.lo.y > best->y) continue;
        if (node.left >= 0) {
            stack[top++] = node.right;
            stack[top++] = node.left;
            continue;
        }
        for (int32_t k = node.first; k < node.last; ++k) {
            const int32_t t = leaf_tris_[size_t(k)];
            const auto y = ray_up_triangle(tri_vertices_[size_t(3 * t)],
                                           tri_vertices_[size_t(3 * t + 1)],
                                           tri_vertices_[size_t(3 * t + 2)], x, z, y_from);
            if (!y) continue;
            if (!best || *y < best->y || (*y == best->y && t < best->triangle)) {
                best = UpHit{*y, t};
            }
        }
    }
    return best;
}

CellRect projected_bounds(const Aabb& world_box, double margin, const GridConfig& config) {
    if (!world_box.valid()) return CellRect::empty();
    const double d = config.cell_size;
    const double lox = world_box.lo.x - margin;
    const double hix = world_box.hi.x + margin;
    const double loz = world_box.lo.z - margin;
    const double hiz = world_box.hi.z + margin;
    // A column is covered when its center square [i-1/2, i+1/2] * d touches
    // the inflated box (strict on the open side, so exact boundaries are
    // included on both ends).
    auto lo_index = [&](double w, double org) {
        return int32_t(std::floor((w - org) / d - 0.5)) + 1;
    };
    auto hi_index = [&](double w, double org) {
        return int32_t(std::ceil((w - org) / d + 0.5)) - 1;
    };
    CellRect r{lo_index(lox, config.origin_x), lo_index(loz, config.origin_z),
               hi_index(hix, config.origin_x), hi_index(hiz, config.origin_z)};
    return r.intersection(config.extent());
}

CellRect projected_bounds(const TriangleMesh& mesh, const BodyState& state, double margin,
                          const GridConfig& config) {
    Aabb box;
    for (const Vec3& v : mesh.vertices) {
        box.include(state.position + state.orientation.rotate(v));
    }
    return projected_bounds(box, margin, config);
}

} // namespace regolith
