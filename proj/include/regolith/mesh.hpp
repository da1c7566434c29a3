#pragma once

#include "regolith/vec.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace regolith {

// Triangle mesh in body frame. Faces with more than three vertices are
// triangulated by fan on load. Zero-area triangles are kept for collision
// bookkeeping but flagged so they never shed particles.
struct TriangleMesh {
    struct Tri {
        int32_t a = 0, b = 0, c = 0;
    };

    std::vector<Vec3> vertices;
    std::vector<Tri> triangles;
    std::vector<double> areas;        // per triangle
    std::vector<uint8_t> degenerate;  // per triangle, 1 when zero-area

    size_t triangle_count() const { return triangles.size(); }

    // Greatest vertex distance from the body-frame origin; bounds the speed
    // contribution of rotation.
    double max_radius() const;

    void compute_areas();
};

// OBJ subset: 'v' and 'f' records, '#' comments ignored, 1-based indices.
// Malformed records and out-of-range indices raise errors naming the line.
TriangleMesh load_mesh(const std::string& path);
TriangleMesh load_mesh(std::istream& in, const std::string& name);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

} // namespace regolith
