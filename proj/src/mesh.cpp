#include "regolith/mesh.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace regolith {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * cross(b - a, c - a).norm();
}

double TriangleMesh::max_radius() const {
    double r2 = 0.0;
    for (const Vec3& v : vertices) r2 = std::max(r2, v.norm2());
    return std::sqrt(r2);
}

void TriangleMesh::compute_areas() {
    areas.resize(triangles.size());
    degenerate.resize(triangles.size());
    for (size_t k = 0; k < triangles.size(); ++k) {
        const Tri& t = triangles[k];
        areas[k] = triangle_area(vertices[size_t(t.a)], vertices[size_t(t.b)], vertices[size_t(t.c)]);
        degenerate[k] = areas[k] <= 0.0 ? 1 : 0;
    }
}

namespace {

[[noreturn]] void parse_fail(const std::string& name, int line, const std::string& why) {
    std::ostringstream os;
    os << name << ":" << line << ": " << why;
    throw std::runtime_error(os.str());
}

} // namespace

TriangleMesh load_mesh(std::istream& in, const std::string& name) {
    TriangleMesh mesh;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) parse_fail(name, line_no, "malformed vertex record");
            if (!finite(v)) parse_fail(name, line_no, "non-finite vertex coordinate");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int32_t> idx;
            std::string tok;
            while (ls >> tok) {
                // Accept "i", "i/t", "i/t/n" -- only the vertex index is used.
                const size_t slash = tok.find('/');
                if (slash != std::string::npos) tok = tok.substr(0, slash);
                int32_t v = 0;
                try {
                    v = int32_t(std::stol(tok));
                } catch (const std::exception&) {
                    parse_fail(name, line_no, "malformed face index '" + tok + "'");
                }
                if (v < 1 || size_t(v) > mesh.vertices.size()) {
                    parse_fail(name, line_no, "face references vertex " + std::to_string(v) +
                                                  " of " + std::to_string(mesh.vertices.size()));
                }
                idx.push_back(v - 1);
            }
            if (idx.size() < 3) parse_fail(name, line_no, "face with fewer than three vertices");
            for (size_t k = 2; k < idx.size(); ++k) {
                mesh.triangles.push_back({idx[0], idx[k - 1], idx[k]});
            }
        }
        // Other record types (vn, vt, o, g, usemtl, ...) are ignored.
    }
    mesh.compute_areas();
    return mesh;
}

TriangleMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open mesh file");
    return load_mesh(in, path);
}

} // namespace regolith
