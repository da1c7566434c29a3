#include <doctest.h>

#include "regolith/mesh.hpp"

#include <sstream>

using namespace regolith;

TEST_CASE("unit right triangle has area one half") {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    const TriangleMesh m = load_mesh(in, "tri.obj");
    CHECK(m.triangles.size() == 1);
    CHECK(m.areas[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.degenerate[0] == 0);
}

TEST_CASE("quad faces triangulate by fan") {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 1 0 1\nv 0 0 1\nf 1 2 3 4\n");
    const TriangleMesh m = load_mesh(in, "quad.obj");
    CHECK(m.triangles.size() == 2);
    CHECK(m.areas[0] + m.areas[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.triangles[0].a == 0);
    CHECK(m.triangles[1].a == 0); // fan around the first vertex
}

TEST_CASE("face index beyond the vertex list names the line") {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
    try {
        load_mesh(in, "bad.obj");
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("bad.obj:4") != std::string::npos);
        CHECK(std::string(e.what()).find("9") != std::string::npos);
    }
}

TEST_CASE("malformed vertex record is rejected with the line number") {
    std::istringstream in("v 0 0\n");
    try {
        load_mesh(in, "short.obj");
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("short.obj:1") != std::string::npos);
    }
}

TEST_CASE("zero-area triangles are flagged degenerate") {
    std::istringstream in("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n");
    const TriangleMesh m = load_mesh(in, "line.obj");
    CHECK(m.degenerate[0] == 1);
    CHECK(m.areas[0] == 0.0);
}

TEST_CASE("comments and slashed face indices are tolerated") {
    std::istringstream in("# header\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\n");
    const TriangleMesh m = load_mesh(in, "slashed.obj");
    CHECK(m.triangles.size() == 1);
    CHECK(m.vertices.size() == 3);
}

TEST_CASE("max_radius bounds every vertex") {
    std::istringstream in("v 0 0 0\nv 3 4 0\nv 0 1 0\nf 1 2 3\n");
    const TriangleMesh m = load_mesh(in, "radius.obj");
    CHECK(m.max_radius() == doctest::Approx(5.0).epsilon(1e-15));
}
