#include <doctest.h>

#include "regolith/deformation.hpp"
#include "regolith/bench.hpp"
#include "regolith/rng.hpp"

#include <cmath>

using namespace regolith;

namespace {

// Horizontal square plate (two triangles) centered on the origin.
TriangleMesh make_plate(double half, double y) {
    TriangleMesh m;
    m.vertices = {{-half, y, -half}, {half, y, -half}, {half, y, half}, {-half, y, half}};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    m.compute_areas();
    return m;
}

BodyState pose_at(double x, double y, double z) {
    BodyState s;
    s.position = {x, y, z};
    s.orientation = {1, 0, 0, 0};
    return s;
}

GridConfig grid_config(int32_t rows, int32_t cols, double d, double ox = 0.0, double oz = 0.0) {
    GridConfig c;
    c.rows = rows;
    c.cols = cols;
    c.cell_size = d;
    c.origin_x = ox;
    c.origin_z = oz;
    return c;
}

MaterialParams sand() { return material_preset("sand"); }

} // namespace

TEST_CASE("plate stamp lowers exactly the covered columns and reports their volume") {
    // Columns at x = -0.05 + 0.01 i; a plate of half-size 0.024 at the
    // center covers the 5x5 block around (5, 5).
    SparseColumnGrid grid = create_grid(grid_config(11, 11, 0.01, -0.05, -0.05),
                                        TerrainInitializer::flat(0.0));
    grid.mark_active(grid.config().extent());
    const TriangleMesh plate = make_plate(0.024, 0.0);
    const AabbTree tree(plate, pose_at(0.0, -0.01, 0.0));

    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    const CollideResult r = ws.collide({&tree}, grid.min_height(), records);

    CHECK(r.contact_count == 25);
    CHECK(r.body_displaced_volume[0] == doctest::Approx(25 * 0.01 * 1e-4).epsilon(1e-12));
    CHECK(records.size() == 25);
    for (const ChangeRecord& rec : records) {
        CHECK(rec.cause == ChangeCause::Collision);
        CHECK(rec.old_height == 0.0);
        CHECK(rec.new_height == doctest::Approx(-0.01).epsilon(1e-12));
    }
    ws.store(grid);
    CHECK(grid.height_at(5, 5) == doctest::Approx(-0.01).epsilon(1e-12));
    CHECK(grid.height_at(0, 0) == 0.0);
}

TEST_CASE("hovering body touches nothing") {
    SparseColumnGrid grid = create_grid(grid_config(11, 11, 0.01, -0.05, -0.05),
                                        TerrainInitializer::flat(0.0));
    grid.mark_active(grid.config().extent());
    const TriangleMesh plate = make_plate(0.02, 0.0);
    const AabbTree tree(plate, pose_at(0.0, 0.05, 0.0));

    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    const CollideResult r = ws.collide({&tree}, grid.min_height(), records);
    CHECK(r.contact_count == 0);
    CHECK(records.empty());
    CHECK(r.body_displaced_volume[0] == 0.0);
}

TEST_CASE("1D strip contour labels [0 1 2 1 0]") {
    // One row of 7 cells; the active strip is all of them, the plate covers
    // the middle three columns at j = 2, 3, 4 (cells at z = -0.03 + 0.01 j).
    SparseColumnGrid grid = create_grid(grid_config(1, 7, 0.01, 0.0, -0.03),
                                        TerrainInitializer::flat(0.0));
    grid.mark_active(grid.config().extent());
    TriangleMesh plate = make_plate(0.014, 0.0);
    const AabbTree tree(plate, pose_at(0.0, -0.005, 0.0));

    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    const CollideResult cr = ws.collide({&tree}, grid.min_height(), records);
    CHECK(cr.contact_count == 3);
    const ContourResult c = ws.build_contour();
    CHECK(!c.saturated);
    CHECK(c.max_label == 2);
    const int32_t expected[7] = {0, 0, 1, 2, 1, 0, 0};
    for (int32_t j = 0; j < 7; ++j) {
        CHECK(ws.contour_at({0, j}) == expected[j]);
    }
}

TEST_CASE("single contacted cell gets label one and feeds its eight neighbors equally") {
    // 5x5 active block, plate over the center cell only; stamp depth 0.02 m
    // so the displaced volume is 2e-6 m^3.
    SparseColumnGrid grid = create_grid(grid_config(5, 5, 0.01, -0.02, -0.02),
                                        TerrainInitializer::flat(0.0));
    grid.mark_active(grid.config().extent());
    const TriangleMesh plate = make_plate(0.004, 0.0);
    const AabbTree tree(plate, pose_at(0.0, -0.02, 0.0));

    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    const CollideResult cr = ws.collide({&tree}, grid.min_height(), records);
    REQUIRE(cr.contact_count == 1);
    const ContourResult c = ws.build_contour();
    CHECK(c.max_label == 1);
    CHECK(ws.contour_at({2, 2}) == 1);

    MaterialParams params = sand(); // compression 0.3
    records.clear();
    const DisplaceResult d = ws.displace(params, records);
    CHECK(records.size() == 8);
    // Each neighbor receives 0.3 * 2e-6 / 8 = 7.5e-8 m^3 of volume.
    const double expected_rise = 7.5e-8 / 1e-4;
    for (const ChangeRecord& rec : records) {
        CHECK(rec.cause == ChangeCause::Displacement);
        CHECK(rec.new_height - rec.old_height == doctest::Approx(expected_rise).epsilon(1e-12));
    }
    CHECK(d.outward_volume == doctest::Approx(0.3 * 2e-6).epsilon(1e-12));
    CHECK(d.compressed_volume == doctest::Approx(0.7 * 2e-6).epsilon(1e-12));
    CHECK(d.stuck_volume == 0.0);
}

TEST_CASE("zero compression moves nothing outward") {
    SparseColumnGrid grid = create_grid(grid_config(9, 9, 0.01, -0.04, -0.04),
                                        TerrainInitializer::flat(0.0));
    grid.mark_active(grid.config().extent());
    const TriangleMesh plate = make_plate(0.014, 0.0);
    const AabbTree tree(plate, pose_at(0.0, -0.015, 0.0));

    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    ws.collide({&tree}, grid.min_height(), records);
    ws.build_contour();
    records.clear();
    MaterialParams snow = material_preset("snow"); // compression 0.0
    const DisplaceResult d = ws.displace(snow, records);
    CHECK(records.empty());
    CHECK(d.outward_volume == 0.0);
}

TEST_CASE("full displacement conserves volume through collide + displace + erode") {
    SparseColumnGrid grid = create_grid(grid_config(41, 41, 0.01, -0.2, -0.2),
                                        TerrainInitializer::flat(0.05));
    grid.mark_active(grid.config().extent());
    const double before = grid.total_volume(grid.config().extent());

    const TriangleMesh sphere = make_uv_sphere(0.08, 14, 10);
    const AabbTree tree(sphere, pose_at(0.0, 0.05 + 0.08 - 0.03, 0.0)); // 3 cm into the ground

    MaterialParams params = sand();
    params.compression = 1.0;

    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    const CollideResult cr = ws.collide({&tree}, grid.min_height(), records);
    CHECK(cr.contact_count > 20);
    ws.build_contour();
    ws.displace(params, records);
    ws.erode(params, records);
    ws.store(grid);

    const double after = grid.total_volume(grid.config().extent());
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("erosion hand oracle: one pass on the 1D triple column") {
    SparseColumnGrid grid = create_grid(grid_config(3, 1, 0.01), TerrainInitializer::flat(0.0));
    grid.mark_active(grid.config().extent());
    grid.materialize({1, 0}).height = 0.1;

    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    MaterialParams one_pass = sand();
    one_pass.max_erosion_iters = 1;
    const ErodeResult e = ws.erode(one_pass, records);
    CHECK(e.passes == 1);
    CHECK(ws.height_at({0, 0}) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(ws.height_at({1, 0}) == doctest::Approx(0.08).epsilon(1e-12));
    CHECK(ws.height_at({2, 0}) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("erosion terminates with all slopes at or below the stop threshold") {
    SparseColumnGrid grid = create_grid(grid_config(3, 1, 0.01), TerrainInitializer::flat(0.0));
    grid.mark_active(grid.config().extent());
    grid.materialize({1, 0}).height = 0.1;

    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    const MaterialParams params = sand();
    const ErodeResult e = ws.erode(params, records);
    CHECK(e.passes < params.max_erosion_iters);
    const double max_drop = 0.01 * std::tan(params.theta_stop);
    CHECK(std::abs(ws.height_at({1, 0}) - ws.height_at({0, 0})) <= max_drop);
    CHECK(std::abs(ws.height_at({1, 0}) - ws.height_at({2, 0})) <= max_drop);
    // Erosion only moves material between columns.
    const double total = ws.height_at({0, 0}) + ws.height_at({1, 0}) + ws.height_at({2, 0});
    CHECK(total == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("flat terrain erodes nothing and stops after one pass") {
    SparseColumnGrid grid = create_grid(grid_config(8, 8, 0.01), TerrainInitializer::flat(0.02));
    grid.mark_active(grid.config().extent());
    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    const ErodeResult e = ws.erode(sand(), records);
    CHECK(e.passes == 1);
    CHECK(e.moved_volume == 0.0);
    CHECK(records.empty());
}

TEST_CASE("snow holds a 45 degree wall") {
    SparseColumnGrid grid = create_grid(grid_config(2, 1, 0.01), TerrainInitializer::flat(0.0));
    grid.mark_active(grid.config().extent());
    grid.materialize({1, 0}).height = 0.01; // slope atan(1) = 0.785 < 1.57

    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    const ErodeResult e = ws.erode(material_preset("snow"), records);
    CHECK(e.moved_volume == 0.0);
    CHECK(ws.height_at({1, 0}) == 0.01);
}

TEST_CASE("each erosion pass conserves total height on rough random terrain") {
    RandomStream rng(99);
    SparseColumnGrid grid = create_grid(grid_config(24, 24, 0.01), TerrainInitializer::flat(0.0));
    grid.mark_active(grid.config().extent());
    for (int32_t i = 0; i < 24; ++i) {
        for (int32_t j = 0; j < 24; ++j) {
            grid.materialize({i, j}).height = rng.uniform(-0.05, 0.05);
        }
    }
    const double before = grid.total_volume(grid.config().extent());

    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    MaterialParams params = sand();
    params.max_erosion_iters = 50;
    ws.erode(params, records);
    ws.store(grid);
    const double after = grid.total_volume(grid.config().extent());
    CHECK(after == doctest::Approx(before).epsilon(1e-11));
}

TEST_CASE("collide never raises and displace never lowers (random stamps)") {
    RandomStream rng(4242);
    const TriangleMesh sphere = make_uv_sphere(0.05, 12, 9);
    for (int round = 0; round < 10; ++round) {
        SparseColumnGrid grid = create_grid(grid_config(31, 31, 0.01, -0.15, -0.15),
                                            TerrainInitializer::flat(0.0));
        grid.mark_active(grid.config().extent());
        const AabbTree tree(sphere, pose_at(rng.uniform(-0.05, 0.05),
                                            rng.uniform(0.0, 0.045),
                                            rng.uniform(-0.05, 0.05)));
        DeformWorkspace ws;
        ws.load(grid);
        std::vector<ChangeRecord> records;
        ws.collide({&tree}, grid.min_height(), records);
        for (const ChangeRecord& rec : records) {
            CHECK(rec.new_height < rec.old_height); // collision only lowers
        }
        ws.build_contour();

        // Contour validity: contacted labels are 1 + min 8-neighbor label.
        for (int32_t i = 0; i < 31; ++i) {
            for (int32_t j = 0; j < 31; ++j) {
                if (!ws.cell_in_contact({i, j})) {
                    CHECK(ws.contour_at({i, j}) == 0);
                    continue;
                }
                int32_t min_label = INT32_MAX;
                for (const auto& n : neighbors8(grid.config(), i, j)) {
                    min_label = std::min(min_label, ws.contour_at(n.cell));
                }
                CHECK(ws.contour_at({i, j}) == min_label + 1);
            }
        }

        records.clear();
        ws.displace(sand(), records);
        for (const ChangeRecord& rec : records) {
            CHECK(rec.new_height > rec.old_height); // deposits only raise
            CHECK(!ws.cell_in_contact(rec.cell));   // and only on the free ring
        }
    }
}

TEST_CASE("contour saturates with a warning when contact fills the active set") {
    SparseColumnGrid grid = create_grid(grid_config(3, 3, 0.01, -0.01, -0.01),
                                        TerrainInitializer::flat(0.0));
    grid.mark_active(grid.config().extent());
    const TriangleMesh plate = make_plate(0.05, 0.0); // covers everything
    const AabbTree tree(plate, pose_at(0.0, -0.005, 0.0));
    DeformWorkspace ws;
    ws.load(grid);
    std::vector<ChangeRecord> records;
    const CollideResult cr = ws.collide({&tree}, grid.min_height(), records);
    CHECK(cr.contact_count == 9);
    const ContourResult c = ws.build_contour();
    CHECK(c.saturated);
}
