#include <doctest.h>

#include "regolith/bench.hpp"
#include "regolith/scheduler.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

using namespace regolith;

namespace {

WorldConfig small_world(int32_t steps, int32_t rows = 120, int32_t cols = 120) {
    WorldConfig w;
    w.grid.cell_size = 0.01;
    w.grid.rows = rows;
    w.grid.cols = cols;
    w.init = TerrainInitializer::flat(0.0);
    w.material = material_preset("sand");
    w.particles_enabled = false;
    w.t_start = 0.0;
    w.dt = 1.0 / 300.0;
    w.steps = steps;
    w.seed = 11;
    return w;
}

// Sphere dipping into the ground at (x, z), then resting above it.
CharacterSpec dip_character(int32_t id, int32_t body_id, double x, double z, double t_down,
                            double t_up, double duration) {
    constexpr double kRadius = 0.05;
    std::vector<TrajectorySample> samples;
    for (double t = 0.0; t <= duration + 1e-9; t += 0.01) {
        double y = kRadius + 0.02;
        if (t >= t_down && t <= t_up) {
            const double u = (t - t_down) / (t_up - t_down);
            const double dip = std::sin(3.141592653589793 * u);
            y = kRadius + 0.02 - 0.045 * dip;
        }
        samples.push_back({t, {x, y, z}, {1, 0, 0, 0}});
    }
    CharacterSpec chr;
    chr.character_id = id;
    chr.name = "dip" + std::to_string(id);
    BodySpec body;
    body.body_id = body_id;
    body.mesh = std::make_shared<TriangleMesh>(make_uv_sphere(kRadius, 12, 9));
    body.trajectory = std::make_shared<Trajectory>(body_id, std::move(samples));
    chr.bodies.push_back(std::move(body));
    return chr;
}

// Sphere sweeping along x at fixed z, touching the ground mid-flight.
CharacterSpec sweep_character(int32_t id, int32_t body_id, double x0, double x1, double z,
                              double duration) {
    constexpr double kRadius = 0.05;
    std::vector<TrajectorySample> samples;
    for (double t = 0.0; t <= duration + 1e-9; t += 0.01) {
        const double u = t / duration;
        const double x = x0 + (x1 - x0) * u;
        const double y = kRadius - 0.015 + 0.08 * (u - 0.5) * (u - 0.5) * 4.0;
        samples.push_back({t, {x, y, z}, {1, 0, 0, 0}});
    }
    CharacterSpec chr;
    chr.character_id = id;
    chr.name = "sweep" + std::to_string(id);
    BodySpec body;
    body.body_id = body_id;
    body.mesh = std::make_shared<TriangleMesh>(make_uv_sphere(kRadius, 12, 9));
    body.trajectory = std::make_shared<Trajectory>(body_id, std::move(samples));
    chr.bodies.push_back(std::move(body));
    return chr;
}

std::vector<std::pair<CellIndex, uint64_t>> grid_bits(const SparseColumnGrid& grid) {
    std::vector<std::pair<CellIndex, uint64_t>> out;
    out.reserve(grid.cells().size());
    for (const auto& [cell, col] : grid.cells()) {
        uint64_t bits;
        __builtin_memcpy(&bits, &col.height, sizeof(bits));
        out.push_back({cell, bits});
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST_CASE("registration rejects duplicate or non-dense character ids") {
    WorldConfig w = small_world(5);
    CharacterSpec a = dip_character(0, 0, 0.3, 0.3, 0.0, 0.1, 0.2);
    CharacterSpec dup = dip_character(0, 1, 0.6, 0.6, 0.0, 0.1, 0.2);
    CHECK_THROWS_AS(Coordinator(w, {a, dup}), std::invalid_argument);

    CharacterSpec gap = dip_character(2, 1, 0.6, 0.6, 0.0, 0.1, 0.2);
    CHECK_THROWS_AS(Coordinator(w, {a, gap}), std::invalid_argument);
}

TEST_CASE("single worker never blocks and finishes every step") {
    WorldConfig w = small_world(30);
    Coordinator coord(w, {dip_character(0, 0, 0.5, 0.5, 0.0, 0.05, 0.2)});
    int granted = 0;
    while (true) {
        AssignPayload a;
        const auto rc = coord.try_request(0, a);
        if (rc == Coordinator::RequestOutcome::Finished) break;
        REQUIRE(rc == Coordinator::RequestOutcome::Ready);
        ++granted;
        SparseColumnGrid scratch = create_grid(w.grid, w.init);
        for (const auto& [cell, h] : a.cells) scratch.materialize(cell).height = h;
        StepResult r = step_group(w, {&coord.characters()[0]}, a.step, scratch, a.carry);
        CommitPayload p;
        p.character = 0;
        p.step = a.step;
        p.declared_region = a.region;
        p.records = std::move(r.records);
        p.carry = std::move(r.carry);
        p.stats = r.stats;
        coord.commit(p);
    }
    CHECK(granted == 30);
    CHECK(coord.all_finished());
    // The stamp left a crater.
    CHECK(coord.grid().height_at(coord.config().grid.cell_of(0.5, 0.5)) < 0.0);
}

TEST_CASE("empty change set advances progress and leaves the grid untouched") {
    WorldConfig w = small_world(3);
    // Body hovering far above the ground: active region exists, no contact.
    Coordinator coord(w, {dip_character(0, 0, 0.5, 0.5, 10.0, 11.0, 0.2)});
    run_serial(coord);
    CHECK(coord.all_finished());
    CHECK(coord.grid().total_volume(w.grid.extent()) == 0.0);
    for (const auto& [cell, col] : coord.grid().cells()) CHECK(col.height == 0.0);
}

TEST_CASE("out-of-order and out-of-region commits are protocol violations") {
    WorldConfig w = small_world(10);
    Coordinator coord(w, {dip_character(0, 0, 0.5, 0.5, 0.0, 0.05, 0.2)});
    AssignPayload a;
    REQUIRE(coord.try_request(0, a) == Coordinator::RequestOutcome::Ready);

    CommitPayload wrong_step;
    wrong_step.character = 0;
    wrong_step.step = 1; // skipped step 0
    wrong_step.declared_region = coord.group_region({0}, 1);
    CHECK_THROWS_WITH_AS(coord.commit(wrong_step),
                         doctest::Contains("out-of-order"), std::runtime_error);

    CommitPayload outside;
    outside.character = 0;
    outside.step = 0;
    outside.declared_region = a.region;
    outside.records.push_back({{0, 0}, 0.0, -0.01, ChangeCause::Collision}); // corner, not granted
    CHECK_THROWS_WITH_AS(coord.commit(outside),
                         doctest::Contains("outside the granted region"), std::runtime_error);

    CommitPayload wrong_region;
    wrong_region.character = 0;
    wrong_region.step = 0;
    wrong_region.declared_region = a.region.inflated(2);
    CHECK_THROWS_WITH_AS(coord.commit(wrong_region),
                         doctest::Contains("differing from the schedule"), std::runtime_error);
}

TEST_CASE("commits of disjoint characters commute") {
    WorldConfig w = small_world(1);
    const std::vector<CharacterSpec> chars{dip_character(0, 0, 0.3, 0.3, 0.0, 0.05, 0.2),
                                           dip_character(1, 1, 0.9, 0.9, 0.0, 0.05, 0.2)};
    auto run_in_order = [&](bool swap) {
        Coordinator coord(w, chars);
        AssignPayload a0, a1;
        REQUIRE(coord.try_request(0, a0) == Coordinator::RequestOutcome::Ready);
        REQUIRE(coord.try_request(1, a1) == Coordinator::RequestOutcome::Ready);
        auto make_commit = [&](const AssignPayload& a, int32_t c) {
            SparseColumnGrid scratch = create_grid(w.grid, w.init);
            for (const auto& [cell, h] : a.cells) scratch.materialize(cell).height = h;
            StepResult r = step_group(w, {&chars[size_t(c)]}, a.step, scratch, a.carry);
            CommitPayload p;
            p.character = c;
            p.step = a.step;
            p.declared_region = a.region;
            p.records = std::move(r.records);
            p.carry = std::move(r.carry);
            p.stats = r.stats;
            return p;
        };
        const CommitPayload c0 = make_commit(a0, 0), c1 = make_commit(a1, 1);
        if (swap) {
            coord.commit(c1);
            coord.commit(c0);
        } else {
            coord.commit(c0);
            coord.commit(c1);
        }
        return grid_bits(coord.grid());
    };
    CHECK(run_in_order(false) == run_in_order(true));
}

TEST_CASE("disjoint characters: parallel equals serial bit for bit") {
    WorldConfig w = small_world(40);
    const std::vector<CharacterSpec> chars{dip_character(0, 0, 0.3, 0.3, 0.0, 0.08, 0.2),
                                           dip_character(1, 1, 0.9, 0.9, 0.02, 0.1, 0.2)};
    Coordinator serial(w, chars);
    run_serial(serial);

    Coordinator parallel(w, chars);
    ExecutionOptions exec;
    exec.workers = 2;
    run_parallel(parallel, exec);

    CHECK(grid_bits(serial.grid()) == grid_bits(parallel.grid()));
    CHECK(serial.grid().materialized_count() > 0);
}

TEST_CASE("crossing scenario: the later character waits for the earlier footprint") {
    // Character 0 stamps a crater early; character 1 sweeps across the same
    // cells later and must see the crater.
    WorldConfig w = small_world(60);
    const std::vector<CharacterSpec> chars{
        dip_character(0, 0, 0.55, 0.6, 0.0, 0.06, 0.2),
        sweep_character(1, 1, 0.2, 0.9, 0.6, 0.2),
    };
    Coordinator serial(w, chars);
    run_serial(serial);
    const auto reference = grid_bits(serial.grid());
    REQUIRE(!reference.empty());

    for (const uint64_t chaos : {0ULL, 77ULL, 123456ULL}) {
        Coordinator parallel(w, chars);
        ExecutionOptions exec;
        exec.workers = 2;
        exec.chaos_seed = chaos;
        run_parallel(parallel, exec);
        CHECK(grid_bits(parallel.grid()) == reference);
    }
}

TEST_CASE("touching envelopes count as overlap and merge under the lower id") {
    WorldConfig w = small_world(10);
    w.margin_cells = 5;
    // Two dips close enough that the margin-inflated rects share cells.
    const std::vector<CharacterSpec> chars{dip_character(0, 0, 0.45, 0.5, 0.0, 0.1, 0.2),
                                           dip_character(1, 1, 0.62, 0.5, 0.0, 0.1, 0.2)};
    Coordinator coord(w, chars);
    const auto members = coord.group_members(0, 0);
    REQUIRE(members.size() == 2);
    CHECK(members[0] == 0);
    CHECK(members[1] == 1);

    // The merged group still reproduces the serial result under any driver.
    Coordinator serial(w, chars);
    run_serial(serial);
    Coordinator parallel(w, chars);
    ExecutionOptions exec;
    exec.workers = 2;
    exec.chaos_seed = 5;
    run_parallel(parallel, exec);
    CHECK(grid_bits(serial.grid()) == grid_bits(parallel.grid()));
}

TEST_CASE("far-apart characters never merge") {
    WorldConfig w = small_world(10);
    const std::vector<CharacterSpec> chars{dip_character(0, 0, 0.2, 0.2, 0.0, 0.1, 0.2),
                                           dip_character(1, 1, 1.0, 1.0, 0.0, 0.1, 0.2)};
    Coordinator coord(w, chars);
    for (int32_t s = 0; s < w.steps; ++s) {
        CHECK(coord.group_members(0, s) == std::vector<int32_t>{0});
        CHECK(coord.group_members(1, s) == std::vector<int32_t>{1});
    }
}

TEST_CASE("frame barrier: callbacks observe every character at the frame step") {
    WorldConfig w = small_world(24);
    const std::vector<CharacterSpec> chars{dip_character(0, 0, 0.3, 0.3, 0.0, 0.08, 0.2),
                                           dip_character(1, 1, 0.9, 0.9, 0.0, 0.08, 0.2)};
    Coordinator coord(w, chars);
    std::vector<int32_t> seen;
    coord.set_frame_steps({7, 15, 23}, [&](int32_t step) {
        seen.push_back(step);
        CHECK(coord.progress(0) == step);
        CHECK(coord.progress(1) == step);
    });
    ExecutionOptions exec;
    exec.workers = 2;
    exec.chaos_seed = 3;
    run_parallel(coord, exec);
    CHECK(seen == std::vector<int32_t>{7, 15, 23});
}

TEST_CASE("stream and inproc transports produce identical per-worker traces and grids") {
    WorldConfig w = small_world(25);
    const std::vector<CharacterSpec> chars{dip_character(0, 0, 0.3, 0.35, 0.0, 0.08, 0.2),
                                           dip_character(1, 1, 0.85, 0.9, 0.01, 0.08, 0.2)};

    auto run_with = [&](bool stream, const std::string& trace_path) {
        Coordinator coord(w, chars);
        std::ofstream trace(trace_path);
        coord.set_trace(&trace);
        ExecutionOptions exec;
        exec.workers = 2;
        exec.stream_transport = stream;
        run_parallel(coord, exec);
        return grid_bits(coord.grid());
    };

    const std::string dir = "/tmp/";
    const auto grid_a = run_with(false, dir + "rgl_trace_inproc.log");
    const auto grid_b = run_with(true, dir + "rgl_trace_stream.log");
    CHECK(grid_a == grid_b);

    auto per_worker = [&](const std::string& path) {
        std::map<std::string, std::vector<std::string>> lanes;
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) {
            // "<seq> assign char=K step=..." -> key by the char token.
            const size_t sp = line.find(' ');
            const std::string body = line.substr(sp + 1);
            const size_t cpos = body.find("char=");
            const size_t cend = body.find(' ', cpos);
            lanes[body.substr(cpos, cend - cpos)].push_back(body);
        }
        return lanes;
    };
    const auto lanes_a = per_worker(dir + "rgl_trace_inproc.log");
    const auto lanes_b = per_worker(dir + "rgl_trace_stream.log");
    REQUIRE(lanes_a.size() == 2);
    CHECK(lanes_a == lanes_b);
}

TEST_CASE("message frames survive an encode/decode round trip") {
    AssignPayload a;
    a.step = 42;
    a.characters = {1, 3};
    a.region = {-2, 4, 10, 12};
    a.cells = {{{0, 1}, 0.5}, {{5, -2}, -0.25}};
    BodyParticleState st;
    TriangleLoad load;
    load.volume = 1e-5;
    load.detach_time = 0.75;
    load.detached = true;
    load.spawn_carry = 0.33;
    load.released = 2e-6;
    st.loads.emplace(7, load);
    st.airborne.push_back({{1, 2, 3}, {4, 5, 6}, 1e-9, 0.125});
    a.carry.emplace(2, st);

    const AssignPayload a2 = decode_assign(encode_assign(a));
    CHECK(a2.step == a.step);
    CHECK(a2.characters == a.characters);
    CHECK(a2.region == a.region);
    CHECK(a2.cells == a.cells);
    CHECK(a2.carry.at(2).loads.at(7).volume == 1e-5);
    CHECK(a2.carry.at(2).loads.at(7).spawn_carry == 0.33);
    CHECK(a2.carry.at(2).airborne[0].position == Vec3{1, 2, 3});

    CommitPayload c;
    c.character = 3;
    c.step = 9;
    c.declared_region = {0, 0, 3, 3};
    c.records.push_back({{1, 2}, 0.0, -0.5, ChangeCause::Erosion});
    c.stats.displaced_volume = 0.125;
    c.stats.erosion_passes = 17;
    const CommitPayload c2 = decode_commit(encode_commit(c));
    CHECK(c2.character == 3);
    CHECK(c2.step == 9);
    CHECK(c2.records.size() == 1);
    CHECK(c2.records[0].new_height == -0.5);
    CHECK(c2.records[0].cause == ChangeCause::Erosion);
    CHECK(c2.stats.displaced_volume == 0.125);
    CHECK(c2.stats.erosion_passes == 17);

    CHECK(decode_request(encode_request(5)) == 5);
    CHECK(decode_abort(encode_abort("bad juju")) == "bad juju");
    CHECK(peek_type(encode_done()) == MsgType::Done);
}
