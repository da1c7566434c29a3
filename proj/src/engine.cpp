#include "regolith/engine.hpp"

#include "regolith/aabb_tree.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace regolith {

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct PosedBody {
    const CharacterSpec* character = nullptr;
    const BodySpec* body = nullptr;
    BodyState state;
    AabbTree tree;
    CellRect rect;
};

} // namespace

void StepStats::accumulate(const StepStats& o) {
    collide_seconds += o.collide_seconds;
    contour_seconds += o.contour_seconds;
    displace_seconds += o.displace_seconds;
    erode_seconds += o.erode_seconds;
    particle_seconds += o.particle_seconds;
    displaced_volume += o.displaced_volume;
    outward_volume += o.outward_volume;
    compressed_volume += o.compressed_volume;
    eroded_volume += o.eroded_volume;
    erosion_passes += o.erosion_passes;
    contact_cells += o.contact_cells;
    active_cells += o.active_cells;
    contour_saturated = contour_saturated || o.contour_saturated;
    spray_pickup_volume += o.spray_pickup_volume;
    spray_discarded_volume += o.spray_discarded_volume;
    spray_created_volume += o.spray_created_volume;
    spray_deposited_volume += o.spray_deposited_volume;
    spray_leaked_volume += o.spray_leaked_volume;
    spray_created += o.spray_created;
    spray_airborne += o.spray_airborne;
}

RandomStream body_step_stream(uint64_t seed, int32_t body_id, int32_t step_index) {
    return RandomStream(mix_key({seed, 0x7370726179ULL, uint64_t(uint32_t(body_id)),
                                 uint64_t(uint32_t(step_index))}));
}

StepResult step_group(const WorldConfig& config, const std::vector<const CharacterSpec*>& group,
                      int32_t step_index, SparseColumnGrid& scratch,
                      std::map<int32_t, BodyParticleState> carry) {
    StepResult result;
    result.carry = std::move(carry);
    StepStats& stats = result.stats;

    const double t_end = config.step_time(step_index);
    const double margin = double(config.margin_cells) * config.grid.cell_size;

    std::vector<PosedBody> bodies;
    for (const CharacterSpec* chr : group) {
        for (const BodySpec& spec : chr->bodies) {
            PosedBody pb;
            pb.character = chr;
            pb.body = &spec;
            pb.state = spec.trajectory->sample(t_end);
            pb.tree = AabbTree(*spec.mesh, pb.state);
            pb.rect = projected_bounds(pb.tree.world_bounds(), margin, config.grid);
            bodies.push_back(std::move(pb));
        }
    }
    std::sort(bodies.begin(), bodies.end(),
              [](const PosedBody& a, const PosedBody& b) { return a.body->body_id < b.body->body_id; });

    scratch.clear_active();
    for (const PosedBody& pb : bodies) scratch.mark_active(pb.rect);

    DeformWorkspace ws;
    ws.load(scratch);
    stats.active_cells = ws.active_count();

    double t0 = now_seconds();
    std::vector<const AabbTree*> trees(bodies.size());
    for (size_t b = 0; b < bodies.size(); ++b) trees[b] = &bodies[b].tree;
    const CollideResult collided = ws.collide(trees, scratch.min_height(), result.records);
    for (double v : collided.body_displaced_volume) stats.displaced_volume += v;
    stats.contact_cells = collided.contact_count;
    double t1 = now_seconds();
    stats.collide_seconds = t1 - t0;

    const ContourResult contour = ws.build_contour();
    stats.contour_saturated = contour.saturated;
    t0 = now_seconds();
    stats.contour_seconds = t0 - t1;

    const DisplaceResult displaced = ws.displace(config.material, result.records);
    stats.outward_volume = displaced.outward_volume;
    stats.compressed_volume = displaced.compressed_volume;
    t1 = now_seconds();
    stats.displace_seconds = t1 - t0;

    const ErodeResult eroded = ws.erode(config.material, result.records);
    stats.eroded_volume = eroded.moved_volume;
    stats.erosion_passes = eroded.passes;
    ws.store(scratch);
    t0 = now_seconds();
    stats.erode_seconds = t0 - t1;

    if (config.particles_enabled) {
        for (size_t b = 0; b < bodies.size(); ++b) {
            const PosedBody& pb = bodies[b];
            BodyParticleState& ps = result.carry[pb.body->body_id];
            const LoadUpdateTotals loads = update_triangle_loads(
                config.particles, *pb.body->mesh, ws.contact_triangles()[b], ps, t_end, config.dt);
            stats.spray_pickup_volume += loads.pickup_volume;
            stats.spray_discarded_volume += loads.discarded_volume;
            RandomStream rng = body_step_stream(config.seed, pb.body->body_id, step_index);
            const SpawnTotals spawned = release_and_spawn(config.particles, *pb.body->mesh,
                                                          *pb.body->trajectory, ps, t_end,
                                                          config.dt, rng);
            stats.spray_created += spawned.created;
            stats.spray_created_volume += spawned.created_volume;
            const DepositTotals landed = integrate_and_deposit(ps.airborne, config.particles,
                                                               scratch, t_end, config.dt,
                                                               result.records);
            stats.spray_deposited_volume += landed.deposited_volume;
            stats.spray_leaked_volume += landed.leaked_volume;
            stats.spray_airborne += int32_t(ps.airborne.size());
        }
    } else {
        // Keep carry entries alive so ownership handoffs stay uniform.
        for (const PosedBody& pb : bodies) result.carry.try_emplace(pb.body->body_id);
    }
    t1 = now_seconds();
    stats.particle_seconds = t1 - t0;

    return result;
}

RegionSchedule RegionSchedule::build(const WorldConfig& config, const CharacterSpec& character) {
    RegionSchedule sched;
    const double margin = double(config.margin_cells) * config.grid.cell_size;
    sched.body_rects_.resize(size_t(config.steps));
    sched.envelopes_.resize(size_t(config.steps));

    for (int32_t s = 0; s < config.steps; ++s) {
        CellRect r = CellRect::empty();
        for (const BodySpec& body : character.bodies) {
            const BodyState st = body.trajectory->sample(config.step_time(s));
            r = r.union_with(projected_bounds(*body.mesh, st, margin, config.grid));
        }
        sched.body_rects_[size_t(s)] = r;
    }

    bool spray = config.particles_enabled && config.particles.adhesion > 0.0;
    if (spray) {
        const double g = -config.particles.gravity.y;
        if (!(g > 0.0)) {
            throw std::invalid_argument("spray needs downward gravity to bound particle flight");
        }
        // Conservative static reach: fastest surface point over the whole
        // trajectory, flying from the highest spawn point down to the lowest
        // terrain the scene can produce.
        double v_max = 0.0, y_top = -1e300, y_bottom = 1e300;
        for (const BodySpec& body : character.bodies) {
            const double radius = body.mesh->max_radius();
            v_max = std::max(v_max, body.trajectory->max_point_speed(radius) *
                                        (1.0 + config.particles.velocity_jitter));
            y_top = std::max(y_top, body.trajectory->max_position_y() + radius);
            y_bottom = std::min(y_bottom, body.trajectory->min_position_y() - radius);
        }
        const double floor_y = std::min(config.init.min_height(), y_bottom);
        const double drop = std::max(0.0, y_top - floor_y);
        const double flight = (v_max + std::sqrt(v_max * v_max + 2.0 * g * drop)) / g + config.dt;
        const double reach = v_max * flight;
        const auto reach_cells = int32_t(std::ceil(reach / config.grid.cell_size)) + 1;
        const auto window = int32_t(std::ceil(flight / config.dt)) + 1;

        for (int32_t s = 0; s < config.steps; ++s) {
            CellRect u = CellRect::empty();
            for (int32_t w = std::max(0, s - window); w <= s; ++w) {
                u = u.union_with(sched.body_rects_[size_t(w)]);
            }
            sched.envelopes_[size_t(s)] =
                u.inflated(reach_cells).intersection(config.grid.extent());
        }
    } else {
        sched.envelopes_ = sched.body_rects_;
    }
    return sched;
}

} // namespace regolith
