#pragma once

#include "regolith/deformation.hpp"
#include "regolith/grid.hpp"
#include "regolith/material.hpp"
#include "regolith/mesh.hpp"
#include "regolith/particles.hpp"
#include "regolith/trajectory.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace regolith {

struct BodySpec {
    int32_t body_id = 0; // globally unique, ascending across characters
    std::shared_ptr<const TriangleMesh> mesh;
    std::shared_ptr<const Trajectory> trajectory;
};

struct CharacterSpec {
    int32_t character_id = 0;
    std::string name;
    std::vector<BodySpec> bodies;
};

// Static simulation setup shared by every executor.
struct WorldConfig {
    GridConfig grid;
    TerrainInitializer init;
    MaterialParams material;
    ParticleParams particles;
    bool particles_enabled = false;
    double t_start = 0.0;
    double dt = 1.0 / 300.0;
    int32_t steps = 0;
    int32_t margin_cells = 10; // active-region inflation around each body
    uint64_t seed = 1;

    // Step k covers (step_time(k) - dt, step_time(k)].
    double step_time(int32_t k) const { return t_start + double(k + 1) * dt; }
};

struct StepStats {
    double collide_seconds = 0.0;
    double contour_seconds = 0.0;
    double displace_seconds = 0.0;
    double erode_seconds = 0.0;
    double particle_seconds = 0.0;

    double displaced_volume = 0.0;  // total collision-displaced volume this step
    double outward_volume = 0.0;    // deposited onto the ring by displacement
    double compressed_volume = 0.0;
    double eroded_volume = 0.0;
    int32_t erosion_passes = 0;
    int64_t contact_cells = 0;
    int64_t active_cells = 0;
    bool contour_saturated = false;

    double spray_pickup_volume = 0.0;
    double spray_discarded_volume = 0.0; // unreleased volume replaced by re-contact or drop
    double spray_created_volume = 0.0;
    double spray_deposited_volume = 0.0;
    double spray_leaked_volume = 0.0;
    int32_t spray_created = 0;
    int32_t spray_airborne = 0;

    void accumulate(const StepStats& o);
};

struct StepResult {
    std::vector<ChangeRecord> records;
    std::map<int32_t, BodyParticleState> carry; // per body id
    StepStats stats;
};

// Computes one step for a group of characters on a scratch grid primed with
// the granted cell states. Pure given its inputs: every executor produces
// identical records, carry state, and physics stats for the same arguments,
// so any schedule reproduces the serial result.
StepResult step_group(const WorldConfig& config, const std::vector<const CharacterSpec*>& group,
                      int32_t step_index, SparseColumnGrid& scratch,
                      std::map<int32_t, BodyParticleState> carry);

// Per-character, per-step grid footprints derived from the trajectories
// alone. body_rect bounds the deformation work; envelope additionally covers
// every cell the character's spray can reach, so grants, merges, and commit
// validation depend only on registered inputs, never on wall-clock order.
class RegionSchedule {
public:
    RegionSchedule() = default;
    static RegionSchedule build(const WorldConfig& config, const CharacterSpec& character);

    CellRect body_rect(int32_t step) const { return body_rects_.at(size_t(step)); }
    CellRect envelope(int32_t step) const { return envelopes_.at(size_t(step)); }
    int32_t steps() const { return int32_t(body_rects_.size()); }

private:
    std::vector<CellRect> body_rects_;
    std::vector<CellRect> envelopes_;
};

// RNG substream for one body's spray during one step; a pure function of
// (seed, body, step) so results cannot depend on worker assignment or on
// characters merging.
RandomStream body_step_stream(uint64_t seed, int32_t body_id, int32_t step_index);

} // namespace regolith
