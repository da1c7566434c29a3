#pragma once

#include "regolith/aabb_tree.hpp"
#include "regolith/cell.hpp"
#include "regolith/grid.hpp"
#include "regolith/material.hpp"

#include <cstdint>
#include <vector>

namespace regolith {

enum class ChangeCause : uint8_t {
    Collision = 0,
    Displacement = 1,
    Erosion = 2,
    ParticleLanding = 3,
};

// One height change of one column, the unit of the step change log.
struct ChangeRecord {
    CellIndex cell;
    double old_height = 0.0;
    double new_height = 0.0;
    ChangeCause cause = ChangeCause::Collision;
};

struct CollideResult {
    std::vector<double> body_displaced_volume; // per collide body slot
    int64_t contact_count = 0;
};

struct ContourResult {
    int32_t max_label = 0;
    bool saturated = false; // contacted region had no free boundary inside the active set
};

struct DisplaceResult {
    double outward_volume = 0.0;    // deposited onto the contour-0 ring
    double compressed_volume = 0.0; // (1 - compression) share plus any stuck remainder
    double stuck_volume = 0.0;      // could not be routed (saturated labels)
};

struct ErodeResult {
    int passes = 0;
    double moved_volume = 0.0; // total shed across passes
};

// Dense per-step working state over the bounding box of the grid's active
// set. The stages mutate the workspace; store() writes the result back to
// the grid. Cell scans run in row-major order so results do not depend on
// container iteration order.
class DeformWorkspace {
public:
    // Captures heights and clears per-step flags for the grid's active cells.
    void load(const SparseColumnGrid& grid);

    // Lowers every active column whose upward ray hits a body below its top.
    // Returns displaced volume per body; ties between bodies resolve to the
    // lower body slot.
    CollideResult collide(const std::vector<const AabbTree*>& bodies, double ray_origin_y,
                          std::vector<ChangeRecord>& records);

    // Labels columns with their 8-way distance to the nearest non-contact
    // column (0 on non-contact columns).
    ContourResult build_contour();

    // Routes the uncompressed share of each contacted column's displaced
    // material down the contour gradient onto the nearest non-contact ring.
    DisplaceResult displace(const MaterialParams& params, std::vector<ChangeRecord>& records);

    // Slope-threshold erosion passes; terminates when all slopes settle at or
    // below theta_stop, when a pass moves nothing, or at the iteration cap.
    ErodeResult erode(const MaterialParams& params, std::vector<ChangeRecord>& records);

    void store(SparseColumnGrid& grid) const;

    // Winning triangles per collide body slot, ascending (feeds spray pickup).
    const std::vector<std::vector<int32_t>>& contact_triangles() const { return contact_tris_; }

    int64_t active_count() const { return int64_t(active_cells_.size()); }
    bool cell_in_contact(CellIndex c) const;
    int32_t contour_at(CellIndex c) const;
    double height_at(CellIndex c) const;

private:
    size_t slot(CellIndex c) const {
        return size_t(c.i - box_.i0) * size_t(box_.j1 - box_.j0 + 1) + size_t(c.j - box_.j0);
    }
    CellIndex cell_at(size_t s) const {
        const auto w = size_t(box_.j1 - box_.j0 + 1);
        return {box_.i0 + int32_t(s / w), box_.j0 + int32_t(s % w)};
    }
    bool in_box(CellIndex c) const { return box_.contains(c); }

    CellRect box_;
    double cell_size_ = 0.0;
    double origin_x_ = 0.0;
    double origin_z_ = 0.0;
    std::vector<CellIndex> active_cells_; // row-major order
    std::vector<size_t> active_slots_;
    std::vector<uint8_t> active_;
    std::vector<uint8_t> contact_;
    std::vector<double> height_;
    std::vector<double> displaced_;
    std::vector<int32_t> contour_;
    std::vector<std::vector<int32_t>> contact_tris_;
    std::vector<int32_t> winner_body_;
    std::vector<int32_t> winner_tri_;
};

} // namespace regolith
