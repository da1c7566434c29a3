#include "regolith/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace regolith {

void DeformWorkspace::load(const SparseColumnGrid& grid) {
    const auto& active = grid.active_cells();
    box_ = CellRect::empty();
    cell_size_ = grid.config().cell_size;
    origin_x_ = grid.config().origin_x;
    origin_z_ = grid.config().origin_z;
    for (const CellIndex& c : active) {
        box_ = box_.union_with({c.i, c.j, c.i, c.j});
    }
    const size_t n = box_.is_empty() ? 0 : size_t(box_.count());
    active_.assign(n, 0);
    contact_.assign(n, 0);
    height_.assign(n, 0.0);
    displaced_.assign(n, 0.0);
    contour_.assign(n, 0);
    winner_body_.assign(n, -1);
    winner_tri_.assign(n, -1);
    contact_tris_.clear();
    active_cells_.assign(active.begin(), active.end()); // std::set iterates row-major
    active_slots_.resize(active_cells_.size());
    for (size_t k = 0; k < active_cells_.size(); ++k) {
        const size_t s = slot(active_cells_[k]);
        active_slots_[k] = s;
        active_[s] = 1;
        height_[s] = grid.height_at(active_cells_[k]);
    }
}

CollideResult DeformWorkspace::collide(const std::vector<const AabbTree*>& bodies,
                                       double ray_origin_y, std::vector<ChangeRecord>& records) {
    CollideResult result;
    result.body_displaced_volume.assign(bodies.size(), 0.0);
    contact_tris_.assign(bodies.size(), {});

    std::vector<std::vector<uint8_t>> tri_hit(bodies.size());
    for (size_t b = 0; b < bodies.size(); ++b) {
        tri_hit[b].assign(bodies[b] ? bodies[b]->triangle_count() : 0, 0);
    }

    const double area = cell_size_ * cell_size_;
    for (size_t k = 0; k < active_cells_.size(); ++k) {
        const CellIndex c = active_cells_[k];
        const size_t s = active_slots_[k];
        const double x = origin_x_ + double(c.i) * cell_size_;
        const double z = origin_z_ + double(c.j) * cell_size_;

        double best_y = 0.0;
        int32_t best_body = -1, best_tri = -1;
        for (size_t b = 0; b < bodies.size(); ++b) {
            const AabbTree* tree = bodies[b];
            if (!tree || tree->empty()) continue;
            const Aabb& wb = tree->world_bounds();
            if (x < wb.lo.x || x > wb.hi.x || z < wb.lo.z || z > wb.hi.z) continue;
            const auto hit = tree->raycast_up(x, z, ray_origin_y);
            if (!hit) continue;
            if (best_body < 0 || hit->y < best_y) {
                best_y = hit->y;
                best_body = int32_t(b);
                best_tri = hit->triangle;
            }
        }

        // A column whose top coincides with the body surface is resting
        // against it: still in contact, nothing displaced. Only strictly
        // penetrating columns move.
        if (best_body >= 0 && best_y <= height_[s]) {
            contact_[s] = 1;
            winner_body_[s] = best_body;
            winner_tri_[s] = best_tri;
            ++result.contact_count;
            if (!tri_hit[size_t(best_body)].empty()) tri_hit[size_t(best_body)][size_t(best_tri)] = 1;
            if (best_y < height_[s]) {
                const double old = height_[s];
                height_[s] = best_y;
                displaced_[s] += old - best_y;
                result.body_displaced_volume[size_t(best_body)] += (old - best_y) * area;
                records.push_back({c, old, best_y, ChangeCause::Collision});
            }
        } else {
            contact_[s] = 0;
            contour_[s] = 0;
        }
    }

    for (size_t b = 0; b < bodies.size(); ++b) {
        for (size_t t = 0; t < tri_hit[b].size(); ++t) {
            if (tri_hit[b][t]) contact_tris_[b].push_back(int32_t(t));
        }
    }
    return result;
}

ContourResult DeformWorkspace::build_contour() {
    ContourResult result;
    constexpr int32_t kUnset = -1;
    // Non-contact columns seed the front at zero; contacted columns take
    // one more than the smallest labeled neighbor, which a breadth-first
    // sweep from all seeds produces directly.
    std::deque<size_t> queue;
    for (size_t k = 0; k < active_cells_.size(); ++k) {
        const size_t s = active_slots_[k];
        if (contact_[s]) {
            contour_[s] = kUnset;
        } else {
            contour_[s] = 0;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        const size_t s = queue.front();
        queue.pop_front();
        const CellIndex c = cell_at(s);
        const int32_t next = contour_[s] + 1;
        for (const auto& [di, dj] : kNeighborOffsets) {
            const CellIndex nb{c.i + di, c.j + dj};
            if (!in_box(nb)) continue;
            const size_t ns = slot(nb);
            if (!active_[ns] || !contact_[ns] || contour_[ns] != kUnset) continue;
            contour_[ns] = next;
            result.max_label = std::max(result.max_label, next);
            queue.push_back(ns);
        }
    }
    // A contact patch with no free boundary inside the active set cannot be
    // labeled; saturate those labels and let the caller warn.
    const auto saturation = int32_t(std::max(box_.rows(), box_.cols()));
    for (size_t k = 0; k < active_cells_.size(); ++k) {
        const size_t s = active_slots_[k];
        if (contact_[s] && contour_[s] == kUnset) {
            contour_[s] = saturation;
            result.saturated = true;
        }
    }
    if (result.saturated) result.max_label = saturation;
    return result;
}

DisplaceResult DeformWorkspace::displace(const MaterialParams& params,
                                         std::vector<ChangeRecord>& records) {
    DisplaceResult result;
    const double area = cell_size_ * cell_size_;
    const double alpha = params.compression;

    int32_t max_label = 0;
    for (size_t k = 0; k < active_cells_.size(); ++k) {
        max_label = std::max(max_label, contour_[active_slots_[k]]);
    }

    // Contacted columns by label; pending material is carried in height
    // units (every column has the same footprint area).
    std::vector<std::vector<size_t>> by_label(size_t(max_label) + 1);
    std::vector<double> pending(height_.size(), 0.0);
    std::vector<double> deposit(height_.size(), 0.0);
    double total_displaced = 0.0;
    for (size_t k = 0; k < active_cells_.size(); ++k) {
        const size_t s = active_slots_[k];
        if (!contact_[s]) continue;
        by_label[size_t(contour_[s])].push_back(s);
        total_displaced += displaced_[s];
        pending[s] = alpha * displaced_[s];
        displaced_[s] = 0.0;
    }

    double stuck = 0.0;
    for (int32_t level = max_label; level >= 1; --level) {
        for (const size_t s : by_label[size_t(level)]) {
            const double x = pending[s];
            if (x <= 0.0) continue;
            pending[s] = 0.0;
            const CellIndex c = cell_at(s);

            size_t lower[8];
            size_t lower_n = 0;
            for (const auto& [di, dj] : kNeighborOffsets) {
                const CellIndex nb{c.i + di, c.j + dj};
                if (!in_box(nb)) continue;
                const size_t ns = slot(nb);
                if (active_[ns] && contour_[ns] < level) lower[lower_n++] = ns;
            }
            if (lower_n > 0) {
                const double share = x / double(lower_n);
                for (size_t t = 0; t < lower_n; ++t) {
                    if (contour_[lower[t]] == 0) {
                        deposit[lower[t]] += share;
                    } else {
                        pending[lower[t]] += share;
                    }
                }
                continue;
            }

            // Label plateau (saturated labeling): relax once through equal
            // neighbors that can route downhill; anything still stranded
            // stays compressed.
            size_t equal[8];
            size_t equal_n = 0;
            for (const auto& [di, dj] : kNeighborOffsets) {
                const CellIndex nb{c.i + di, c.j + dj};
                if (!in_box(nb)) continue;
                const size_t ns = slot(nb);
                if (!active_[ns] || contour_[ns] != level) continue;
                const CellIndex nc = cell_at(ns);
                for (const auto& [ei, ej] : kNeighborOffsets) {
                    const CellIndex nn{nc.i + ei, nc.j + ej};
                    if (!in_box(nn)) continue;
                    const size_t nns = slot(nn);
                    if (active_[nns] && contour_[nns] < level) {
                        equal[equal_n++] = ns;
                        break;
                    }
                }
            }
            if (equal_n == 0) {
                stuck += x;
                continue;
            }
            const double eshare = x / double(equal_n);
            for (size_t e = 0; e < equal_n; ++e) {
                const CellIndex nc = cell_at(equal[e]);
                size_t targets[8];
                size_t tn = 0;
                for (const auto& [ei, ej] : kNeighborOffsets) {
                    const CellIndex nn{nc.i + ei, nc.j + ej};
                    if (!in_box(nn)) continue;
                    const size_t nns = slot(nn);
                    if (active_[nns] && contour_[nns] < level) targets[tn++] = nns;
                }
                const double tshare = eshare / double(tn);
                for (size_t t = 0; t < tn; ++t) {
                    if (contour_[targets[t]] == 0) {
                        deposit[targets[t]] += tshare;
                    } else {
                        pending[targets[t]] += tshare;
                    }
                }
            }
        }
    }

    double outward = 0.0;
    for (size_t k = 0; k < active_cells_.size(); ++k) {
        const size_t s = active_slots_[k];
        if (deposit[s] <= 0.0) continue;
        const double old = height_[s];
        height_[s] = old + deposit[s];
        outward += deposit[s];
        records.push_back({active_cells_[k], old, height_[s], ChangeCause::Displacement});
    }
    result.outward_volume = outward * area;
    result.stuck_volume = stuck * area;
    result.compressed_volume = (1.0 - alpha) * total_displaced * area + result.stuck_volume;
    return result;
}

ErodeResult DeformWorkspace::erode(const MaterialParams& params,
                                   std::vector<ChangeRecord>& records) {
    ErodeResult result;
    const double area = cell_size_ * cell_size_;
    const double tan_in = std::tan(params.theta_in);
    const double tan_out = std::tan(params.theta_out);
    const double tan_stop = std::tan(params.theta_stop);
    const double inv_d = 1.0 / cell_size_;
    const double inv_diag = 1.0 / (cell_size_ * std::sqrt(2.0));

    std::vector<double> before(height_);
    std::vector<double> delta(height_.size(), 0.0);

    int passes = 0;
    while (passes < params.max_erosion_iters) {
        std::fill(delta.begin(), delta.end(), 0.0);
        double moved = 0.0;
        double max_ratio = 0.0;

        for (size_t k = 0; k < active_cells_.size(); ++k) {
            const size_t s = active_slots_[k];
            const CellIndex c = active_cells_[k];
            const double h = height_[s];

            size_t steep[8];
            double drop_sum = 0.0;
            size_t n = 0;
            for (const auto& [di, dj] : kNeighborOffsets) {
                const CellIndex nb{c.i + di, c.j + dj};
                if (!in_box(nb)) continue;
                const size_t ns = slot(nb);
                if (!active_[ns]) continue;
                const double dh = h - height_[ns];
                const double inv_dist = (di != 0 && dj != 0) ? inv_diag : inv_d;
                if (dh > 0.0) {
                    const double ratio = dh * inv_dist;
                    max_ratio = std::max(max_ratio, ratio);
                    const double threshold = (contact_[s] || contact_[ns]) ? tan_in : tan_out;
                    if (ratio > threshold) {
                        steep[n++] = ns;
                        drop_sum += dh;
                    }
                }
            }
            if (n == 0) continue;
            const double avg_drop = drop_sum / double(n);
            const double give = params.roughness * avg_drop / double(n);
            for (size_t t = 0; t < n; ++t) {
                delta[s] -= give;
                delta[steep[t]] += give;
                moved += give;
            }
        }

        // Slopes already settled at or below theta_stop after the previous
        // pass: stop without applying another one.
        if (passes > 0 && max_ratio <= tan_stop) break;

        for (size_t k = 0; k < active_cells_.size(); ++k) {
            const size_t s = active_slots_[k];
            height_[s] += delta[s];
        }
        ++passes;
        result.moved_volume += moved * area;
        // Fixed point: no pair exceeds its acting threshold, so no further
        // pass can change anything even if steep contact walls remain.
        if (moved == 0.0) break;
    }
    result.passes = passes;

    for (size_t k = 0; k < active_cells_.size(); ++k) {
        const size_t s = active_slots_[k];
        if (height_[s] != before[s]) {
            records.push_back({active_cells_[k], before[s], height_[s], ChangeCause::Erosion});
        }
    }
    return result;
}

void DeformWorkspace::store(SparseColumnGrid& grid) const {
    for (size_t k = 0; k < active_cells_.size(); ++k) {
        const size_t s = active_slots_[k];
        Column& col = grid.materialize(active_cells_[k]);
        col.height = height_[s];
        col.in_contact = contact_[s] != 0;
        col.contour = contact_[s] ? contour_[s] : 0;
        col.displaced = displaced_[s];
    }
}

bool DeformWorkspace::cell_in_contact(CellIndex c) const {
    return in_box(c) && contact_[slot(c)] != 0;
}

int32_t DeformWorkspace::contour_at(CellIndex c) const {
    return in_box(c) ? contour_[slot(c)] : 0;
}

double DeformWorkspace::height_at(CellIndex c) const {
    if (!in_box(c)) throw std::out_of_range("cell outside workspace box");
    return height_[slot(c)];
}

} // namespace regolith
