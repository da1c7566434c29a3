#include "regolith/particles.hpp"

#include <cmath>
#include <stdexcept>

namespace regolith {

void ParticleParams::validate() const {
    if (adhesion < 0.0) throw std::invalid_argument("adhesion must be >= 0");
    if (!(particle_volume > 0.0)) throw std::invalid_argument("particle_volume must be > 0");
    if (!(half_life > 0.0)) throw std::invalid_argument("half_life must be > 0");
    if (min_accel < 0.0) throw std::invalid_argument("min_accel must be >= 0");
    if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
    if (velocity_jitter < 0.0) throw std::invalid_argument("velocity_jitter must be >= 0");
}

double release_volume(double v, double t, double t_c, double dt, double half_life) {
    const double a = std::exp((-t + t_c + dt) / half_life);
    const double b = std::exp((-t + t_c) / half_life);
    return v * (a - b);
}

LoadUpdateTotals update_triangle_loads(const ParticleParams& params, const TriangleMesh& mesh,
                                       const std::vector<int32_t>& contact_triangles,
                                       BodyParticleState& state, double t_end, double dt) {
    LoadUpdateTotals totals;
    std::vector<uint8_t> contact_now(mesh.triangle_count(), 0);
    for (const int32_t t : contact_triangles) {
        if (mesh.degenerate[size_t(t)]) continue;
        contact_now[size_t(t)] = 1;
        auto it = state.loads.find(t);
        if (it != state.loads.end() && !it->second.detached) continue; // still attached
        const double v = mesh.areas[size_t(t)] * params.adhesion;
        if (v <= 0.0) continue;
        if (it != state.loads.end()) {
            totals.discarded_volume += it->second.volume - it->second.released;
            state.loads.erase(it);
        }
        TriangleLoad load;
        load.volume = v;
        state.loads.emplace(t, load);
        totals.pickup_volume += v;
    }
    for (auto it = state.loads.begin(); it != state.loads.end();) {
        TriangleLoad& load = it->second;
        if (!contact_now[size_t(it->first)] && !load.detached) {
            load.detached = true;
            load.detach_time = t_end - dt;
        }
        if (load.detached) {
            const double future =
                load.volume * std::exp((load.detach_time - t_end) / params.half_life);
            if (future < 1e-6 * params.particle_volume) {
                totals.discarded_volume += std::max(0.0, load.volume - load.released);
                it = state.loads.erase(it);
                continue;
            }
        }
        ++it;
    }
    return totals;
}

SpawnTotals release_and_spawn(const ParticleParams& params, const TriangleMesh& mesh,
                              const Trajectory& trajectory, BodyParticleState& state,
                              double t_end, double dt, RandomStream& rng) {
    SpawnTotals totals;
    const double phi = params.particle_volume;

    for (auto& [tri, load] : state.loads) {
        if (!load.detached) continue;
        // First release happens on the step that ends one dt after detach;
        // the slack absorbs accumulated time rounding.
        if (t_end - load.detach_time < dt * (1.0 - 1e-9)) continue;

        const double dv = release_volume(load.volume, t_end, load.detach_time, dt, params.half_life);
        const double n_frac = dv / phi + load.spawn_carry;
        const auto n = int64_t(std::floor(n_frac));
        load.spawn_carry = n_frac - double(n);

        const auto& t = mesh.triangles[size_t(tri)];
        for (int64_t k = 0; k < n; ++k) {
            const double rho_a = rng.uniform01();
            const double rho_b = rng.uniform01();
            const double birth_u = rng.uniform01();
            const double rho_gate = rng.uniform01();
            const double j1 = rng.uniform01();
            const double j2 = rng.uniform01();
            const double j3 = rng.uniform01();

            const double birth = t_end - dt + birth_u * dt;
            const BodyState st = trajectory.sample(birth);

            // Acceleration gate: everything at or above min_accel drops.
            if (params.min_accel > 0.0) {
                const double a_mag = st.linear_acceleration.norm();
                if (!(std::pow(a_mag / params.min_accel, params.gamma) > rho_gate)) continue;
            }

            const Vec3 xa = st.position + st.orientation.rotate(mesh.vertices[size_t(t.a)]);
            const Vec3 xb = st.position + st.orientation.rotate(mesh.vertices[size_t(t.b)]);
            const Vec3 xc = st.position + st.orientation.rotate(mesh.vertices[size_t(t.c)]);
            const Vec3 p0 = barycentric_point(xa, xb, xc, rho_a, rho_b);

            Vec3 v0 = st.linear_velocity + cross(st.angular_velocity, p0 - st.position);
            if (params.velocity_jitter > 0.0) {
                const double radius = params.velocity_jitter * v0.norm() * std::cbrt(j3);
                const double zc = 2.0 * j1 - 1.0;
                const double phi_ang = 2.0 * 3.141592653589793 * j2;
                const double rxy = std::sqrt(std::max(0.0, 1.0 - zc * zc));
                v0 += Vec3{rxy * std::cos(phi_ang), rxy * std::sin(phi_ang), zc} * radius;
            }

            state.airborne.push_back({p0, v0, phi, birth});
            load.released += phi;
            ++totals.created;
            totals.created_volume += phi;
        }
    }

    return totals;
}

DepositTotals integrate_and_deposit(std::vector<Particle>& airborne, const ParticleParams& params,
                                    SparseColumnGrid& grid, double t_end, double dt,
                                    std::vector<ChangeRecord>& records) {
    DepositTotals totals;
    const GridConfig& config = grid.config();
    const double inv_area = 1.0 / config.cell_area();
    const double t_begin = t_end - dt;

    size_t keep = 0;
    for (size_t k = 0; k < airborne.size(); ++k) {
        Particle p = airborne[k];
        const double tau = t_end - std::max(t_begin, p.birth_time);
        p.position += p.velocity * tau + params.gravity * (0.5 * tau * tau);
        p.velocity += params.gravity * tau;

        const CellIndex cell = config.cell_of(p.position.x, p.position.z);
        if (!config.in_extent(cell)) {
            totals.leaked_volume += p.volume;
            ++totals.leaked;
            continue;
        }
        if (p.position.y <= grid.height_at(cell)) {
            Column& col = grid.materialize(cell);
            const double old = col.height;
            col.height = old + p.volume * inv_area;
            records.push_back({cell, old, col.height, ChangeCause::ParticleLanding});
            totals.deposited_volume += p.volume;
            ++totals.landed;
            continue;
        }
        airborne[keep++] = p;
    }
    airborne.resize(keep);
    return totals;
}

} // namespace regolith
