#pragma once

#include "regolith/deformation.hpp"
#include "regolith/grid.hpp"
#include "regolith/mesh.hpp"
#include "regolith/rng.hpp"
#include "regolith/trajectory.hpp"
#include "regolith/vec.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace regolith {

struct ParticleParams {
    double adhesion = 0.0;        // picked-up volume per unit triangle area (m)
    double particle_volume = 1e-9; // volume of one particle (m^3)
    double half_life = 0.05;      // release time constant (s)
    double min_accel = 0.0;       // body acceleration at which every candidate drops (m/s^2)
    double gamma = 1.0;           // sharpness of the acceleration gate
    double velocity_jitter = 0.0; // perturbation radius as a fraction of |initial velocity|
    Vec3 gravity{0.0, -9.81, 0.0};

    void validate() const;
};

// Material stuck to one triangle awaiting release.
struct TriangleLoad {
    double volume = 0.0;      // v at pickup time; the release schedule keeps this fixed
    double detach_time = 0.0; // set when the triangle leaves ground contact
    bool detached = false;
    double spawn_carry = 0.0; // fractional particle carried to the next step
    double released = 0.0;    // volume already turned into particles
};

struct Particle {
    Vec3 position;
    Vec3 velocity;
    double volume = 0.0;
    double birth_time = 0.0;
};

// Per-body spray state that survives across steps.
struct BodyParticleState {
    std::map<int32_t, TriangleLoad> loads; // keyed by triangle index
    std::vector<Particle> airborne;
};

// Volume released by a detached load during the step ending at t:
// exponential decay with time constant h from detach time t_c; v stays the
// initial attached volume.
double release_volume(double v, double t, double t_c, double dt, double half_life);

struct LoadUpdateTotals {
    double pickup_volume = 0.0;    // newly attached material
    double discarded_volume = 0.0; // unreleased volume replaced by re-contact or dropped
};

// Per-triangle pickup bookkeeping for one body. Triangles in contact carry
// area * adhesion of material; a triangle leaving contact starts its release
// clock at the previous step boundary; re-contact refreshes the load and
// clears the clock. Loads whose remaining schedule is far below one particle
// are dropped. Degenerate triangles never load.
LoadUpdateTotals update_triangle_loads(const ParticleParams& params, const TriangleMesh& mesh,
                                       const std::vector<int32_t>& contact_triangles,
                                       BodyParticleState& state, double t_end, double dt);

// Uniform point on a triangle from two unit random variables.
inline Vec3 barycentric_point(const Vec3& xa, const Vec3& xb, const Vec3& xc, double rho_a,
                              double rho_b) {
    const double ba = 1.0 - std::sqrt(rho_a);
    const double bb = rho_b * (1.0 - ba);
    const double bc = 1.0 - (ba + bb);
    return xa * ba + xb * bb + xc * bc;
}

struct SpawnTotals {
    int created = 0;
    double created_volume = 0.0;
};

// Releases material from detached loads of one body and spawns gated
// particles with creation times spread over (t_end - dt, t_end]. Pose,
// velocity, and acceleration are interpolated to each creation time. The
// stream must be the body's own step substream.
SpawnTotals release_and_spawn(const ParticleParams& params, const TriangleMesh& mesh,
                              const Trajectory& trajectory, BodyParticleState& state,
                              double t_end, double dt, RandomStream& rng);

struct DepositTotals {
    double deposited_volume = 0.0;
    double leaked_volume = 0.0; // left the virtual extent
    int landed = 0;
    int leaked = 0;
};

// Ballistic update over the step ending at t_end; particles created inside
// the interval advance from their birth time. A particle at or below the
// top of its column deposits its volume there and dies.
DepositTotals integrate_and_deposit(std::vector<Particle>& airborne, const ParticleParams& params,
                                    SparseColumnGrid& grid, double t_end, double dt,
                                    std::vector<ChangeRecord>& records);

} // namespace regolith
