#pragma once

#include "regolith/vec.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace regolith {

struct BodyState {
    Vec3 position;
    Quat orientation;          // unit rotation
    Vec3 linear_velocity;      // finite-differenced from samples
    Vec3 angular_velocity;
    Vec3 linear_acceleration;  // finite-differenced from velocities
};

struct TrajectorySample {
    double t = 0.0;
    Vec3 position;
    Quat orientation;
};

// Time-ordered pose samples for one body id. Position interpolates linearly,
// orientation with slerp; queries beyond the ends clamp to the first/last
// sample. Velocities use central differences of the samples (one-sided at
// the ends), accelerations central differences of those velocities.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(int32_t body_id, std::vector<TrajectorySample> samples);

    int32_t body_id() const { return body_id_; }
    const std::vector<TrajectorySample>& samples() const { return samples_; }
    double start_time() const { return samples_.front().t; }
    double end_time() const { return samples_.back().t; }
    bool covers(double t) const { return t >= start_time() && t <= end_time(); }

    BodyState sample(double t) const;

    // Upper bound on the speed of any mesh point within body_radius of the
    // body origin, over all samples.
    double max_point_speed(double body_radius) const;

    double max_position_y() const;
    double min_position_y() const;

private:
    int32_t body_id_ = 0;
    std::vector<TrajectorySample> samples_;
    std::vector<Vec3> velocity_;
    std::vector<Vec3> angular_velocity_;
    std::vector<Vec3> acceleration_;
};

// Trajectory file: one record per line, "time body_id px py pz qw qx qy qz",
// whitespace-separated SI units, scalar-first unit rotation. Records for
// several bodies may interleave but must be time-sorted per body.
std::map<int32_t, Trajectory> load_trajectories(const std::string& path);
std::map<int32_t, Trajectory> load_trajectories(std::istream& in, const std::string& name);

} // namespace regolith
