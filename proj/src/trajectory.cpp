#include "regolith/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace regolith {

namespace {

Vec3 lerp(const Vec3& a, const Vec3& b, double u) { return a + (b - a) * u; }

// Angular velocity from a quaternion time derivative: w = 2 * dq/dt * q^-1.
Vec3 quat_rate_to_omega(const Quat& dq, const Quat& q) {
    const Quat r = dq * q.conjugate();
    return Vec3{r.x, r.y, r.z} * 2.0;
}

} // namespace

Trajectory::Trajectory(int32_t body_id, std::vector<TrajectorySample> samples)
    : body_id_(body_id), samples_(std::move(samples)) {
    if (samples_.empty()) throw std::invalid_argument("trajectory needs at least one sample");
    for (size_t k = 0; k < samples_.size(); ++k) {
        auto& s = samples_[k];
        if (!finite(s.position) || !std::isfinite(s.t)) {
            throw std::invalid_argument("trajectory sample with non-finite values");
        }
        const double n = s.orientation.norm();
        if (!(n > 1e-9) || !std::isfinite(n)) {
            throw std::invalid_argument("trajectory sample with degenerate orientation");
        }
        s.orientation = s.orientation.normalized();
        if (k > 0) {
            if (!(s.t > samples_[k - 1].t)) {
                throw std::invalid_argument("trajectory times must be strictly increasing");
            }
            // Keep the quaternion chain on one hemisphere so interpolation and
            // differencing follow the short arc.
            if (dot(samples_[k - 1].orientation, s.orientation) < 0.0) {
                const Quat& q = s.orientation;
                s.orientation = {-q.w, -q.x, -q.y, -q.z};
            }
        }
    }

    const size_t n = samples_.size();
    velocity_.assign(n, {});
    angular_velocity_.assign(n, {});
    acceleration_.assign(n, {});
    if (n == 1) return;

    auto pos_diff = [&](size_t lo, size_t hi) {
        return (samples_[hi].position - samples_[lo].position) / (samples_[hi].t - samples_[lo].t);
    };
    auto quat_rate = [&](size_t lo, size_t hi) {
        const Quat& a = samples_[lo].orientation;
        const Quat& b = samples_[hi].orientation;
        const double dt = samples_[hi].t - samples_[lo].t;
        return Quat{(b.w - a.w) / dt, (b.x - a.x) / dt, (b.y - a.y) / dt, (b.z - a.z) / dt};
    };

    for (size_t k = 0; k < n; ++k) {
        const size_t lo = k == 0 ? 0 : k - 1;
        const size_t hi = k + 1 == n ? k : k + 1;
        velocity_[k] = pos_diff(lo, hi);
        angular_velocity_[k] = quat_rate_to_omega(quat_rate(lo, hi), samples_[k].orientation);
    }
    for (size_t k = 0; k < n; ++k) {
        const size_t lo = k == 0 ? 0 : k - 1;
        const size_t hi = k + 1 == n ? k : k + 1;
        acceleration_[k] = (velocity_[hi] - velocity_[lo]) / (samples_[hi].t - samples_[lo].t);
    }
}

BodyState Trajectory::sample(double t) const {
    BodyState out;
    const size_t n = samples_.size();
    if (n == 1 || t <= samples_.front().t) {
        const size_t k = (n == 1 || t <= samples_.front().t) ? 0 : n - 1;
        out.position = samples_[k].position;
        out.orientation = samples_[k].orientation;
        out.linear_velocity = velocity_[k];
        out.angular_velocity = angular_velocity_[k];
        out.linear_acceleration = acceleration_[k];
        return out;
    }
    if (t >= samples_.back().t) {
        out.position = samples_.back().position;
        out.orientation = samples_.back().orientation;
        out.linear_velocity = velocity_.back();
        out.angular_velocity = angular_velocity_.back();
        out.linear_acceleration = acceleration_.back();
        return out;
    }
    // First sample with time > t; the bracket is [k0, k0+1].
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                     [](double v, const TrajectorySample& s) { return v < s.t; });
    const size_t k1 = size_t(it - samples_.begin());
    const size_t k0 = k1 - 1;
    const double u = (t - samples_[k0].t) / (samples_[k1].t - samples_[k0].t);
    out.position = lerp(samples_[k0].position, samples_[k1].position, u);
    out.orientation = slerp(samples_[k0].orientation, samples_[k1].orientation, u);
    out.linear_velocity = lerp(velocity_[k0], velocity_[k1], u);
    out.angular_velocity = lerp(angular_velocity_[k0], angular_velocity_[k1], u);
    out.linear_acceleration = lerp(acceleration_[k0], acceleration_[k1], u);
    return out;
}

double Trajectory::max_point_speed(double body_radius) const {
    double s = 0.0;
    for (size_t k = 0; k < samples_.size(); ++k) {
        s = std::max(s, velocity_[k].norm() + angular_velocity_[k].norm() * body_radius);
    }
    return s;
}

double Trajectory::max_position_y() const {
    double y = samples_.front().position.y;
    for (const auto& s : samples_) y = std::max(y, s.position.y);
    return y;
}

double Trajectory::min_position_y() const {
    double y = samples_.front().position.y;
    for (const auto& s : samples_) y = std::min(y, s.position.y);
    return y;
}

std::map<int32_t, Trajectory> load_trajectories(std::istream& in, const std::string& name) {
    std::map<int32_t, std::vector<TrajectorySample>> per_body;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first) || first.empty() || first[0] == '#') continue;
        TrajectorySample s;
        int32_t body = 0;
        std::istringstream rs(line);
        if (!(rs >> s.t >> body >> s.position.x >> s.position.y >> s.position.z >>
              s.orientation.w >> s.orientation.x >> s.orientation.y >> s.orientation.z)) {
            std::ostringstream os;
            os << name << ":" << line_no << ": malformed trajectory record";
            throw std::runtime_error(os.str());
        }
        auto& vec = per_body[body];
        if (!vec.empty() && s.t <= vec.back().t) {
            std::ostringstream os;
            os << name << ":" << line_no << ": records for body " << body << " not time-sorted";
            throw std::runtime_error(os.str());
        }
        vec.push_back(s);
    }
    if (per_body.empty()) throw std::runtime_error(name + ": no trajectory records");
    std::map<int32_t, Trajectory> out;
    for (auto& [id, samples] : per_body) {
        out.emplace(id, Trajectory(id, std::move(samples)));
    }
    return out;
}

std::map<int32_t, Trajectory> load_trajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open trajectory file");
    return load_trajectories(in, path);
}

} // namespace regolith
