#include "regolith/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <sys/socket.h>
#include <unistd.h>

namespace regolith {

// ---------------------------------------------------------------------------
// ByteReader
// ---------------------------------------------------------------------------

uint8_t ByteReader::u8() {
    if (pos_ + 1 > buf_.size()) throw std::runtime_error("truncated message frame");
    return buf_[pos_++];
}

uint32_t ByteReader::u32() {
    if (pos_ + 4 > buf_.size()) throw std::runtime_error("truncated message frame");
    uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= uint32_t(buf_[pos_++]) << (8 * k);
    return v;
}

uint64_t ByteReader::u64() {
    if (pos_ + 8 > buf_.size()) throw std::runtime_error("truncated message frame");
    uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= uint64_t(buf_[pos_++]) << (8 * k);
    return v;
}

double ByteReader::f64() {
    const uint64_t bits = u64();
    double v;
    __builtin_memcpy(&v, &bits, sizeof(v));
    return v;
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

namespace {

struct ByteQueue {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::vector<uint8_t>> frames;
    bool closed = false;

    void push(std::vector<uint8_t> frame) {
        {
            std::lock_guard<std::mutex> lk(mutex);
            frames.push_back(std::move(frame));
        }
        cv.notify_one();
    }

    // Empty frame on close.
    std::vector<uint8_t> pop() {
        std::unique_lock<std::mutex> lk(mutex);
        cv.wait(lk, [&] { return !frames.empty() || closed; });
        if (frames.empty()) return {};
        auto f = std::move(frames.front());
        frames.pop_front();
        return f;
    }

    void close() {
        {
            std::lock_guard<std::mutex> lk(mutex);
            closed = true;
        }
        cv.notify_all();
    }
};

class InprocChannel final : public Channel {
public:
    InprocChannel(std::shared_ptr<ByteQueue> out, std::shared_ptr<ByteQueue> in)
        : out_(std::move(out)), in_(std::move(in)) {}
    ~InprocChannel() override { out_->close(); }

    void send(std::vector<uint8_t> frame) override { out_->push(std::move(frame)); }
    std::vector<uint8_t> recv() override { return in_->pop(); }
    void close_send() override { out_->close(); }

private:
    std::shared_ptr<ByteQueue> out_;
    std::shared_ptr<ByteQueue> in_;
};

class StreamChannel final : public Channel {
public:
    explicit StreamChannel(int fd) : fd_(fd) {}
    ~StreamChannel() override { ::close(fd_); }

    void send(std::vector<uint8_t> frame) override {
        uint8_t header[4];
        const auto n = uint32_t(frame.size());
        for (int k = 0; k < 4; ++k) header[k] = uint8_t(n >> (8 * k));
        write_all(header, 4);
        if (!frame.empty()) write_all(frame.data(), frame.size());
    }

    std::vector<uint8_t> recv() override {
        uint8_t header[4];
        if (!read_all(header, 4)) return {};
        uint32_t n = 0;
        for (int k = 0; k < 4; ++k) n |= uint32_t(header[k]) << (8 * k);
        std::vector<uint8_t> frame(n);
        if (n > 0 && !read_all(frame.data(), frame.size())) return {};
        return frame;
    }

    void close_send() override { ::shutdown(fd_, SHUT_WR); }

private:
    void write_all(const uint8_t* data, size_t n) {
        size_t off = 0;
        while (off < n) {
            // MSG_NOSIGNAL: a peer that already shut down must surface as an
            // error, not a SIGPIPE.
            const ssize_t w = ::send(fd_, data + off, n - off, MSG_NOSIGNAL);
            if (w <= 0) throw std::runtime_error("stream channel write failed");
            off += size_t(w);
        }
    }
    bool read_all(uint8_t* data, size_t n) {
        size_t off = 0;
        while (off < n) {
            const ssize_t r = ::read(fd_, data + off, n - off);
            if (r == 0) return false; // peer closed
            if (r < 0) throw std::runtime_error("stream channel read failed");
            off += size_t(r);
        }
        return true;
    }

    int fd_;
};

} // namespace

ChannelPair make_inproc_channel() {
    auto to_worker = std::make_shared<ByteQueue>();
    auto to_coordinator = std::make_shared<ByteQueue>();
    ChannelPair pair;
    pair.coordinator_end = std::make_unique<InprocChannel>(to_worker, to_coordinator);
    pair.worker_end = std::make_unique<InprocChannel>(to_coordinator, to_worker);
    return pair;
}

ChannelPair make_stream_channel() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
        throw std::runtime_error("socketpair failed");
    }
    ChannelPair pair;
    pair.coordinator_end = std::make_unique<StreamChannel>(fds[0]);
    pair.worker_end = std::make_unique<StreamChannel>(fds[1]);
    return pair;
}

// ---------------------------------------------------------------------------
// Message encoding
// ---------------------------------------------------------------------------

namespace {

void put_rect(ByteWriter& w, const CellRect& r) {
    w.i32(r.i0);
    w.i32(r.j0);
    w.i32(r.i1);
    w.i32(r.j1);
}

CellRect get_rect(ByteReader& r) {
    CellRect rect;
    rect.i0 = r.i32();
    rect.j0 = r.i32();
    rect.i1 = r.i32();
    rect.j1 = r.i32();
    return rect;
}

void put_carry(ByteWriter& w, const std::map<int32_t, BodyParticleState>& carry) {
    w.u32(uint32_t(carry.size()));
    for (const auto& [body, state] : carry) {
        w.i32(body);
        w.u32(uint32_t(state.loads.size()));
        for (const auto& [tri, load] : state.loads) {
            w.i32(tri);
            w.f64(load.volume);
            w.f64(load.detach_time);
            w.u8(load.detached ? 1 : 0);
            w.f64(load.spawn_carry);
            w.f64(load.released);
        }
        w.u32(uint32_t(state.airborne.size()));
        for (const Particle& p : state.airborne) {
            w.f64(p.position.x);
            w.f64(p.position.y);
            w.f64(p.position.z);
            w.f64(p.velocity.x);
            w.f64(p.velocity.y);
            w.f64(p.velocity.z);
            w.f64(p.volume);
            w.f64(p.birth_time);
        }
    }
}

std::map<int32_t, BodyParticleState> get_carry(ByteReader& r) {
    std::map<int32_t, BodyParticleState> carry;
    const uint32_t nbodies = r.u32();
    for (uint32_t b = 0; b < nbodies; ++b) {
        const int32_t body = r.i32();
        BodyParticleState state;
        const uint32_t nloads = r.u32();
        for (uint32_t k = 0; k < nloads; ++k) {
            const int32_t tri = r.i32();
            TriangleLoad load;
            load.volume = r.f64();
            load.detach_time = r.f64();
            load.detached = r.u8() != 0;
            load.spawn_carry = r.f64();
            load.released = r.f64();
            state.loads.emplace(tri, load);
        }
        const uint32_t nparticles = r.u32();
        state.airborne.resize(nparticles);
        for (uint32_t k = 0; k < nparticles; ++k) {
            Particle& p = state.airborne[k];
            p.position = {r.f64(), r.f64(), r.f64()};
            p.velocity = {r.f64(), r.f64(), r.f64()};
            p.volume = r.f64();
            p.birth_time = r.f64();
        }
        carry.emplace(body, std::move(state));
    }
    return carry;
}

void put_stats(ByteWriter& w, const StepStats& s) {
    w.f64(s.collide_seconds);
    w.f64(s.contour_seconds);
    w.f64(s.displace_seconds);
    w.f64(s.erode_seconds);
    w.f64(s.particle_seconds);
    w.f64(s.displaced_volume);
    w.f64(s.outward_volume);
    w.f64(s.compressed_volume);
    w.f64(s.eroded_volume);
    w.i32(s.erosion_passes);
    w.u64(uint64_t(s.contact_cells));
    w.u64(uint64_t(s.active_cells));
    w.u8(s.contour_saturated ? 1 : 0);
    w.f64(s.spray_pickup_volume);
    w.f64(s.spray_discarded_volume);
    w.f64(s.spray_created_volume);
    w.f64(s.spray_deposited_volume);
    w.f64(s.spray_leaked_volume);
    w.i32(s.spray_created);
    w.i32(s.spray_airborne);
}

StepStats get_stats(ByteReader& r) {
    StepStats s;
    s.collide_seconds = r.f64();
    s.contour_seconds = r.f64();
    s.displace_seconds = r.f64();
    s.erode_seconds = r.f64();
    s.particle_seconds = r.f64();
    s.displaced_volume = r.f64();
    s.outward_volume = r.f64();
    s.compressed_volume = r.f64();
    s.eroded_volume = r.f64();
    s.erosion_passes = r.i32();
    s.contact_cells = int64_t(r.u64());
    s.active_cells = int64_t(r.u64());
    s.contour_saturated = r.u8() != 0;
    s.spray_pickup_volume = r.f64();
    s.spray_discarded_volume = r.f64();
    s.spray_created_volume = r.f64();
    s.spray_deposited_volume = r.f64();
    s.spray_leaked_volume = r.f64();
    s.spray_created = r.i32();
    s.spray_airborne = r.i32();
    return s;
}

ByteWriter frame_header(MsgType type) {
    ByteWriter w;
    w.u8(kProtocolVersion);
    w.u8(uint8_t(type));
    return w;
}

void check_header(ByteReader& r, MsgType expected) {
    const uint8_t version = r.u8();
    if (version != kProtocolVersion) throw std::runtime_error("protocol version mismatch");
    const auto type = MsgType(r.u8());
    if (type != expected) throw std::runtime_error("unexpected message type");
}

} // namespace

std::vector<uint8_t> encode_request(int32_t character) {
    ByteWriter w = frame_header(MsgType::Request);
    w.i32(character);
    return w.take();
}

int32_t decode_request(const std::vector<uint8_t>& frame) {
    ByteReader r(frame);
    check_header(r, MsgType::Request);
    return r.i32();
}

std::vector<uint8_t> encode_assign(const AssignPayload& p) {
    ByteWriter w = frame_header(MsgType::Assign);
    w.i32(p.step);
    w.u32(uint32_t(p.characters.size()));
    for (int32_t c : p.characters) w.i32(c);
    put_rect(w, p.region);
    w.u32(uint32_t(p.cells.size()));
    for (const auto& [cell, height] : p.cells) {
        w.i32(cell.i);
        w.i32(cell.j);
        w.f64(height);
    }
    put_carry(w, p.carry);
    return w.take();
}

AssignPayload decode_assign(const std::vector<uint8_t>& frame) {
    ByteReader r(frame);
    check_header(r, MsgType::Assign);
    AssignPayload p;
    p.step = r.i32();
    const uint32_t nchars = r.u32();
    p.characters.resize(nchars);
    for (uint32_t k = 0; k < nchars; ++k) p.characters[k] = r.i32();
    p.region = get_rect(r);
    const uint32_t ncells = r.u32();
    p.cells.resize(ncells);
    for (uint32_t k = 0; k < ncells; ++k) {
        p.cells[k].first.i = r.i32();
        p.cells[k].first.j = r.i32();
        p.cells[k].second = r.f64();
    }
    p.carry = get_carry(r);
    return p;
}

std::vector<uint8_t> encode_commit(const CommitPayload& p) {
    ByteWriter w = frame_header(MsgType::Commit);
    w.i32(p.character);
    w.i32(p.step);
    put_rect(w, p.declared_region);
    w.u32(uint32_t(p.records.size()));
    for (const ChangeRecord& rec : p.records) {
        w.i32(rec.cell.i);
        w.i32(rec.cell.j);
        w.f64(rec.old_height);
        w.f64(rec.new_height);
        w.u8(uint8_t(rec.cause));
    }
    put_carry(w, p.carry);
    put_stats(w, p.stats);
    return w.take();
}

CommitPayload decode_commit(const std::vector<uint8_t>& frame) {
    ByteReader r(frame);
    check_header(r, MsgType::Commit);
    CommitPayload p;
    p.character = r.i32();
    p.step = r.i32();
    p.declared_region = get_rect(r);
    const uint32_t nrecords = r.u32();
    p.records.resize(nrecords);
    for (uint32_t k = 0; k < nrecords; ++k) {
        ChangeRecord& rec = p.records[k];
        rec.cell.i = r.i32();
        rec.cell.j = r.i32();
        rec.old_height = r.f64();
        rec.new_height = r.f64();
        rec.cause = ChangeCause(r.u8());
    }
    p.carry = get_carry(r);
    p.stats = get_stats(r);
    return p;
}

std::vector<uint8_t> encode_done() { return frame_header(MsgType::Done).take(); }

std::vector<uint8_t> encode_abort(const std::string& reason) {
    ByteWriter w = frame_header(MsgType::Abort);
    w.u32(uint32_t(reason.size()));
    for (char c : reason) w.u8(uint8_t(c));
    return w.take();
}

std::string decode_abort(const std::vector<uint8_t>& frame) {
    ByteReader r(frame);
    check_header(r, MsgType::Abort);
    const uint32_t n = r.u32();
    std::string reason;
    reason.reserve(n);
    for (uint32_t k = 0; k < n; ++k) reason.push_back(char(r.u8()));
    return reason;
}

MsgType peek_type(const std::vector<uint8_t>& frame) {
    if (frame.size() < 2) throw std::runtime_error("empty message frame");
    return MsgType(frame[1]);
}

// ---------------------------------------------------------------------------
// Coordinator
// ---------------------------------------------------------------------------

Coordinator::Coordinator(WorldConfig config, std::vector<CharacterSpec> characters)
    : config_(std::move(config)), characters_(std::move(characters)) {
    grid_ = create_grid(config_.grid, config_.init);
    for (size_t a = 0; a < characters_.size(); ++a) {
        if (int32_t(a) != characters_[a].character_id) {
            throw std::invalid_argument("character ids must be dense and ascending from 0");
        }
        for (size_t b = a + 1; b < characters_.size(); ++b) {
            if (characters_[a].character_id == characters_[b].character_id) {
                throw std::invalid_argument("duplicate character id");
            }
        }
    }
    if (characters_.empty()) throw std::invalid_argument("at least one character required");
    schedules_.reserve(characters_.size());
    for (const CharacterSpec& c : characters_) {
        schedules_.push_back(RegionSchedule::build(config_, c));
    }
    progress_.assign(characters_.size(), -1);
}

int32_t Coordinator::progress(int32_t character) const {
    std::lock_guard<std::mutex> lk(mutex_);
    return progress_[size_t(character)];
}

bool Coordinator::all_finished() const {
    std::lock_guard<std::mutex> lk(mutex_);
    for (const int32_t p : progress_) {
        if (p < config_.steps - 1) return false;
    }
    return true;
}

void Coordinator::set_frame_steps(std::vector<int32_t> frame_steps,
                                  std::function<void(int32_t)> on_frame) {
    std::unique_lock<std::mutex> lk(mutex_);
    frame_steps_ = std::move(frame_steps);
    std::sort(frame_steps_.begin(), frame_steps_.end());
    frame_steps_.erase(std::unique(frame_steps_.begin(), frame_steps_.end()), frame_steps_.end());
    on_frame_ = std::move(on_frame);
    next_frame_ = 0;
    run_due_frames(lk); // a zero-step run can already be due
}

void Coordinator::set_trace(std::ostream* trace) {
    std::lock_guard<std::mutex> lk(mutex_);
    trace_ = trace;
}

void Coordinator::trace_locked(const std::string& line) {
    if (trace_) (*trace_) << trace_seq_++ << ' ' << line << '\n';
}

std::vector<int32_t> Coordinator::group_members(int32_t character, int32_t step) const {
    std::lock_guard<std::mutex> lk(mutex_);
    return group_members_locked(character, step);
}

std::vector<int32_t> Coordinator::group_members_locked(int32_t character, int32_t step) const {
    // Connected components of pairwise envelope overlap at this step.
    const size_t n = characters_.size();
    std::vector<uint8_t> in_group(n, 0);
    std::vector<int32_t> queue{character};
    in_group[size_t(character)] = 1;
    while (!queue.empty()) {
        const int32_t c = queue.back();
        queue.pop_back();
        const CellRect rc = schedules_[size_t(c)].envelope(step);
        for (size_t o = 0; o < n; ++o) {
            if (in_group[o]) continue;
            if (rc.intersects(schedules_[o].envelope(step))) {
                in_group[o] = 1;
                queue.push_back(int32_t(o));
            }
        }
    }
    std::vector<int32_t> members;
    for (size_t o = 0; o < n; ++o) {
        if (in_group[o]) members.push_back(int32_t(o));
    }
    return members;
}

CellRect Coordinator::group_region(const std::vector<int32_t>& members, int32_t step) const {
    std::lock_guard<std::mutex> lk(mutex_);
    return group_region_locked(members, step);
}

CellRect Coordinator::group_region_locked(const std::vector<int32_t>& members,
                                          int32_t step) const {
    CellRect region = CellRect::empty();
    for (const int32_t m : members) {
        region = region.union_with(schedules_[size_t(m)].envelope(step));
    }
    return region;
}

int32_t Coordinator::dependency_step_locked(int32_t other, const CellRect& region,
                                            int32_t step) const {
    for (int32_t s = step - 1; s >= 0; --s) {
        if (schedules_[size_t(other)].envelope(s).intersects(region)) return s;
    }
    return -1;
}

Coordinator::RequestOutcome Coordinator::try_request(int32_t character, AssignPayload& out) {
    std::lock_guard<std::mutex> lk(mutex_);
    return try_request_locked(character, out);
}

Coordinator::RequestOutcome Coordinator::try_request_locked(int32_t character,
                                                            AssignPayload& out) {
    if (character < 0 || character >= character_count()) {
        throw std::invalid_argument("unknown character");
    }
    const int32_t step = progress_[size_t(character)] + 1;
    if (step >= config_.steps) return RequestOutcome::Finished;

    const std::vector<int32_t> members = group_members_locked(character, step);
    if (members.front() != character) return RequestOutcome::Blocked; // merged under another worker

    // A merged step runs the whole group jointly, so every member must have
    // caught up first; members progress in lockstep through overlapped steps.
    for (const int32_t m : members) {
        if (progress_[size_t(m)] != step - 1) return RequestOutcome::Blocked;
    }

    // Frame barrier: nothing runs past a pending export step.
    if (next_frame_ < frame_steps_.size() && step > frame_steps_[next_frame_]) {
        return RequestOutcome::Blocked;
    }

    const CellRect region = group_region_locked(members, step);
    for (int32_t other = 0; other < character_count(); ++other) {
        if (std::find(members.begin(), members.end(), other) != members.end()) continue;
        const int32_t dep = dependency_step_locked(other, region, step);
        if (dep >= 0 && progress_[size_t(other)] < dep) return RequestOutcome::Blocked;
    }

    out.step = step;
    out.characters = members;
    out.region = region;
    out.cells.clear();
    if (!region.is_empty()) {
        // Assemble the materialized cells inside the region, row-major. Scan
        // whichever side is smaller, but always emit sorted output so the
        // frame bytes do not depend on hash iteration order.
        if (int64_t(grid_.cells().size()) < region.count()) {
            for (const auto& [cell, col] : grid_.cells()) {
                if (region.contains(cell)) out.cells.push_back({cell, col.height});
            }
            std::sort(out.cells.begin(), out.cells.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
        } else {
            for (int32_t i = region.i0; i <= region.i1; ++i) {
                for (int32_t j = region.j0; j <= region.j1; ++j) {
                    const Column* col = grid_.find({i, j});
                    if (col) out.cells.push_back({{i, j}, col->height});
                }
            }
        }
    }
    out.carry.clear();
    for (const int32_t m : members) {
        for (const BodySpec& body : characters_[size_t(m)].bodies) {
            const auto it = carry_.find(body.body_id);
            out.carry[body.body_id] = it != carry_.end() ? it->second : BodyParticleState{};
        }
    }

    std::ostringstream os;
    os << "assign char=" << character << " step=" << step << " members=" << members.size()
       << " cells=" << out.cells.size();
    trace_locked(os.str());
    return RequestOutcome::Ready;
}

void Coordinator::commit(const CommitPayload& payload) {
    std::unique_lock<std::mutex> lk(mutex_);
    commit_locked(payload);
    run_due_frames(lk);
}

void Coordinator::commit_locked(const CommitPayload& payload) {
    const int32_t character = payload.character;
    const int32_t step = payload.step;
    if (character < 0 || character >= character_count()) {
        throw std::runtime_error("commit from unknown character");
    }
    const std::vector<int32_t> members = group_members_locked(character, step);
    if (members.front() != character) {
        throw std::runtime_error("commit from a non-owner of the merged group");
    }
    for (const int32_t m : members) {
        if (progress_[size_t(m)] != step - 1) {
            throw std::runtime_error("out-of-order commit for step " + std::to_string(step));
        }
    }
    const CellRect region = group_region_locked(members, step);
    if (!(payload.declared_region == region)) {
        throw std::runtime_error("commit declares a region differing from the schedule");
    }
    for (const ChangeRecord& rec : payload.records) {
        if (!region.contains(rec.cell)) {
            throw std::runtime_error("change record outside the granted region");
        }
    }
    for (const auto& [body, state] : payload.carry) {
        bool known = false;
        for (const int32_t m : members) {
            for (const BodySpec& spec : characters_[size_t(m)].bodies) {
                known = known || spec.body_id == body;
            }
        }
        if (!known) throw std::runtime_error("carry state for a body outside the group");
    }

    for (const ChangeRecord& rec : payload.records) {
        Column& col = grid_.materialize(rec.cell);
        if (col.height != rec.old_height) {
            throw std::runtime_error("change record does not match the authoritative height");
        }
        col.height = rec.new_height;
    }
    for (const auto& [body, state] : payload.carry) {
        carry_[body] = state;
    }
    for (const int32_t m : members) progress_[size_t(m)] = step;
    totals_.accumulate(payload.stats);
    active_by_step_[step] += payload.stats.active_cells;

    std::ostringstream os;
    os << "commit char=" << character << " step=" << step << " records=" << payload.records.size();
    trace_locked(os.str());
}

void Coordinator::run_due_frames(std::unique_lock<std::mutex>& lk) {
    // Callbacks run unlocked so they may query the coordinator. The barrier
    // in try_request keeps every worker parked at the frame step until
    // next_frame_ advances, so the grid is quiescent while they run.
    while (next_frame_ < frame_steps_.size()) {
        const int32_t frame_step = frame_steps_[next_frame_];
        int32_t min_progress = config_.steps - 1;
        for (const int32_t p : progress_) min_progress = std::min(min_progress, p);
        if (min_progress < frame_step && config_.steps > 0) break;
        const auto callback = on_frame_;
        lk.unlock();
        if (callback) callback(frame_step);
        lk.lock();
        ++next_frame_;
    }
}

StepStats Coordinator::total_stats() const {
    std::lock_guard<std::mutex> lk(mutex_);
    return totals_;
}

int64_t Coordinator::active_cells_high_water() const {
    std::lock_guard<std::mutex> lk(mutex_);
    int64_t high = 0;
    for (const auto& [step, cells] : active_by_step_) high = std::max(high, cells);
    return high;
}

std::map<int32_t, BodyParticleState> Coordinator::carry_snapshot() const {
    std::lock_guard<std::mutex> lk(mutex_);
    return carry_;
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

namespace {

CommitPayload compute_assignment(const WorldConfig& config,
                                 const std::vector<CharacterSpec>& characters,
                                 const AssignPayload& assignment) {
    SparseColumnGrid scratch = create_grid(config.grid, config.init);
    for (const auto& [cell, height] : assignment.cells) {
        scratch.materialize(cell).height = height;
    }
    std::vector<const CharacterSpec*> group;
    group.reserve(assignment.characters.size());
    for (const int32_t c : assignment.characters) {
        group.push_back(&characters[size_t(c)]);
    }
    StepResult result = step_group(config, group, assignment.step, scratch, assignment.carry);
    CommitPayload payload;
    payload.character = assignment.characters.front();
    payload.step = assignment.step;
    payload.declared_region = assignment.region;
    payload.records = std::move(result.records);
    payload.carry = std::move(result.carry);
    payload.stats = result.stats;
    return payload;
}

struct InboxEntry {
    int32_t worker = -1;
    std::vector<uint8_t> frame;
};

struct Inbox {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<InboxEntry> entries;

    void push(InboxEntry e) {
        {
            std::lock_guard<std::mutex> lk(mutex);
            entries.push_back(std::move(e));
        }
        cv.notify_one();
    }
    InboxEntry pop() {
        std::unique_lock<std::mutex> lk(mutex);
        cv.wait(lk, [&] { return !entries.empty(); });
        InboxEntry e = std::move(entries.front());
        entries.pop_front();
        return e;
    }
};

void worker_main(Channel& channel, const WorldConfig& config,
                 const std::vector<CharacterSpec>& characters, int32_t character,
                 uint64_t chaos_seed, std::string& error_out) {
    struct SendCloser {
        Channel& ch;
        ~SendCloser() { ch.close_send(); }
    } closer{channel};
    try {
        RandomStream chaos(mix_key({chaos_seed, 0x63686f73ULL, uint64_t(uint32_t(character))}));
        const bool inject = chaos_seed != 0;
        while (true) {
            if (inject) {
                std::this_thread::sleep_for(
                    std::chrono::microseconds(int64_t(chaos.uniform(0.0, 2000.0))));
            }
            channel.send(encode_request(character));
            const std::vector<uint8_t> frame = channel.recv();
            if (frame.empty()) return; // coordinator went away
            switch (peek_type(frame)) {
                case MsgType::Assign: {
                    const AssignPayload assignment = decode_assign(frame);
                    CommitPayload payload = compute_assignment(config, characters, assignment);
                    if (inject) {
                        std::this_thread::sleep_for(
                            std::chrono::microseconds(int64_t(chaos.uniform(0.0, 2000.0))));
                    }
                    channel.send(encode_commit(payload));
                    break;
                }
                case MsgType::Done:
                    return;
                case MsgType::Abort:
                    throw std::runtime_error("aborted by coordinator: " + decode_abort(frame));
                default:
                    throw std::runtime_error("unexpected message type in worker");
            }
        }
    } catch (const std::exception& e) {
        error_out = e.what();
    }
}

} // namespace

void run_serial(Coordinator& coordinator) {
    const int32_t n = coordinator.character_count();
    while (!coordinator.all_finished()) {
        bool progressed = false;
        for (int32_t c = 0; c < n; ++c) {
            AssignPayload assignment;
            const auto outcome = coordinator.try_request(c, assignment);
            if (outcome != Coordinator::RequestOutcome::Ready) continue;
            coordinator.commit(
                compute_assignment(coordinator.config(), coordinator.characters(), assignment));
            progressed = true;
        }
        if (!progressed) {
            throw std::logic_error("scheduler made no progress; dependency rule violated");
        }
    }
}

void run_parallel(Coordinator& coordinator, const ExecutionOptions& options) {
    const int32_t n = coordinator.character_count();
    std::vector<ChannelPair> channels;
    channels.reserve(size_t(n));
    for (int32_t c = 0; c < n; ++c) {
        channels.push_back(options.stream_transport ? make_stream_channel()
                                                    : make_inproc_channel());
    }

    Inbox inbox;
    std::vector<std::string> worker_errors(static_cast<size_t>(n));
    std::vector<std::thread> workers, readers;
    workers.reserve(size_t(n));
    readers.reserve(size_t(n));
    for (int32_t c = 0; c < n; ++c) {
        workers.emplace_back([&, c] {
            worker_main(*channels[size_t(c)].worker_end, coordinator.config(),
                        coordinator.characters(), c, options.chaos_seed,
                        worker_errors[size_t(c)]);
        });
        readers.emplace_back([&, c] {
            while (true) {
                std::vector<uint8_t> frame = channels[size_t(c)].coordinator_end->recv();
                const bool closing = frame.empty();
                inbox.push({c, std::move(frame)});
                if (closing) return;
            }
        });
    }

    std::string failure;
    int32_t closed = 0;
    std::vector<uint8_t> pending(size_t(n), 0);

    auto service_pending = [&] {
        for (int32_t c = 0; c < n; ++c) {
            if (!pending[size_t(c)]) continue;
            AssignPayload assignment;
            switch (coordinator.try_request(c, assignment)) {
                case Coordinator::RequestOutcome::Ready:
                    pending[size_t(c)] = 0;
                    channels[size_t(c)].coordinator_end->send(encode_assign(assignment));
                    break;
                case Coordinator::RequestOutcome::Finished:
                    pending[size_t(c)] = 0;
                    channels[size_t(c)].coordinator_end->send(encode_done());
                    break;
                case Coordinator::RequestOutcome::Blocked:
                    break;
            }
        }
    };

    // Workers half-close their channels on exit; the loop runs until every
    // reader has reported that close.
    while (closed < n) {
        InboxEntry entry = inbox.pop();
        if (entry.frame.empty()) {
            ++closed;
            continue;
        }
        try {
            switch (peek_type(entry.frame)) {
                case MsgType::Request:
                    pending[size_t(decode_request(entry.frame))] = 1;
                    break;
                case MsgType::Commit:
                    coordinator.commit(decode_commit(entry.frame));
                    break;
                default:
                    throw std::runtime_error("unexpected message type in coordinator");
            }
            service_pending();
        } catch (const std::exception& e) {
            if (failure.empty()) failure = e.what();
            for (int32_t c = 0; c < n; ++c) {
                try {
                    channels[size_t(c)].coordinator_end->send(encode_abort(failure));
                } catch (const std::exception&) {
                    // worker already gone
                }
            }
        }
    }

    for (auto& t : workers) t.join();
    for (auto& t : readers) t.join();

    if (failure.empty()) {
        for (const std::string& e : worker_errors) {
            if (!e.empty() && e.rfind("aborted by coordinator", 0) != 0) {
                failure = e;
                break;
            }
        }
    }
    if (!failure.empty()) throw std::runtime_error(failure);
}

void run_scheduled(Coordinator& coordinator, const ExecutionOptions& options) {
    if (options.workers <= 0) {
        run_serial(coordinator);
    } else {
        run_parallel(coordinator, options);
    }
}

} // namespace regolith
