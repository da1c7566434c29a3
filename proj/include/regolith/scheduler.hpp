#pragma once

#include "regolith/engine.hpp"

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace regolith {

// ---------------------------------------------------------------------------
// Wire encoding: length-prefixed frames of [version byte][type byte][payload]
// with little-endian integers and bit-exact doubles, shared by the in-process
// and stream transports so both produce identical message traces.
// ---------------------------------------------------------------------------

constexpr uint8_t kProtocolVersion = 1;

enum class MsgType : uint8_t {
    Request = 1, // worker -> coordinator: ready for its next step
    Assign = 2,  // coordinator -> worker: step, group, region cells, carry state
    Commit = 3,  // worker -> coordinator: change records, carry state, stats
    Done = 4,    // coordinator -> worker: no more steps for this character
    Abort = 5,   // coordinator -> worker: protocol violation, shut down
};

class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u32(uint32_t v) {
        for (int k = 0; k < 4; ++k) buf_.push_back(uint8_t(v >> (8 * k)));
    }
    void i32(int32_t v) { u32(uint32_t(v)); }
    void u64(uint64_t v) {
        for (int k = 0; k < 8; ++k) buf_.push_back(uint8_t(v >> (8 * k)));
    }
    void f64(double v) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        __builtin_memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }
    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    std::vector<uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<uint8_t>& buf) : buf_(buf) {}

    uint8_t u8();
    uint32_t u32();
    int32_t i32() { return int32_t(u32()); }
    uint64_t u64();
    double f64();
    bool done() const { return pos_ == buf_.size(); }

private:
    const std::vector<uint8_t>& buf_;
    size_t pos_ = 0;
};

// Blocking duplex byte-frame channel between a worker and the coordinator.
// recv() returns an empty frame once the peer has closed its sending side.
class Channel {
public:
    virtual ~Channel() = default;
    virtual void send(std::vector<uint8_t> frame) = 0;
    virtual std::vector<uint8_t> recv() = 0;
    virtual void close_send() = 0;
};

struct ChannelPair {
    std::unique_ptr<Channel> coordinator_end;
    std::unique_ptr<Channel> worker_end;
};

ChannelPair make_inproc_channel();
// Same frames over a local stream connection (socketpair).
ChannelPair make_stream_channel();

// ---------------------------------------------------------------------------
// Message payloads
// ---------------------------------------------------------------------------

struct AssignPayload {
    int32_t step = 0;
    std::vector<int32_t> characters; // ascending; first member owns the group
    CellRect region;                 // granted cell region (union of envelopes)
    std::vector<std::pair<CellIndex, double>> cells; // materialized heights in region
    std::map<int32_t, BodyParticleState> carry;      // per body of the group
};

struct CommitPayload {
    int32_t character = 0; // group owner
    int32_t step = 0;
    CellRect declared_region; // must cover every record; checked against the schedule
    std::vector<ChangeRecord> records;
    std::map<int32_t, BodyParticleState> carry;
    StepStats stats;
};

std::vector<uint8_t> encode_request(int32_t character);
std::vector<uint8_t> encode_assign(const AssignPayload& p);
std::vector<uint8_t> encode_commit(const CommitPayload& p);
std::vector<uint8_t> encode_done();
std::vector<uint8_t> encode_abort(const std::string& reason);

MsgType peek_type(const std::vector<uint8_t>& frame);
int32_t decode_request(const std::vector<uint8_t>& frame);
AssignPayload decode_assign(const std::vector<uint8_t>& frame);
CommitPayload decode_commit(const std::vector<uint8_t>& frame);
std::string decode_abort(const std::vector<uint8_t>& frame);

// ---------------------------------------------------------------------------
// Coordinator: owns the authoritative grid and the per-character progress.
// Grant and merge decisions derive from the trajectory-based region
// schedules, so identical scenarios produce identical grants under any
// worker timing. All methods are thread-safe.
// ---------------------------------------------------------------------------

class Coordinator {
public:
    Coordinator(WorldConfig config, std::vector<CharacterSpec> characters);

    const WorldConfig& config() const { return config_; }
    const std::vector<CharacterSpec>& characters() const { return characters_; }
    int32_t character_count() const { return int32_t(characters_.size()); }

    enum class RequestOutcome { Ready, Blocked, Finished };

    // Next assignment for a character's worker, non-blocking. Blocked means
    // a dependency, merge, or frame barrier is still outstanding.
    RequestOutcome try_request(int32_t character, AssignPayload& out);

    // Applies a committed step; throws on protocol violations (wrong step,
    // records outside the declared region, region not matching the schedule).
    void commit(const CommitPayload& payload);

    // Consistent snapshot access once workers are quiet (or from the frame
    // callback, which runs under the coordinator lock).
    const SparseColumnGrid& grid() const { return grid_; }
    SparseColumnGrid& grid_mutable() { return grid_; }

    int32_t progress(int32_t character) const;
    bool all_finished() const;

    // Frame barrier: workers never run past the next pending frame step; the
    // callback fires once every character has committed through it.
    void set_frame_steps(std::vector<int32_t> frame_steps,
                         std::function<void(int32_t)> on_frame);

    void set_trace(std::ostream* trace);

    // Grouping by closed-rect envelope overlap at one step (connected
    // components); the lowest character id owns the group.
    std::vector<int32_t> group_members(int32_t character, int32_t step) const;
    CellRect group_region(const std::vector<int32_t>& members, int32_t step) const;

    const RegionSchedule& schedule(int32_t character) const {
        return schedules_[size_t(character)];
    }

    StepStats total_stats() const;
    int64_t active_cells_high_water() const;
    std::map<int32_t, BodyParticleState> carry_snapshot() const;

private:
    RequestOutcome try_request_locked(int32_t character, AssignPayload& out);
    void commit_locked(const CommitPayload& payload);
    void run_due_frames(std::unique_lock<std::mutex>& lk);
    int32_t dependency_step_locked(int32_t other, const CellRect& region, int32_t step) const;
    std::vector<int32_t> group_members_locked(int32_t character, int32_t step) const;
    CellRect group_region_locked(const std::vector<int32_t>& members, int32_t step) const;
    void trace_locked(const std::string& line);

    WorldConfig config_;
    std::vector<CharacterSpec> characters_;
    std::vector<RegionSchedule> schedules_;
    SparseColumnGrid grid_;
    std::vector<int32_t> progress_; // last committed step per character, -1 initially
    std::map<int32_t, BodyParticleState> carry_; // per body id
    std::vector<int32_t> frame_steps_;
    size_t next_frame_ = 0;
    std::function<void(int32_t)> on_frame_;
    StepStats totals_;
    std::map<int32_t, int64_t> active_by_step_;
    std::ostream* trace_ = nullptr;
    uint64_t trace_seq_ = 0;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Execution drivers
// ---------------------------------------------------------------------------

struct ExecutionOptions {
    int32_t workers = 0; // 0 = serial in-process; otherwise one worker per character
    bool stream_transport = false;
    uint64_t chaos_seed = 0; // > 0 injects random worker delays (schedule stress)
};

// Serial driver: single thread, canonical character order, same coordinator
// state machine and step function as the parallel driver.
void run_serial(Coordinator& coordinator);

// Parallel driver: one worker thread per character connected over channels.
void run_parallel(Coordinator& coordinator, const ExecutionOptions& options);

void run_scheduled(Coordinator& coordinator, const ExecutionOptions& options);

} // namespace regolith
