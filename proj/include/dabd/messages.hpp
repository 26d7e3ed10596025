#pragma once

#include "dabd/types.hpp"

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace dabd {

// Controller/worker and worker/worker protocol. Every in-frame message
// carries (frame, attempt, k) counters; receivers reject stale values.
// Payload encoding: version-tagged, per-field u8 tags, little-endian
// integers and IEEE-754 doubles; body lists are length-prefixed and sorted
// by body id.

constexpr uint16_t kProtocolVersion = 1;

struct Hello {
    int32_t worker = -1;
    uint16_t listen_port = 0; // worker's own listener (tcp bootstrap)
};

struct PeerTable {
    std::vector<uint16_t> ports; // indexed by worker id, loopback host
};

struct FrameBegin {
    int64_t frame = 0;
    int32_t attempt = 0;
    double h = 0.0;
    double w = 0.0;        // overlap width for this frame
    uint8_t flags = 0;     // bit 0: attach candidate states to reports
};

struct BalanceUpdate {
    int64_t frame = 0;
    int32_t interface_index = 0;
    double dp = 0.0;
};

struct FetchSharedRequest {
    int64_t frame = 0;
    int32_t attempt = 0;
    int32_t from_worker = -1;
    int32_t to_worker = -1;
};

struct FetchSharedBody {
    int32_t id = -1;
    int32_t mesh_id = -1;
    Vec6 q = Vec6::Zero();
    Vec6 q_dot = Vec6::Zero();
    Mat6 mass_matrix = Mat6::Zero();
};

struct FetchSharedReply {
    int64_t frame = 0;
    int32_t attempt = 0;
    int32_t from_worker = -1;
    int32_t to_worker = -1;
    std::vector<FetchSharedBody> bodies; // sorted by id
};

struct IterSharedBody {
    int32_t id = -1;
    Vec6 q = Vec6::Zero();
    double rho = 0.0;
    Vec6 u = Vec6::Zero();
};

struct IterShared {
    int64_t frame = 0;
    int32_t attempt = 0;
    int32_t k = 0;
    int32_t from_worker = -1;
    int32_t to_worker = -1;
    std::vector<IterSharedBody> bodies; // sorted by id
};

struct BodyCandidate {
    int32_t id = -1;
    Vec6 q = Vec6::Zero();
};

struct IterationReport {
    int64_t frame = 0;
    int32_t attempt = 0;
    int32_t k = 0;
    int32_t worker = -1;
    double dq_inf = 0.0;
    double r_local = 0.0;
    double s_local = 0.0;
    double toi = 1.0;
    int32_t newton_iters = 0;
    int32_t active_contacts = 0;
    int32_t candidate_pairs = 0;
    double compute_time = 0.0;
    double sync_time = 0.0;
    // Candidate global state (internal q / shared z) of owned bodies, sent
    // only when per-iteration error tracking is enabled.
    std::vector<BodyCandidate> candidate_state;
};

enum class Signal : uint8_t {
    Continue = 0,
    End = 1,
    AbortRetry = 2, // restart the frame at h_new
    Fail = 3,       // halving budget exhausted: abort the run
};

struct ControlSignal {
    int64_t frame = 0;
    int32_t attempt = 0;
    int32_t k = 0;
    Signal sigma = Signal::Continue;
    double h_new = 0.0; // set for AbortRetry
};

struct CommittedBody {
    int32_t id = -1;
    Vec6 q = Vec6::Zero();
    Vec6 q_dot = Vec6::Zero();
};

struct FrameCommit {
    int64_t frame = 0;
    int32_t attempt = 0;
    int32_t worker = -1;
    std::vector<CommittedBody> bodies; // owned bodies, sorted by id
    double compute_time = 0.0;
    double sync_time = 0.0;
    double solve_time = 0.0;     // inner Newton solves
    double collision_time = 0.0; // merge-gate CCD and contact bookkeeping
    int32_t newton_iters_total = 0;
    int32_t admm_iterations = 0;
    int32_t local_bodies = 0; // dynamic bodies solved on this worker
};

struct Shutdown {};

using ProtocolMessage =
    std::variant<Hello, PeerTable, FrameBegin, BalanceUpdate, FetchSharedRequest,
                 FetchSharedReply, IterShared, IterationReport, ControlSignal,
                 FrameCommit, Shutdown>;

// [u16 version][u16 msg_type][tagged payload]; numeric payloads round-trip
// bit-exactly. The u32 big-endian length prefix is added by the transport
// framing layer.
std::vector<uint8_t> encode_message(const ProtocolMessage& message);
ProtocolMessage decode_message(std::span<const uint8_t> bytes);

const char* message_name(const ProtocolMessage& message);

} // namespace dabd
