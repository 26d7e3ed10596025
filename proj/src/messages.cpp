#include "dabd/messages.hpp"

#include <cstring>

namespace dabd {

namespace {

enum class MsgType : uint16_t {
    Hello = 1,
    PeerTable = 2,
    FrameBegin = 3,
    BalanceUpdate = 4,
    FetchSharedRequest = 5,
    FetchSharedReply = 6,
    IterShared = 7,
    IterationReport = 8,
    ControlSignal = 9,
    FrameCommit = 10,
    Shutdown = 11,
};

class Writer {
  public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) {
        buf_.push_back(static_cast<uint8_t>(v));
        buf_.push_back(static_cast<uint8_t>(v >> 8));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void vec6(const Vec6& v) {
        for (int i = 0; i < 6; ++i) f64(v[i]);
    }
    void mat6(const Mat6& m) {
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) f64(m(r, c));
    }
    std::vector<uint8_t> take() { return std::move(buf_); }

  private:
    std::vector<uint8_t> buf_;
};

class Reader {
  public:
    explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

    uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(bytes_[pos_]) |
                     static_cast<uint16_t>(bytes_[pos_ + 1]) << 8;
        pos_ += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    int32_t i32() { return static_cast<int32_t>(u32()); }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    double f64() {
        const uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    Vec6 vec6() {
        Vec6 v;
        for (int i = 0; i < 6; ++i) v[i] = f64();
        return v;
    }
    Mat6 mat6() {
        Mat6 m;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) m(r, c) = f64();
        return m;
    }
    bool done() const { return pos_ == bytes_.size(); }

  private:
    void need(size_t n) const {
        if (pos_ + n > bytes_.size()) throw Error("decode: truncated message");
    }
    std::span<const uint8_t> bytes_;
    size_t pos_ = 0;
};

// Per-field tags keep the payload self-describing.
void tag(Writer& w, uint8_t t) { w.u8(t); }
void expect_tag(Reader& r, uint8_t t) {
    const uint8_t got = r.u8();
    if (got != t) throw Error("decode: unexpected field tag");
}

void put_counters(Writer& w, int64_t frame, int32_t attempt, int32_t k) {
    tag(w, 0x01);
    w.i64(frame);
    w.i32(attempt);
    w.i32(k);
}
void get_counters(Reader& r, int64_t& frame, int32_t& attempt, int32_t& k) {
    expect_tag(r, 0x01);
    frame = r.i64();
    attempt = r.i32();
    k = r.i32();
}

} // namespace

std::vector<uint8_t> encode_message(const ProtocolMessage& message) {
    Writer w;
    w.u16(kProtocolVersion);

    if (const auto* m = std::get_if<Hello>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::Hello));
        tag(w, 0x02);
        w.i32(m->worker);
        w.u16(m->listen_port);
    } else if (const auto* m = std::get_if<PeerTable>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::PeerTable));
        tag(w, 0x02);
        w.u32(static_cast<uint32_t>(m->ports.size()));
        for (uint16_t p : m->ports) w.u16(p);
    } else if (const auto* m = std::get_if<FrameBegin>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::FrameBegin));
        put_counters(w, m->frame, m->attempt, 0);
        tag(w, 0x02);
        w.f64(m->h);
        w.f64(m->w);
        w.u8(m->flags);
    } else if (const auto* m = std::get_if<BalanceUpdate>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::BalanceUpdate));
        put_counters(w, m->frame, 0, 0);
        tag(w, 0x02);
        w.i32(m->interface_index);
        w.f64(m->dp);
    } else if (const auto* m = std::get_if<FetchSharedRequest>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::FetchSharedRequest));
        put_counters(w, m->frame, m->attempt, 0);
        tag(w, 0x02);
        w.i32(m->from_worker);
        w.i32(m->to_worker);
    } else if (const auto* m = std::get_if<FetchSharedReply>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::FetchSharedReply));
        put_counters(w, m->frame, m->attempt, 0);
        tag(w, 0x02);
        w.i32(m->from_worker);
        w.i32(m->to_worker);
        tag(w, 0x03);
        w.u32(static_cast<uint32_t>(m->bodies.size()));
        for (const FetchSharedBody& b : m->bodies) {
            w.i32(b.id);
            w.i32(b.mesh_id);
            w.vec6(b.q);
            w.vec6(b.q_dot);
            w.mat6(b.mass_matrix);
        }
    } else if (const auto* m = std::get_if<IterShared>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::IterShared));
        put_counters(w, m->frame, m->attempt, m->k);
        tag(w, 0x02);
        w.i32(m->from_worker);
        w.i32(m->to_worker);
        tag(w, 0x03);
        w.u32(static_cast<uint32_t>(m->bodies.size()));
        for (const IterSharedBody& b : m->bodies) {
            w.i32(b.id);
            w.vec6(b.q);
            w.f64(b.rho);
            w.vec6(b.u);
        }
    } else if (const auto* m = std::get_if<IterationReport>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::IterationReport));
        put_counters(w, m->frame, m->attempt, m->k);
        tag(w, 0x02);
        w.i32(m->worker);
        w.f64(m->dq_inf);
        w.f64(m->r_local);
        w.f64(m->s_local);
        w.f64(m->toi);
        w.i32(m->newton_iters);
        w.i32(m->active_contacts);
        w.i32(m->candidate_pairs);
        w.f64(m->compute_time);
        w.f64(m->sync_time);
        tag(w, 0x03);
        w.u32(static_cast<uint32_t>(m->candidate_state.size()));
        for (const BodyCandidate& b : m->candidate_state) {
            w.i32(b.id);
            w.vec6(b.q);
        }
    } else if (const auto* m = std::get_if<ControlSignal>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::ControlSignal));
        put_counters(w, m->frame, m->attempt, m->k);
        tag(w, 0x02);
        w.u8(static_cast<uint8_t>(m->sigma));
        w.f64(m->h_new);
    } else if (const auto* m = std::get_if<FrameCommit>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::FrameCommit));
        put_counters(w, m->frame, m->attempt, 0);
        tag(w, 0x02);
        w.i32(m->worker);
        w.f64(m->compute_time);
        w.f64(m->sync_time);
        w.f64(m->solve_time);
        w.f64(m->collision_time);
        w.i32(m->newton_iters_total);
        w.i32(m->admm_iterations);
        w.i32(m->local_bodies);
        tag(w, 0x03);
        w.u32(static_cast<uint32_t>(m->bodies.size()));
        for (const CommittedBody& b : m->bodies) {
            w.i32(b.id);
            w.vec6(b.q);
            w.vec6(b.q_dot);
        }
    } else if (std::get_if<Shutdown>(&message)) {
        w.u16(static_cast<uint16_t>(MsgType::Shutdown));
    } else {
        throw Error("encode: unknown message");
    }
    return w.take();
}

ProtocolMessage decode_message(std::span<const uint8_t> bytes) {
    Reader r(bytes);
    const uint16_t version = r.u16();
    if (version != kProtocolVersion) throw Error("decode: protocol version mismatch");
    const auto type = static_cast<MsgType>(r.u16());

    switch (type) {
    case MsgType::Hello: {
        Hello m;
        expect_tag(r, 0x02);
        m.worker = r.i32();
        m.listen_port = r.u16();
        return m;
    }
    case MsgType::PeerTable: {
        PeerTable m;
        expect_tag(r, 0x02);
        const uint32_t n = r.u32();
        m.ports.resize(n);
        for (uint32_t i = 0; i < n; ++i) m.ports[i] = r.u16();
        return m;
    }
    case MsgType::FrameBegin: {
        FrameBegin m;
        int32_t k;
        get_counters(r, m.frame, m.attempt, k);
        expect_tag(r, 0x02);
        m.h = r.f64();
        m.w = r.f64();
        m.flags = r.u8();
        return m;
    }
    case MsgType::BalanceUpdate: {
        BalanceUpdate m;
        int32_t attempt, k;
        get_counters(r, m.frame, attempt, k);
        expect_tag(r, 0x02);
        m.interface_index = r.i32();
        m.dp = r.f64();
        return m;
    }
    case MsgType::FetchSharedRequest: {
        FetchSharedRequest m;
        int32_t k;
        get_counters(r, m.frame, m.attempt, k);
        expect_tag(r, 0x02);
        m.from_worker = r.i32();
        m.to_worker = r.i32();
        return m;
    }
    case MsgType::FetchSharedReply: {
        FetchSharedReply m;
        int32_t k;
        get_counters(r, m.frame, m.attempt, k);
        expect_tag(r, 0x02);
        m.from_worker = r.i32();
        m.to_worker = r.i32();
        expect_tag(r, 0x03);
        const uint32_t n = r.u32();
        m.bodies.resize(n);
        for (uint32_t i = 0; i < n; ++i) {
            m.bodies[i].id = r.i32();
            m.bodies[i].mesh_id = r.i32();
            m.bodies[i].q = r.vec6();
            m.bodies[i].q_dot = r.vec6();
            m.bodies[i].mass_matrix = r.mat6();
        }
        return m;
    }
    case MsgType::IterShared: {
        IterShared m;
        get_counters(r, m.frame, m.attempt, m.k);
        expect_tag(r, 0x02);
        m.from_worker = r.i32();
        m.to_worker = r.i32();
        expect_tag(r, 0x03);
        const uint32_t n = r.u32();
        m.bodies.resize(n);
        for (uint32_t i = 0; i < n; ++i) {
            m.bodies[i].id = r.i32();
            m.bodies[i].q = r.vec6();
            m.bodies[i].rho = r.f64();
            m.bodies[i].u = r.vec6();
        }
        return m;
    }
    case MsgType::IterationReport: {
        IterationReport m;
        get_counters(r, m.frame, m.attempt, m.k);
        expect_tag(r, 0x02);
        m.worker = r.i32();
        m.dq_inf = r.f64();
        m.r_local = r.f64();
        m.s_local = r.f64();
        m.toi = r.f64();
        m.newton_iters = r.i32();
        m.active_contacts = r.i32();
        m.candidate_pairs = r.i32();
        m.compute_time = r.f64();
        m.sync_time = r.f64();
        expect_tag(r, 0x03);
        const uint32_t n = r.u32();
        m.candidate_state.resize(n);
        for (uint32_t i = 0; i < n; ++i) {
            m.candidate_state[i].id = r.i32();
            m.candidate_state[i].q = r.vec6();
        }
        return m;
    }
    case MsgType::ControlSignal: {
        ControlSignal m;
        get_counters(r, m.frame, m.attempt, m.k);
        expect_tag(r, 0x02);
        m.sigma = static_cast<Signal>(r.u8());
        m.h_new = r.f64();
        return m;
    }
    case MsgType::FrameCommit: {
        FrameCommit m;
        int32_t k;
        get_counters(r, m.frame, m.attempt, k);
        expect_tag(r, 0x02);
        m.worker = r.i32();
        m.compute_time = r.f64();
        m.sync_time = r.f64();
        m.solve_time = r.f64();
        m.collision_time = r.f64();
        m.newton_iters_total = r.i32();
        m.admm_iterations = r.i32();
        m.local_bodies = r.i32();
        expect_tag(r, 0x03);
        const uint32_t n = r.u32();
        m.bodies.resize(n);
        for (uint32_t i = 0; i < n; ++i) {
            m.bodies[i].id = r.i32();
            m.bodies[i].q = r.vec6();
            m.bodies[i].q_dot = r.vec6();
        }
        return m;
    }
    case MsgType::Shutdown:
        return Shutdown{};
    }
    throw Error("decode: unknown message type");
}

const char* message_name(const ProtocolMessage& message) {
    static const char* names[] = {
        "Hello",      "PeerTable",          "FrameBegin",
        "BalanceUpdate", "FetchSharedRequest", "FetchSharedReply",
        "IterShared", "IterationReport",    "ControlSignal",
        "FrameCommit", "Shutdown"};
    return names[message.index()];
}

} // namespace dabd
