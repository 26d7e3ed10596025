#include "dabd/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

namespace dabd {

namespace {

struct InprocQueue {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::vector<uint8_t>> frames;
    bool closed = false;

    void push(std::vector<uint8_t> frame) {
        {
            std::lock_guard lock(mutex);
            if (closed) throw Error("inproc channel closed");
            frames.push_back(std::move(frame));
        }
        cv.notify_one();
    }
    std::vector<uint8_t> pop(std::chrono::milliseconds timeout) {
        std::unique_lock lock(mutex);
        if (!cv.wait_for(lock, timeout, [&] { return !frames.empty() || closed; }))
            throw Error("inproc recv timed out");
        if (frames.empty()) throw Error("inproc channel closed");
        auto frame = std::move(frames.front());
        frames.pop_front();
        return frame;
    }
    void close() {
        {
            std::lock_guard lock(mutex);
            closed = true;
        }
        cv.notify_all();
    }
};

class InprocChannel : public Channel {
  public:
    InprocChannel(std::shared_ptr<InprocQueue> out, std::shared_ptr<InprocQueue> in)
        : out_(std::move(out)), in_(std::move(in)) {}
    ~InprocChannel() override {
        out_->close();
        in_->close();
    }

    void send(const ProtocolMessage& message) override {
        out_->push(encode_message(message));
    }
    ProtocolMessage recv(std::chrono::milliseconds timeout) override {
        const auto frame = in_->pop(timeout);
        return decode_message(frame);
    }

  private:
    std::shared_ptr<InprocQueue> out_;
    std::shared_ptr<InprocQueue> in_;
};

class TcpChannel : public Channel {
  public:
    explicit TcpChannel(int fd) : fd_(fd) {
        const int one = 1;
        setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }
    ~TcpChannel() override {
        if (fd_ >= 0) ::close(fd_);
    }

    void send(const ProtocolMessage& message) override {
        const std::vector<uint8_t> payload = encode_message(message);
        const uint32_t len = htonl(static_cast<uint32_t>(payload.size()));
        write_all(reinterpret_cast<const uint8_t*>(&len), 4);
        write_all(payload.data(), payload.size());
    }

    ProtocolMessage recv(std::chrono::milliseconds timeout) override {
        struct timeval tv;
        tv.tv_sec = timeout.count() / 1000;
        tv.tv_usec = (timeout.count() % 1000) * 1000;
        setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));

        uint32_t len_be = 0;
        read_all(reinterpret_cast<uint8_t*>(&len_be), 4);
        const uint32_t len = ntohl(len_be);
        if (len > (1u << 28)) throw Error("tcp recv: oversized frame");
        std::vector<uint8_t> payload(len);
        read_all(payload.data(), len);
        return decode_message(payload);
    }

  private:
    void write_all(const uint8_t* data, size_t n) {
        size_t off = 0;
        while (off < n) {
            const ssize_t w = ::send(fd_, data + off, n - off, MSG_NOSIGNAL);
            if (w <= 0) throw Error("tcp send failed");
            off += static_cast<size_t>(w);
        }
    }
    void read_all(uint8_t* data, size_t n) {
        size_t off = 0;
        while (off < n) {
            const ssize_t r = ::recv(fd_, data + off, n - off, 0);
            if (r == 0) throw Error("tcp channel closed");
            if (r < 0) throw Error("tcp recv failed or timed out");
            off += static_cast<size_t>(r);
        }
    }

    int fd_;
};

} // namespace

std::pair<ChannelPtr, ChannelPtr> make_inproc_pair() {
    auto a_to_b = std::make_shared<InprocQueue>();
    auto b_to_a = std::make_shared<InprocQueue>();
    return {std::make_shared<InprocChannel>(a_to_b, b_to_a),
            std::make_shared<InprocChannel>(b_to_a, a_to_b)};
}

TcpListener::TcpListener() : TcpListener(0) {}

TcpListener::TcpListener(uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error("tcp listener: socket failed");
    const int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd_);
        throw Error("tcp listener: bind failed");
    }
    if (::listen(fd_, 64) != 0) {
        ::close(fd_);
        throw Error("tcp listener: listen failed");
    }
    socklen_t len = sizeof(addr);
    getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

ChannelPtr TcpListener::accept() {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw Error("tcp listener: accept failed");
    return std::make_shared<TcpChannel>(fd);
}

ChannelPtr tcp_connect(const std::string& host, uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error("tcp connect: socket failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw Error("tcp connect: bad address " + host);
    }
    // The peer may not be listening yet during startup; retry briefly.
    for (int attempt = 0;; ++attempt) {
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0)
            break;
        if (attempt >= 200) {
            ::close(fd);
            throw Error("tcp connect: connect failed");
        }
        usleep(10000);
    }
    return std::make_shared<TcpChannel>(fd);
}

} // namespace dabd
