#pragma once

#include "dabd/messages.hpp"

#include <chrono>
#include <memory>
#include <optional>

namespace dabd {

// Reliable, ordered, blocking duplex channel carrying encoded protocol
// messages. FIFO per direction; no loss, no duplication. Both transports
// move the same encoded bytes, so behavior is transport independent.
class Channel {
  public:
    virtual ~Channel() = default;
    virtual void send(const ProtocolMessage& message) = 0;
    // Blocks. Throws on closed channel or timeout.
    virtual ProtocolMessage recv(std::chrono::milliseconds timeout) = 0;
    ProtocolMessage recv() { return recv(std::chrono::milliseconds(60000)); }
};

using ChannelPtr = std::shared_ptr<Channel>;

// Two endpoints of an in-process channel (thread-safe queues).
std::pair<ChannelPtr, ChannelPtr> make_inproc_pair();

// TCP endpoints over loopback/ethernet. Wire framing:
// [u32 length, big-endian][u16 version][u16 msg_type][payload].
class TcpListener {
  public:
    TcpListener();                   // binds 127.0.0.1, ephemeral port
    explicit TcpListener(uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    uint16_t port() const { return port_; }
    ChannelPtr accept();

  private:
    int fd_ = -1;
    uint16_t port_ = 0;
};

ChannelPtr tcp_connect(const std::string& host, uint16_t port);

} // namespace dabd
