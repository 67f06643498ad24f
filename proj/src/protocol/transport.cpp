#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include "oblimon/protocol.hpp"

namespace oblimon::protocol {

namespace {

[[noreturn]] void sys_fail(const std::string &what)
{
    throw ProtocolError("io", what + ": " + std::strerror(errno));
}

sockaddr_in resolve(std::string_view address)
{
    std::string host = "127.0.0.1";
    std::string port(address);
    if (auto colon = address.rfind(':'); colon != std::string_view::npos) {
        if (colon > 0)
            host = std::string(address.substr(0, colon));
        port = std::string(address.substr(colon + 1));
    }
    if (port.empty() || port.find_first_not_of("0123456789") != std::string::npos || port.size() > 5 ||
        std::stoul(port) > 65535)
        throw ConfigError("bad address '" + std::string(address) + "' (expected host:port)");

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo *res = nullptr;
    if (int rc = getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0 || !res)
        throw ConfigError("cannot resolve '" + host + "': " + gai_strerror(rc));
    sockaddr_in out;
    std::memcpy(&out, res->ai_addr, sizeof out);
    freeaddrinfo(res);
    return out;
}

} // namespace

void LoopbackChannel::send(const Message &m)
{
    // Both directions go through the wire encoding so the loopback sees exactly the
    // bytes a socket would carry.
    for (const auto &reply : server_->on_message(decode_payload(encode_payload(m))))
        inbox_.push_back(encode_payload(reply));
}

Message LoopbackChannel::receive()
{
    if (inbox_.empty())
        throw ProtocolError("closed", "no pending message from the server");
    Message m = decode_payload(inbox_.front());
    inbox_.pop_front();
    return m;
}

SocketChannel::SocketChannel(int fd) : fd_(fd)
{
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

SocketChannel::~SocketChannel()
{
    if (fd_ >= 0)
        ::close(fd_);
}

void SocketChannel::send(const Message &m)
{
    const std::string frame = frame_encode(m);
    std::size_t off = 0;
    while (off < frame.size()) {
        const ssize_t n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            if (errno == EPIPE || errno == ECONNRESET)
                throw ProtocolError("closed", "peer closed the connection");
            sys_fail("send");
        }
        off += static_cast<std::size_t>(n);
    }
}

Message SocketChannel::receive()
{
    char chunk[1 << 16];
    for (;;) {
        std::size_t used = 0;
        if (auto m = frame_decode(buffer_, used)) {
            buffer_.erase(0, used);
            return std::move(*m);
        }
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            if (errno == ECONNRESET)
                throw ProtocolError("closed", "peer reset the connection");
            sys_fail("recv");
        }
        if (n == 0)
            throw ProtocolError("closed", buffer_.empty() ? "peer closed the connection"
                                                          : "peer closed the connection inside a frame");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::unique_ptr<SocketChannel> connect_tcp(std::string_view address)
{
    const sockaddr_in addr = resolve(address);
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0)
        sys_fail("socket");
    if (::connect(fd, reinterpret_cast<const sockaddr *>(&addr), sizeof addr) < 0) {
        const int saved = errno;
        ::close(fd);
        errno = saved;
        sys_fail("connect to " + std::string(address));
    }
    return std::make_unique<SocketChannel>(fd);
}

struct TcpServer::Impl {
    int listen_fd = -1;
    SessionFactory factory;
    std::atomic<bool> stopping{false};
    mutable std::mutex mu;
    std::vector<fhe::OpCounters> finished;
};

TcpServer::TcpServer(std::string_view address, SessionFactory factory) : impl_(std::make_unique<Impl>())
{
    impl_->factory = std::move(factory);
    const sockaddr_in addr = resolve(address);
    impl_->listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (impl_->listen_fd < 0)
        sys_fail("socket");
    int one = 1;
    ::setsockopt(impl_->listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(impl_->listen_fd, reinterpret_cast<const sockaddr *>(&addr), sizeof addr) < 0 ||
        ::listen(impl_->listen_fd, 16) < 0) {
        const int saved = errno;
        ::close(impl_->listen_fd);
        errno = saved;
        sys_fail("listen on " + std::string(address));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(impl_->listen_fd, reinterpret_cast<sockaddr *>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

TcpServer::~TcpServer()
{
    stop();
    if (impl_->listen_fd >= 0)
        ::close(impl_->listen_fd);
}

void TcpServer::stop()
{
    impl_->stopping = true;
    if (impl_->listen_fd >= 0)
        ::shutdown(impl_->listen_fd, SHUT_RDWR);
}

void TcpServer::serve(std::size_t max_sessions)
{
    std::vector<std::thread> workers;
    std::uint64_t index = 0;
    while (!impl_->stopping && (max_sessions == 0 || index < max_sessions)) {
        const int fd = ::accept(impl_->listen_fd, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR)
                continue;
            break;
        }
        const std::uint64_t session_index = index++;
        workers.emplace_back([this, fd, session_index] {
            SocketChannel channel(fd);
            try {
                ServerSession session = impl_->factory(session_index);
                serve_session(channel, session);
                std::lock_guard lock(impl_->mu);
                impl_->finished.push_back(session.counters());
            } catch (const std::exception &e) {
                try {
                    channel.send(ErrorMsg{"internal", e.what()});
                } catch (const std::exception &) {
                }
            }
        });
    }
    for (auto &w : workers)
        w.join();
}

std::vector<fhe::OpCounters> TcpServer::finished_counters() const
{
    std::lock_guard lock(impl_->mu);
    return impl_->finished;
}

void serve_session(Channel &channel, ServerSession &session)
{
    while (!session.closed()) {
        std::optional<Message> m;
        try {
            m = channel.receive();
        } catch (const ProtocolError &e) {
            if (e.code() == "closed" || e.code() == "io")
                return;
            // The frame boundary is intact for a bad payload; an oversize header is not.
            channel.send(ErrorMsg{e.code(), e.what()});
            if (e.code() == "oversize")
                return;
            continue;
        }
        for (const auto &reply : session.on_message(*m))
            channel.send(reply);
    }
}

std::vector<Verdict> run_client(Channel &channel, ClientSession &client,
                                const std::vector<std::vector<std::string>> &trace,
                                std::vector<std::string> *raw_results)
{
    auto expect = [&](auto tag) {
        using T = decltype(tag);
        Message m = channel.receive();
        if (auto *e = std::get_if<ErrorMsg>(&m))
            throw ProtocolError(e->code, "server error: " + e->text);
        if (!std::holds_alternative<T>(m))
            throw ProtocolError("unexpected", std::string("unexpected '") + message_type(m) + "' from the server");
        return std::get<T>(std::move(m));
    };

    channel.send(client.hello());
    client.on_server_hello(expect(ServerHello{}));
    std::vector<Verdict> out;
    for (const auto &sigma : trace) {
        channel.send(client.send_letter(sigma));
        if (!client.awaiting_result())
            continue;
        ResultMsg r = expect(ResultMsg{});
        if (raw_results)
            raw_results->push_back(encode_payload(r));
        out.push_back(client.on_result(r));
    }
    channel.send(client.end());
    expect(End{});
    return out;
}

} // namespace oblimon::protocol
