#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "oblimon/automata.hpp"
#include "oblimon/engine.hpp"
#include "oblimon/error.hpp"
#include "oblimon/fhe.hpp"

namespace oblimon::protocol {

inline constexpr std::string_view kVersion = "oblimon/1";
inline constexpr std::size_t kMaxFrame = std::size_t{64} << 20;

enum class Algorithm { Reverse, Block };

const char *algorithm_name(Algorithm a);
/// "reverse" or "block"; throws ConfigError otherwise.
Algorithm parse_algorithm(std::string_view name);

struct SessionConfig {
    std::vector<std::string> ap_order;
    Algorithm algorithm = Algorithm::Reverse;
    /// Results are produced after every i_out letters.
    std::uint64_t i_out = 1;
    /// block_size is ignored; Block always uses i_out · |AP|.
    engine::EngineConfig engine;

    /// Throws ConfigError on an empty AP list, duplicate atoms or i_out = 0.
    void validate() const;
    /// `engine` with block_size set to i_out · |AP|.
    engine::EngineConfig effective_engine() const;
};

/// Bit j = 1 iff ap_order[j] ∈ sigma. Throws UnknownAtomError.
std::vector<bool> encode_letter(const std::vector<std::string> &sigma, const std::vector<std::string> &ap_order);
std::vector<std::string> decode_letter(const std::vector<bool> &bits, const std::vector<std::string> &ap_order);

struct ClientHello {
    std::string version{kVersion};
    fhe::CloudKeys keys;
};

/// The parameters the client must follow; the formula itself stays on the server.
struct ServerHello {
    std::vector<std::string> ap_order;
    Algorithm algorithm = Algorithm::Reverse;
    std::uint64_t i_out = 1;
};

struct LetterMsg {
    std::uint64_t seq = 0;
    std::vector<fhe::Trgsw> bits;
};

struct ResultMsg {
    std::uint64_t seq = 0;
    fhe::Tlwe verdict;
};

struct End {};

struct ErrorMsg {
    std::string code;
    std::string text;
};

using Message = std::variant<ClientHello, ServerHello, LetterMsg, ResultMsg, End, ErrorMsg>;

const char *message_type(const Message &m);

/// Canonical JSON {type, seq, body}; End is exactly {"type":"end"}.
std::string encode_payload(const Message &m);
/// Throws ProtocolError("malformed" | "unknown_type", ...).
Message decode_payload(std::string_view json);

/// 4-byte big-endian length followed by the payload.
std::string frame_encode(const Message &m);

/// Streaming decode. Returns nullopt while `bytes` holds less than one full frame;
/// otherwise the message and, in `consumed`, the frame's total size. Throws
/// ProtocolError("oversize", ...) for a declared length above kMaxFrame.
std::optional<Message> frame_decode(std::string_view bytes, std::size_t &consumed);

/// Binary monitor and, for Reverse, its reversed minimal DFA. Immutable and shared by
/// every session of one server.
struct CompiledMonitor {
    automata::Dfa binary;
    std::optional<automata::Dfa> reversed;

    static std::shared_ptr<const CompiledMonitor> build(automata::Dfa binary, Algorithm algorithm,
                                                        std::size_t max_states = automata::kDefaultMaxStates);
};

/// Server half. Holds only cloud keys, never a secret key.
class ServerSession {
public:
    ServerSession(std::shared_ptr<const CompiledMonitor> monitor, SessionConfig config, std::uint64_t seed);
    ~ServerSession();
    ServerSession(ServerSession &&) noexcept;
    ServerSession &operator=(ServerSession &&) noexcept;

    /// Handles one inbound message; returns the replies in send order.
    std::vector<Message> on_message(const Message &m);

    bool established() const;
    bool closed() const;
    std::uint64_t processed() const;
    /// Operations performed by the engine runner so far.
    fhe::OpCounters counters() const;
    /// Records backend calls of this session (set after the ClientHello).
    void set_trace(std::vector<fhe::TraceEvent> *trace);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct Verdict {
    /// Number of letters the verdict covers.
    std::uint64_t letter = 0;
    /// 1 = a bad prefix has been observed.
    bool violation = false;

    friend bool operator==(const Verdict &, const Verdict &) = default;
};

/// Client half. Holds the secret key and never sees the monitor.
class ClientSession {
public:
    explicit ClientSession(fhe::SecretKey sk);

    ClientHello hello() const;
    /// Throws ProtocolError on a version or configuration the client cannot follow.
    void on_server_hello(const ServerHello &m);

    /// Encrypts the encoded letter bit by bit under the client's key.
    LetterMsg send_letter(const std::vector<std::string> &sigma);
    /// True when the last letter sent closes an i_out window.
    bool awaiting_result() const;
    /// Decrypts; throws NoiseOverflowError, KeyMismatchError or ProtocolError.
    Verdict on_result(const ResultMsg &m);
    End end();

    bool established() const
    {
        return established_;
    }

    const ServerHello &server_config() const
    {
        return server_;
    }

    const std::vector<Verdict> &verdicts() const
    {
        return verdicts_;
    }

private:
    fhe::SecretKey sk_;
    ServerHello server_;
    bool established_ = false;
    bool closed_ = false;
    std::uint64_t sent_ = 0;
    std::uint64_t results_ = 0;
    std::vector<Verdict> verdicts_;
};

/// Bidirectional ordered message stream.
class Channel {
public:
    virtual ~Channel() = default;
    virtual void send(const Message &m) = 0;
    /// Throws ProtocolError("closed", ...) once the peer has gone away.
    virtual Message receive() = 0;
};

/// Client side of an in-process channel: every send is handled synchronously by the
/// wrapped server session.
class LoopbackChannel : public Channel {
public:
    explicit LoopbackChannel(ServerSession &server) : server_(&server)
    {
    }

    void send(const Message &m) override;
    Message receive() override;

private:
    ServerSession *server_;
    std::deque<std::string> inbox_;
};

/// Framed messages over a connected socket; owns the descriptor.
class SocketChannel : public Channel {
public:
    explicit SocketChannel(int fd);
    ~SocketChannel() override;
    SocketChannel(const SocketChannel &) = delete;
    SocketChannel &operator=(const SocketChannel &) = delete;

    void send(const Message &m) override;
    Message receive() override;

private:
    int fd_;
    std::string buffer_;
};

/// "host:port"; host defaults to 127.0.0.1.
std::unique_ptr<SocketChannel> connect_tcp(std::string_view address);

/// Session-per-connection TCP server. Each accepted connection runs on its own thread.
class TcpServer {
public:
    using SessionFactory = std::function<ServerSession(std::uint64_t session_index)>;

    /// Binds and listens; port 0 picks an ephemeral port.
    TcpServer(std::string_view address, SessionFactory factory);
    ~TcpServer();
    TcpServer(const TcpServer &) = delete;
    TcpServer &operator=(const TcpServer &) = delete;

    std::uint16_t port() const
    {
        return port_;
    }

    /// Accepts connections until `max_sessions` have been served (0 = forever), then
    /// joins the workers.
    void serve(std::size_t max_sessions = 0);
    void stop();

    /// Counters of finished sessions, in completion order.
    std::vector<fhe::OpCounters> finished_counters() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint16_t port_ = 0;
};

/// Runs the server half of one session until End or a fatal error.
void serve_session(Channel &channel, ServerSession &session);

/// Runs the client half over a whole trace. `raw_results`, when given, collects the
/// serialized Result payloads in arrival order.
std::vector<Verdict> run_client(Channel &channel, ClientSession &client,
                                const std::vector<std::vector<std::string>> &trace,
                                std::vector<std::string> *raw_results = nullptr);

/// One JSON object per line: {"ap": ["p1", "p7"]}. Blank lines are skipped.
std::vector<std::vector<std::string>> read_trace_jsonl(std::istream &in);
void write_trace_jsonl(std::ostream &out, const std::vector<std::vector<std::string>> &trace);

/// Blood-glucose style trace over p1..p9: a 9-bit reading per letter with p1 the least
/// significant bit. A bounded random walk with occasional dips below 64.
std::vector<std::vector<std::string>> synthetic_glucose_trace(std::size_t letters, std::uint64_t seed);
std::vector<std::string> glucose_aps();

/// Plaintext verdicts at every multiple of i_out, for checking the encrypted run.
std::vector<Verdict> plaintext_verdicts(const automata::Dfa &binary, const std::vector<std::string> &ap_order,
                                        const std::vector<std::vector<std::string>> &trace, std::uint64_t i_out);

} // namespace oblimon::protocol
