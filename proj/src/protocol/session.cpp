#include "oblimon/protocol.hpp"

namespace oblimon::protocol {

using Backend = fhe::SimBackend;
using Reverse = engine::ReverseRunner<Backend>;
using Block = engine::BlockRunner<Backend>;

std::shared_ptr<const CompiledMonitor> CompiledMonitor::build(automata::Dfa binary, Algorithm algorithm,
                                                              std::size_t max_states)
{
    if (!binary.alphabet().is_binary())
        throw AutomatonError("the monitor must be a binary DFA");
    auto out = std::make_shared<CompiledMonitor>(CompiledMonitor{std::move(binary), std::nullopt});
    if (algorithm == Algorithm::Reverse)
        out->reversed = automata::reverse_min(out->binary, max_states);
    return out;
}

struct ServerSession::Impl {
    std::shared_ptr<const CompiledMonitor> monitor;
    SessionConfig config;
    std::uint64_t seed;

    std::unique_ptr<Backend> backend;
    std::unique_ptr<Reverse> reverse;
    std::unique_ptr<Block> block;
    std::vector<fhe::TraceEvent> *trace = nullptr;

    std::uint64_t expected_seq = 1;
    std::uint64_t processed = 0;
    std::uint64_t results = 0;
    bool closed = false;

    std::vector<Message> fail(std::string code, std::string text)
    {
        closed = true;
        return {ErrorMsg{std::move(code), std::move(text)}};
    }

    std::vector<Message> hello(const ClientHello &m)
    {
        if (backend)
            return fail("unexpected", "session already established");
        if (m.version != kVersion)
            return fail("version", "unsupported protocol version '" + m.version + "'");
        backend = std::make_unique<Backend>(m.keys, seed);
        backend->set_trace(trace);
        const engine::EngineConfig ec = config.effective_engine();
        if (config.algorithm == Algorithm::Reverse) {
            if (!monitor->reversed)
                return fail("config", "the monitor was compiled without its reversal");
            reverse = std::make_unique<Reverse>(Reverse::from_reversed(*backend, *monitor->reversed, ec));
        } else {
            block = std::make_unique<Block>(*backend, monitor->binary, ec);
        }
        return {ServerHello{config.ap_order, config.algorithm, config.i_out}};
    }

    std::vector<Message> letter(const LetterMsg &m)
    {
        if (!backend)
            return fail("unexpected", "letter before the handshake");
        if (m.seq != expected_seq)
            return {ErrorMsg{"out_of_order", "expected letter " + std::to_string(expected_seq) + ", got " +
                                                 std::to_string(m.seq)}};
        if (m.bits.size() != config.ap_order.size())
            return {ErrorMsg{"malformed", "a letter carries " + std::to_string(config.ap_order.size()) +
                                              " ciphertexts, got " + std::to_string(m.bits.size())}};
        std::optional<fhe::Tlwe> out;
        for (const auto &d : m.bits) {
            if (reverse) {
                out = reverse->feed(d);
            } else if (auto r = block->feed(d)) {
                out = std::move(r);
            }
        }
        ++expected_seq;
        ++processed;
        if (processed % config.i_out != 0)
            return {};
        if (!out)
            return fail("internal", "no verdict at the end of an output window");
        ++results;
        return {ResultMsg{results, backend->randomize(*out)}};
    }
};

ServerSession::ServerSession(std::shared_ptr<const CompiledMonitor> monitor, SessionConfig config,
                             std::uint64_t seed)
    : impl_(std::make_unique<Impl>())
{
    config.validate();
    if (!monitor)
        throw ConfigError("no monitor");
    if (config.algorithm == Algorithm::Reverse && !monitor->reversed)
        throw ConfigError("Reverse needs the reversed monitor");
    impl_->monitor = std::move(monitor);
    impl_->config = std::move(config);
    impl_->seed = seed;
}

ServerSession::~ServerSession() = default;
ServerSession::ServerSession(ServerSession &&) noexcept = default;
ServerSession &ServerSession::operator=(ServerSession &&) noexcept = default;

std::vector<Message> ServerSession::on_message(const Message &m)
{
    Impl &s = *impl_;
    if (s.closed)
        return {ErrorMsg{"closed", "session is closed"}};
    try {
        if (auto *h = std::get_if<ClientHello>(&m))
            return s.hello(*h);
        if (auto *l = std::get_if<LetterMsg>(&m))
            return s.letter(*l);
        if (std::holds_alternative<End>(m)) {
            s.closed = true;
            return {End{}};
        }
        return s.fail("unexpected", std::string("a client does not send '") + message_type(m) + "'");
    } catch (const KeyMismatchError &e) {
        return s.fail("key_mismatch", e.what());
    } catch (const NoiseOverflowError &e) {
        return s.fail("noise_overflow", e.what());
    } catch (const ConfigError &e) {
        return s.fail("config", e.what());
    } catch (const Error &e) {
        return s.fail("engine", e.what());
    }
}

bool ServerSession::established() const
{
    return impl_->backend != nullptr;
}

bool ServerSession::closed() const
{
    return impl_->closed;
}

std::uint64_t ServerSession::processed() const
{
    return impl_->processed;
}

fhe::OpCounters ServerSession::counters() const
{
    if (impl_->reverse)
        return impl_->reverse->counters();
    if (impl_->block)
        return impl_->block->counters();
    return {};
}

void ServerSession::set_trace(std::vector<fhe::TraceEvent> *trace)
{
    impl_->trace = trace;
    if (impl_->backend)
        impl_->backend->set_trace(trace);
}

ClientSession::ClientSession(fhe::SecretKey sk) : sk_(std::move(sk))
{
}

ClientHello ClientSession::hello() const
{
    return ClientHello{std::string(kVersion), sk_.cloud_keys()};
}

void ClientSession::on_server_hello(const ServerHello &m)
{
    if (established_)
        throw ProtocolError("unexpected", "second server hello");
    SessionConfig check;
    check.ap_order = m.ap_order;
    check.i_out = m.i_out;
    try {
        check.validate();
    } catch (const ConfigError &e) {
        throw ProtocolError("config", e.what());
    }
    server_ = m;
    established_ = true;
}

LetterMsg ClientSession::send_letter(const std::vector<std::string> &sigma)
{
    if (!established_ || closed_)
        throw ProtocolError("closed", "no open session");
    LetterMsg m;
    for (bool bit : encode_letter(sigma, server_.ap_order))
        m.bits.push_back(sk_.enc_trgsw(bit));
    m.seq = ++sent_;
    return m;
}

bool ClientSession::awaiting_result() const
{
    return established_ && results_ < sent_ / server_.i_out;
}

Verdict ClientSession::on_result(const ResultMsg &m)
{
    if (!awaiting_result())
        throw ProtocolError("unexpected", "result without an open output window");
    if (m.seq != results_ + 1)
        throw ProtocolError("out_of_order", "expected result " + std::to_string(results_ + 1) + ", got " +
                                                std::to_string(m.seq));
    const Verdict v{m.seq * server_.i_out, sk_.dec_tlwe(m.verdict)};
    ++results_;
    verdicts_.push_back(v);
    return v;
}

End ClientSession::end()
{
    closed_ = true;
    return End{};
}

} // namespace oblimon::protocol
