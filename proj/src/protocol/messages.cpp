#include <algorithm>
#include <set>

#include "fhe/codec.hpp"
#include "oblimon/protocol.hpp"

namespace oblimon::protocol {

using fhe::Codec;
using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string &what)
{
    throw ProtocolError("malformed", "malformed message: " + what);
}

const json &field(const json &j, const char *name)
{
    auto it = j.find(name);
    if (it == j.end())
        malformed(std::string("missing field '") + name + "'");
    return *it;
}

std::uint64_t unsigned_field(const json &j, const char *name)
{
    const json &v = field(j, name);
    if (!v.is_number_unsigned())
        malformed(std::string("field '") + name + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string string_field(const json &j, const char *name)
{
    const json &v = field(j, name);
    if (!v.is_string())
        malformed(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

void only_fields(const json &j, std::initializer_list<const char *> names)
{
    if (!j.is_object())
        malformed("expected an object");
    for (const auto &[key, value] : j.items())
        if (std::none_of(names.begin(), names.end(), [&](const char *n) { return key == n; }))
            malformed("unexpected field '" + key + "'");
}

struct BodyEncoder {
    json operator()(const ClientHello &m) const
    {
        return json{{"N", m.keys.params().N}, {"keys", Codec::encode(m.keys)}, {"version", m.version}};
    }

    json operator()(const ServerHello &m) const
    {
        return json{{"algorithm", algorithm_name(m.algorithm)}, {"ap", m.ap_order}, {"i_out", m.i_out}};
    }

    json operator()(const LetterMsg &m) const
    {
        json bits = json::array();
        for (const auto &b : m.bits)
            bits.push_back(Codec::encode(b));
        return json{{"bits", std::move(bits)}};
    }

    json operator()(const ResultMsg &m) const
    {
        return json{{"verdict", Codec::encode(m.verdict)}};
    }

    json operator()(const End &) const
    {
        return nullptr;
    }

    json operator()(const ErrorMsg &m) const
    {
        return json{{"code", m.code}, {"text", m.text}};
    }
};

std::uint64_t seq_of(const Message &m)
{
    if (auto *l = std::get_if<LetterMsg>(&m))
        return l->seq;
    if (auto *r = std::get_if<ResultMsg>(&m))
        return r->seq;
    return 0;
}

Message decode_body(const std::string &type, std::uint64_t seq, const json &body)
{
    if (type == "client_hello") {
        only_fields(body, {"N", "keys", "version"});
        ClientHello m{string_field(body, "version"), Codec::decode_keys(field(body, "keys"))};
        if (unsigned_field(body, "N") != m.keys.params().N)
            malformed("N disagrees with the key parameters");
        return m;
    }
    if (type == "server_hello") {
        only_fields(body, {"algorithm", "ap", "i_out"});
        ServerHello m;
        m.algorithm = parse_algorithm(string_field(body, "algorithm"));
        const json &ap = field(body, "ap");
        if (!ap.is_array())
            malformed("ap must be an array");
        for (const auto &a : ap) {
            if (!a.is_string())
                malformed("ap entries must be strings");
            m.ap_order.push_back(a.get<std::string>());
        }
        m.i_out = unsigned_field(body, "i_out");
        return m;
    }
    if (type == "letter") {
        only_fields(body, {"bits"});
        const json &bits = field(body, "bits");
        if (!bits.is_array())
            malformed("bits must be an array");
        LetterMsg m;
        m.seq = seq;
        for (const auto &b : bits)
            m.bits.push_back(Codec::decode_trgsw(b));
        return m;
    }
    if (type == "result") {
        only_fields(body, {"verdict"});
        return ResultMsg{seq, Codec::decode_tlwe(field(body, "verdict"))};
    }
    if (type == "error") {
        only_fields(body, {"code", "text"});
        return ErrorMsg{string_field(body, "code"), string_field(body, "text")};
    }
    throw ProtocolError("unknown_type", "unknown message type '" + type + "'");
}

} // namespace

const char *algorithm_name(Algorithm a)
{
    return a == Algorithm::Reverse ? "reverse" : "block";
}

Algorithm parse_algorithm(std::string_view name)
{
    if (name == "reverse")
        return Algorithm::Reverse;
    if (name == "block")
        return Algorithm::Block;
    throw ConfigError("unknown algorithm '" + std::string(name) + "' (expected reverse or block)");
}

void SessionConfig::validate() const
{
    if (ap_order.empty())
        throw ConfigError("the AP list is empty");
    if (std::set<std::string>(ap_order.begin(), ap_order.end()).size() != ap_order.size())
        throw ConfigError("the AP list has duplicates");
    if (i_out == 0)
        throw ConfigError("i_out must be at least 1");
}

engine::EngineConfig SessionConfig::effective_engine() const
{
    engine::EngineConfig e = engine;
    e.block_size = i_out * ap_order.size();
    return e;
}

std::vector<bool> encode_letter(const std::vector<std::string> &sigma, const std::vector<std::string> &ap_order)
{
    std::vector<bool> bits(ap_order.size(), false);
    for (const auto &atom : sigma) {
        auto it = std::find(ap_order.begin(), ap_order.end(), atom);
        if (it == ap_order.end())
            throw UnknownAtomError("atom '" + atom + "' is not in the AP list");
        bits[static_cast<std::size_t>(it - ap_order.begin())] = true;
    }
    return bits;
}

std::vector<std::string> decode_letter(const std::vector<bool> &bits, const std::vector<std::string> &ap_order)
{
    if (bits.size() != ap_order.size())
        throw ConfigError("letter width does not match the AP list");
    std::vector<std::string> sigma;
    for (std::size_t j = 0; j < bits.size(); ++j)
        if (bits[j])
            sigma.push_back(ap_order[j]);
    return sigma;
}

const char *message_type(const Message &m)
{
    static constexpr const char *names[] = {"client_hello", "server_hello", "letter", "result", "end", "error"};
    return names[m.index()];
}

std::string encode_payload(const Message &m)
{
    if (std::holds_alternative<End>(m))
        return R"({"type":"end"})";
    json j{{"type", message_type(m)}, {"seq", seq_of(m)}, {"body", std::visit(BodyEncoder{}, m)}};
    return j.dump();
}

Message decode_payload(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        malformed(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object())
        malformed("expected an object");
    const std::string type = string_field(j, "type");
    if (type == "end") {
        only_fields(j, {"type"});
        return End{};
    }
    only_fields(j, {"body", "seq", "type"});
    const std::uint64_t seq = unsigned_field(j, "seq");
    const json &body = field(j, "body");
    if (!body.is_object())
        malformed("body must be an object");
    try {
        return decode_body(type, seq, body);
    } catch (const ProtocolError &) {
        throw;
    } catch (const Error &e) {
        malformed(e.what());
    }
}

std::string frame_encode(const Message &m)
{
    const std::string payload = encode_payload(m);
    if (payload.size() > kMaxFrame)
        throw ProtocolError("oversize", "frame of " + std::to_string(payload.size()) + " bytes exceeds the limit");
    const auto n = static_cast<std::uint32_t>(payload.size());
    std::string out;
    out.reserve(4 + payload.size());
    out.push_back(static_cast<char>(n >> 24));
    out.push_back(static_cast<char>(n >> 16));
    out.push_back(static_cast<char>(n >> 8));
    out.push_back(static_cast<char>(n));
    out += payload;
    return out;
}

std::optional<Message> frame_decode(std::string_view bytes, std::size_t &consumed)
{
    consumed = 0;
    if (bytes.size() < 4)
        return std::nullopt;
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i)
        n = (n << 8) | static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)]);
    if (n > kMaxFrame)
        throw ProtocolError("oversize", "declared frame length " + std::to_string(n) + " exceeds the limit");
    if (bytes.size() < 4 + static_cast<std::size_t>(n))
        return std::nullopt;
    Message m = decode_payload(bytes.substr(4, n));
    consumed = 4 + static_cast<std::size_t>(n);
    return m;
}

} // namespace oblimon::protocol
