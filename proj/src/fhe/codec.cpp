#include "codec.hpp"

#include <cstdio>

#include "oblimon/error.hpp"

namespace oblimon::fhe {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string &what)
{
    throw ProtocolError("malformed", "malformed ciphertext record: " + what);
}

std::string nonce_hex(const Nonce &n)
{
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(n.hi),
                  static_cast<unsigned long long>(n.lo));
    return buf;
}

std::uint64_t parse_hex64(std::string_view s)
{
    std::uint64_t v = 0;
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9')
            v |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f')
            v |= static_cast<std::uint64_t>(c - 'a' + 10);
        else
            malformed("nonce must be lowercase hex");
    }
    return v;
}

Nonce parse_nonce(const std::string &s)
{
    if (s.size() != 32)
        malformed("nonce must have 32 hex digits");
    return {parse_hex64(std::string_view(s).substr(0, 16)), parse_hex64(std::string_view(s).substr(16))};
}

const json &field(const json &j, const char *name)
{
    if (!j.is_object())
        malformed("expected an object");
    auto it = j.find(name);
    if (it == j.end())
        malformed(std::string("missing field '") + name + "'");
    return *it;
}

std::uint64_t unsigned_field(const json &j, const char *name)
{
    const json &v = field(j, name);
    if (!v.is_number_unsigned())
        malformed(std::string("field '") + name + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

std::uint64_t splitmix(std::uint64_t &state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// The payload travels XORed with a keystream tied to the record's key id, nonce and
// kind, so the wire form never shows slot values directly.
std::vector<std::uint8_t> keystream(std::string_view kind, const CiphertextMeta &c, std::size_t bytes)
{
    std::uint64_t state = c.key_id() ^ (c.nonce().hi * 0xd6e8feb86659fd93ULL) ^ c.nonce().lo;
    for (char ch : kind)
        state = state * 131 + static_cast<unsigned char>(ch);
    std::vector<std::uint8_t> out(bytes);
    for (std::size_t i = 0; i < bytes; i += 8) {
        const std::uint64_t word = splitmix(state);
        for (std::size_t b = 0; b < 8 && i + b < bytes; ++b)
            out[i + b] = static_cast<std::uint8_t>(word >> (8 * b));
    }
    return out;
}

// Slot k lives in byte k / 8, bit k % 8.
std::string mask_payload(std::string_view kind, const CiphertextMeta &c, std::vector<std::uint8_t> bytes)
{
    static const char *digits = "0123456789abcdef";
    const auto ks = keystream(kind, c, bytes.size());
    std::string hex;
    hex.reserve(bytes.size() * 2);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const std::uint8_t v = bytes[i] ^ ks[i];
        hex += digits[v >> 4];
        hex += digits[v & 15];
    }
    return hex;
}

json meta(const char *kind, const CiphertextMeta &c, std::uint32_t slots, std::vector<std::uint8_t> bytes)
{
    return json{{"N", slots},
                {"key_id", c.key_id()},
                {"kind", kind},
                {"noise", c.noise()},
                {"nonce", nonce_hex(c.nonce())},
                {"payload", mask_payload(kind, c, std::move(bytes))},
                {"trivial", c.trivial()}};
}

std::uint64_t check_kind(const json &j, const char *kind)
{
    const json &k = field(j, "kind");
    if (!k.is_string() || k.get<std::string>() != kind)
        malformed(std::string("expected kind '") + kind + "'");
    return unsigned_field(j, "N");
}

// Call after the metadata has been filled in.
std::vector<std::uint8_t> unmask_payload(const json &j, const char *kind, const CiphertextMeta &c,
                                         std::uint64_t slots)
{
    const json &p = field(j, "payload");
    if (!p.is_string())
        malformed("payload must be a hex string");
    const std::string &hex = p.get_ref<const std::string &>();
    const std::size_t bytes = (slots + 7) / 8;
    if (hex.size() != bytes * 2)
        malformed("payload length does not match N");
    const auto ks = keystream(kind, c, bytes);
    std::vector<std::uint8_t> out(bytes);
    for (std::size_t i = 0; i < bytes; ++i) {
        out[i] = static_cast<std::uint8_t>(parse_hex64(std::string_view(hex).substr(2 * i, 2))) ^ ks[i];
    }
    if (slots % 8 != 0 && (out.back() >> (slots % 8)) != 0)
        malformed("payload has bits beyond N");
    return out;
}

} // namespace

json Codec::encode(const Tlwe &c)
{
    return meta("tlwe", c, 1, {static_cast<std::uint8_t>(c.bit_)});
}

json Codec::encode(const Trgsw &c)
{
    return meta("trgsw", c, 1, {static_cast<std::uint8_t>(c.bit_)});
}

json Codec::encode(const Trlwe &c)
{
    std::vector<std::uint8_t> bytes((c.slots_ + 7) / 8, 0);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<std::uint8_t>((*c.words_)[i / 8] >> (8 * (i % 8)));
    return meta("trlwe", c, c.slots_, std::move(bytes));
}

void Codec::fill_meta(CiphertextMeta &c, const json &j)
{
    const json &trivial = field(j, "trivial");
    if (!trivial.is_boolean())
        malformed("trivial must be a boolean");
    const json &nonce = field(j, "nonce");
    if (!nonce.is_string())
        malformed("nonce must be a string");
    c.key_id_ = unsigned_field(j, "key_id");
    c.trivial_ = trivial.get<bool>();
    c.noise_ = unsigned_field(j, "noise");
    c.nonce_ = parse_nonce(nonce.get<std::string>());
    if (c.trivial_ != (c.key_id_ == 0))
        malformed("trivial ciphertexts, and only those, carry key id 0");
}

Tlwe Codec::decode_tlwe(const json &j)
{
    if (check_kind(j, "tlwe") != 1)
        malformed("a TLWE carries one bit");
    Tlwe c;
    fill_meta(c, j);
    c.bit_ = unmask_payload(j, "tlwe", c, 1)[0] != 0;
    return c;
}

Trgsw Codec::decode_trgsw(const json &j)
{
    if (check_kind(j, "trgsw") != 1)
        malformed("a TRGSW carries one bit");
    Trgsw c;
    fill_meta(c, j);
    c.bit_ = unmask_payload(j, "trgsw", c, 1)[0] != 0;
    return c;
}

Trlwe Codec::decode_trlwe(const json &j)
{
    const std::uint64_t slots = check_kind(j, "trlwe");
    if (slots < 2 || slots > (std::uint64_t{1} << 20))
        malformed("TRLWE slot count out of range");
    Trlwe c;
    fill_meta(c, j);
    const auto bytes = unmask_payload(j, "trlwe", c, slots);
    auto words = std::make_shared<std::vector<std::uint64_t>>((slots + 63) / 64, 0);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        (*words)[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << (8 * (i % 8));
    c.words_ = std::move(words);
    c.slots_ = static_cast<std::uint32_t>(slots);
    return c;
}

json Codec::encode(const NoiseParams &p)
{
    return json{{"N", p.N},           {"cmux_cost", p.cmux_cost}, {"eta_boot", p.eta_boot},
                {"eta_cb", p.eta_cb}, {"eta_fresh", p.eta_fresh}, {"theta", p.theta}};
}

NoiseParams Codec::decode_params(const json &j)
{
    NoiseParams p;
    const std::uint64_t N = unsigned_field(j, "N");
    if (N > (std::uint64_t{1} << 20))
        throw ConfigError("N is too large");
    p.N = static_cast<std::uint32_t>(N);
    p.cmux_cost = unsigned_field(j, "cmux_cost");
    p.eta_boot = unsigned_field(j, "eta_boot");
    p.eta_cb = unsigned_field(j, "eta_cb");
    p.eta_fresh = unsigned_field(j, "eta_fresh");
    p.theta = unsigned_field(j, "theta");
    p.validate();
    return p;
}

json Codec::encode(const CloudKeys &k)
{
    return json{{"key_id", k.key_id()}, {"params", encode(k.params())}};
}

CloudKeys Codec::decode_keys(const json &j)
{
    return CloudKeys(unsigned_field(j, "key_id"), decode_params(field(j, "params")));
}

namespace {

json parse(std::string_view text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        throw ProtocolError("malformed", std::string("invalid JSON: ") + e.what());
    }
}

} // namespace

std::string to_json(const Tlwe &c)
{
    return Codec::encode(c).dump();
}

std::string to_json(const Trgsw &c)
{
    return Codec::encode(c).dump();
}

std::string to_json(const Trlwe &c)
{
    return Codec::encode(c).dump();
}

Tlwe tlwe_from_json(std::string_view text)
{
    return Codec::decode_tlwe(parse(text));
}

Trgsw trgsw_from_json(std::string_view text)
{
    return Codec::decode_trgsw(parse(text));
}

Trlwe trlwe_from_json(std::string_view text)
{
    return Codec::decode_trlwe(parse(text));
}

std::string to_json(const CloudKeys &keys)
{
    return Codec::encode(keys).dump();
}

CloudKeys cloud_keys_from_json(std::string_view text)
{
    return Codec::decode_keys(parse(text));
}

std::string to_json(const NoiseParams &params)
{
    return Codec::encode(params).dump();
}

NoiseParams noise_params_from_json(std::string_view text)
{
    return Codec::decode_params(parse(text));
}

} // namespace oblimon::fhe
