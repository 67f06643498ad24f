#include <algorithm>

#include "oblimon/error.hpp"
#include "oblimon/fhe.hpp"

namespace oblimon::fhe {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::size_t words_for(std::uint32_t slots)
{
    return (static_cast<std::size_t>(slots) + 63) / 64;
}

bool slot_bit(const std::vector<std::uint64_t> &words, std::uint32_t k)
{
    return (words[k / 64] >> (k % 64)) & 1U;
}

} // namespace

void NoiseParams::validate() const
{
    if (N < 2)
        throw ConfigError("N must be at least 2");
    if (cmux_cost < 1)
        throw ConfigError("cmux_cost must be at least 1");
    if (eta_boot >= theta)
        throw ConfigError("eta_boot must be below theta");
    if (eta_cb >= theta)
        throw ConfigError("eta_cb must be below theta");
    if (eta_fresh >= theta)
        throw ConfigError("eta_fresh must be below theta");
}

CloudKeys::CloudKeys(KeyId id, NoiseParams params) : id_(id), params_(params)
{
    params_.validate();
    if (id == 0)
        throw ConfigError("key id 0 is reserved for trivial samples");
}

SecretKey::SecretKey(KeyId id, NoiseParams params, std::uint64_t seed) : id_(id), params_(params), rng_(seed)
{
}

Nonce SecretKey::fresh_nonce()
{
    return {rng_(), rng_()};
}

Trgsw SecretKey::enc_trgsw(bool bit)
{
    Trgsw c;
    c.bit_ = bit;
    c.key_id_ = id_;
    c.trivial_ = false;
    c.noise_ = params_.eta_fresh;
    c.nonce_ = fresh_nonce();
    return c;
}

Tlwe SecretKey::enc_tlwe(bool bit)
{
    Tlwe c;
    c.bit_ = bit;
    c.key_id_ = id_;
    c.trivial_ = false;
    c.noise_ = params_.eta_fresh;
    c.nonce_ = fresh_nonce();
    return c;
}

void SecretKey::check(const CiphertextMeta &c) const
{
    if (!c.trivial_ && c.key_id_ != id_)
        throw KeyMismatchError("ciphertext was produced under a different key");
    if (c.noise_ >= params_.theta)
        throw NoiseOverflowError("noise " + std::to_string(c.noise_) + " reached theta " +
                                 std::to_string(params_.theta));
}

bool SecretKey::dec_tlwe(const Tlwe &c) const
{
    check(c);
    return c.bit_;
}

std::vector<bool> SecretKey::dec_trlwe(const Trlwe &c) const
{
    check(c);
    std::vector<bool> out(c.slots_);
    for (std::uint32_t k = 0; k < c.slots_; ++k)
        out[k] = slot_bit(*c.words_, k);
    return out;
}

std::pair<SecretKey, CloudKeys> keygen(const NoiseParams &params, std::uint64_t seed)
{
    params.validate();
    KeyId id = splitmix64(seed);
    if (id == 0)
        id = 1;
    SecretKey sk(id, params, splitmix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL));
    CloudKeys ck = sk.cloud_keys();
    return {std::move(sk), std::move(ck)};
}

std::pair<SecretKey, CloudKeys> keygen(const NoiseParams &params)
{
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    return keygen(params, seed);
}

OpCounters &OpCounters::operator+=(const OpCounters &o)
{
    cmux += o.cmux;
    bootstrap += o.bootstrap;
    circuit_bootstrap += o.circuit_bootstrap;
    sample_extract += o.sample_extract;
    lookup += o.lookup;
    lookup_cmux += o.lookup_cmux;
    return *this;
}

const char *op_name(Op op)
{
    switch (op) {
    case Op::Trivial:
        return "trivial";
    case Op::CMux:
        return "cmux";
    case Op::LookUp:
        return "lookup";
    case Op::SampleExtract:
        return "sample_extract";
    case Op::Bootstrap:
        return "bootstrap";
    case Op::CircuitBootstrap:
        return "circuit_bootstrap";
    case Op::Randomize:
        return "randomize";
    case Op::BootstrapSlots:
        return "bootstrap_slots";
    }
    return "unknown";
}

SimBackend::SimBackend(CloudKeys keys, std::uint64_t seed) : keys_(std::move(keys)), rng_(seed)
{
    auto zero = std::make_shared<std::vector<std::uint64_t>>(words_for(params().N), 0);
    auto one = std::make_shared<std::vector<std::uint64_t>>(words_for(params().N), 0);
    (*one)[0] = 1;
    zero_ = std::move(zero);
    one_ = std::move(one);
}

void SimBackend::check_key(const CiphertextMeta &c) const
{
    if (!c.trivial_ && c.key_id_ != keys_.key_id())
        throw KeyMismatchError("ciphertext key " + std::to_string(c.key_id_) + " does not match cloud key " +
                               std::to_string(keys_.key_id()));
}

void SimBackend::check_noise(const CiphertextMeta &c) const
{
    if (c.noise_ >= params().theta)
        throw NoiseOverflowError("bootstrapping input noise " + std::to_string(c.noise_) + " reached theta " +
                                 std::to_string(params().theta));
}

void SimBackend::record(Op op, std::uint64_t arg, std::uint64_t noise)
{
    if (trace_)
        trace_->push_back({op, arg, noise});
}

Trlwe SimBackend::single_bit(bool bit, std::uint64_t noise)
{
    Trlwe out;
    out.words_ = bit ? one_ : zero_;
    out.slots_ = params().N;
    out.key_id_ = keys_.key_id();
    out.trivial_ = false;
    out.noise_ = noise;
    return out;
}

Trlwe SimBackend::trivial(std::uint64_t n)
{
    const std::uint32_t N = params().N;
    if (N < 64 && (n >> N) != 0)
        throw ConfigError("trivial value " + std::to_string(n) + " does not fit in " + std::to_string(N) + " slots");
    Trlwe out;
    if (n == 0) {
        out.words_ = zero_;
    } else if (n == 1) {
        out.words_ = one_;
    } else {
        auto words = std::make_shared<std::vector<std::uint64_t>>(words_for(N), 0);
        (*words)[0] = n;
        out.words_ = std::move(words);
    }
    out.slots_ = N;
    out.trivial_ = true;
    out.noise_ = NoiseParams::eta_trivial;
    record(Op::Trivial, n, out.noise_);
    return out;
}

Trlwe SimBackend::cmux(const Trgsw &d, const Trlwe &c_true, const Trlwe &c_false)
{
    check_key(d);
    check_key(c_true);
    check_key(c_false);
    Trlwe out = d.bit_ ? c_true : c_false;
    out.key_id_ = d.trivial_ ? keys_.key_id() : d.key_id_;
    out.trivial_ = false;
    out.nonce_ = {};
    out.noise_ = std::max(c_true.noise_, c_false.noise_) + params().cmux_cost;
    ++counters_.cmux;
    record(Op::CMux, 0, out.noise_);
    return out;
}

Trlwe SimBackend::lookup(std::span<const Trlwe> entries, std::span<const Trgsw> selectors)
{
    const std::size_t n = selectors.size();
    if (n >= 32 || entries.size() != (std::size_t{1} << n))
        throw ConfigError("lookup needs exactly 2^n entries for n selectors");
    for (const auto &s : selectors)
        check_key(s);
    for (const auto &e : entries)
        check_key(e);
    // CMux tree: level i halves the candidates using selector i (least significant first).
    std::vector<Trlwe> level(entries.begin(), entries.end());
    for (std::size_t i = 0; i < n; ++i) {
        const Trgsw &d = selectors[i];
        std::vector<Trlwe> next(level.size() / 2);
        for (std::size_t j = 0; j < next.size(); ++j) {
            Trlwe out = d.bit_ ? level[2 * j + 1] : level[2 * j];
            out.key_id_ = d.trivial_ ? keys_.key_id() : d.key_id_;
            out.trivial_ = false;
            out.nonce_ = {};
            out.noise_ = std::max(level[2 * j].noise_, level[2 * j + 1].noise_) + params().cmux_cost;
            next[j] = std::move(out);
        }
        counters_.lookup_cmux += next.size();
        level = std::move(next);
    }
    ++counters_.lookup;
    record(Op::LookUp, n, level[0].noise_);
    return level[0];
}

Tlwe SimBackend::sample_extract(std::uint32_t k, const Trlwe &c)
{
    if (k >= c.slots_)
        throw ConfigError("sample_extract index " + std::to_string(k) + " is outside the " +
                          std::to_string(c.slots_) + " slots");
    Tlwe out;
    out.bit_ = slot_bit(*c.words_, k);
    out.key_id_ = c.key_id_;
    out.trivial_ = c.trivial_;
    out.noise_ = c.noise_;
    ++counters_.sample_extract;
    record(Op::SampleExtract, k, out.noise_);
    return out;
}

Trlwe SimBackend::bootstrap(const Tlwe &c)
{
    check_key(c);
    check_noise(c);
    Trlwe out = single_bit(c.bit_, params().eta_boot);
    ++counters_.bootstrap;
    record(Op::Bootstrap, 0, out.noise_);
    return out;
}

Trgsw SimBackend::circuit_bootstrap(const Tlwe &c)
{
    check_key(c);
    check_noise(c);
    Trgsw out;
    out.bit_ = c.bit_;
    out.key_id_ = keys_.key_id();
    out.trivial_ = false;
    out.noise_ = params().eta_cb;
    ++counters_.circuit_bootstrap;
    record(Op::CircuitBootstrap, 0, out.noise_);
    return out;
}

Tlwe SimBackend::randomize(const Tlwe &c)
{
    check_key(c);
    Tlwe out = c;
    out.key_id_ = keys_.key_id();
    out.trivial_ = false;
    out.noise_ = c.noise_ + params().eta_fresh;
    out.nonce_ = {rng_(), rng_()};
    record(Op::Randomize, 0, out.noise_);
    return out;
}

Trlwe SimBackend::bootstrap_slots(const Trlwe &c, std::uint32_t width)
{
    if (width == 0 || width > c.slots_)
        throw ConfigError("bootstrap_slots width must be in 1..N");
    check_key(c);
    check_noise(c);
    auto words = std::make_shared<std::vector<std::uint64_t>>(words_for(c.slots_), 0);
    for (std::uint32_t k = 0; k < width; ++k)
        if (slot_bit(*c.words_, k))
            (*words)[k / 64] |= std::uint64_t{1} << (k % 64);
    Trlwe out;
    out.words_ = std::move(words);
    out.slots_ = c.slots_;
    out.key_id_ = keys_.key_id();
    out.trivial_ = false;
    out.noise_ = params().eta_boot;
    counters_.sample_extract += width;
    counters_.bootstrap += width;
    record(Op::BootstrapSlots, width, out.noise_);
    return out;
}

} // namespace oblimon::fhe
