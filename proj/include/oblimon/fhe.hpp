#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace oblimon::fhe {

/// Noise model of the simulated backend. A ciphertext decrypts iff noise < theta.
struct NoiseParams {
    std::uint32_t N = 1024;
    std::uint64_t theta = 32768;
    std::uint64_t eta_fresh = 1;
    std::uint64_t cmux_cost = 1;
    std::uint64_t eta_boot = 1;
    std::uint64_t eta_cb = 1;

    /// Trivial samples are noise-free.
    static constexpr std::uint64_t eta_trivial = 0;

    /// Throws ConfigError unless eta_boot < theta, eta_cb < theta, eta_fresh < theta,
    /// cmux_cost >= 1 and N >= 2.
    void validate() const;

    friend bool operator==(const NoiseParams &, const NoiseParams &) = default;
};

using KeyId = std::uint64_t;

struct Nonce {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    friend bool operator==(const Nonce &, const Nonce &) = default;
};

/// Common metadata of the three ciphertext kinds. Trivial ciphertexts carry key id 0.
class CiphertextMeta {
public:
    KeyId key_id() const
    {
        return key_id_;
    }

    bool trivial() const
    {
        return trivial_;
    }

    std::uint64_t noise() const
    {
        return noise_;
    }

    const Nonce &nonce() const
    {
        return nonce_;
    }

protected:
    KeyId key_id_ = 0;
    bool trivial_ = true;
    std::uint64_t noise_ = 0;
    Nonce nonce_{};

    friend class SimBackend;
    friend class SecretKey;
    friend struct Codec;
};

/// Encrypts one bit.
class Tlwe : public CiphertextMeta {
private:
    bool bit_ = false;
    friend class SimBackend;
    friend class SecretKey;
    friend struct Codec;
};

/// Encrypts one bit; usable as a CMux selector.
class Trgsw : public CiphertextMeta {
private:
    bool bit_ = false;
    friend class SimBackend;
    friend class SecretKey;
    friend struct Codec;
};

/// Encrypts an N-bit vector. Payloads are shared between copies.
class Trlwe : public CiphertextMeta {
public:
    std::uint32_t slots() const
    {
        return slots_;
    }

private:
    std::shared_ptr<const std::vector<std::uint64_t>> words_;
    std::uint32_t slots_ = 0;
    friend class SimBackend;
    friend class SecretKey;
    friend struct Codec;
};

/// Public and bootstrapping key material. Cannot decrypt.
class CloudKeys {
public:
    CloudKeys(KeyId id, NoiseParams params);

    KeyId key_id() const
    {
        return id_;
    }

    const NoiseParams &params() const
    {
        return params_;
    }

private:
    KeyId id_;
    NoiseParams params_;
};

class SecretKey {
public:
    KeyId key_id() const
    {
        return id_;
    }

    const NoiseParams &params() const
    {
        return params_;
    }

    CloudKeys cloud_keys() const
    {
        return CloudKeys(id_, params_);
    }

    Trgsw enc_trgsw(bool bit);
    Tlwe enc_tlwe(bool bit);

    /// Throws KeyMismatchError or NoiseOverflowError.
    bool dec_tlwe(const Tlwe &c) const;
    /// Slot values of a TRLWE; same error contract as dec_tlwe.
    std::vector<bool> dec_trlwe(const Trlwe &c) const;

private:
    SecretKey(KeyId id, NoiseParams params, std::uint64_t seed);
    void check(const CiphertextMeta &c) const;
    Nonce fresh_nonce();

    KeyId id_;
    NoiseParams params_;
    std::mt19937_64 rng_;

    friend std::pair<SecretKey, CloudKeys> keygen(const NoiseParams &params, std::uint64_t seed);
};

/// Deterministic under `seed`; validates params.
std::pair<SecretKey, CloudKeys> keygen(const NoiseParams &params, std::uint64_t seed);
/// Seeded from std::random_device.
std::pair<SecretKey, CloudKeys> keygen(const NoiseParams &params);

/// Tallies of every operation a backend or runner has performed.
struct OpCounters {
    std::uint64_t cmux = 0;
    std::uint64_t bootstrap = 0;
    std::uint64_t circuit_bootstrap = 0;
    std::uint64_t sample_extract = 0;
    /// LookUp calls, and the CMuxes inside their trees (not included in `cmux`).
    std::uint64_t lookup = 0;
    std::uint64_t lookup_cmux = 0;

    OpCounters &operator+=(const OpCounters &o);
    friend bool operator==(const OpCounters &, const OpCounters &) = default;
};

enum class Op : std::uint8_t {
    Trivial,
    CMux,
    LookUp,
    SampleExtract,
    Bootstrap,
    CircuitBootstrap,
    Randomize,
    BootstrapSlots,
};

const char *op_name(Op op);

/// One recorded backend call: operation, integer argument (slot index, selector
/// count, or trivial value) and the noise of the result.
struct TraceEvent {
    Op op;
    std::uint64_t arg;
    std::uint64_t noise;

    friend bool operator==(const TraceEvent &, const TraceEvent &) = default;
};

/// Noise-accounting stand-in for TFHE. Payload transformations follow the plaintext
/// semantics of each operation; every result records its noise level.
class SimBackend {
public:
    using TlweCt = Tlwe;
    using TrlweCt = Trlwe;
    using TrgswCt = Trgsw;

    explicit SimBackend(CloudKeys keys, std::uint64_t seed = 0x5eed);

    const NoiseParams &params() const
    {
        return keys_.params();
    }

    const CloudKeys &keys() const
    {
        return keys_;
    }

    /// Bits of n in slots 0..N-1, least significant first. Throws ConfigError if n >= 2^N.
    Trlwe trivial(std::uint64_t n);
    Trlwe cmux(const Trgsw &d, const Trlwe &c_true, const Trlwe &c_false);
    /// entries[k] with k = Σ 2^i·Dec(selectors[i]); entries.size() must be 2^|selectors|.
    Trlwe lookup(std::span<const Trlwe> entries, std::span<const Trgsw> selectors);
    Tlwe sample_extract(std::uint32_t k, const Trlwe &c);
    Trlwe bootstrap(const Tlwe &c);
    Trgsw circuit_bootstrap(const Tlwe &c);
    Tlwe randomize(const Tlwe &c);
    /// Slot-wise refresh of slots 0..width-1: one SampleExtract and one Bootstrapping
    /// per slot, repacked into one TRLWE with noise eta_boot.
    Trlwe bootstrap_slots(const Trlwe &c, std::uint32_t width);

    const OpCounters &counters() const
    {
        return counters_;
    }

    /// Records subsequent operations into `trace` (nullptr stops recording).
    void set_trace(std::vector<TraceEvent> *trace)
    {
        trace_ = trace;
    }

private:
    void check_key(const CiphertextMeta &c) const;
    void check_noise(const CiphertextMeta &c) const;
    void record(Op op, std::uint64_t arg, std::uint64_t noise);
    Trlwe single_bit(bool bit, std::uint64_t noise);

    CloudKeys keys_;
    std::mt19937_64 rng_;
    OpCounters counters_;
    std::vector<TraceEvent> *trace_ = nullptr;
    std::shared_ptr<const std::vector<std::uint64_t>> zero_, one_;
};

/// The operation set the engines are written against. A real TFHE library is wired
/// in by providing a type with these members.
template <class B>
concept HomomorphicBackend = requires(B &b, const typename B::TrgswCt &d, const typename B::TrlweCt &c,
                                      const typename B::TlweCt &t, std::span<const typename B::TrlweCt> entries,
                                      std::span<const typename B::TrgswCt> selectors, std::uint64_t n,
                                      std::uint32_t k) {
    { b.params() } -> std::convertible_to<const NoiseParams &>;
    { b.trivial(n) } -> std::same_as<typename B::TrlweCt>;
    { b.cmux(d, c, c) } -> std::same_as<typename B::TrlweCt>;
    { b.lookup(entries, selectors) } -> std::same_as<typename B::TrlweCt>;
    { b.sample_extract(k, c) } -> std::same_as<typename B::TlweCt>;
    { b.bootstrap(t) } -> std::same_as<typename B::TrlweCt>;
    { b.circuit_bootstrap(t) } -> std::same_as<typename B::TrgswCt>;
    { b.randomize(t) } -> std::same_as<typename B::TlweCt>;
    { b.bootstrap_slots(c, k) } -> std::same_as<typename B::TrlweCt>;
};

static_assert(HomomorphicBackend<SimBackend>);

/// Canonical JSON wire form: {"N", "key_id", "kind", "noise", "nonce", "payload",
/// "trivial"}, nonce as 32 hex digits. The payload is hex of the slot bits (slot k in
/// byte k/8, bit k%8) XORed with a keystream derived from key id, nonce and kind.
std::string to_json(const Tlwe &c);
std::string to_json(const Trgsw &c);
std::string to_json(const Trlwe &c);
/// Throw ProtocolError("malformed", ...) on schema violations.
Tlwe tlwe_from_json(std::string_view text);
Trgsw trgsw_from_json(std::string_view text);
Trlwe trlwe_from_json(std::string_view text);

std::string to_json(const CloudKeys &keys);
CloudKeys cloud_keys_from_json(std::string_view text);
std::string to_json(const NoiseParams &params);
NoiseParams noise_params_from_json(std::string_view text);

} // namespace oblimon::fhe
