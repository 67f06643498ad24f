#include <set>

#include "doctest.h"
#include "json.hpp"
#include "oblimon/error.hpp"
#include "oblimon/fhe.hpp"

using namespace oblimon;
using namespace oblimon::fhe;

namespace {

struct Fixture {
    NoiseParams params = [] {
        NoiseParams p;
        p.N = 16;
        p.theta = 100;
        p.cmux_cost = 3;
        p.eta_boot = 5;
        p.eta_cb = 7;
        p.eta_fresh = 2;
        return p;
    }();
    std::pair<SecretKey, CloudKeys> keys = keygen(params, 99);
    SecretKey &sk = keys.first;
    SimBackend backend{keys.second, 1};

    // A TRLWE holding `value` with exactly `noise`, built from public operations.
    Trlwe with_noise(std::uint64_t value, std::uint64_t noise)
    {
        REQUIRE(noise % params.cmux_cost == 0);
        Trlwe c = backend.trivial(value);
        const Trgsw one = sk.enc_trgsw(true);
        for (std::uint64_t i = 0; i < noise / params.cmux_cost; ++i)
            c = backend.cmux(one, c, c);
        REQUIRE(c.noise() == noise);
        return c;
    }

    std::uint64_t value(const Trlwe &c)
    {
        const auto slots = sk.dec_trlwe(c);
        std::uint64_t v = 0;
        for (std::size_t k = 0; k < slots.size() && k < 64; ++k)
            v |= static_cast<std::uint64_t>(slots[k]) << k;
        return v;
    }
};

} // namespace

TEST_CASE("trivial samples")
{
    Fixture f;
    const Trlwe c = f.backend.trivial(0b1011);
    CHECK(c.trivial());
    CHECK(c.key_id() == 0);
    CHECK(c.noise() == NoiseParams::eta_trivial);
    CHECK(c.slots() == 16);
    CHECK(f.value(c) == 0b1011);
    CHECK_THROWS_AS(f.backend.trivial(1U << 16), ConfigError);
}

TEST_CASE("cmux truth table and noise")
{
    Fixture f;
    for (int d = 0; d < 2; ++d)
        for (std::uint64_t t = 0; t < 4; ++t)
            for (std::uint64_t e = 0; e < 4; ++e)
                for (std::uint64_t nt : {0, 3, 9})
                    for (std::uint64_t ne : {0, 6}) {
                        const Trlwe ct = f.with_noise(t, nt), ce = f.with_noise(e, ne);
                        const Trlwe out = f.backend.cmux(f.sk.enc_trgsw(d == 1), ct, ce);
                        CHECK(f.value(out) == (d ? t : e));
                        CHECK(out.noise() == std::max(nt, ne) + f.params.cmux_cost);
                        CHECK(out.key_id() == f.sk.key_id());
                        CHECK_FALSE(out.trivial());
                    }
}

TEST_CASE("lookup truth table for up to three selectors")
{
    for (std::size_t n = 0; n <= 3; ++n) {
        Fixture f;
        std::vector<Trlwe> entries;
        for (std::size_t k = 0; k < (std::size_t{1} << n); ++k)
            entries.push_back(f.with_noise(100 + k, 3 * (k % 3)));
        std::uint64_t max_noise = 0;
        for (const auto &e : entries)
            max_noise = std::max(max_noise, e.noise());
        for (std::size_t sel = 0; sel < (std::size_t{1} << n); ++sel) {
            std::vector<Trgsw> selectors;
            for (std::size_t i = 0; i < n; ++i)
                selectors.push_back(f.sk.enc_trgsw((sel >> i) & 1U));
            const auto before = f.backend.counters();
            const Trlwe out = f.backend.lookup(entries, selectors);
            CHECK(f.value(out) == 100 + sel);
            CHECK(out.noise() == max_noise + n * f.params.cmux_cost);
            CHECK(f.backend.counters().lookup == before.lookup + 1);
            CHECK(f.backend.counters().lookup_cmux == before.lookup_cmux + (std::size_t{1} << n) - 1);
            CHECK(f.backend.counters().cmux == before.cmux);
        }
        std::vector<Trgsw> too_many(n + 1, f.sk.enc_trgsw(false));
        CHECK_THROWS_AS(f.backend.lookup(entries, too_many), ConfigError);
    }
}

TEST_CASE("sample_extract reads one slot and keeps the noise")
{
    Fixture f;
    const Trlwe c = f.with_noise(0b0110'1001, 12);
    for (std::uint32_t k = 0; k < 16; ++k) {
        const Tlwe t = f.backend.sample_extract(k, c);
        CHECK(f.sk.dec_tlwe(t) == (((0b0110'1001 >> k) & 1) != 0));
        CHECK(t.noise() == 12);
    }
    CHECK_THROWS_AS(f.backend.sample_extract(16, c), ConfigError);
}

TEST_CASE("bootstrap resets noise and fails at theta")
{
    Fixture f;
    for (int bit = 0; bit < 2; ++bit) {
        CHECK(f.value(f.backend.bootstrap(f.sk.enc_tlwe(bit == 1))) == static_cast<std::uint64_t>(bit));
        for (std::uint64_t noise : {3, 96, 99}) {
            const Trlwe src = f.with_noise(static_cast<std::uint64_t>(bit) | 0b110, noise);
            const Tlwe t = f.backend.sample_extract(0, src);
            const Trlwe out = f.backend.bootstrap(t);
            CHECK(f.value(out) == static_cast<std::uint64_t>(bit));
            CHECK(out.noise() == f.params.eta_boot);
        }
    }
    // noise = theta exactly.
    NoiseParams p;
    p.N = 8;
    p.theta = 9;
    p.cmux_cost = 3;
    auto [sk, ck] = keygen(p, 5);
    SimBackend b(ck);
    Trlwe c = b.trivial(1);
    const Trgsw one = sk.enc_trgsw(true);
    for (int i = 0; i < 2; ++i)
        c = b.cmux(one, c, c);
    CHECK(b.bootstrap(b.sample_extract(0, c)).noise() == p.eta_boot);
    c = b.cmux(one, c, c);
    REQUIRE(c.noise() == p.theta);
    CHECK_THROWS_AS(b.bootstrap(b.sample_extract(0, c)), NoiseOverflowError);
    CHECK_THROWS_AS(b.circuit_bootstrap(b.sample_extract(0, c)), NoiseOverflowError);
    CHECK_THROWS_AS(b.bootstrap_slots(c, 1), NoiseOverflowError);
    CHECK_THROWS_AS(sk.dec_trlwe(c), NoiseOverflowError);
    CHECK_THROWS_AS(sk.dec_tlwe(b.sample_extract(0, c)), NoiseOverflowError);
}

TEST_CASE("circuit bootstrap yields a fresh selector")
{
    Fixture f;
    for (int bit = 0; bit < 2; ++bit) {
        const Trlwe src = f.with_noise(static_cast<std::uint64_t>(bit), 30);
        const Trgsw d = f.backend.circuit_bootstrap(f.backend.sample_extract(0, src));
        CHECK(d.noise() == f.params.eta_cb);
        const Trlwe out = f.backend.cmux(d, f.backend.trivial(5), f.backend.trivial(2));
        CHECK(f.value(out) == (bit ? 5u : 2u));
    }
}

TEST_CASE("randomize keeps the payload and draws a new nonce")
{
    Fixture f;
    for (int bit = 0; bit < 2; ++bit) {
        const Tlwe t = f.backend.sample_extract(0, f.with_noise(static_cast<std::uint64_t>(bit), 9));
        const Tlwe r1 = f.backend.randomize(t);
        const Tlwe r2 = f.backend.randomize(t);
        CHECK(f.sk.dec_tlwe(r1) == (bit == 1));
        CHECK(f.sk.dec_tlwe(r2) == (bit == 1));
        CHECK(r1.noise() == 9 + f.params.eta_fresh);
        CHECK_FALSE(r1.nonce() == r2.nonce());
        CHECK_FALSE(r1.nonce() == t.nonce());
        CHECK(to_json(r1) != to_json(r2));
    }
}

TEST_CASE("bootstrap_slots refreshes a prefix of slots")
{
    Fixture f;
    const Trlwe c = f.with_noise(0b1111'0101, 30);
    const auto before = f.backend.counters();
    const Trlwe out = f.backend.bootstrap_slots(c, 4);
    CHECK(f.value(out) == 0b0101);
    CHECK(out.noise() == f.params.eta_boot);
    CHECK(f.backend.counters().bootstrap == before.bootstrap + 4);
    CHECK(f.backend.counters().sample_extract == before.sample_extract + 4);
    CHECK_THROWS_AS(f.backend.bootstrap_slots(c, 0), ConfigError);
    CHECK_THROWS_AS(f.backend.bootstrap_slots(c, 17), ConfigError);
}

TEST_CASE("keys are separated")
{
    Fixture f;
    auto [other_sk, other_ck] = keygen(f.params, 12345);
    CHECK(other_sk.key_id() != f.sk.key_id());
    const Trgsw foreign = other_sk.enc_trgsw(true);
    CHECK_THROWS_AS(f.backend.cmux(foreign, f.backend.trivial(1), f.backend.trivial(0)), KeyMismatchError);
    const Tlwe mine = f.sk.enc_tlwe(true);
    CHECK_THROWS_AS(other_sk.dec_tlwe(mine), KeyMismatchError);
    CHECK_THROWS_AS(f.backend.bootstrap(other_sk.enc_tlwe(false)), KeyMismatchError);
    // Trivial samples decrypt under any key.
    CHECK(other_sk.dec_trlwe(f.backend.trivial(1))[0]);
}

TEST_CASE("noise parameter validation")
{
    NoiseParams p;
    CHECK_NOTHROW(p.validate());
    p.eta_boot = p.theta;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = NoiseParams{};
    p.N = 1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = NoiseParams{};
    p.cmux_cost = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK_THROWS_AS(CloudKeys(0, NoiseParams{}), ConfigError);
}

TEST_CASE("operation trace")
{
    Fixture f;
    std::vector<TraceEvent> trace;
    f.backend.set_trace(&trace);
    const Trlwe a = f.backend.trivial(1);
    const Trlwe b = f.backend.cmux(f.sk.enc_trgsw(false), a, a);
    f.backend.bootstrap(f.backend.sample_extract(0, b));
    f.backend.set_trace(nullptr);
    f.backend.trivial(0);
    REQUIRE(trace.size() == 4);
    CHECK(trace[0] == TraceEvent{Op::Trivial, 1, 0});
    CHECK(trace[1] == TraceEvent{Op::CMux, 0, 3});
    CHECK(trace[2] == TraceEvent{Op::SampleExtract, 0, 3});
    CHECK(trace[3] == TraceEvent{Op::Bootstrap, 0, 5});
    CHECK(std::string(op_name(Op::CircuitBootstrap)) == "circuit_bootstrap");
}

TEST_CASE("serialization round-trips and hides payloads")
{
    Fixture f;
    for (int bit = 0; bit < 2; ++bit) {
        const Trgsw d = f.sk.enc_trgsw(bit == 1);
        const Trgsw back = trgsw_from_json(to_json(d));
        CHECK(to_json(back) == to_json(d));
        const Trlwe out = f.backend.cmux(back, f.backend.trivial(1), f.backend.trivial(0));
        CHECK(f.value(out) == static_cast<std::uint64_t>(bit));

        const Tlwe t = f.sk.enc_tlwe(bit == 1);
        CHECK(f.sk.dec_tlwe(tlwe_from_json(to_json(t))) == (bit == 1));
    }
    const Trlwe wide = f.with_noise(0xBEEF, 6);
    const Trlwe wide_back = trlwe_from_json(to_json(wide));
    CHECK(f.value(wide_back) == 0xBEEF);
    CHECK(wide_back.noise() == 6);

    // The payload field of many encryptions of 1 is not constant, and does not spell
    // the bit.
    std::set<std::string> payloads;
    for (int i = 0; i < 32; ++i) {
        const auto j = nlohmann::json::parse(to_json(f.sk.enc_trgsw(true)));
        payloads.insert(j["payload"].get<std::string>());
    }
    CHECK(payloads.size() > 16);

    CHECK(cloud_keys_from_json(to_json(f.keys.second)).key_id() == f.sk.key_id());
    CHECK(noise_params_from_json(to_json(f.params)) == f.params);

    CHECK_THROWS_AS(tlwe_from_json("{"), ProtocolError);
    CHECK_THROWS_AS(tlwe_from_json(to_json(f.sk.enc_trgsw(true))), ProtocolError);
    auto j = nlohmann::json::parse(to_json(f.sk.enc_tlwe(true)));
    j["payload"] = "zz";
    CHECK_THROWS_AS(tlwe_from_json(j.dump()), ProtocolError);
    j.erase("payload");
    CHECK_THROWS_AS(tlwe_from_json(j.dump()), ProtocolError);
}

TEST_CASE("keygen is deterministic under a seed")
{
    NoiseParams p;
    auto [a, ca] = keygen(p, 7);
    auto [b, cb] = keygen(p, 7);
    CHECK(a.key_id() == b.key_id());
    CHECK(to_json(a.enc_tlwe(true)) == to_json(b.enc_tlwe(true)));
}
