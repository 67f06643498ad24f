#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "oblimon/error.hpp"
#include "oblimon/ltl.hpp"
#include "oblimon/protocol.hpp"

using namespace oblimon;
using namespace oblimon::protocol;

namespace {

using Trace = std::vector<std::vector<std::string>>;

SessionConfig config_for(std::vector<std::string> aps, Algorithm alg, std::uint64_t i_out = 1)
{
    SessionConfig c;
    c.ap_order = std::move(aps);
    c.algorithm = alg;
    c.i_out = i_out;
    return c;
}

std::shared_ptr<const CompiledMonitor> compile(const char *ltl, const std::vector<std::string> &aps,
                                               Algorithm alg)
{
    return CompiledMonitor::build(ltl::compile_binary_monitor(ltl::parse_ltl(ltl), aps), alg);
}

ClientSession client(std::uint64_t seed = 1)
{
    return ClientSession(fhe::keygen(fhe::NoiseParams{}, seed).first);
}

std::vector<Verdict> run_loopback(const char *ltl, const std::vector<std::string> &aps, Algorithm alg,
                                  std::uint64_t i_out, const Trace &trace,
                                  std::vector<std::string> *raw = nullptr)
{
    ServerSession server(compile(ltl, aps, alg), config_for(aps, alg, i_out), 11);
    ClientSession c = client();
    LoopbackChannel channel(server);
    return run_client(channel, c, trace, raw);
}

Trace random_trace(std::mt19937_64 &rng, const std::vector<std::string> &aps, std::size_t n)
{
    Trace t(n);
    for (auto &sigma : t)
        for (const auto &a : aps)
            if (rng() & 1U)
                sigma.push_back(a);
    return t;
}

} // namespace

TEST_CASE("encode_letter")
{
    const std::vector<std::string> aps{"p", "q", "r"};
    CHECK(encode_letter({"p", "r"}, aps) == std::vector<bool>{true, false, true});
    CHECK(encode_letter({}, aps) == std::vector<bool>{false, false, false});
    CHECK_THROWS_AS(encode_letter({"s"}, aps), UnknownAtomError);
    for (unsigned mask = 0; mask < 8; ++mask) {
        std::vector<std::string> sigma;
        for (unsigned j = 0; j < 3; ++j)
            if ((mask >> j) & 1U)
                sigma.push_back(aps[j]);
        CHECK(decode_letter(encode_letter(sigma, aps), aps) == sigma);
    }
}

TEST_CASE("client letters")
{
    ClientSession c = client();
    const auto aps = glucose_aps();
    c.on_server_hello(ServerHello{aps, Algorithm::Reverse, 1});
    auto sk = fhe::keygen(fhe::NoiseParams{}, 1).first;
    const LetterMsg a = c.send_letter({"p1"});
    REQUIRE(a.bits.size() == 9);
    // The test re-derives the client's key from the same seed to look inside.
    auto peek = [&](const fhe::Trgsw &d) {
        fhe::SimBackend b(sk.cloud_keys());
        return sk.dec_tlwe(b.sample_extract(0, b.cmux(d, b.trivial(1), b.trivial(0))));
    };
    CHECK(peek(a.bits[0]));
    for (std::size_t j = 1; j < 9; ++j)
        CHECK_FALSE(peek(a.bits[j]));
    CHECK(a.seq == 1);
    CHECK(c.send_letter({}).seq == 2);
}

TEST_CASE("serialized letters carry no plaintext bits")
{
    ClientSession c = client();
    c.on_server_hello(ServerHello{{"p"}, Algorithm::Reverse, 1});
    std::set<std::string> ones, zeros;
    for (int i = 0; i < 64; ++i) {
        const auto on = nlohmann::json::parse(encode_payload(c.send_letter({"p"})));
        const auto off = nlohmann::json::parse(encode_payload(c.send_letter({})));
        const auto &a = on["body"]["bits"][0], &b = off["body"]["bits"][0];
        CHECK(a.size() == b.size());
        ones.insert(a["payload"].get<std::string>());
        zeros.insert(b["payload"].get<std::string>());
        for (const auto *rec : {&a, &b})
            for (const auto &[key, value] : rec->items())
                if (key != "payload" && key != "nonce")
                    CHECK(value == (*(rec == &a ? &b : &a))[key]);
    }
    // Each payload value shows up for both bits, so the field says nothing by itself.
    std::size_t shared = 0;
    for (const auto &p : ones)
        shared += zeros.count(p);
    CHECK(shared > 0);
    CHECK(ones.size() > 1);
}

TEST_CASE("frames")
{
    const std::string end = frame_encode(End{});
    CHECK(end.substr(4) == R"({"type":"end"})");
    CHECK(end.substr(0, 4) == std::string("\0\0\0\x0e", 4));

    ClientSession c = client();
    c.on_server_hello(ServerHello{glucose_aps(), Algorithm::Block, 1});
    const Message letter = c.send_letter({"p2", "p9"});
    const std::string frame = frame_encode(letter);
    std::size_t used = 0;
    auto back = frame_decode(frame, used);
    REQUIRE(back.has_value());
    CHECK(used == frame.size());
    CHECK(frame_encode(*back) == frame);
    CHECK(std::get<LetterMsg>(*back).bits.size() == 9);

    for (std::size_t cut : {0, 3, 4, 5})
        CHECK_FALSE(frame_decode(std::string_view(frame).substr(0, cut), used).has_value());
    CHECK_FALSE(frame_decode(std::string_view(frame).substr(0, frame.size() - 1), used).has_value());

    // Two frames back to back decode one at a time.
    const std::string two = frame + end;
    REQUIRE(frame_decode(two, used).has_value());
    CHECK(std::holds_alternative<End>(*frame_decode(std::string_view(two).substr(used), used)));

    const std::string oversize("\x04\x00\x00\x01", 4);
    CHECK_THROWS_AS(frame_decode(oversize, used), ProtocolError);
    try {
        decode_payload(R"({"type":"bogus","seq":0,"body":{}})");
        FAIL("expected an error");
    } catch (const ProtocolError &e) {
        CHECK(e.code() == "unknown_type");
    }
    CHECK_THROWS_AS(decode_payload("not json"), ProtocolError);
    CHECK_THROWS_AS(decode_payload(R"({"type":"end","seq":0})"), ProtocolError);
    CHECK_THROWS_AS(decode_payload(R"({"type":"letter","seq":1,"body":{"bits":[{}]}})"), ProtocolError);

    for (const Message &m : std::vector<Message>{ErrorMsg{"out_of_order", "x"},
                                                 ServerHello{{"a", "b"}, Algorithm::Block, 3},
                                                 c.hello()}) {
        CHECK(encode_payload(decode_payload(encode_payload(m))) == encode_payload(m));
    }
}

TEST_CASE("end-to-end on G p")
{
    for (auto alg : {Algorithm::Reverse, Algorithm::Block}) {
        const auto v = run_loopback("G p", {"p"}, alg, 1, {{"p"}, {"p"}, {}});
        CHECK(v == std::vector<Verdict>{{1, false}, {2, false}, {3, true}});
    }
}

TEST_CASE("end-to-end equals the plaintext monitor")
{
    std::mt19937_64 rng(13);
    const std::vector<std::string> aps{"p", "q", "r"};
    for (const char *f : {"G(p -> F[0,3] q)", "G(p -> X(q | r))", "p U (q & X r)", "G[2,5] !r"}) {
        const auto binary = ltl::compile_binary_monitor(ltl::parse_ltl(f), aps);
        for (auto alg : {Algorithm::Reverse, Algorithm::Block})
            for (std::uint64_t i_out : {1, 2, 3}) {
                const Trace t = random_trace(rng, aps, 40);
                const auto v = run_loopback(f, aps, alg, i_out, t);
                CHECK(v == plaintext_verdicts(binary, aps, t, i_out));
                CHECK(v.size() == t.size() / i_out);
                for (std::size_t k = 1; k < v.size(); ++k)
                    CHECK((!v[k - 1].violation || v[k].violation));
            }
    }
}

TEST_CASE("results arrive only at multiples of i_out")
{
    const std::vector<std::string> aps{"p", "q"};
    ServerSession server(compile("G p", aps, Algorithm::Block), config_for(aps, Algorithm::Block, 3), 1);
    ClientSession c = client();
    auto hello = server.on_message(c.hello());
    REQUIRE(hello.size() == 1);
    c.on_server_hello(std::get<ServerHello>(hello[0]));
    std::vector<std::uint64_t> result_letters;
    for (int i = 1; i <= 10; ++i) {
        const auto out = server.on_message(c.send_letter({"p"}));
        if (!out.empty()) {
            const auto v = c.on_result(std::get<ResultMsg>(out.at(0)));
            result_letters.push_back(v.letter);
        }
    }
    CHECK(result_letters == std::vector<std::uint64_t>{3, 6, 9});
}

TEST_CASE("out-of-order letters leave the session intact")
{
    const std::vector<std::string> aps{"p"};
    ServerSession server(compile("G p", aps, Algorithm::Reverse), config_for(aps, Algorithm::Reverse), 1);
    ClientSession c = client();
    c.on_server_hello(std::get<ServerHello>(server.on_message(c.hello()).at(0)));
    const LetterMsg first = c.send_letter({"p"});
    const auto r1 = server.on_message(first);
    REQUIRE(std::holds_alternative<ResultMsg>(r1.at(0)));
    CHECK(c.on_result(std::get<ResultMsg>(r1[0])) == Verdict{1, false});
    const auto replay = server.on_message(first);
    REQUIRE(replay.size() == 1);
    CHECK(std::get<ErrorMsg>(replay[0]).code == "out_of_order");
    CHECK_FALSE(server.closed());
    const auto next = server.on_message(c.send_letter({}));
    const Verdict v = c.on_result(std::get<ResultMsg>(next.at(0)));
    CHECK(v == Verdict{2, true});

    LetterMsg wrong = c.send_letter({});
    wrong.bits.push_back(wrong.bits[0]);
    CHECK(std::get<ErrorMsg>(server.on_message(wrong).at(0)).code == "malformed");
    CHECK_FALSE(server.closed());
}

TEST_CASE("server rejects protocol misuse")
{
    const std::vector<std::string> aps{"p"};
    auto monitor = compile("G p", aps, Algorithm::Reverse);
    {
        ServerSession server(monitor, config_for(aps, Algorithm::Reverse), 1);
        ClientSession c = client();
        c.on_server_hello(ServerHello{aps, Algorithm::Reverse, 1});
        CHECK(std::get<ErrorMsg>(server.on_message(c.send_letter({"p"})).at(0)).code == "unexpected");
        CHECK(server.closed());
    }
    {
        ServerSession server(monitor, config_for(aps, Algorithm::Reverse), 1);
        ClientHello h = client().hello();
        h.version = "oblimon/0";
        CHECK(std::get<ErrorMsg>(server.on_message(h).at(0)).code == "version");
    }
    {
        // Ciphertexts under a key other than the announced one.
        ServerSession server(monitor, config_for(aps, Algorithm::Reverse), 1);
        ClientSession honest = client(1), other = client(2);
        server.on_message(honest.hello());
        other.on_server_hello(ServerHello{aps, Algorithm::Reverse, 1});
        CHECK(std::get<ErrorMsg>(server.on_message(other.send_letter({"p"})).at(0)).code == "key_mismatch");
    }
    CHECK_THROWS_AS(ServerSession(compile("G p", aps, Algorithm::Block), config_for(aps, Algorithm::Reverse), 1),
                    ConfigError);
}

TEST_CASE("client checks results")
{
    ClientSession c = client();
    c.on_server_hello(ServerHello{{"p"}, Algorithm::Reverse, 2});
    c.send_letter({"p"});
    CHECK_FALSE(c.awaiting_result());
    c.send_letter({"p"});
    CHECK(c.awaiting_result());
    auto [sk, ck] = fhe::keygen(fhe::NoiseParams{}, 1);
    ResultMsg r{2, sk.enc_tlwe(true)};
    CHECK_THROWS_AS(c.on_result(r), ProtocolError);
    r.seq = 1;
    CHECK(c.on_result(r) == Verdict{2, true});

    // A randomized copy of a result decrypts the same.
    fhe::SimBackend b(ck, 3);
    const fhe::Tlwe t = sk.enc_tlwe(true);
    const fhe::Tlwe t2 = b.randomize(t);
    CHECK_FALSE(t.nonce() == t2.nonce());
    CHECK(sk.dec_tlwe(t2) == sk.dec_tlwe(t));
}

TEST_CASE("server operation trace is blind to ciphertext payloads")
{
    const auto aps = glucose_aps();
    const auto monitor = CompiledMonitor::build(
        ltl::compile_binary_monitor(ltl::parse_ltl("G((!p7 & !p8 & !p9) -> F[0,5](p7 | p8 | p9))"), aps),
        Algorithm::Reverse);
    std::mt19937_64 rng(17);
    const Trace real = synthetic_glucose_trace(60, 3);
    const Trace scrambled = random_trace(rng, aps, 60);
    for (auto alg : {Algorithm::Reverse, Algorithm::Block}) {
        auto traced = [&](const Trace &t) {
            auto m = alg == Algorithm::Block ? CompiledMonitor::build(monitor->binary, alg) : monitor;
            ServerSession server(m, config_for(aps, alg), 5);
            std::vector<fhe::TraceEvent> ops;
            server.set_trace(&ops);
            ClientSession c = client(9);
            LoopbackChannel channel(server);
            run_client(channel, c, t);
            return ops;
        };
        const auto a = traced(real), b = traced(scrambled);
        CHECK(a.size() > 0);
        CHECK(a == b);
    }
}

TEST_CASE("TCP and loopback carry identical results")
{
    const auto aps = glucose_aps();
    const Trace t = synthetic_glucose_trace(80, 21);
    const char *f = "G((!p7 & !p8 & !p9) -> F[0,4](p7 | p8 | p9))";
    for (auto alg : {Algorithm::Reverse, Algorithm::Block}) {
        auto monitor = compile(f, aps, alg);
        std::vector<std::string> local, remote;
        {
            ServerSession server(monitor, config_for(aps, alg), 42);
            ClientSession c = client(8);
            LoopbackChannel channel(server);
            run_client(channel, c, t, &local);
        }
        TcpServer server("127.0.0.1:0", [&](std::uint64_t k) {
            return ServerSession(monitor, config_for(aps, alg), 42 + k);
        });
        std::thread worker([&] { server.serve(1); });
        std::vector<Verdict> verdicts;
        {
            auto channel = connect_tcp("127.0.0.1:" + std::to_string(server.port()));
            ClientSession c = client(8);
            verdicts = run_client(*channel, c, t, &remote);
        }
        worker.join();
        CHECK(local.size() == 80);
        CHECK(local == remote);
        CHECK(verdicts == plaintext_verdicts(monitor->binary, aps, t, 1));
        CHECK(server.finished_counters().size() == 1);
    }
}

TEST_CASE("TCP server handles concurrent sessions")
{
    const std::vector<std::string> aps{"p", "q"};
    auto monitor = compile("G(p -> X q)", aps, Algorithm::Reverse);
    TcpServer server("127.0.0.1:0", [&](std::uint64_t k) {
        return ServerSession(monitor, config_for(aps, Algorithm::Reverse), k);
    });
    std::thread worker([&] { server.serve(4); });
    std::mt19937_64 rng(19);
    std::vector<Trace> traces;
    for (int i = 0; i < 4; ++i)
        traces.push_back(random_trace(rng, aps, 30));
    std::vector<std::vector<Verdict>> got(4);
    std::vector<std::thread> clients;
    for (int i = 0; i < 4; ++i)
        clients.emplace_back([&, i] {
            auto channel = connect_tcp("127.0.0.1:" + std::to_string(server.port()));
            ClientSession c = client(100 + i);
            got[i] = run_client(*channel, c, traces[i]);
        });
    for (auto &c : clients)
        c.join();
    worker.join();
    for (int i = 0; i < 4; ++i)
        CHECK(got[i] == plaintext_verdicts(monitor->binary, aps, traces[i], 1));
}

TEST_CASE("trace files")
{
    std::istringstream in("{\"ap\":[\"p1\",\"p7\"]}\n\n{\"ap\":[]}\n");
    const Trace t = read_trace_jsonl(in);
    CHECK(t == Trace{{"p1", "p7"}, {}});
    std::ostringstream out;
    write_trace_jsonl(out, t);
    CHECK(out.str() == "{\"ap\":[\"p1\",\"p7\"]}\n{\"ap\":[]}\n");
    std::istringstream bad("{\"ap\":3}\n");
    CHECK_THROWS_AS(read_trace_jsonl(bad), ConfigError);
}

TEST_CASE("synthetic glucose traces")
{
    const Trace a = synthetic_glucose_trace(721, 1);
    CHECK(a.size() == 721);
    CHECK(a == synthetic_glucose_trace(721, 1));
    CHECK(a != synthetic_glucose_trace(721, 2));
    const auto aps = glucose_aps();
    std::size_t low = 0;
    for (const auto &sigma : a) {
        const auto bits = encode_letter(sigma, aps);
        unsigned v = 0;
        for (unsigned j = 0; j < 9; ++j)
            v |= static_cast<unsigned>(bits[j]) << j;
        low += v < 64;
    }
    CHECK(low > 0);
    CHECK(low < a.size() / 2);
}
