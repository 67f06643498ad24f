// Command-line front end: compile, monitor, serve, client, bench, equiv, trace-gen.

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "oblimon/automata.hpp"
#include "oblimon/engine.hpp"
#include "oblimon/fhe.hpp"
#include "oblimon/ltl.hpp"
#include "oblimon/protocol.hpp"

namespace {

using namespace oblimon;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

/// Flag combination rejected before any work starts.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string &path)
{
    if (path == "-") {
        std::ostringstream s;
        s << std::cin.rdbuf();
        return s.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::string &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text))
        throw std::runtime_error("cannot write '" + path + "'");
}

// "p1,p2,q" or a range "p1..p9" (also mixed: "a,p1..p3").
std::vector<std::string> parse_aps(const std::string &spec)
{
    std::vector<std::string> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            throw UsageError("empty atom in --ap");
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(item);
            continue;
        }
        const std::string lo = item.substr(0, dots), hi = item.substr(dots + 2);
        const auto split = [&](const std::string &s) {
            const auto d = s.find_first_of("0123456789");
            if (d == std::string::npos || d == 0 || s.find_first_not_of("0123456789", d) != std::string::npos)
                throw UsageError("bad atom range '" + item + "'");
            return std::pair{s.substr(0, d), std::stoul(s.substr(d))};
        };
        const auto [p1, a] = split(lo);
        const auto [p2, b] = split(hi);
        if (p1 != p2 || a > b || b - a > 64)
            throw UsageError("bad atom range '" + item + "'");
        for (auto i = a; i <= b; ++i)
            out.push_back(p1 + std::to_string(i));
    }
    if (out.empty())
        throw UsageError("--ap is empty");
    return out;
}

std::vector<std::vector<std::string>> load_trace(const std::string &path)
{
    std::istringstream in(read_file(path));
    return protocol::read_trace_jsonl(in);
}

struct MonitorFlags {
    std::string ltl;
    std::string ap;
    std::string alg = "reverse";
    std::uint64_t i_out = 1;
    std::uint64_t i_boot = 30000;
    std::uint64_t block_boot = 0;
    std::size_t max_states = automata::kDefaultMaxStates;
};

void add_monitor_flags(CLI::App *cmd, MonitorFlags &f)
{
    cmd->add_option("--ltl", f.ltl, "LTL formula file ('-' for stdin)")->required();
    cmd->add_option("--ap", f.ap, "Atomic propositions, e.g. p1,p2 or p1..p9")->required();
    cmd->add_option("--alg", f.alg, "reverse or block")->check(CLI::IsMember({"reverse", "block"}));
    cmd->add_option("--iout", f.i_out, "Output interval in letters")->check(CLI::PositiveNumber);
    cmd->add_option("--iboot", f.i_boot, "Bootstrapping interval of Reverse")->check(CLI::PositiveNumber);
    cmd->add_option("--block-boot", f.block_boot, "Refresh interval inside a Block pass (0 = off)");
    cmd->add_option("--max-states", f.max_states, "State budget of the automaton constructions");
}

protocol::SessionConfig session_config(const MonitorFlags &f)
{
    protocol::SessionConfig c;
    c.ap_order = parse_aps(f.ap);
    c.algorithm = protocol::parse_algorithm(f.alg);
    c.i_out = f.i_out;
    c.engine.i_boot = f.i_boot;
    c.engine.block_boot_interval = f.block_boot;
    try {
        c.validate();
        if (c.algorithm == protocol::Algorithm::Reverse)
            c.effective_engine().validate_bootstrapping(fhe::NoiseParams{});
        else
            c.effective_engine().validate_block(fhe::NoiseParams{});
    } catch (const ConfigError &e) {
        throw UsageError(e.what());
    }
    return c;
}

automata::Dfa compile_monitor(const std::string &ltl_path, const std::vector<std::string> &aps,
                              std::size_t max_states)
{
    return ltl::compile_binary_monitor(ltl::parse_ltl(read_file(ltl_path)), aps, max_states);
}

void print_verdicts(const std::vector<protocol::Verdict> &vs, bool as_json)
{
    for (const auto &v : vs) {
        if (as_json)
            std::cout << json{{"i", v.letter}, {"verdict", v.violation ? 1 : 0}}.dump() << '\n';
        else
            std::cout << "i=" << v.letter << " verdict=" << (v.violation ? 1 : 0) << '\n';
    }
}

int verdict_exit(const std::vector<protocol::Verdict> &vs, bool fail_on_violation)
{
    const bool any = std::any_of(vs.begin(), vs.end(), [](const auto &v) { return v.violation; });
    return fail_on_violation && any ? kViolation : kOk;
}

std::string witness_string(const std::vector<automata::Symbol> &w, const automata::Alphabet &a)
{
    if (w.empty())
        return "ε";
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (a.is_binary()) {
            out += static_cast<char>('0' + w[i]);
        } else {
            if (i)
                out += ' ';
            out += std::to_string(w[i]);
        }
    }
    return out;
}

json counters_json(const fhe::OpCounters &c)
{
    return json{{"bootstrap", c.bootstrap},         {"circuit_bootstrap", c.circuit_bootstrap},
                {"cmux", c.cmux},                   {"lookup", c.lookup},
                {"lookup_cmux", c.lookup_cmux},     {"sample_extract", c.sample_extract}};
}

struct BenchFlags {
    std::size_t m = 0;
    std::size_t n = 0;
    std::string alg = "reverse";
    std::uint64_t i_boot = 30000;
    std::uint64_t block = 1;
    std::uint64_t block_boot = 0;
    std::uint64_t seed = 1;
    std::uint64_t theta = fhe::NoiseParams{}.theta;
};

json run_bench(const BenchFlags &f)
{
    fhe::NoiseParams params;
    params.theta = f.theta;
    auto [sk, ck] = fhe::keygen(params, f.seed);
    fhe::SimBackend backend(ck, f.seed);
    const automata::Dfa m = automata::gen_mod_counter(f.m);

    std::mt19937_64 rng(f.seed);
    std::bernoulli_distribution coin(0.5);
    std::vector<automata::Symbol> word(f.n);
    std::vector<fhe::Trgsw> ds;
    ds.reserve(f.n);
    for (auto &b : word) {
        b = coin(rng) ? 1 : 0;
        ds.push_back(sk.enc_trgsw(b == 1));
    }

    engine::EngineConfig config;
    config.i_boot = f.i_boot;
    config.block_size = f.block;
    config.block_boot_interval = f.block_boot;

    json out{{"alg", f.alg}, {"m", f.m}, {"n", f.n}, {"seed", f.seed}};
    fhe::OpCounters counters;
    bool last = false, expected = false;
    const auto start = std::chrono::steady_clock::now();
    if (f.alg == "reverse") {
        engine::ReverseRunner<fhe::SimBackend> runner(backend, m, config);
        out["reversed_states"] = runner.reversed().num_states();
        std::optional<fhe::Tlwe> v;
        for (const auto &d : ds)
            v = runner.feed(d);
        counters = runner.counters();
        if (v)
            last = sk.dec_tlwe(*v);
        expected = automata::run_word(m, word);
    } else if (f.alg == "block") {
        engine::BlockRunner<fhe::SimBackend> runner(backend, m, config);
        std::optional<fhe::Tlwe> v;
        for (const auto &d : ds)
            if (auto r = runner.feed(d))
                v = std::move(r);
        counters = runner.counters();
        if (v)
            last = sk.dec_tlwe(*v);
        const std::size_t covered = f.n / f.block * f.block;
        expected = automata::run_word(m, std::span(word).first(covered));
        out["blocks"] = runner.blocks_emitted();
    } else if (f.alg == "offline") {
        last = sk.dec_tlwe(engine::offline_eval(backend, m, ds, config, &counters));
        expected = automata::run_word(m, word);
    } else {
        last = sk.dec_tlwe(engine::leveled_offline_eval(backend, m, ds, &counters));
        expected = automata::run_word(m, word);
    }
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
    out.update(counters_json(counters));
    out["verdict"] = last ? 1 : 0;
    out["plaintext_verdict"] = expected ? 1 : 0;
    out["elapsed_ms"] = elapsed.count();
    return out;
}

int run(int argc, char **argv)
{
    CLI::App app{"Oblivious LTL monitoring over a simulated TFHE backend"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Machine-readable output");

    // compile
    auto *compile = app.add_subcommand("compile", "Compile an LTL formula to a binary monitor DFA");
    std::string c_ltl, c_ap, c_out;
    bool c_reverse = false, c_stats = false;
    std::size_t c_max = automata::kDefaultMaxStates;
    compile->add_option("--ltl", c_ltl, "LTL formula file ('-' for stdin)")->required();
    compile->add_option("--ap", c_ap, "Atomic propositions")->required();
    compile->add_option("--out", c_out, "Write the DFA here (the reversal goes to <out>.reversed)");
    compile->add_flag("--reverse", c_reverse, "Also build the minimum reversed DFA");
    compile->add_flag("--stats", c_stats, "Print states=<n> reversed_states=<m>");
    compile->add_option("--max-states", c_max, "State budget");

    // monitor
    auto *monitor = app.add_subcommand("monitor", "Run client and server in one process over a trace");
    MonitorFlags mf;
    std::string m_trace;
    std::uint64_t m_seed = 1;
    bool m_fail = false, m_check = false;
    add_monitor_flags(monitor, mf);
    monitor->add_option("--trace", m_trace, "JSON Lines trace")->required();
    monitor->add_option("--seed", m_seed, "Seed for keys and randomization");
    monitor->add_flag("--fail-on-violation", m_fail, "Exit 1 if any verdict is 1");
    monitor->add_flag("--check", m_check, "Compare against the plaintext monitor (exit 3 on mismatch)");

    // serve
    auto *serve = app.add_subcommand("serve", "Serve the monitor over TCP");
    MonitorFlags sf;
    std::string s_listen = "127.0.0.1:7070";
    std::uint64_t s_seed = 1;
    std::size_t s_sessions = 0;
    bool s_once = false;
    add_monitor_flags(serve, sf);
    serve->add_option("--listen", s_listen, "host:port (port 0 picks one)");
    serve->add_option("--seed", s_seed, "Base seed; session k uses seed + k");
    serve->add_option("--sessions", s_sessions, "Stop after this many sessions (0 = never)");
    serve->add_flag("--once", s_once, "Same as --sessions 1");

    // client
    auto *client = app.add_subcommand("client", "Send a trace to a monitor server");
    std::string cl_trace, cl_connect;
    std::uint64_t cl_seed = 1;
    bool cl_fail = false;
    client->add_option("--trace", cl_trace, "JSON Lines trace")->required();
    client->add_option("--connect", cl_connect, "host:port")->required();
    client->add_option("--seed", cl_seed, "Key seed");
    client->add_flag("--fail-on-violation", cl_fail, "Exit 1 if any verdict is 1");

    // bench
    auto *bench = app.add_subcommand("bench", "Evaluate the mod-m counter and report operation counts");
    BenchFlags bf;
    bench->add_option("--mod-m", bf.m, "Counter modulus m")->required()->check(CLI::PositiveNumber);
    bench->add_option("--n", bf.n, "Input length")->required();
    bench->add_option("--alg", bf.alg, "reverse, block, offline or leveled")
        ->check(CLI::IsMember({"reverse", "block", "offline", "leveled"}));
    bench->add_option("--iboot", bf.i_boot, "Bootstrapping interval")->check(CLI::PositiveNumber);
    bench->add_option("--block", bf.block, "Block size B")->check(CLI::PositiveNumber);
    bench->add_option("--block-boot", bf.block_boot, "Refresh interval inside a Block pass (0 = off)");
    bench->add_option("--theta", bf.theta, "Noise threshold")->check(CLI::PositiveNumber);
    bench->add_option("--seed", bf.seed, "Seed");

    // equiv
    auto *equiv = app.add_subcommand("equiv", "Compare two DFA files");
    std::vector<std::string> e_dfas;
    equiv->add_option("--dfa", e_dfas, "DFA file (give twice)")->required()->expected(2);

    // trace-gen
    auto *tracegen = app.add_subcommand("trace-gen", "Write a synthetic blood-glucose trace over p1..p9");
    std::size_t t_letters = 721;
    std::uint64_t t_seed = 1;
    tracegen->add_option("--letters", t_letters, "Trace length");
    tracegen->add_option("--seed", t_seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*compile) {
            const auto aps = parse_aps(c_ap);
            const automata::Dfa dfa = compile_monitor(c_ltl, aps, c_max);
            if (!c_out.empty())
                write_file(c_out, automata::to_text(dfa));
            std::optional<automata::Dfa> reversed;
            if (c_reverse || c_stats) {
                try {
                    reversed = automata::reverse_min(dfa, c_max);
                } catch (const StateLimitError &e) {
                    if (c_stats)
                        std::cout << "states=" << dfa.num_states() << " reversed_states=aborted\n";
                    throw;
                }
                if (c_reverse && !c_out.empty())
                    write_file(c_out + ".reversed", automata::to_text(*reversed));
            }
            if (c_stats) {
                if (as_json)
                    std::cout << json{{"states", dfa.num_states()}, {"reversed_states", reversed->num_states()}}.dump()
                              << '\n';
                else
                    std::cout << "states=" << dfa.num_states() << " reversed_states=" << reversed->num_states() << '\n';
            }
            return kOk;
        }

        if (*monitor) {
            const auto config = session_config(mf);
            const auto trace = load_trace(m_trace);
            const automata::Dfa dfa = compile_monitor(mf.ltl, config.ap_order, mf.max_states);
            auto compiled = protocol::CompiledMonitor::build(dfa, config.algorithm, mf.max_states);
            protocol::ServerSession server(compiled, config, m_seed);
            auto [sk, ck] = fhe::keygen(fhe::NoiseParams{}, m_seed);
            protocol::ClientSession cs(std::move(sk));
            protocol::LoopbackChannel channel(server);
            const auto verdicts = protocol::run_client(channel, cs, trace);
            print_verdicts(verdicts, as_json);
            if (m_check && verdicts != protocol::plaintext_verdicts(dfa, config.ap_order, trace, config.i_out)) {
                std::cerr << "error: encrypted verdicts differ from the plaintext monitor\n";
                return kRuntime;
            }
            return verdict_exit(verdicts, m_fail);
        }

        if (*serve) {
            const auto config = session_config(sf);
            auto compiled = protocol::CompiledMonitor::build(compile_monitor(sf.ltl, config.ap_order, sf.max_states),
                                                             config.algorithm, sf.max_states);
            protocol::TcpServer server(s_listen, [&](std::uint64_t k) {
                return protocol::ServerSession(compiled, config, s_seed + k);
            });
            std::cerr << "listening on port " << server.port() << std::endl;
            server.serve(s_once ? 1 : s_sessions);
            return kOk;
        }

        if (*client) {
            const auto trace = load_trace(cl_trace);
            auto channel = protocol::connect_tcp(cl_connect);
            auto [sk, ck] = fhe::keygen(fhe::NoiseParams{}, cl_seed);
            protocol::ClientSession cs(std::move(sk));
            const auto verdicts = protocol::run_client(*channel, cs, trace);
            print_verdicts(verdicts, as_json);
            return verdict_exit(verdicts, cl_fail);
        }

        if (*bench) {
            std::cout << run_bench(bf).dump() << '\n';
            return kOk;
        }

        if (*equiv) {
            const auto a = automata::from_text(read_file(e_dfas[0]));
            const auto b = automata::from_text(read_file(e_dfas[1]));
            const auto r = automata::dfa_equiv(a, b);
            if (r.equivalent)
                std::cout << "EQUIV\n";
            else
                std::cout << "DIFFER witness=" << witness_string(r.witness, a.alphabet()) << '\n';
            return kOk;
        }

        if (*tracegen) {
            protocol::write_trace_jsonl(std::cout, protocol::synthetic_glucose_trace(t_letters, t_seed));
            return kOk;
        }
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}

} // namespace

int main(int argc, char **argv)
{
    return run(argc, argv);
}
