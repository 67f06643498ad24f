#include <algorithm>
#include <istream>
#include <ostream>
#include <random>

#include "json.hpp"
#include "oblimon/protocol.hpp"

namespace oblimon::protocol {

using nlohmann::json;

std::vector<std::vector<std::string>> read_trace_jsonl(std::istream &in)
{
    std::vector<std::vector<std::string>> trace;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto bad = [&](const std::string &why) {
            return ConfigError("trace line " + std::to_string(lineno) + ": " + why);
        };
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error &e) {
            throw bad(e.what());
        }
        if (!j.is_object() || !j.contains("ap") || !j["ap"].is_array())
            throw bad("expected {\"ap\": [...]}");
        std::vector<std::string> sigma;
        for (const auto &a : j["ap"]) {
            if (!a.is_string())
                throw bad("atoms must be strings");
            sigma.push_back(a.get<std::string>());
        }
        trace.push_back(std::move(sigma));
    }
    return trace;
}

void write_trace_jsonl(std::ostream &out, const std::vector<std::vector<std::string>> &trace)
{
    for (const auto &sigma : trace)
        out << json{{"ap", sigma}}.dump() << '\n';
}

std::vector<std::string> glucose_aps()
{
    std::vector<std::string> aps;
    for (int j = 1; j <= 9; ++j)
        aps.push_back("p" + std::to_string(j));
    return aps;
}

std::vector<std::vector<std::string>> synthetic_glucose_trace(std::size_t letters, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, 6.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> dip_length(5, 40);
    std::uniform_int_distribution<int> dip_floor(40, 60);

    const auto aps = glucose_aps();
    std::vector<std::vector<std::string>> trace;
    trace.reserve(letters);
    double level = 140.0;
    int dip_left = 0;
    int floor = 50;
    for (std::size_t i = 0; i < letters; ++i) {
        if (dip_left == 0 && unit(rng) < 0.012) {
            dip_left = dip_length(rng);
            floor = dip_floor(rng);
        }
        if (dip_left > 0) {
            level = std::max<double>(floor, level - 25.0) + step(rng) * 0.3;
            --dip_left;
        } else {
            level += 0.05 * (140.0 - level) + step(rng);
            if (unit(rng) < 0.02)
                level += 120.0;
        }
        level = std::clamp(level, 20.0, 500.0);
        const auto value = static_cast<unsigned>(level);
        std::vector<std::string> sigma;
        for (unsigned j = 0; j < 9; ++j)
            if ((value >> j) & 1U)
                sigma.push_back(aps[j]);
        trace.push_back(std::move(sigma));
    }
    return trace;
}

std::vector<Verdict> plaintext_verdicts(const automata::Dfa &binary, const std::vector<std::string> &ap_order,
                                        const std::vector<std::vector<std::string>> &trace, std::uint64_t i_out)
{
    if (i_out == 0)
        throw ConfigError("i_out must be at least 1");
    std::vector<Verdict> out;
    automata::State q = binary.initial();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto bits = encode_letter(trace[i], ap_order);
        std::vector<automata::Symbol> word(bits.begin(), bits.end());
        q = automata::run_from(binary, q, word);
        if ((i + 1) % i_out == 0)
            out.push_back({i + 1, binary.is_final(q)});
    }
    return out;
}

} // namespace oblimon::protocol
