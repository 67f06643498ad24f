#include "oblimon/engine.hpp"

namespace oblimon::engine {

namespace {

// a * b + c, saturating at UINT64_MAX.
std::uint64_t mul_add(std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
    unsigned __int128 r = static_cast<unsigned __int128>(a) * b + c;
    return r > UINT64_MAX ? UINT64_MAX : static_cast<std::uint64_t>(r);
}

} // namespace

void EngineConfig::validate_bootstrapping(const fhe::NoiseParams &params) const
{
    if (i_boot < 1)
        throw ConfigError("i_boot must be at least 1");
    if (mul_add(i_boot, params.cmux_cost, params.eta_boot) >= params.theta)
        throw ConfigError("i_boot * cmux_cost + eta_boot = " +
                          std::to_string(mul_add(i_boot, params.cmux_cost, params.eta_boot)) +
                          " must stay below theta = " + std::to_string(params.theta));
}

void EngineConfig::validate_block(const fhe::NoiseParams &params) const
{
    if (block_size < 1)
        throw ConfigError("block size must be at least 1");
    // The longest CMux chain between refreshes, plus a full-width LookUp.
    const std::uint64_t chain = block_boot_interval != 0 ? std::min(block_boot_interval, block_size) : block_size;
    const std::uint64_t worst =
        mul_add(chain + (params.N - 1), params.cmux_cost, std::max(params.eta_boot, params.eta_cb));
    if (worst >= params.theta)
        throw ConfigError("block noise bound " + std::to_string(worst) + " reaches theta = " +
                          std::to_string(params.theta) + "; lower the block size or set an intra-block interval");
}

ForwardReach::ForwardReach(const Dfa &m) : m_(&m)
{
    sets_.push_back({m.initial()});
    ids_.emplace(sets_[0], 0);
    sequence_.push_back(0);
}

std::span<const State> ForwardReach::at(std::size_t t)
{
    while (!cycle_ && t >= sequence_.size()) {
        std::vector<State> next = automata::reachable_after(*m_, sets_[sequence_.back()], 1);
        auto [it, fresh] = ids_.emplace(std::move(next), static_cast<std::uint32_t>(sets_.size()));
        if (!fresh) {
            // Sets are deterministic functions of their predecessor, so the first
            // repeat closes the cycle.
            const auto first = static_cast<std::size_t>(
                std::find(sequence_.begin(), sequence_.end(), it->second) - sequence_.begin());
            cycle_ = {first, sequence_.size() - first};
            break;
        }
        sets_.push_back(it->first);
        sequence_.push_back(it->second);
    }
    if (t < sequence_.size())
        return sets_[sequence_[t]];
    const auto [start, period] = *cycle_;
    return sets_[sequence_[start + (t - start) % period]];
}

} // namespace oblimon::engine
