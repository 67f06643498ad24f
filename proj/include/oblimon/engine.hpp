#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "oblimon/automata.hpp"
#include "oblimon/error.hpp"
#include "oblimon/fhe.hpp"

namespace oblimon::engine {

using automata::Dfa;
using automata::State;
using fhe::OpCounters;

struct EngineConfig {
    /// Bootstrapping interval of Offline and Reverse.
    std::uint64_t i_boot = 30000;
    /// Block size B of Block.
    std::uint64_t block_size = 1;
    /// Refresh interval inside Block's backward pass; 0 disables it.
    std::uint64_t block_boot_interval = 0;

    /// Offline and Reverse: throws ConfigError unless i_boot >= 1 and i_boot CMuxes
    /// after a refresh stay below theta.
    void validate_bootstrapping(const fhe::NoiseParams &params) const;
    /// Block: throws ConfigError unless block_size >= 1 and a CMux chain between
    /// refreshes followed by a full-width LookUp stays below theta.
    void validate_block(const fhe::NoiseParams &params) const;
};

/// ceil(log2 n) for n >= 1.
inline std::uint32_t ceil_log2(std::size_t n)
{
    return n <= 1 ? 0 : static_cast<std::uint32_t>(std::bit_width(n - 1));
}

namespace detail {

/// Backend calls with per-runner tallies.
template <fhe::HomomorphicBackend B>
class Ops {
public:
    using Tlwe = typename B::TlweCt;
    using Trlwe = typename B::TrlweCt;
    using Trgsw = typename B::TrgswCt;

    explicit Ops(B &backend) : b_(&backend)
    {
    }

    B &backend() const
    {
        return *b_;
    }

    Trlwe trivial(std::uint64_t n)
    {
        return b_->trivial(n);
    }

    Trlwe cmux(const Trgsw &d, const Trlwe &t, const Trlwe &f)
    {
        ++counters.cmux;
        return b_->cmux(d, t, f);
    }

    Trlwe lookup(std::span<const Trlwe> entries, std::span<const Trgsw> selectors)
    {
        ++counters.lookup;
        counters.lookup_cmux += entries.size() - 1;
        return b_->lookup(entries, selectors);
    }

    Tlwe sample_extract(std::uint32_t k, const Trlwe &c)
    {
        ++counters.sample_extract;
        return b_->sample_extract(k, c);
    }

    Trlwe bootstrap(const Tlwe &c)
    {
        ++counters.bootstrap;
        return b_->bootstrap(c);
    }

    Trgsw circuit_bootstrap(const Tlwe &c)
    {
        ++counters.circuit_bootstrap;
        return b_->circuit_bootstrap(c);
    }

    Trlwe bootstrap_slots(const Trlwe &c, std::uint32_t width)
    {
        counters.sample_extract += width;
        counters.bootstrap += width;
        return b_->bootstrap_slots(c, width);
    }

    Trlwe refresh(const Trlwe &c)
    {
        return bootstrap(sample_extract(0, c));
    }

    OpCounters counters;

private:
    B *b_;
};

} // namespace detail

/// R_t = states reachable from q0 by exactly t transitions, memoized. Distinct sets
/// are stored once, so the sequence costs O(|Q| · distinct sets) memory.
class ForwardReach {
public:
    explicit ForwardReach(const Dfa &m);

    std::span<const State> at(std::size_t t);

private:
    const Dfa *m_;
    std::vector<std::vector<State>> sets_;
    std::map<std::vector<State>, std::uint32_t> ids_;
    std::vector<std::uint32_t> sequence_;
    /// Once R_t repeats R_s (s < t), the sequence is periodic from s on.
    std::optional<std::pair<std::size_t, std::size_t>> cycle_;
};

/// Leveled evaluation, no bootstrapping. Long inputs legitimately overflow.
template <fhe::HomomorphicBackend B>
typename B::TlweCt leveled_offline_eval(B &backend, const Dfa &m, std::span<const typename B::TrgswCt> ds,
                                        OpCounters *counters = nullptr);

/// The leveled evaluation plus SampleExtract+Bootstrapping of every live state ciphertext each
/// time the number of consumed inputs is a multiple of i_boot.
template <fhe::HomomorphicBackend B>
typename B::TlweCt offline_eval(B &backend, const Dfa &m, std::span<const typename B::TrgswCt> ds,
                                const EngineConfig &config, OpCounters *counters = nullptr);

/// Online evaluation over the minimum reversed DFA.
template <fhe::HomomorphicBackend B>
class ReverseRunner {
public:
    using Tlwe = typename B::TlweCt;
    using Trlwe = typename B::TrlweCt;
    using Trgsw = typename B::TrgswCt;

    /// Reverses and minimizes `m`; throws StateLimitError on blow-up.
    ReverseRunner(B &backend, const Dfa &m, const EngineConfig &config,
                  std::size_t max_states = automata::kDefaultMaxStates);

    /// Uses `reversed` as M̄ directly (it must already be reverse_min of the monitor).
    static ReverseRunner from_reversed(B &backend, Dfa reversed, const EngineConfig &config);

    /// Consumes one input bit; returns the verdict on the prefix read so far.
    Tlwe feed(const Trgsw &d);

    const Dfa &reversed() const
    {
        return reversed_;
    }

    std::uint64_t consumed() const
    {
        return consumed_;
    }

    const OpCounters &counters() const
    {
        return ops_.counters;
    }

    /// Per-state ciphertexts of M̄ (for noise inspection).
    const std::vector<Trlwe> &state_ciphertexts() const
    {
        return c_;
    }

private:
    struct FromReversed {};
    ReverseRunner(FromReversed, B &backend, Dfa reversed, const EngineConfig &config);

    Dfa reversed_;
    EngineConfig config_;
    detail::Ops<B> ops_;
    std::vector<Trlwe> c_;
    std::vector<Trlwe> next_;
    std::uint64_t consumed_ = 0;
};

/// Block-wise evaluation over the forward DFA.
template <fhe::HomomorphicBackend B>
class BlockRunner {
public:
    using Tlwe = typename B::TlweCt;
    using Trlwe = typename B::TrlweCt;
    using Trgsw = typename B::TrgswCt;

    BlockRunner(B &backend, const Dfa &m, const EngineConfig &config);

    /// Buffers d; after every block_size inputs returns the verdict on the whole
    /// prefix. A trailing partial block produces nothing.
    std::optional<Tlwe> feed(const Trgsw &d);

    /// S_i for the next block (sorted).
    const std::vector<State> &current_set() const
    {
        return plan_->from;
    }

    std::uint64_t blocks_emitted() const
    {
        return blocks_;
    }

    const OpCounters &counters() const
    {
        return ops_.counters;
    }

private:
    struct Plan {
        std::vector<State> from;
        /// layers[t] = reachable_after(from, t) for t = 0..B; layers[B] = S_{i+1}.
        std::vector<std::vector<State>> layers;
    };

    std::shared_ptr<const Plan> plan_for(const std::vector<State> &from);
    void run_block();

    Dfa m_;
    EngineConfig config_;
    detail::Ops<B> ops_;
    std::shared_ptr<const Plan> plan_;
    std::map<std::vector<State>, std::shared_ptr<const Plan>> plans_;
    Trlwe cur_;
    std::vector<Trgsw> buffer_;
    std::vector<Trlwe> layer_, prev_;
    std::uint64_t blocks_ = 0;
};

} // namespace oblimon::engine

#include "oblimon/detail/engine_impl.hpp"
