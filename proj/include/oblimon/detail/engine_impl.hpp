#pragma once

// Template definitions for oblimon/engine.hpp.

namespace oblimon::engine {

template <fhe::HomomorphicBackend B>
typename B::TlweCt leveled_offline_eval(B &backend, const Dfa &m, std::span<const typename B::TrgswCt> ds,
                                        OpCounters *counters)
{
    EngineConfig no_bootstrap;
    no_bootstrap.i_boot = 0;
    return offline_eval(backend, m, ds, no_bootstrap, counters);
}

template <fhe::HomomorphicBackend B>
typename B::TlweCt offline_eval(B &backend, const Dfa &m, std::span<const typename B::TrgswCt> ds,
                                const EngineConfig &config, OpCounters *counters)
{
    // i_boot = 0 is the leveled variant and is only reachable through leveled_offline_eval.
    if (config.i_boot != 0)
        config.validate_bootstrapping(backend.params());
    if (!m.alphabet().is_binary())
        throw AutomatonError("homomorphic evaluation needs a binary DFA");
    detail::Ops<B> ops(backend);
    ForwardReach reach(m);
    const std::size_t n = ds.size();

    std::vector<typename B::TrlweCt> c(m.num_states()), prev(m.num_states());
    for (State q = 0; q < m.num_states(); ++q)
        c[q] = ops.trivial(m.is_final(q) ? 1 : 0);

    for (std::size_t i = n; i >= 1; --i) {
        c.swap(prev);
        const auto live = reach.at(i - 1);
        for (State q : live)
            c[q] = ops.cmux(ds[i - 1], prev[m.next(q, 1)], prev[m.next(q, 0)]);
        // The flush is keyed on inputs consumed so far (n - i + 1), not on i itself.
        const std::size_t consumed = n - i + 1;
        if (config.i_boot != 0 && consumed % config.i_boot == 0)
            for (State q : live)
                c[q] = ops.refresh(c[q]);
    }
    auto out = ops.sample_extract(0, c[m.initial()]);
    if (counters)
        *counters += ops.counters;
    return out;
}

template <fhe::HomomorphicBackend B>
ReverseRunner<B>::ReverseRunner(B &backend, const Dfa &m, const EngineConfig &config, std::size_t max_states)
    : ReverseRunner(FromReversed{}, backend, automata::reverse_min(m, max_states), config)
{
}

template <fhe::HomomorphicBackend B>
ReverseRunner<B> ReverseRunner<B>::from_reversed(B &backend, Dfa reversed, const EngineConfig &config)
{
    return ReverseRunner(FromReversed{}, backend, std::move(reversed), config);
}

template <fhe::HomomorphicBackend B>
ReverseRunner<B>::ReverseRunner(FromReversed, B &backend, Dfa reversed, const EngineConfig &config)
    : reversed_(std::move(reversed)), config_(config), ops_(backend)
{
    config_.validate_bootstrapping(backend.params());
    if (!reversed_.alphabet().is_binary())
        throw AutomatonError("homomorphic evaluation needs a binary DFA");
    c_.reserve(reversed_.num_states());
    for (State q = 0; q < reversed_.num_states(); ++q)
        c_.push_back(ops_.trivial(reversed_.is_final(q) ? 1 : 0));
    next_.resize(c_.size());
}

template <fhe::HomomorphicBackend B>
typename B::TlweCt ReverseRunner<B>::feed(const Trgsw &d)
{
    // Every state of M̄ is updated: by minimality each one may still be reached by the
    // reversed remainder of the stream.
    for (State q = 0; q < reversed_.num_states(); ++q)
        next_[q] = ops_.cmux(d, c_[reversed_.next(q, 1)], c_[reversed_.next(q, 0)]);
    c_.swap(next_);
    ++consumed_;
    if (consumed_ % config_.i_boot == 0)
        for (auto &c : c_)
            c = ops_.refresh(c);
    return ops_.sample_extract(0, c_[reversed_.initial()]);
}

template <fhe::HomomorphicBackend B>
BlockRunner<B>::BlockRunner(B &backend, const Dfa &m, const EngineConfig &config)
    : m_(m), config_(config), ops_(backend)
{
    config_.validate_block(backend.params());
    if (!m_.alphabet().is_binary())
        throw AutomatonError("homomorphic evaluation needs a binary DFA");
    plan_ = plan_for({m_.initial()});
    cur_ = ops_.trivial(0);
    layer_.resize(m_.num_states());
    prev_.resize(m_.num_states());
    buffer_.reserve(config_.block_size);
}

template <fhe::HomomorphicBackend B>
std::shared_ptr<const typename BlockRunner<B>::Plan> BlockRunner<B>::plan_for(const std::vector<State> &from)
{
    if (auto it = plans_.find(from); it != plans_.end())
        return it->second;
    auto plan = std::make_shared<Plan>();
    plan->from = from;
    plan->layers.reserve(config_.block_size + 1);
    plan->layers.push_back(from);
    for (std::uint64_t t = 1; t <= config_.block_size; ++t)
        plan->layers.push_back(automata::reachable_after(m_, plan->layers.back(), 1));
    if (plans_.size() >= 4096)
        plans_.clear();
    plans_.emplace(from, plan);
    return plan;
}

template <fhe::HomomorphicBackend B>
std::optional<typename B::TlweCt> BlockRunner<B>::feed(const Trgsw &d)
{
    buffer_.push_back(d);
    if (buffer_.size() < config_.block_size)
        return std::nullopt;
    run_block();
    buffer_.clear();
    ++blocks_;
    return ops_.sample_extract(0, cur_);
}

template <fhe::HomomorphicBackend B>
void BlockRunner<B>::run_block()
{
    const Plan &plan = *plan_;
    const std::uint64_t block = config_.block_size;
    const std::vector<State> &to = plan.layers[block];
    const std::uint32_t N = ops_.backend().params().N;
    const std::uint32_t index_bits = ceil_log2(to.size());
    if (index_bits > N - 1)
        throw BlockCapacityError("reachable set of " + std::to_string(to.size()) + " states needs " +
                                 std::to_string(index_bits) + " index bits; one TRLWE holds " +
                                 std::to_string(N - 1));
    if (ceil_log2(plan.from.size()) > N - 1)
        throw BlockCapacityError("reachable set too large for one TRLWE");

    // Slot 0 carries acceptance, slots 1.. the index of the state within S_{i+1}.
    for (std::size_t j = 0; j < to.size(); ++j)
        layer_[to[j]] = ops_.trivial(static_cast<std::uint64_t>(j) * 2 + (m_.is_final(to[j]) ? 1 : 0));

    const std::uint32_t width = index_bits + 1;
    for (std::uint64_t k = block; k >= 1; --k) {
        layer_.swap(prev_);
        const Trgsw &d = buffer_[k - 1];
        for (State q : plan.layers[k - 1])
            layer_[q] = ops_.cmux(d, prev_[m_.next(q, 1)], prev_[m_.next(q, 0)]);
        const std::uint64_t done = block - k + 1;
        if (config_.block_boot_interval != 0 && done % config_.block_boot_interval == 0 && k > 1)
            for (State q : plan.layers[k - 1])
                layer_[q] = ops_.bootstrap_slots(layer_[q], width);
    }

    if (plan.from.size() == 1) {
        cur_ = layer_[plan.from[0]];
    } else {
        const std::uint32_t bits = ceil_log2(plan.from.size());
        std::vector<Trgsw> selectors;
        selectors.reserve(bits);
        for (std::uint32_t l = 1; l <= bits; ++l)
            selectors.push_back(ops_.circuit_bootstrap(ops_.sample_extract(l, cur_)));
        std::vector<Trlwe> entries;
        entries.reserve(std::size_t{1} << bits);
        for (State q : plan.from)
            entries.push_back(layer_[q]);
        while (entries.size() < (std::size_t{1} << bits))
            entries.push_back(ops_.trivial(0));
        cur_ = ops_.lookup(entries, selectors);
    }
    plan_ = plan_for(to);
}

} // namespace oblimon::engine
