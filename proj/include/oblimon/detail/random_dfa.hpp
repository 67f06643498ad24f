#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace oblimon::automata {

template <class Rng>
Dfa random_dfa(Rng &rng, std::size_t num_states, Alphabet alphabet, double final_ratio)
{
    const std::size_t sigma = alphabet.size();
    Dfa m(alphabet, num_states, 0);
    std::vector<std::uint8_t> assigned(num_states * sigma, 0);
    std::uniform_int_distribution<std::size_t> any_state(0, num_states - 1);

    // Spanning tree rooted at 0 so every state is reachable.
    std::vector<std::pair<State, Symbol>> free_slots;
    for (Symbol a = 0; a < sigma; ++a)
        free_slots.emplace_back(0, a);
    for (State q = 1; q < num_states; ++q) {
        std::uniform_int_distribution<std::size_t> pick(0, free_slots.size() - 1);
        const std::size_t i = pick(rng);
        const auto [parent, sym] = free_slots[i];
        free_slots[i] = free_slots.back();
        free_slots.pop_back();
        m.set_next(parent, sym, q);
        assigned[parent * sigma + sym] = 1;
        for (Symbol a = 0; a < sigma; ++a)
            free_slots.emplace_back(q, a);
    }
    for (State q = 0; q < num_states; ++q)
        for (Symbol a = 0; a < sigma; ++a)
            if (!assigned[q * sigma + a])
                m.set_next(q, a, static_cast<State>(any_state(rng)));

    std::bernoulli_distribution coin(final_ratio);
    for (State q = 0; q < num_states; ++q)
        m.set_final(q, coin(rng));
    return m;
}

template <class Rng>
Dfa random_group_dfa(Rng &rng, std::size_t num_states)
{
    Dfa m(Alphabet::binary(), num_states, 0);
    std::vector<State> order(num_states);
    std::iota(order.begin(), order.end(), State{0});
    std::shuffle(order.begin() + 1, order.end(), rng);
    for (std::size_t i = 0; i < num_states; ++i)
        m.set_next(order[i], 0, order[(i + 1) % num_states]);
    std::vector<State> perm(num_states);
    std::iota(perm.begin(), perm.end(), State{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (State q = 0; q < num_states; ++q)
        m.set_next(q, 1, perm[q]);
    std::uniform_int_distribution<std::size_t> any_state(0, num_states - 1);
    m.set_final(static_cast<State>(any_state(rng)));
    return m;
}

} // namespace oblimon::automata
