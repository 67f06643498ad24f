#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oblimon::automata {

using State = std::uint32_t;
using Symbol = std::uint32_t;

/// Default budget for every state-producing construction.
inline constexpr std::size_t kDefaultMaxStates = 4'000'000;

/// Budget for the total size of all subsets stored by the powerset construction
/// (2^28 state indices, 1 GiB).
inline constexpr std::size_t kDefaultMaxSubsetEntries = std::size_t{1} << 28;

/// Either {0,1} or the letters of 2^AP for |AP| = k, encoded as k-bit integers
/// with bit j standing for the j-th atom.
class Alphabet {
public:
    static Alphabet binary()
    {
        return Alphabet(0, true);
    }

    static Alphabet letters(unsigned num_aps);

    bool is_binary() const
    {
        return binary_;
    }

    unsigned num_aps() const
    {
        return num_aps_;
    }

    std::size_t size() const
    {
        return binary_ ? 2 : std::size_t{1} << num_aps_;
    }

    friend bool operator==(const Alphabet &, const Alphabet &) = default;

private:
    Alphabet(unsigned num_aps, bool binary) : num_aps_(num_aps), binary_(binary)
    {
    }

    unsigned num_aps_;
    bool binary_;
};

/// Complete DFA with dense state indices.
class Dfa {
public:
    /// All transitions initially point to state 0.
    Dfa(Alphabet alphabet, std::size_t num_states, State initial = 0);

    const Alphabet &alphabet() const
    {
        return alphabet_;
    }

    std::size_t num_states() const
    {
        return finals_.size();
    }

    State initial() const
    {
        return initial_;
    }

    void set_initial(State q);

    State next(State q, Symbol a) const
    {
        return delta_[static_cast<std::size_t>(q) * alphabet_.size() + a];
    }

    void set_next(State q, Symbol a, State target);

    std::span<const State> row(State q) const
    {
        return {delta_.data() + static_cast<std::size_t>(q) * alphabet_.size(), alphabet_.size()};
    }

    bool is_final(State q) const
    {
        return finals_[q] != 0;
    }

    void set_final(State q, bool final = true);

    std::vector<State> finals() const;

    friend bool operator==(const Dfa &, const Dfa &) = default;

private:
    Alphabet alphabet_;
    State initial_;
    std::vector<State> delta_;
    std::vector<std::uint8_t> finals_;
};

/// NFA over the same alphabets; used as the intermediate of reversal.
struct Nfa {
    Alphabet alphabet;
    /// successors[q * |Σ| + a], each sorted and duplicate-free.
    std::vector<std::vector<State>> successors;
    std::vector<State> initial;
    std::vector<std::uint8_t> finals;

    std::size_t num_states() const
    {
        return finals.size();
    }
};

/// M(w): 1 iff δ(q0, w) ∈ F. Throws AutomatonError for symbols outside the alphabet.
bool run_word(const Dfa &m, std::span<const Symbol> word);

/// State reached after reading `word` from `from`.
State run_from(const Dfa &m, State from, std::span<const Symbol> word);

/// Minimal equivalent DFA, unreachable states dropped, states numbered in BFS order.
Dfa minimize(const Dfa &m);

/// Renumbers reachable states in BFS order from q0, dropping the rest.
Dfa canonical_bfs(const Dfa &m);

/// Transitions reversed; initial = old finals, finals = {old q0}.
Nfa reverse(const Dfa &m);

/// Reachable-subset powerset construction. Throws StateLimitError when either budget
/// is exceeded.
Dfa determinize(const Nfa &n, std::size_t max_states = kDefaultMaxStates,
                std::size_t max_subset_entries = kDefaultMaxSubsetEntries);

/// Minimum DFA accepting exactly the reversals of L(m).
Dfa reverse_min(const Dfa &m, std::size_t max_states = kDefaultMaxStates,
                std::size_t max_subset_entries = kDefaultMaxSubsetEntries);

/// Binary encoding of a DFA over 2^AP: each letter is read as |AP| bits, first atom
/// first, through auxiliary mid-letter states. Only letter-boundary states can be
/// final. Result is minimized.
Dfa to_binary_dfa(const Dfa &m);

/// Same transitions, finals swapped.
Dfa complement(const Dfa &m);

/// Concatenated |AP|-bit encodings of a letter word.
std::vector<Symbol> encode_letters(std::span<const Symbol> letters, unsigned num_aps);

struct Equivalence {
    bool equivalent;
    /// Shortest word on which the two automata disagree (empty when equivalent).
    std::vector<Symbol> witness;
};

/// Product-reachability equivalence check. Throws AutomatonError on alphabet mismatch.
Equivalence dfa_equiv(const Dfa &a, const Dfa &b);

/// M_m: accepts binary words whose number of 1s is a multiple of m.
Dfa gen_mod_counter(std::size_t m);

/// States reachable from some state of `from` by exactly k transitions, sorted.
std::vector<State> reachable_after(const Dfa &m, std::span<const State> from, std::size_t k);

/// Text format:
///   dfa <|Q|> <binary|letters k> <q0>
///   finals: i1 i2 ...
///   one line per state with its successors in ascending symbol order
std::string to_text(const Dfa &m);
Dfa from_text(std::string_view text);

/// Uniformly random complete DFA; every state is reachable from q0.
template <class Rng>
Dfa random_dfa(Rng &rng, std::size_t num_states, Alphabet alphabet = Alphabet::binary(),
               double final_ratio = 0.5);

/// Binary DFA in which both symbols permute the states (symbol 0 as one full cycle)
/// and exactly one state is final. Its reversal is deterministic, so |reverse_min| <= n.
template <class Rng>
Dfa random_group_dfa(Rng &rng, std::size_t num_states);

} // namespace oblimon::automata

#include "oblimon/detail/random_dfa.hpp"
