#include "oblimon/automata.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

#include "oblimon/error.hpp"

namespace oblimon::automata {

namespace {

// Interns sorted state subsets into dense ids; subsets live in one pool.
class SubsetTable {
public:
    std::pair<State, bool> intern(const std::vector<State> &subset)
    {
        if (slots_.empty() || (size() + 1) * 2 > slots_.size())
            grow();
        const std::uint64_t h = hash(subset.data(), subset.size());
        std::size_t i = h & (slots_.size() - 1);
        while (slots_[i] != kEmpty) {
            const State id = slots_[i];
            if (hashes_[id] == h && equal(id, subset))
                return {id, false};
            i = (i + 1) & (slots_.size() - 1);
        }
        const auto id = static_cast<State>(size());
        starts_.push_back(pool_.size());
        pool_.insert(pool_.end(), subset.begin(), subset.end());
        hashes_.push_back(h);
        slots_[i] = id;
        return {id, true};
    }

    std::size_t size() const
    {
        return hashes_.size();
    }

    std::size_t pool_size() const
    {
        return pool_.size();
    }

    std::span<const State> get(State id) const
    {
        const std::size_t begin = starts_[id];
        const std::size_t end = id + 1 < starts_.size() ? starts_[id + 1] : pool_.size();
        return {pool_.data() + begin, end - begin};
    }

private:
    static constexpr State kEmpty = ~State{0};

    static std::uint64_t hash(const State *data, std::size_t n)
    {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ n;
        for (std::size_t i = 0; i < n; ++i) {
            h ^= data[i] + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h *= 0xbf58476d1ce4e5b9ULL;
        }
        return h ^ (h >> 31);
    }

    bool equal(State id, const std::vector<State> &subset) const
    {
        auto stored = get(id);
        return stored.size() == subset.size() && std::equal(stored.begin(), stored.end(), subset.begin());
    }

    void grow()
    {
        const std::size_t capacity = slots_.empty() ? 1024 : slots_.size() * 2;
        slots_.assign(capacity, kEmpty);
        for (State id = 0; id < size(); ++id) {
            std::size_t i = hashes_[id] & (capacity - 1);
            while (slots_[i] != kEmpty)
                i = (i + 1) & (capacity - 1);
            slots_[i] = id;
        }
    }

    std::vector<State> pool_;
    std::vector<std::size_t> starts_;
    std::vector<std::uint64_t> hashes_;
    std::vector<State> slots_;
};

} // namespace

Nfa reverse(const Dfa &m)
{
    const std::size_t sigma = m.alphabet().size();
    Nfa out{m.alphabet(), std::vector<std::vector<State>>(m.num_states() * sigma), m.finals(),
            std::vector<std::uint8_t>(m.num_states(), 0)};
    for (State q = 0; q < m.num_states(); ++q)
        for (Symbol a = 0; a < sigma; ++a)
            out.successors[static_cast<std::size_t>(m.next(q, a)) * sigma + a].push_back(q);
    // Predecessors were pushed in ascending q, so every list is already sorted.
    out.finals[m.initial()] = 1;
    return out;
}

Dfa determinize(const Nfa &n, std::size_t max_states, std::size_t max_subset_entries)
{
    const std::size_t sigma = n.alphabet.size();
    SubsetTable table;
    std::vector<State> delta;
    std::vector<std::uint8_t> finals;

    std::vector<State> start = n.initial;
    std::sort(start.begin(), start.end());
    start.erase(std::unique(start.begin(), start.end()), start.end());
    table.intern(start);

    std::vector<std::uint32_t> stamp(n.num_states(), 0);
    std::uint32_t generation = 0;
    std::vector<State> next;
    for (State id = 0; id < table.size(); ++id) {
        bool accepting = false;
        for (State q : table.get(id))
            accepting = accepting || n.finals[q] != 0;
        finals.push_back(accepting ? 1 : 0);
        for (Symbol a = 0; a < sigma; ++a) {
            ++generation;
            next.clear();
            // `get` may be invalidated by intern(); index the pool afresh each time.
            const auto subset = table.get(id);
            for (State q : subset) {
                for (State t : n.successors[static_cast<std::size_t>(q) * sigma + a]) {
                    if (stamp[t] != generation) {
                        stamp[t] = generation;
                        next.push_back(t);
                    }
                }
            }
            std::sort(next.begin(), next.end());
            if (table.pool_size() + next.size() > max_subset_entries)
                throw StateLimitError(max_subset_entries, "powerset subset storage");
            auto [target, fresh] = table.intern(next);
            if (fresh && table.size() > max_states)
                throw StateLimitError(max_states, "powerset construction");
            delta.push_back(target);
        }
    }

    Dfa out(n.alphabet, table.size(), 0);
    for (State q = 0; q < table.size(); ++q) {
        for (Symbol a = 0; a < sigma; ++a)
            out.set_next(q, a, delta[static_cast<std::size_t>(q) * sigma + a]);
        out.set_final(q, finals[q] != 0);
    }
    return out;
}

Dfa reverse_min(const Dfa &m, std::size_t max_states, std::size_t max_subset_entries)
{
    // Minimizing first shrinks the NFA the powerset construction starts from.
    const Dfa small = minimize(m);
    // Reversal commutes with complement; start from the smaller final set.
    if (2 * small.finals().size() > small.num_states())
        return complement(minimize(determinize(reverse(complement(small)), max_states, max_subset_entries)));
    return minimize(determinize(reverse(small), max_states, max_subset_entries));
}

Equivalence dfa_equiv(const Dfa &a, const Dfa &b)
{
    if (!(a.alphabet() == b.alphabet()))
        throw AutomatonError("equivalence check needs identical alphabets");
    const std::size_t sigma = a.alphabet().size();
    struct Visit {
        std::size_t parent;
        Symbol symbol;
    };
    std::unordered_map<std::uint64_t, std::size_t> seen;
    std::vector<std::pair<State, State>> pairs;
    std::vector<Visit> visits;
    auto key = [](State x, State y) { return (static_cast<std::uint64_t>(x) << 32) | y; };

    pairs.emplace_back(a.initial(), b.initial());
    visits.push_back({0, 0});
    seen.emplace(key(a.initial(), b.initial()), 0);
    for (std::size_t head = 0; head < pairs.size(); ++head) {
        const auto [x, y] = pairs[head];
        if (a.is_final(x) != b.is_final(y)) {
            std::vector<Symbol> witness;
            for (std::size_t i = head; i != 0; i = visits[i].parent)
                witness.push_back(visits[i].symbol);
            std::reverse(witness.begin(), witness.end());
            return {false, witness};
        }
        for (Symbol s = 0; s < sigma; ++s) {
            const State nx = a.next(x, s);
            const State ny = b.next(y, s);
            if (seen.emplace(key(nx, ny), pairs.size()).second) {
                pairs.emplace_back(nx, ny);
                visits.push_back({head, s});
            }
        }
    }
    return {true, {}};
}

} // namespace oblimon::automata
