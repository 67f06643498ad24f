#include "oblimon/automata.hpp"

#include <unordered_map>

#include "oblimon/error.hpp"

namespace oblimon::automata {

namespace {

class BinaryEncoder {
public:
    explicit BinaryEncoder(const Dfa &m) : m_(m), k_(m.alphabet().num_aps()), interned_(k_)
    {
        // Nodes 0..|Q|-1 are the letter-boundary states (q, ε).
        for (State q = 0; q < m.num_states(); ++q)
            nodes_.push_back({0, 0, m.is_final(q)});
    }

    Dfa encode()
    {
        for (State q = 0; q < m_.num_states(); ++q) {
            const State zero = build(q, 1, 0);
            const State one = build(q, 1, 1);
            nodes_[q].child0 = zero;
            nodes_[q].child1 = one;
        }
        Dfa out(Alphabet::binary(), nodes_.size(), m_.initial());
        for (State id = 0; id < nodes_.size(); ++id) {
            out.set_next(id, 0, nodes_[id].child0);
            out.set_next(id, 1, nodes_[id].child1);
            out.set_final(id, nodes_[id].final);
        }
        return minimize(out);
    }

private:
    struct Node {
        State child0, child1;
        bool final;
    };

    // Node after the first `level` bits of a letter (bit j = atom j) read from q.
    // Mid-letter nodes with identical successors are shared.
    State build(State q, unsigned level, Symbol prefix)
    {
        if (level == k_)
            return m_.next(q, prefix);
        const State zero = build(q, level + 1, prefix);
        const State one = build(q, level + 1, prefix | (Symbol{1} << level));
        const std::uint64_t key = (static_cast<std::uint64_t>(zero) << 32) | one;
        auto &by_children = interned_[level];
        if (auto it = by_children.find(key); it != by_children.end())
            return it->second;
        const auto id = static_cast<State>(nodes_.size());
        nodes_.push_back({zero, one, false});
        by_children.emplace(key, id);
        return id;
    }

    const Dfa &m_;
    unsigned k_;
    std::vector<std::unordered_map<std::uint64_t, State>> interned_;
    std::vector<Node> nodes_;
};

} // namespace

Dfa to_binary_dfa(const Dfa &m)
{
    if (m.alphabet().is_binary())
        throw AutomatonError("to_binary_dfa expects a letter alphabet");
    if (m.alphabet().num_aps() == 0)
        throw AutomatonError("to_binary_dfa needs at least one atom");
    return BinaryEncoder(m).encode();
}

Dfa complement(const Dfa &m)
{
    Dfa out = m;
    for (State q = 0; q < m.num_states(); ++q)
        out.set_final(q, !m.is_final(q));
    return out;
}

} // namespace oblimon::automata
