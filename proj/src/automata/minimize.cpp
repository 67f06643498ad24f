#include "oblimon/automata.hpp"

#include <algorithm>
#include <numeric>

#include "oblimon/error.hpp"

namespace oblimon::automata {

namespace {

// Refinable partition (Valmari & Lehtinen). Elements of a set are stored
// contiguously in `elems[first[s] .. past[s])`; `marked[s]` counts the marked
// prefix of set s.
class RefinablePartition {
public:
    using Index = std::uint32_t;

    explicit RefinablePartition(std::size_t n)
        : elems(n), loc(n), set_of(n, 0), first(n + 1, 0), past(n + 1, 0), marked(n + 1, 0), touched(n + 1, 0)
    {
        std::iota(elems.begin(), elems.end(), Index{0});
        std::iota(loc.begin(), loc.end(), Index{0});
        count = n > 0 ? 1 : 0;
        if (count)
            past[0] = n;
    }

    void mark(Index e)
    {
        const Index s = set_of[e];
        const Index i = loc[e];
        const Index j = first[s] + marked[s];
        elems[i] = elems[j];
        loc[elems[i]] = i;
        elems[j] = e;
        loc[e] = j;
        if (marked[s]++ == 0)
            touched[num_touched++] = s;
    }

    // Splits every touched set into its marked and unmarked parts; the
    // smaller part receives the new set index.
    void split()
    {
        while (num_touched > 0) {
            const Index s = touched[--num_touched];
            const Index j = first[s] + marked[s];
            if (j == past[s]) {
                marked[s] = 0;
                continue;
            }
            if (marked[s] <= past[s] - j) {
                first[count] = first[s];
                past[count] = first[s] = j;
            } else {
                past[count] = past[s];
                first[count] = past[s] = j;
            }
            for (Index i = first[count]; i < past[count]; ++i)
                set_of[elems[i]] = count;
            marked[s] = marked[count] = 0;
            ++count;
        }
    }

    Index count = 0;
    std::vector<Index> elems, loc, set_of, first, past, marked, touched;
    Index num_touched = 0;
};

} // namespace

Dfa minimize(const Dfa &input)
{
    const Dfa m = canonical_bfs(input);
    const std::size_t n = m.num_states();
    const std::size_t sigma = m.alphabet().size();
    const std::size_t num_trans = n * sigma;
    if (num_trans >= (std::size_t{1} << 32))
        throw AutomatonError("automaton too large to minimize");

    // Transition t = q * sigma + a has tail q, label a and head δ(q, a).
    auto tail = [sigma](std::size_t t) { return t / sigma; };
    auto label = [sigma](std::size_t t) { return t % sigma; };
    auto head = [&m, sigma](std::size_t t) { return static_cast<std::size_t>(m.next(t / sigma, t % sigma)); };

    RefinablePartition blocks(n);
    for (State q = 0; q < n; ++q)
        if (m.is_final(q))
            blocks.mark(q);
    blocks.split();

    // Cords: transitions grouped by label.
    RefinablePartition cords(num_trans);
    if (num_trans > 0) {
        std::stable_sort(cords.elems.begin(), cords.elems.end(),
                         [&](std::size_t x, std::size_t y) { return label(x) < label(y); });
        cords.count = 0;
        auto current = label(cords.elems[0]);
        cords.first[0] = 0;
        for (std::size_t i = 0; i < num_trans; ++i) {
            const auto t = cords.elems[i];
            if (label(t) != current) {
                current = label(t);
                cords.past[cords.count++] = static_cast<RefinablePartition::Index>(i);
                cords.first[cords.count] = static_cast<RefinablePartition::Index>(i);
                cords.marked[cords.count] = 0;
            }
            cords.set_of[t] = cords.count;
            cords.loc[t] = static_cast<RefinablePartition::Index>(i);
        }
        cords.past[cords.count++] = static_cast<RefinablePartition::Index>(num_trans);
    }

    // Incoming transitions per state.
    std::vector<std::uint32_t> in_offset(n + 1, 0);
    for (std::size_t t = 0; t < num_trans; ++t)
        ++in_offset[head(t) + 1];
    for (std::size_t q = 0; q < n; ++q)
        in_offset[q + 1] += in_offset[q];
    std::vector<std::uint32_t> incoming(num_trans);
    {
        auto fill = in_offset;
        for (std::size_t t = 0; t < num_trans; ++t)
            incoming[fill[head(t)]++] = static_cast<std::uint32_t>(t);
    }

    RefinablePartition::Index b = 1;
    RefinablePartition::Index c = 0;
    while (c < cords.count) {
        for (auto i = cords.first[c]; i < cords.past[c]; ++i)
            blocks.mark(tail(cords.elems[i]));
        blocks.split();
        ++c;
        while (b < blocks.count) {
            for (auto i = blocks.first[b]; i < blocks.past[b]; ++i) {
                const auto q = blocks.elems[i];
                for (auto j = in_offset[q]; j < in_offset[q + 1]; ++j)
                    cords.mark(incoming[j]);
            }
            cords.split();
            ++b;
        }
    }

    Dfa quotient(m.alphabet(), blocks.count, static_cast<State>(blocks.set_of[m.initial()]));
    for (RefinablePartition::Index s = 0; s < blocks.count; ++s) {
        const auto q = static_cast<State>(blocks.elems[blocks.first[s]]);
        for (Symbol a = 0; a < sigma; ++a)
            quotient.set_next(static_cast<State>(s), a, static_cast<State>(blocks.set_of[m.next(q, a)]));
        quotient.set_final(static_cast<State>(s), m.is_final(q));
    }
    return canonical_bfs(quotient);
}

} // namespace oblimon::automata
