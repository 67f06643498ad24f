#include "bdd.hpp"

#include <algorithm>

#include "oblimon/error.hpp"

namespace oblimon::ltl::detail {

namespace {

constexpr Ref kEmptySlot = ~Ref{0};
constexpr std::size_t kIteCacheSize = std::size_t{1} << 20;

std::uint64_t mix(std::uint64_t x)
{
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    return x ^ (x >> 33);
}

} // namespace

Bdd::Bdd() : unique_(1024, kEmptySlot), ite_cache_(kIteCacheSize, IteEntry{kEmptySlot, 0, 0, 0})
{
    nodes_.push_back({kTerminalVar, kFalse, kFalse});
    nodes_.push_back({kTerminalVar, kTrue, kTrue});
}

std::uint64_t Bdd::hash_node(Var v, Ref lo, Ref hi)
{
    return mix(v * 0x9e3779b97f4a7c15ULL ^ (static_cast<std::uint64_t>(lo) << 32 | hi));
}

void Bdd::grow_unique()
{
    const std::size_t capacity = unique_.size() * 2;
    unique_.assign(capacity, kEmptySlot);
    for (Ref id = 2; id < nodes_.size(); ++id) {
        std::size_t i = hash_node(nodes_[id].var, nodes_[id].lo, nodes_[id].hi) & (capacity - 1);
        while (unique_[i] != kEmptySlot)
            i = (i + 1) & (capacity - 1);
        unique_[i] = id;
    }
}

Ref Bdd::mk(Var v, Ref lo, Ref hi)
{
    if (lo == hi)
        return lo;
    if ((nodes_.size() + 1) * 2 > unique_.size())
        grow_unique();
    std::size_t i = hash_node(v, lo, hi) & (unique_.size() - 1);
    while (unique_[i] != kEmptySlot) {
        const Node &n = nodes_[unique_[i]];
        if (n.var == v && n.lo == lo && n.hi == hi)
            return unique_[i];
        i = (i + 1) & (unique_.size() - 1);
    }
    if (nodes_.size() >= kEmptySlot)
        throw Error("decision diagram node limit reached");
    const auto id = static_cast<Ref>(nodes_.size());
    nodes_.push_back({v, lo, hi});
    unique_[i] = id;
    return id;
}

Ref Bdd::ite(Ref f, Ref g, Ref h)
{
    if (f == kTrue)
        return g;
    if (f == kFalse)
        return h;
    if (g == h)
        return g;
    if (g == kTrue && h == kFalse)
        return f;

    IteEntry &slot = ite_cache_[mix((static_cast<std::uint64_t>(f) << 32 | g) ^ mix(h)) & (kIteCacheSize - 1)];
    if (slot.f == f && slot.g == g && slot.h == h)
        return slot.result;

    const Var v = std::min({top(f), top(g), top(h)});
    auto low = [&](Ref x) { return top(x) == v ? lo(x) : x; };
    auto high = [&](Ref x) { return top(x) == v ? hi(x) : x; };
    const Ref r0 = ite(low(f), low(g), low(h));
    const Ref r1 = ite(high(f), high(g), high(h));
    const Ref result = mk(v, r0, r1);
    slot = {f, g, h, result};
    return result;
}

} // namespace oblimon::ltl::detail
