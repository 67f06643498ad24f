#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace oblimon::ltl::detail {

using Ref = std::uint32_t;
/// Variable keys are compared numerically; a smaller key sits nearer the root.
using Var = std::uint64_t;

inline constexpr Ref kFalse = 0;
inline constexpr Ref kTrue = 1;
inline constexpr Var kTerminalVar = std::numeric_limits<Var>::max();

/// Reduced ordered BDD store with hash-consed nodes and a lossy ite cache.
class Bdd {
public:
    Bdd();

    Ref var(Var v)
    {
        return mk(v, kFalse, kTrue);
    }

    Ref mk(Var v, Ref lo, Ref hi);
    Ref ite(Ref f, Ref g, Ref h);

    Ref negate(Ref f)
    {
        return ite(f, kFalse, kTrue);
    }

    Ref conj(Ref f, Ref g)
    {
        return ite(f, g, kFalse);
    }

    Ref disj(Ref f, Ref g)
    {
        return ite(f, kTrue, g);
    }

    static bool is_terminal(Ref f)
    {
        return f <= kTrue;
    }

    Var top(Ref f) const
    {
        return nodes_[f].var;
    }

    Ref lo(Ref f) const
    {
        return nodes_[f].lo;
    }

    Ref hi(Ref f) const
    {
        return nodes_[f].hi;
    }

    std::size_t size() const
    {
        return nodes_.size();
    }

private:
    struct Node {
        Var var;
        Ref lo, hi;
    };

    struct IteEntry {
        Ref f, g, h, result;
    };

    static std::uint64_t hash_node(Var v, Ref lo, Ref hi);
    void grow_unique();

    std::vector<Node> nodes_;
    std::vector<Ref> unique_;
    std::vector<IteEntry> ite_cache_;
};

} // namespace oblimon::ltl::detail
