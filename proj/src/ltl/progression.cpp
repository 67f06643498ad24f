#include <deque>
#include <map>
#include <tuple>
#include <unordered_map>

#include "bdd.hpp"
#include "oblimon/error.hpp"
#include "oblimon/ltl.hpp"

namespace oblimon::ltl {

using detail::Bdd;
using detail::kFalse;
using detail::kTrue;
using detail::Ref;
using detail::Var;

bool CanonicalFormula::is_true() const
{
    return ref_ == kTrue;
}

bool CanonicalFormula::is_false() const
{
    return ref_ == kFalse;
}

// Variable (t, slot) stands for X^(t-1) of an atom (slot < k) or of the
// Until subformula numbered slot - k. States keep every Until at offset 1
// unfolded, so the time-1 layer of a state only tests atoms.
struct ProgressionContext::Impl {
    explicit Impl(std::vector<std::string> aps) : ap_order(std::move(aps))
    {
        if (ap_order.size() > 31)
            throw Error("at most 31 atoms are supported");
        for (std::size_t i = 0; i < ap_order.size(); ++i)
            if (!ap_index.emplace(ap_order[i], static_cast<std::uint32_t>(i)).second)
                throw Error("duplicate atom '" + ap_order[i] + "' in AP order");
    }

    std::uint32_t k() const
    {
        return static_cast<std::uint32_t>(ap_order.size());
    }

    static Var key(std::uint64_t t, std::uint64_t slot)
    {
        return t << 32 | slot;
    }

    static std::uint64_t time_of(Var v)
    {
        return v >> 32;
    }

    static std::uint32_t slot_of(Var v)
    {
        return static_cast<std::uint32_t>(v);
    }

    // Structural hash-consing of desugared subformulas.
    std::uint32_t intern(const Formula &f)
    {
        if (auto it = interned_by_node.find(f.id()); it != interned_by_node.end())
            return it->second;
        std::uint32_t a = 0;
        std::uint32_t b = 0;
        switch (f.kind()) {
        case Kind::True:
            break;
        case Kind::Atom: {
            auto it = ap_index.find(f.name());
            if (it == ap_index.end())
                throw UnknownAtomError("atom '" + f.name() + "' is not in the AP order");
            a = it->second;
            break;
        }
        case Kind::Not:
        case Kind::Next:
            a = intern(f.child(0));
            break;
        case Kind::And:
        case Kind::Until:
            a = intern(f.child(0));
            b = intern(f.child(1));
            break;
        default:
            throw Error("formula is not in desugared form");
        }
        const auto shape = std::make_tuple(static_cast<int>(f.kind()), a, b);
        auto [it, fresh] = interned_by_shape.emplace(shape, static_cast<std::uint32_t>(shapes.size()));
        if (fresh)
            shapes.push_back({f, a, b});
        interned_by_node.emplace(f.id(), it->second);
        return it->second;
    }

    std::uint32_t until_slot(std::uint32_t id)
    {
        auto [it, fresh] = until_index.emplace(id, static_cast<std::uint32_t>(untils.size()));
        if (fresh)
            untils.push_back(id);
        return k() + it->second;
    }

    // Decision diagram of X^(t-1) applied to the interned formula `id`.
    Ref expand(std::uint32_t id, std::uint64_t t)
    {
        const std::uint64_t memo_key = static_cast<std::uint64_t>(id) << 32 | t;
        if (auto it = expansions.find(memo_key); it != expansions.end())
            return it->second;
        const Shape &s = shapes[id];
        Ref r = kFalse;
        switch (s.formula.kind()) {
        case Kind::True:
            r = kTrue;
            break;
        case Kind::Atom:
            r = bdd.var(key(t, s.a));
            break;
        case Kind::Not:
            r = bdd.negate(expand(s.a, t));
            break;
        case Kind::And:
            r = bdd.conj(expand(s.a, t), expand(s.b, t));
            break;
        case Kind::Next:
            r = expand(s.a, t + 1);
            break;
        case Kind::Until: {
            const std::uint32_t slot = until_slot(id);
            if (t == 1)
                r = bdd.disj(expand(s.b, 1), bdd.conj(expand(s.a, 1), bdd.var(key(2, slot))));
            else
                r = bdd.var(key(t, slot));
            break;
        }
        default:
            throw Error("formula is not in desugared form");
        }
        expansions.emplace(memo_key, r);
        return r;
    }

    Ref normalize(Ref f)
    {
        if (Bdd::is_terminal(f) || time_of(bdd.top(f)) >= 2)
            return f;
        if (auto it = normalized.find(f); it != normalized.end())
            return it->second;
        const Var v = bdd.top(f);
        const Ref lo = normalize(bdd.lo(f));
        const Ref hi = normalize(bdd.hi(f));
        const std::uint32_t slot = slot_of(v);
        const Ref test = slot < k() ? bdd.var(v) : expand(untils[slot - k()], 1);
        const Ref r = bdd.ite(test, hi, lo);
        normalized.emplace(f, r);
        return r;
    }

    Ref shift(Ref f)
    {
        if (Bdd::is_terminal(f))
            return f;
        if (auto it = shifted.find(f); it != shifted.end())
            return it->second;
        const Var v = bdd.top(f);
        if (time_of(v) < 2)
            throw Error("internal: shifting a diagram with offset-1 variables");
        const Ref lo = shift(bdd.lo(f));
        const Ref hi = shift(bdd.hi(f));
        const Ref r = bdd.mk(v - key(1, 0), lo, hi);
        shifted.emplace(f, r);
        return r;
    }

    Ref progress(Ref f, Letter letter)
    {
        if (k() < 32 && (letter >> k()) != 0)
            throw UnknownAtomError("letter sets a bit beyond the declared atoms");
        while (!Bdd::is_terminal(f) && time_of(bdd.top(f)) == 1) {
            const std::uint32_t slot = slot_of(bdd.top(f));
            f = (letter >> slot) & 1U ? bdd.hi(f) : bdd.lo(f);
        }
        return normalize(shift(f));
    }

    struct Shape {
        Formula formula;
        std::uint32_t a, b;
    };

    std::vector<std::string> ap_order;
    std::unordered_map<std::string, std::uint32_t> ap_index;
    Bdd bdd;
    std::vector<Formula> roots;
    std::unordered_map<const void *, std::uint32_t> interned_by_node;
    std::map<std::tuple<int, std::uint32_t, std::uint32_t>, std::uint32_t> interned_by_shape;
    std::vector<Shape> shapes;
    std::unordered_map<std::uint32_t, std::uint32_t> until_index;
    std::vector<std::uint32_t> untils;
    std::unordered_map<std::uint64_t, Ref> expansions;
    std::unordered_map<Ref, Ref> normalized;
    std::unordered_map<Ref, Ref> shifted;
};

ProgressionContext::ProgressionContext(std::vector<std::string> ap_order)
    : impl_(std::make_unique<Impl>(std::move(ap_order)))
{
}

ProgressionContext::~ProgressionContext() = default;

const std::vector<std::string> &ProgressionContext::ap_order() const
{
    return impl_->ap_order;
}

CanonicalFormula ProgressionContext::canonical(const Formula &f)
{
    Formula core = desugar(f);
    impl_->roots.push_back(core);
    const std::uint32_t id = impl_->intern(core);
    return CanonicalFormula(this, impl_->expand(id, 1));
}

CanonicalFormula ProgressionContext::canonical(const CanonicalFormula &f)
{
    if (f.ctx_ != this)
        throw Error("canonical formula belongs to another context");
    return CanonicalFormula(this, impl_->normalize(f.ref_));
}

CanonicalFormula ProgressionContext::progress(const CanonicalFormula &f, Letter letter)
{
    if (f.ctx_ != this)
        throw Error("canonical formula belongs to another context");
    return CanonicalFormula(this, impl_->progress(f.ref_, letter));
}

Letter ProgressionContext::letter(std::span<const std::string> atoms) const
{
    Letter out = 0;
    for (const auto &name : atoms) {
        auto it = impl_->ap_index.find(name);
        if (it == impl_->ap_index.end())
            throw UnknownAtomError("atom '" + name + "' is not in the AP order");
        out |= Letter{1} << it->second;
    }
    return out;
}

std::size_t ProgressionContext::node_count() const
{
    return impl_->bdd.size();
}

automata::Dfa build_monitor_dfa(const Formula &f, const std::vector<std::string> &ap_order, std::size_t max_states)
{
    if (ap_order.size() > 20)
        throw Error("monitor construction supports at most 20 atoms");
    ProgressionContext ctx(ap_order);
    const CanonicalFormula init = ctx.canonical(f);
    const std::size_t sigma = std::size_t{1} << ap_order.size();

    std::unordered_map<std::uint32_t, automata::State> index;
    std::vector<CanonicalFormula> states;
    std::vector<automata::State> delta;
    index.emplace(init.handle(), 0);
    states.push_back(init);
    for (std::size_t q = 0; q < states.size(); ++q) {
        for (Letter a = 0; a < sigma; ++a) {
            const CanonicalFormula next = ctx.progress(states[q], a);
            auto [it, fresh] = index.emplace(next.handle(), static_cast<automata::State>(states.size()));
            if (fresh) {
                if (states.size() >= max_states)
                    throw StateLimitError(max_states, "monitor construction");
                states.push_back(next);
            }
            delta.push_back(it->second);
        }
    }

    automata::Dfa m(automata::Alphabet::letters(static_cast<unsigned>(ap_order.size())), states.size(), 0);
    for (automata::State q = 0; q < states.size(); ++q) {
        for (Letter a = 0; a < sigma; ++a)
            m.set_next(q, a, delta[q * sigma + a]);
        m.set_final(q, states[q].is_false());
    }
    return automata::minimize(m);
}

automata::Dfa compile_binary_monitor(const Formula &f, const std::vector<std::string> &ap_order,
                                     std::size_t max_states)
{
    const automata::Dfa good = automata::complement(build_monitor_dfa(f, ap_order, max_states));
    automata::Dfa binary = automata::complement(automata::to_binary_dfa(good));
    if (binary.num_states() > max_states)
        throw StateLimitError(max_states, "binary encoding");
    return binary;
}

} // namespace oblimon::ltl
