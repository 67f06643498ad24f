#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oblimon/automata.hpp"

namespace oblimon::ltl {

enum class Kind {
    True,
    False,
    Atom,
    Not,
    And,
    Or,
    Implies,
    Next,
    Until,
    Finally,
    Globally,
    BoundedGlobally,
    BoundedFinally,
};

/// Immutable LTL abstract syntax tree. Copies share structure.
class Formula {
public:
    static Formula top();
    static Formula bottom();
    static Formula atom(std::string name);
    static Formula negation(Formula f);
    static Formula conjunction(Formula lhs, Formula rhs);
    static Formula disjunction(Formula lhs, Formula rhs);
    static Formula implication(Formula lhs, Formula rhs);
    static Formula next(Formula f);
    static Formula until(Formula lhs, Formula rhs);
    static Formula finally(Formula f);
    static Formula globally(Formula f);
    /// Throws BoundError when lower > upper.
    static Formula bounded_globally(std::uint32_t lower, std::uint32_t upper, Formula f);
    static Formula bounded_finally(std::uint32_t lower, std::uint32_t upper, Formula f);

    Kind kind() const;
    const std::string &name() const;
    std::uint32_t lower() const;
    std::uint32_t upper() const;
    std::size_t arity() const;
    const Formula &child(std::size_t i) const;

    /// Identity of the shared node; equal ids imply equal formulas.
    const void *id() const
    {
        return node_.get();
    }

    friend bool operator==(const Formula &a, const Formula &b);

private:
    struct Node;
    explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node))
    {
    }

    std::shared_ptr<const Node> node_;
};

Formula parse_ltl(std::string_view text);

/// Rewrites into the core {True, Atom, Not, And, Next, Until}. Double negations cancel.
Formula desugar(const Formula &f);

/// Grammar-conformant printing; parse_ltl(to_string(f)) == f.
std::string to_string(const Formula &f);

/// Whitespace-free printing used for size reports: `t` for true, `!`, `&`, `X`, `U`.
std::string compact_string(const Formula &f);

/// Character count of compact_string(desugar(f)).
std::size_t formula_size(const Formula &f);

/// Atom names in first-appearance order.
std::vector<std::string> atoms_of(const Formula &f);

/// A letter of 2^AP: bit j set iff the j-th declared atom holds.
using Letter = std::uint32_t;

class ProgressionContext;

/// Canonical Boolean state of the progression construction. Comparable in O(1)
/// within one ProgressionContext.
class CanonicalFormula {
public:
    bool is_true() const;
    bool is_false() const;
    std::uint32_t handle() const
    {
        return ref_;
    }

    friend bool operator==(const CanonicalFormula &a, const CanonicalFormula &b)
    {
        return a.ctx_ == b.ctx_ && a.ref_ == b.ref_;
    }

private:
    friend class ProgressionContext;
    CanonicalFormula(const ProgressionContext *ctx, std::uint32_t ref) : ctx_(ctx), ref_(ref)
    {
    }

    const ProgressionContext *ctx_;
    std::uint32_t ref_;
};

/// Owns the decision-diagram store shared by all canonical formulas over one AP list.
/// Variables are ordered by time offset first, then atoms in ap_order, then Until
/// subformulas in first-appearance order. Not thread-safe; use one per thread.
class ProgressionContext {
public:
    explicit ProgressionContext(std::vector<std::string> ap_order);
    ~ProgressionContext();
    ProgressionContext(const ProgressionContext &) = delete;
    ProgressionContext &operator=(const ProgressionContext &) = delete;

    const std::vector<std::string> &ap_order() const;

    /// Canonical form of desugar(f). Throws UnknownAtomError for undeclared atoms.
    CanonicalFormula canonical(const Formula &f);
    /// Re-canonicalization; the identity on values produced by this context.
    CanonicalFormula canonical(const CanonicalFormula &f);
    /// One-step progression. Throws UnknownAtomError if the letter sets an undeclared bit.
    CanonicalFormula progress(const CanonicalFormula &f, Letter letter);

    Letter letter(std::span<const std::string> atoms) const;

    std::size_t node_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Bad-prefix monitor of `f` over 2^AP, minimized. Accepting states are absorbing.
/// Throws StateLimitError when the progression fixpoint exceeds max_states.
automata::Dfa build_monitor_dfa(const Formula &f, const std::vector<std::string> &ap_order,
                                std::size_t max_states = automata::kDefaultMaxStates);

/// Monitor compiled to the minimized binary encoding. At letter boundaries it accepts
/// exactly the bad prefixes; every word that stops inside a letter is accepted. This is
/// the complement of the encoding of the good-prefix monitor, and has the same size.
automata::Dfa compile_binary_monitor(const Formula &f, const std::vector<std::string> &ap_order,
                                     std::size_t max_states = automata::kDefaultMaxStates);

} // namespace oblimon::ltl
