#include "oblimon/ltl.hpp"

#include <unordered_map>
#include <unordered_set>

#include "oblimon/error.hpp"

namespace oblimon::ltl {

struct Formula::Node {
    Kind kind;
    std::string name;
    std::uint32_t lower = 0;
    std::uint32_t upper = 0;
    std::vector<Formula> children;
};

namespace {

const std::string kEmptyName;

} // namespace

Formula Formula::top()
{
    static const Formula f(std::make_shared<const Node>(Node{Kind::True, {}, 0, 0, {}}));
    return f;
}

Formula Formula::bottom()
{
    static const Formula f(std::make_shared<const Node>(Node{Kind::False, {}, 0, 0, {}}));
    return f;
}

Formula Formula::atom(std::string name)
{
    if (name.empty())
        throw Error("atom names must be nonempty");
    return Formula(std::make_shared<const Node>(Node{Kind::Atom, std::move(name), 0, 0, {}}));
}

Formula Formula::negation(Formula f)
{
    return Formula(std::make_shared<const Node>(Node{Kind::Not, {}, 0, 0, {std::move(f)}}));
}

Formula Formula::conjunction(Formula lhs, Formula rhs)
{
    return Formula(std::make_shared<const Node>(Node{Kind::And, {}, 0, 0, {std::move(lhs), std::move(rhs)}}));
}

Formula Formula::disjunction(Formula lhs, Formula rhs)
{
    return Formula(std::make_shared<const Node>(Node{Kind::Or, {}, 0, 0, {std::move(lhs), std::move(rhs)}}));
}

Formula Formula::implication(Formula lhs, Formula rhs)
{
    return Formula(std::make_shared<const Node>(Node{Kind::Implies, {}, 0, 0, {std::move(lhs), std::move(rhs)}}));
}

Formula Formula::next(Formula f)
{
    return Formula(std::make_shared<const Node>(Node{Kind::Next, {}, 0, 0, {std::move(f)}}));
}

Formula Formula::until(Formula lhs, Formula rhs)
{
    return Formula(std::make_shared<const Node>(Node{Kind::Until, {}, 0, 0, {std::move(lhs), std::move(rhs)}}));
}

Formula Formula::finally(Formula f)
{
    return Formula(std::make_shared<const Node>(Node{Kind::Finally, {}, 0, 0, {std::move(f)}}));
}

Formula Formula::globally(Formula f)
{
    return Formula(std::make_shared<const Node>(Node{Kind::Globally, {}, 0, 0, {std::move(f)}}));
}

Formula Formula::bounded_globally(std::uint32_t lower, std::uint32_t upper, Formula f)
{
    if (lower > upper)
        throw BoundError(0, "bound [" + std::to_string(lower) + "," + std::to_string(upper) + "] has n > m");
    return Formula(std::make_shared<const Node>(Node{Kind::BoundedGlobally, {}, lower, upper, {std::move(f)}}));
}

Formula Formula::bounded_finally(std::uint32_t lower, std::uint32_t upper, Formula f)
{
    if (lower > upper)
        throw BoundError(0, "bound [" + std::to_string(lower) + "," + std::to_string(upper) + "] has n > m");
    return Formula(std::make_shared<const Node>(Node{Kind::BoundedFinally, {}, lower, upper, {std::move(f)}}));
}

Kind Formula::kind() const
{
    return node_->kind;
}

const std::string &Formula::name() const
{
    return node_->kind == Kind::Atom ? node_->name : kEmptyName;
}

std::uint32_t Formula::lower() const
{
    return node_->lower;
}

std::uint32_t Formula::upper() const
{
    return node_->upper;
}

std::size_t Formula::arity() const
{
    return node_->children.size();
}

const Formula &Formula::child(std::size_t i) const
{
    return node_->children.at(i);
}

bool operator==(const Formula &a, const Formula &b)
{
    // Shared subtrees make pointer equality the common fast path.
    if (a.node_ == b.node_)
        return true;
    const auto &x = *a.node_;
    const auto &y = *b.node_;
    if (x.kind != y.kind || x.name != y.name || x.lower != y.lower || x.upper != y.upper ||
        x.children.size() != y.children.size())
        return false;
    for (std::size_t i = 0; i < x.children.size(); ++i)
        if (!(x.children[i] == y.children[i]))
            return false;
    return true;
}

namespace {

Formula make_not(const Formula &f)
{
    if (f.kind() == Kind::Not)
        return f.child(0);
    return Formula::negation(f);
}

Formula make_or(const Formula &a, const Formula &b)
{
    return make_not(Formula::conjunction(make_not(a), make_not(b)));
}

Formula nest_next(Formula f, std::uint32_t times)
{
    for (std::uint32_t i = 0; i < times; ++i)
        f = Formula::next(std::move(f));
    return f;
}

class Desugarer {
public:
    Formula run(const Formula &f)
    {
        if (auto it = memo_.find(f.id()); it != memo_.end())
            return it->second;
        Formula out = rewrite(f);
        memo_.emplace(f.id(), out);
        keep_.push_back(f);
        return out;
    }

private:
    Formula rewrite(const Formula &f)
    {
        switch (f.kind()) {
        case Kind::True:
        case Kind::Atom:
            return f;
        case Kind::False:
            return Formula::negation(Formula::top());
        case Kind::Not:
            return make_not(run(f.child(0)));
        case Kind::And:
            return Formula::conjunction(run(f.child(0)), run(f.child(1)));
        case Kind::Or:
            return make_or(run(f.child(0)), run(f.child(1)));
        case Kind::Implies:
            return make_or(make_not(run(f.child(0))), run(f.child(1)));
        case Kind::Next:
            return Formula::next(run(f.child(0)));
        case Kind::Until:
            return Formula::until(run(f.child(0)), run(f.child(1)));
        case Kind::Finally:
            return Formula::until(Formula::top(), run(f.child(0)));
        case Kind::Globally:
            return make_not(Formula::until(Formula::top(), make_not(run(f.child(0)))));
        case Kind::BoundedGlobally:
        case Kind::BoundedFinally: {
            const bool conj = f.kind() == Kind::BoundedGlobally;
            const Formula body = run(f.child(0));
            // φ ∘ X(φ ∘ X(… ∘ Xφ)) with (m - n) occurrences of X, built inside out.
            Formula chain = body;
            for (std::uint32_t i = f.lower(); i < f.upper(); ++i) {
                Formula tail = Formula::next(chain);
                chain = conj ? Formula::conjunction(body, tail) : make_or(body, tail);
            }
            return nest_next(chain, f.lower());
        }
        }
        throw Error("unreachable formula kind");
    }

    std::unordered_map<const void *, Formula> memo_;
    std::vector<Formula> keep_;
};

int precedence(Kind k)
{
    switch (k) {
    case Kind::Until:
        return 1;
    case Kind::Implies:
        return 2;
    case Kind::Or:
        return 3;
    case Kind::And:
        return 4;
    default:
        return 5;
    }
}

bool right_assoc(Kind k)
{
    return k == Kind::Until || k == Kind::Implies;
}

class Printer {
public:
    explicit Printer(bool compact) : compact_(compact)
    {
    }

    std::string print(const Formula &f)
    {
        std::string out;
        emit(f, out);
        return out;
    }

private:
    void emit_operand(const Formula &f, std::string &out, bool parens)
    {
        if (parens)
            out += '(';
        emit(f, out);
        if (parens)
            out += ')';
    }

    void emit_unary(const std::string &op, const Formula &operand, std::string &out)
    {
        out += op;
        const bool parens = precedence(operand.kind()) < 5;
        if (!compact_ && !parens && op != "!")
            out += ' ';
        emit_operand(operand, out, parens);
    }

    void emit_binary(const Formula &f, const char *op, std::string &out)
    {
        const int p = precedence(f.kind());
        const bool ra = right_assoc(f.kind());
        const int lp = precedence(f.child(0).kind());
        const int rp = precedence(f.child(1).kind());
        emit_operand(f.child(0), out, lp < p || (ra && lp == p));
        if (!compact_)
            out += ' ';
        out += op;
        if (!compact_)
            out += ' ';
        emit_operand(f.child(1), out, rp < p || (!ra && rp == p));
    }

    void emit(const Formula &f, std::string &out)
    {
        switch (f.kind()) {
        case Kind::True:
            out += compact_ ? "t" : "true";
            return;
        case Kind::False:
            out += compact_ ? "f" : "false";
            return;
        case Kind::Atom:
            out += f.name();
            return;
        case Kind::Not:
            emit_unary("!", f.child(0), out);
            return;
        case Kind::Next:
            emit_unary("X", f.child(0), out);
            return;
        case Kind::Finally:
            emit_unary("F", f.child(0), out);
            return;
        case Kind::Globally:
            emit_unary("G", f.child(0), out);
            return;
        case Kind::BoundedGlobally:
        case Kind::BoundedFinally:
            emit_unary(std::string(f.kind() == Kind::BoundedGlobally ? "G[" : "F[") + std::to_string(f.lower()) +
                           "," + std::to_string(f.upper()) + "]",
                       f.child(0), out);
            return;
        case Kind::And:
            emit_binary(f, "&", out);
            return;
        case Kind::Or:
            emit_binary(f, "|", out);
            return;
        case Kind::Implies:
            emit_binary(f, "->", out);
            return;
        case Kind::Until:
            emit_binary(f, "U", out);
            return;
        }
    }

    bool compact_;
};

} // namespace

Formula desugar(const Formula &f)
{
    return Desugarer().run(f);
}

std::string to_string(const Formula &f)
{
    return Printer(false).print(f);
}

std::string compact_string(const Formula &f)
{
    return Printer(true).print(f);
}

std::size_t formula_size(const Formula &f)
{
    return compact_string(desugar(f)).size();
}

std::vector<std::string> atoms_of(const Formula &f)
{
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    std::unordered_set<const void *> visited;
    std::vector<const Formula *> stack{&f};
    // Depth-first, left to right, so the result follows first appearance.
    while (!stack.empty()) {
        const Formula *g = stack.back();
        stack.pop_back();
        if (!visited.insert(g->id()).second)
            continue;
        if (g->kind() == Kind::Atom && seen.insert(g->name()).second)
            out.push_back(g->name());
        for (std::size_t i = g->arity(); i-- > 0;)
            stack.push_back(&g->child(i));
    }
    return out;
}

} // namespace oblimon::ltl
