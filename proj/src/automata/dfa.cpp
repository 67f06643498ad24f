#include "oblimon/automata.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <sstream>

#include "oblimon/error.hpp"

namespace oblimon::automata {

Alphabet Alphabet::letters(unsigned num_aps)
{
    if (num_aps > 20)
        throw AutomatonError("letter alphabet needs at most 20 atoms, got " + std::to_string(num_aps));
    return Alphabet(num_aps, false);
}

Dfa::Dfa(Alphabet alphabet, std::size_t num_states, State initial)
    : alphabet_(alphabet), initial_(initial), delta_(num_states * alphabet.size(), 0), finals_(num_states, 0)
{
    if (num_states == 0)
        throw AutomatonError("a DFA needs at least one state");
    if (initial >= num_states)
        throw AutomatonError("initial state out of range");
}

void Dfa::set_initial(State q)
{
    if (q >= num_states())
        throw AutomatonError("initial state out of range");
    initial_ = q;
}

void Dfa::set_next(State q, Symbol a, State target)
{
    if (q >= num_states() || target >= num_states())
        throw AutomatonError("transition endpoint out of range");
    if (a >= alphabet_.size())
        throw AutomatonError("symbol " + std::to_string(a) + " outside the alphabet");
    delta_[static_cast<std::size_t>(q) * alphabet_.size() + a] = target;
}

void Dfa::set_final(State q, bool final)
{
    finals_.at(q) = final ? 1 : 0;
}

std::vector<State> Dfa::finals() const
{
    std::vector<State> out;
    for (State q = 0; q < num_states(); ++q)
        if (finals_[q])
            out.push_back(q);
    return out;
}

State run_from(const Dfa &m, State from, std::span<const Symbol> word)
{
    const std::size_t sigma = m.alphabet().size();
    State q = from;
    for (Symbol a : word) {
        if (a >= sigma)
            throw AutomatonError("symbol " + std::to_string(a) + " outside the alphabet");
        q = m.next(q, a);
    }
    return q;
}

bool run_word(const Dfa &m, std::span<const Symbol> word)
{
    return m.is_final(run_from(m, m.initial(), word));
}

Dfa canonical_bfs(const Dfa &m)
{
    const std::size_t sigma = m.alphabet().size();
    constexpr State kUnseen = ~State{0};
    std::vector<State> index(m.num_states(), kUnseen);
    std::vector<State> order;
    order.reserve(m.num_states());
    index[m.initial()] = 0;
    order.push_back(m.initial());
    for (std::size_t head = 0; head < order.size(); ++head) {
        for (State t : m.row(order[head])) {
            if (index[t] == kUnseen) {
                index[t] = static_cast<State>(order.size());
                order.push_back(t);
            }
        }
    }
    Dfa out(m.alphabet(), order.size(), 0);
    for (State i = 0; i < order.size(); ++i) {
        const State q = order[i];
        for (Symbol a = 0; a < sigma; ++a)
            out.set_next(i, a, index[m.next(q, a)]);
        out.set_final(i, m.is_final(q));
    }
    return out;
}

Dfa gen_mod_counter(std::size_t m)
{
    if (m == 0)
        throw AutomatonError("mod counter needs m >= 1");
    Dfa dfa(Alphabet::binary(), m, 0);
    for (State i = 0; i < m; ++i) {
        dfa.set_next(i, 0, i);
        dfa.set_next(i, 1, static_cast<State>((i + 1) % m));
    }
    dfa.set_final(0);
    return dfa;
}

std::vector<State> reachable_after(const Dfa &m, std::span<const State> from, std::size_t k)
{
    std::vector<std::uint8_t> mark(m.num_states(), 0);
    std::vector<State> current;
    for (State q : from) {
        if (q >= m.num_states())
            throw AutomatonError("state out of range");
        if (!mark[q]) {
            mark[q] = 1;
            current.push_back(q);
        }
    }
    std::vector<State> next;
    for (std::size_t step = 0; step < k; ++step) {
        for (State q : current)
            mark[q] = 0;
        next.clear();
        for (State q : current) {
            for (State t : m.row(q)) {
                if (!mark[t]) {
                    mark[t] = 1;
                    next.push_back(t);
                }
            }
        }
        current.swap(next);
    }
    std::sort(current.begin(), current.end());
    return current;
}

std::vector<Symbol> encode_letters(std::span<const Symbol> letters, unsigned num_aps)
{
    std::vector<Symbol> bits;
    bits.reserve(letters.size() * num_aps);
    for (Symbol letter : letters) {
        if (num_aps < 32 && (letter >> num_aps) != 0)
            throw AutomatonError("letter " + std::to_string(letter) + " has bits beyond |AP|");
        for (unsigned j = 0; j < num_aps; ++j)
            bits.push_back((letter >> j) & 1U);
    }
    return bits;
}

std::string to_text(const Dfa &m)
{
    std::ostringstream out;
    out << "dfa " << m.num_states() << ' ';
    if (m.alphabet().is_binary())
        out << "binary";
    else
        out << "letters " << m.alphabet().num_aps();
    out << ' ' << m.initial() << '\n';
    out << "finals:";
    for (State q : m.finals())
        out << ' ' << q;
    out << '\n';
    for (State q = 0; q < m.num_states(); ++q) {
        bool first = true;
        for (State t : m.row(q)) {
            if (!first)
                out << ' ';
            out << t;
            first = false;
        }
        out << '\n';
    }
    return out.str();
}

namespace {

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text)
    {
    }

    bool next_line(std::string_view &line)
    {
        while (pos_ <= text_.size()) {
            if (pos_ == text_.size())
                return false;
            auto end = text_.find('\n', pos_);
            if (end == std::string_view::npos)
                end = text_.size();
            line = text_.substr(pos_, end - pos_);
            pos_ = end + 1;
            ++line_no_;
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);
            if (!line.empty())
                return true;
        }
        return false;
    }

    std::size_t line_no() const
    {
        return line_no_;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

std::vector<std::string_view> split_words(std::string_view line)
{
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t')
            ++j;
        if (j > i)
            words.push_back(line.substr(i, j - i));
        i = j;
    }
    return words;
}

std::uint64_t parse_number(std::string_view word, std::size_t line_no)
{
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
    if (ec != std::errc() || ptr != word.data() + word.size())
        throw AutomatonError("line " + std::to_string(line_no) + ": expected a number, got '" +
                             std::string(word) + "'");
    return value;
}

} // namespace

Dfa from_text(std::string_view text)
{
    LineReader reader(text);
    std::string_view line;
    if (!reader.next_line(line))
        throw AutomatonError("empty DFA file");
    auto header = split_words(line);
    if (header.size() < 4 || header[0] != "dfa")
        throw AutomatonError("line 1: expected 'dfa <states> <alphabet> <q0>'");
    const std::size_t n = parse_number(header[1], reader.line_no());
    Alphabet alphabet = Alphabet::binary();
    std::size_t q0_index = 3;
    if (header[2] == "letters") {
        if (header.size() != 5)
            throw AutomatonError("line 1: expected 'dfa <states> letters <k> <q0>'");
        alphabet = Alphabet::letters(static_cast<unsigned>(parse_number(header[3], reader.line_no())));
        q0_index = 4;
    } else if (header[2] != "binary" || header.size() != 4) {
        throw AutomatonError("line 1: unknown alphabet '" + std::string(header[2]) + "'");
    }
    const State q0 = static_cast<State>(parse_number(header[q0_index], reader.line_no()));
    Dfa m(alphabet, n, q0);

    if (!reader.next_line(line))
        throw AutomatonError("missing finals line");
    auto finals = split_words(line);
    if (finals.empty() || finals[0] != "finals:")
        throw AutomatonError("line " + std::to_string(reader.line_no()) + ": expected 'finals:'");
    for (std::size_t i = 1; i < finals.size(); ++i) {
        const auto q = parse_number(finals[i], reader.line_no());
        if (q >= n)
            throw AutomatonError("final state out of range");
        m.set_final(static_cast<State>(q));
    }
    for (State q = 0; q < n; ++q) {
        if (!reader.next_line(line))
            throw AutomatonError("missing transition line for state " + std::to_string(q));
        auto words = split_words(line);
        if (words.size() != alphabet.size())
            throw AutomatonError("line " + std::to_string(reader.line_no()) + ": expected " +
                                 std::to_string(alphabet.size()) + " successors");
        for (Symbol a = 0; a < words.size(); ++a)
            m.set_next(q, a, static_cast<State>(parse_number(words[a], reader.line_no())));
    }
    if (reader.next_line(line))
        throw AutomatonError("trailing content after state " + std::to_string(n - 1));
    return m;
}

} // namespace oblimon::automata
