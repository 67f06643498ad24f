#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "oblimon/automata.hpp"
#include "oblimon/error.hpp"

using namespace oblimon;
using namespace oblimon::automata;

namespace {

std::vector<Symbol> bits(const char *s)
{
    std::vector<Symbol> w;
    for (; *s; ++s)
        w.push_back(*s == '1' ? 1 : 0);
    return w;
}

// All binary words of length <= n.
std::vector<std::vector<Symbol>> all_words(unsigned n)
{
    std::vector<std::vector<Symbol>> out{{}};
    std::size_t from = 0;
    for (unsigned len = 1; len <= n; ++len) {
        const std::size_t to = out.size();
        for (std::size_t i = from; i < to; ++i)
            for (Symbol a = 0; a < 2; ++a) {
                auto w = out[i];
                w.push_back(a);
                out.push_back(std::move(w));
            }
        from = to;
    }
    return out;
}

// Accepts exactly the word `target`.
Dfa single_word(const std::vector<Symbol> &target)
{
    const auto n = target.size();
    Dfa m(Alphabet::binary(), n + 2, 0);
    const State dead = static_cast<State>(n + 1);
    for (State q = 0; q <= n + 1; ++q)
        for (Symbol a = 0; a < 2; ++a)
            m.set_next(q, a, q < n && a == target[q] ? q + 1 : dead);
    m.set_final(static_cast<State>(n));
    return m;
}

// Brute-force count of Myhill-Nerode classes among reachable states, up to length n.
std::size_t distinguishable_classes(const Dfa &m, unsigned n)
{
    std::set<std::vector<bool>> sigs;
    const auto words = all_words(n);
    for (State q = 0; q < m.num_states(); ++q) {
        std::vector<bool> sig;
        for (const auto &w : words)
            sig.push_back(m.is_final(run_from(m, q, w)));
        sigs.insert(sig);
    }
    return sigs.size();
}

} // namespace

TEST_CASE("run_word on the mod counter")
{
    const Dfa m3 = gen_mod_counter(3);
    CHECK(run_word(m3, bits("111")));
    CHECK_FALSE(run_word(m3, bits("110")));
    CHECK(run_word(m3, bits("10101")));
    CHECK(run_word(m3, bits("")));
    CHECK_THROWS_AS(run_word(m3, std::vector<Symbol>{2}), AutomatonError);

    const Dfa m1 = gen_mod_counter(1);
    CHECK(m1.num_states() == 1);
    for (const auto &w : all_words(5))
        CHECK(run_word(m1, w));

    CHECK(gen_mod_counter(500).num_states() == 500);
}

TEST_CASE("empty word follows the initial state")
{
    std::mt19937 rng(3);
    for (int i = 0; i < 20; ++i) {
        const Dfa m = random_dfa(rng, 1 + rng() % 6);
        CHECK(run_word(m, std::vector<Symbol>{}) == m.is_final(m.initial()));
    }
}

TEST_CASE("minimize collapses duplicate states")
{
    // "contains a 0" with the accepting sink duplicated.
    Dfa m(Alphabet::binary(), 3, 0);
    m.set_next(0, 0, 1);
    m.set_next(0, 1, 0);
    m.set_next(1, 0, 2);
    m.set_next(1, 1, 2);
    m.set_next(2, 0, 1);
    m.set_next(2, 1, 1);
    m.set_final(1);
    m.set_final(2);
    const Dfa min = minimize(m);
    CHECK(min.num_states() == 2);
    CHECK(dfa_equiv(m, min).equivalent);
    CHECK(minimize(min) == min);
}

TEST_CASE("minimized mod counters keep every state")
{
    for (std::size_t m = 2; m <= 10; ++m) {
        const Dfa c = gen_mod_counter(m);
        CHECK(minimize(c).num_states() == m);
        CHECK(distinguishable_classes(c, static_cast<unsigned>(m)) == m);
    }
}

TEST_CASE("minimize on random DFAs")
{
    std::mt19937 rng(17);
    for (int i = 0; i < 200; ++i) {
        const Dfa m = random_dfa(rng, 1 + rng() % 12);
        const Dfa min = minimize(m);
        CHECK(dfa_equiv(m, min).equivalent);
        CHECK(minimize(min) == min);
        CHECK(min.num_states() == distinguishable_classes(m, 12));
    }
}

TEST_CASE("minimize drops unreachable states and numbers states canonically")
{
    Dfa m(Alphabet::binary(), 4, 2);
    m.set_next(2, 0, 3);
    m.set_next(2, 1, 2);
    m.set_next(3, 0, 3);
    m.set_next(3, 1, 2);
    m.set_final(3);
    m.set_final(0);
    const Dfa min = minimize(m);
    CHECK(min.num_states() == 2);
    CHECK(min.initial() == 0);
    CHECK(min.next(0, 0) == 1);

    // Isomorphic inputs with shuffled numbering give identical results.
    std::mt19937 rng(23);
    for (int i = 0; i < 50; ++i) {
        const Dfa a = random_dfa(rng, 2 + rng() % 8);
        std::vector<State> perm(a.num_states());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Dfa b(a.alphabet(), a.num_states(), perm[a.initial()]);
        for (State q = 0; q < a.num_states(); ++q) {
            for (Symbol s = 0; s < 2; ++s)
                b.set_next(perm[q], s, perm[a.next(q, s)]);
            b.set_final(perm[q], a.is_final(q));
        }
        CHECK(minimize(a) == minimize(b));
    }
}

TEST_CASE("reverse_min examples")
{
    for (std::size_t m : {1, 2, 5, 10, 50})
        CHECK(reverse_min(gen_mod_counter(m)).num_states() == m);

    const Dfa r = reverse_min(single_word(bits("01")));
    for (const auto &w : all_words(4))
        CHECK(run_word(r, w) == (w == bits("10")));
}

TEST_CASE("reverse_min agrees with reading words backwards")
{
    std::mt19937 rng(29);
    const auto words = all_words(6);
    for (int i = 0; i < 200; ++i) {
        const Dfa m = random_dfa(rng, 1 + rng() % 10);
        const Dfa r = reverse_min(m);
        CHECK(r == minimize(r));
        for (const auto &w : words) {
            std::vector<Symbol> rev(w.rbegin(), w.rend());
            REQUIRE(run_word(r, w) == run_word(m, rev));
        }
    }
}

TEST_CASE("double reversal restores the language")
{
    std::mt19937 rng(31);
    for (int i = 0; i < 100; ++i) {
        const Dfa m = random_dfa(rng, 1 + rng() % 20);
        const Dfa back = minimize(reverse_min(reverse_min(m)));
        CHECK(dfa_equiv(minimize(m), back).equivalent);
        CHECK(back == minimize(m));
    }
}

TEST_CASE("group DFAs reverse without growth")
{
    std::mt19937 rng(37);
    const auto words = all_words(7);
    for (int i = 0; i < 60; ++i) {
        const std::size_t n = 1 + rng() % 64;
        const Dfa m = random_group_dfa(rng, n);
        CHECK(m.num_states() == n);
        CHECK(m.finals().size() == 1);
        CHECK(reachable_after(m, std::vector<State>{m.initial()}, 0).size() == 1);
        const Dfa r = reverse_min(m);
        CHECK(r.num_states() <= n);
        for (const auto &w : words) {
            std::vector<Symbol> rev(w.rbegin(), w.rend());
            REQUIRE(run_word(r, w) == run_word(m, rev));
        }
    }
}

TEST_CASE("determinize honours its budgets")
{
    // "The k-th symbol is 1" has k + 2 states; its reversal needs 2^k.
    const unsigned k = 10;
    const State yes = k + 1, no = k;
    Dfa m(Alphabet::binary(), k + 2, 0);
    for (State q = 0; q + 1 < k; ++q) {
        m.set_next(q, 0, q + 1);
        m.set_next(q, 1, q + 1);
    }
    m.set_next(k - 1, 0, no);
    m.set_next(k - 1, 1, yes);
    for (Symbol a = 0; a < 2; ++a) {
        m.set_next(no, a, no);
        m.set_next(yes, a, yes);
    }
    m.set_final(yes);

    CHECK(reverse_min(m).num_states() == std::size_t{1} << k);
    try {
        reverse_min(m, 100);
        FAIL("expected StateLimitError");
    } catch (const StateLimitError &e) {
        CHECK(e.limit() == 100);
    }
    CHECK_THROWS_AS(reverse_min(m, kDefaultMaxStates, 64), StateLimitError);
    CHECK_THROWS_AS(determinize(reverse(m), 10), StateLimitError);
}

TEST_CASE("to_binary_dfa don't-care collapse")
{
    // Over AP = {p, q}: one letter-level state that stays accepting while p holds.
    Dfa m(Alphabet::letters(2), 2, 0);
    for (Symbol a = 0; a < 4; ++a) {
        m.set_next(0, a, (a & 1U) ? 0 : 1);
        m.set_next(1, a, 1);
    }
    m.set_final(0);
    const Dfa b = to_binary_dfa(m);
    // Boundary state, after-p state, and a dead state.
    CHECK(b.num_states() == 3);
    const State after_p = b.next(b.initial(), 1);
    CHECK(b.next(after_p, 0) == b.next(after_p, 1));
    CHECK(b.next(after_p, 0) == b.initial());
}

TEST_CASE("to_binary_dfa is exact at letter boundaries")
{
    std::mt19937 rng(37);
    for (int i = 0; i < 100; ++i) {
        const unsigned k = 1 + rng() % 3;
        const Dfa m = random_dfa(rng, 1 + rng() % 8, Alphabet::letters(k));
        const Dfa b = to_binary_dfa(m);
        for (int t = 0; t < 30; ++t) {
            std::vector<Symbol> w(rng() % 8);
            for (auto &a : w)
                a = rng() % (1U << k);
            REQUIRE(run_word(b, encode_letters(w, k)) == run_word(m, w));
        }
        // Mid-letter positions are never accepting.
        std::vector<Symbol> w(1 + rng() % 5);
        for (auto &a : w)
            a = rng() % (1U << k);
        auto enc = encode_letters(w, k);
        if (k > 1) {
            enc.pop_back();
            CHECK_FALSE(run_word(b, enc));
        }
    }
}

TEST_CASE("complement swaps finals")
{
    const Dfa m = gen_mod_counter(3);
    const Dfa c = complement(m);
    for (const auto &w : all_words(6))
        CHECK(run_word(c, w) != run_word(m, w));
}

TEST_CASE("dfa_equiv witnesses")
{
    const Dfa m2 = gen_mod_counter(2), m3 = gen_mod_counter(3);
    CHECK(dfa_equiv(m2, m2).equivalent);
    const auto r = dfa_equiv(m2, m3);
    CHECK_FALSE(r.equivalent);
    CHECK(r.witness == bits("11"));
    CHECK(run_word(m2, r.witness) != run_word(m3, r.witness));
    CHECK_THROWS_AS(dfa_equiv(m2, Dfa(Alphabet::letters(1), 1)), AutomatonError);

    std::mt19937 rng(41);
    for (int i = 0; i < 100; ++i) {
        const Dfa a = random_dfa(rng, 1 + rng() % 6), b = random_dfa(rng, 1 + rng() % 6);
        const auto e = dfa_equiv(a, b);
        if (e.equivalent) {
            for (const auto &w : all_words(8))
                REQUIRE(run_word(a, w) == run_word(b, w));
        } else {
            CHECK(run_word(a, e.witness) != run_word(b, e.witness));
        }
    }
}

TEST_CASE("reachable_after")
{
    const Dfa m3 = gen_mod_counter(3);
    const std::vector<State> start{0};
    CHECK(reachable_after(m3, start, 0) == std::vector<State>{0});
    CHECK(reachable_after(m3, start, 1) == std::vector<State>{0, 1});
    for (std::size_t k = 2; k < 6; ++k)
        CHECK(reachable_after(m3, start, k) == std::vector<State>{0, 1, 2});

    // The sequence of sets is eventually periodic.
    std::mt19937 rng(43);
    for (int i = 0; i < 50; ++i) {
        const Dfa m = random_dfa(rng, 1 + rng() % 10);
        std::vector<std::vector<State>> seq;
        std::vector<State> cur{m.initial()};
        for (int t = 0; t < 40; ++t) {
            seq.push_back(cur);
            cur = reachable_after(m, cur, 1);
            CHECK(std::is_sorted(cur.begin(), cur.end()));
        }
        CHECK(reachable_after(m, std::vector<State>{m.initial()}, 7) == seq[7]);
        bool repeats = false;
        for (std::size_t a = 0; a < seq.size() && !repeats; ++a)
            for (std::size_t b = a + 1; b < seq.size(); ++b)
                if (seq[a] == seq[b]) {
                    repeats = true;
                    break;
                }
        CHECK(repeats);
    }
}

TEST_CASE("text format round-trips")
{
    std::mt19937 rng(47);
    for (int i = 0; i < 30; ++i) {
        const Dfa m = random_dfa(rng, 1 + rng() % 9, i % 2 ? Alphabet::binary() : Alphabet::letters(2));
        CHECK(from_text(to_text(m)) == m);
    }
    CHECK(to_text(gen_mod_counter(2)) == "dfa 2 binary 0\nfinals: 0\n0 1\n1 0\n");
    CHECK_THROWS_AS(from_text("dfa 2 binary 5\nfinals:\n0 1\n1 0\n"), AutomatonError);
    CHECK_THROWS_AS(from_text("dfa 2 binary 0\nfinals:\n0 1\n"), AutomatonError);
    CHECK_THROWS_AS(from_text("nonsense"), AutomatonError);
}
