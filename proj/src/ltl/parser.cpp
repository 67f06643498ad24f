#include <cctype>
#include <charconv>

#include "oblimon/error.hpp"
#include "oblimon/ltl.hpp"

namespace oblimon::ltl {

namespace {

enum class Tok {
    End,
    Ident,
    Number,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    Amp,
    Bar,
    Arrow,
};

struct Token {
    Tok kind;
    std::string_view text;
    std::size_t offset;
};

bool ident_start(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text)
    {
        advance();
    }

    const Token &peek() const
    {
        return current_;
    }

    Token take()
    {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        const std::size_t start = pos_;
        if (pos_ == text_.size()) {
            current_ = {Tok::End, {}, start};
            return;
        }
        const char c = text_[pos_];
        if (ident_start(c)) {
            while (pos_ < text_.size() && ident_char(text_[pos_]))
                ++pos_;
            current_ = {Tok::Ident, text_.substr(start, pos_ - start), start};
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            current_ = {Tok::Number, text_.substr(start, pos_ - start), start};
            return;
        }
        if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
            pos_ += 2;
            current_ = {Tok::Arrow, text_.substr(start, 2), start};
            return;
        }
        Tok kind;
        switch (c) {
        case '(':
            kind = Tok::LParen;
            break;
        case ')':
            kind = Tok::RParen;
            break;
        case '[':
            kind = Tok::LBracket;
            break;
        case ']':
            kind = Tok::RBracket;
            break;
        case ',':
            kind = Tok::Comma;
            break;
        case '!':
            kind = Tok::Bang;
            break;
        case '&':
            kind = Tok::Amp;
            break;
        case '|':
            kind = Tok::Bar;
            break;
        default:
            throw ParseError(start, "unexpected character '" + std::string(1, c) + "'");
        }
        ++pos_;
        current_ = {kind, text_.substr(start, 1), start};
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    Token current_{Tok::End, {}, 0};
};

bool is_keyword(std::string_view word)
{
    return word == "X" || word == "F" || word == "G" || word == "U" || word == "true" || word == "false";
}

class Parser {
public:
    explicit Parser(std::string_view text) : lex_(text)
    {
    }

    Formula parse()
    {
        Formula f = until();
        if (lex_.peek().kind != Tok::End)
            throw ParseError(lex_.peek().offset, "unexpected '" + std::string(lex_.peek().text) + "'");
        return f;
    }

private:
    bool at_ident(std::string_view word) const
    {
        return lex_.peek().kind == Tok::Ident && lex_.peek().text == word;
    }

    Formula until()
    {
        Formula lhs = implication();
        if (!at_ident("U"))
            return lhs;
        lex_.take();
        return Formula::until(std::move(lhs), until());
    }

    Formula implication()
    {
        Formula lhs = disjunction();
        if (lex_.peek().kind != Tok::Arrow)
            return lhs;
        lex_.take();
        return Formula::implication(std::move(lhs), implication());
    }

    Formula disjunction()
    {
        Formula f = conjunction();
        while (lex_.peek().kind == Tok::Bar) {
            lex_.take();
            f = Formula::disjunction(std::move(f), conjunction());
        }
        return f;
    }

    Formula conjunction()
    {
        Formula f = unary();
        while (lex_.peek().kind == Tok::Amp) {
            lex_.take();
            f = Formula::conjunction(std::move(f), unary());
        }
        return f;
    }

    std::uint32_t bound_number()
    {
        const Token t = lex_.take();
        if (t.kind != Tok::Number)
            throw BoundError(t.offset, "bound must be a nonnegative integer");
        std::uint32_t value = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size())
            throw BoundError(t.offset, "bound '" + std::string(t.text) + "' is out of range");
        return value;
    }

    void expect(Tok kind, const char *what)
    {
        const Token t = lex_.take();
        if (t.kind != kind)
            throw ParseError(t.offset, std::string("expected ") + what);
    }

    Formula unary()
    {
        const Token t = lex_.peek();
        if (t.kind == Tok::Bang) {
            lex_.take();
            return Formula::negation(unary());
        }
        if (t.kind == Tok::Ident && (t.text == "X" || t.text == "F" || t.text == "G")) {
            lex_.take();
            if (t.text != "X" && lex_.peek().kind == Tok::LBracket) {
                const std::size_t open = lex_.take().offset;
                const std::uint32_t lower = bound_number();
                expect(Tok::Comma, "','");
                const std::uint32_t upper = bound_number();
                expect(Tok::RBracket, "']'");
                if (lower > upper)
                    throw BoundError(open, "bound [" + std::to_string(lower) + "," + std::to_string(upper) +
                                               "] has n > m");
                Formula operand = unary();
                return t.text == "G" ? Formula::bounded_globally(lower, upper, std::move(operand))
                                     : Formula::bounded_finally(lower, upper, std::move(operand));
            }
            Formula operand = unary();
            if (t.text == "X")
                return Formula::next(std::move(operand));
            return t.text == "G" ? Formula::globally(std::move(operand)) : Formula::finally(std::move(operand));
        }
        return primary();
    }

    Formula primary()
    {
        const Token t = lex_.take();
        switch (t.kind) {
        case Tok::LParen: {
            Formula f = until();
            expect(Tok::RParen, "')'");
            return f;
        }
        case Tok::Ident:
            if (t.text == "true")
                return Formula::top();
            if (t.text == "false")
                return Formula::bottom();
            if (is_keyword(t.text))
                throw ParseError(t.offset, "unexpected '" + std::string(t.text) + "'");
            return Formula::atom(std::string(t.text));
        case Tok::End:
            throw ParseError(t.offset, "unexpected end of input");
        default:
            throw ParseError(t.offset, "unexpected '" + std::string(t.text) + "'");
        }
    }

    Lexer lex_;
};

} // namespace

Formula parse_ltl(std::string_view text)
{
    return Parser(text).parse();
}

} // namespace oblimon::ltl
