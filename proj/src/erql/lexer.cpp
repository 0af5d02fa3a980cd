#include "erdb/erql/lexer.hpp"

#include <cctype>
#include <charconv>

namespace erdb::erql {

bool Token::is_keyword(const char* kw) const {
    if (kind != Kind::Name) return false;
    size_t n = text.size();
    if (n != std::char_traits<char>::length(kw)) return false;
    for (size_t i = 0; i < n; ++i)
        if (std::tolower(static_cast<unsigned char>(text[i])) != kw[i]) return false;
    return true;
}

namespace {

struct Cursor {
    const std::string& in;
    size_t pos = 0;
    int line = 1;
    int col = 1;

    bool done() const { return pos >= in.size(); }
    char peek(size_t ahead = 0) const {
        return pos + ahead < in.size() ? in[pos + ahead] : '\0';
    }
    char advance() {
        char c = in[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    }
    SourceLoc loc() const { return {line, col}; }
    [[noreturn]] void fail(const std::string& msg) const { throw Error(msg, line, col); }
};

} // namespace

std::vector<Token> tokenize(const std::string& input) {
    std::vector<Token> out;
    Cursor c{input};

    while (!c.done()) {
        char ch = c.peek();
        if (std::isspace(static_cast<unsigned char>(ch))) {
            c.advance();
            continue;
        }
        // -- comments run to end of line
        if (ch == '-' && c.peek(1) == '-') {
            while (!c.done() && c.peek() != '\n') c.advance();
            continue;
        }

        SourceLoc loc = c.loc();

        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::string text;
            while (!c.done() && (std::isalnum(static_cast<unsigned char>(c.peek())) ||
                                 c.peek() == '_'))
                text += c.advance();
            out.push_back({Token::Kind::Name, std::move(text), 0, 0, loc});
            continue;
        }

        if (std::isdigit(static_cast<unsigned char>(ch)) ||
            (ch == '-' && std::isdigit(static_cast<unsigned char>(c.peek(1))))) {
            std::string text;
            if (c.peek() == '-') text += c.advance();
            while (std::isdigit(static_cast<unsigned char>(c.peek()))) text += c.advance();
            bool is_float = false;
            if (c.peek() == '.' && std::isdigit(static_cast<unsigned char>(c.peek(1)))) {
                is_float = true;
                text += c.advance();
                while (std::isdigit(static_cast<unsigned char>(c.peek()))) text += c.advance();
            }
            if (c.peek() == 'e' || c.peek() == 'E') {
                is_float = true;
                text += c.advance();
                if (c.peek() == '+' || c.peek() == '-') text += c.advance();
                if (!std::isdigit(static_cast<unsigned char>(c.peek())))
                    c.fail("malformed number: missing exponent digits");
                while (std::isdigit(static_cast<unsigned char>(c.peek()))) text += c.advance();
            }
            Token t;
            t.loc = loc;
            t.text = text;
            if (is_float) {
                t.kind = Token::Kind::Float;
                t.float_value = std::stod(text);
            } else {
                t.kind = Token::Kind::Int;
                auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(),
                                               t.int_value);
                if (ec != std::errc{} || p != text.data() + text.size())
                    c.fail("integer literal out of range: " + text);
            }
            out.push_back(std::move(t));
            continue;
        }

        if (ch == '"') {
            c.advance();
            std::string text;
            while (true) {
                if (c.done()) c.fail("unterminated string literal");
                char d = c.advance();
                if (d == '"') break;
                if (d == '\\') {
                    if (c.done()) c.fail("unterminated escape");
                    char e = c.advance();
                    switch (e) {
                    case 'n': text += '\n'; break;
                    case 't': text += '\t'; break;
                    case 'r': text += '\r'; break;
                    case '"': text += '"'; break;
                    case '\\': text += '\\'; break;
                    default: c.fail(std::string("unknown escape \\") + e);
                    }
                } else {
                    text += d;
                }
            }
            out.push_back({Token::Kind::String, std::move(text), 0, 0, loc});
            continue;
        }

        auto punct = [&](std::string p) {
            for (size_t i = 0; i < p.size(); ++i) c.advance();
            out.push_back({Token::Kind::Punct, std::move(p), 0, 0, loc});
        };

        switch (ch) {
        case ',': case '(': case ')': case '[': case ']': case '{': case '}':
        case '.': case ':': case ';': case '*': case '=':
            punct(std::string(1, ch));
            continue;
        case '!':
            if (c.peek(1) == '=') { punct("!="); continue; }
            c.fail("expected '=' after '!'");
        case '<':
            if (c.peek(1) == '=') punct("<=");
            else punct("<");
            continue;
        case '>':
            if (c.peek(1) == '=') punct(">=");
            else punct(">");
            continue;
        default:
            c.fail(std::string("unexpected character '") + ch + "'");
        }
    }

    Token end;
    end.kind = Token::Kind::End;
    end.loc = c.loc();
    out.push_back(end);
    return out;
}

} // namespace erdb::erql
