#pragma once

#include <string>
#include <vector>

#include "erdb/erql/ast.hpp"

namespace erdb::erql {

struct Token {
    enum class Kind {
        Name,    // identifier or keyword (keywords matched case-insensitively)
        Int,
        Float,
        String,
        Punct,   // one of , ( ) [ ] { } . : ; * = != < <= > >=
        End,
    };

    Kind kind = Kind::End;
    std::string text;    // raw text; for String, the unescaped content
    int64_t int_value = 0;
    double float_value = 0;
    SourceLoc loc;

    bool is_punct(const char* p) const { return kind == Kind::Punct && text == p; }
    /// Case-insensitive keyword test (identifiers stay case-sensitive).
    bool is_keyword(const char* kw) const;
};

/// Tokenizes a whole input. Throws Error with line/column on bad characters,
/// unterminated strings, or malformed numbers.
std::vector<Token> tokenize(const std::string& input);

} // namespace erdb::erql
