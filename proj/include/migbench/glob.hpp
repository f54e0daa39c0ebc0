#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace migbench {

/// Path glob over '/'-separated repo-relative paths.
///
/// `*` matches within one segment, `?` one non-separator character,
/// `[...]` a character class (`!` or `^` negates, `a-z` ranges), and `**`
/// crosses segments. A leading `**/` or an inner `/**/` also matches zero
/// directories. A backslash escapes the next character.
class Glob {
public:
    /// Throws Error(BadGlob) on an empty pattern, an unterminated class or a dangling escape.
    static Glob compile(std::string_view source);

    bool matches(std::string_view path) const;
    const std::string& source() const noexcept { return source_; }

private:
    enum class Kind { Literal, AnyChar, Star, DoubleStar, DirPrefix, Class };
    struct Token {
        Kind kind = Kind::Literal;
        char literal = 0;
        bool negated = false;
        std::vector<std::pair<unsigned char, unsigned char>> ranges;
    };

    static Token make_token(Kind kind, char literal = 0);
    bool class_matches(const Token& t, unsigned char c) const;

    std::string source_;
    std::vector<Token> tokens_;
};

/// True when `globs` is empty or any glob matches `path`.
bool glob_gate(const std::vector<Glob>& globs, std::string_view path);

}  // namespace migbench
