#include "migbench/glob.hpp"

#include "migbench/error.hpp"

namespace migbench {

Glob::Token Glob::make_token(Kind kind, char literal) {
    Token t;
    t.kind = kind;
    t.literal = literal;
    return t;
}

Glob Glob::compile(std::string_view source) {
    if (source.empty()) throw Error(ErrorCode::BadGlob, "empty glob");
    Glob g;
    g.source_ = std::string(source);
    std::size_t i = 0;
    const std::size_t n = source.size();
    while (i < n) {
        const char c = source[i];
        if (c == '\\') {
            if (i + 1 >= n) throw Error(ErrorCode::BadGlob, "dangling escape in '" + g.source_ + "'");
            g.tokens_.push_back(make_token(Kind::Literal, source[i + 1]));
            i += 2;
        } else if (c == '*') {
            if (i + 1 < n && source[i + 1] == '*') {
                const bool at_segment_start = i == 0 || source[i - 1] == '/';
                if (at_segment_start && i + 2 < n && source[i + 2] == '/') {
                    g.tokens_.push_back(make_token(Kind::DirPrefix));
                    i += 3;
                } else {
                    g.tokens_.push_back(make_token(Kind::DoubleStar));
                    i += 2;
                    while (i < n && source[i] == '*') ++i;
                }
            } else {
                g.tokens_.push_back(make_token(Kind::Star));
                ++i;
            }
        } else if (c == '?') {
            g.tokens_.push_back(make_token(Kind::AnyChar));
            ++i;
        } else if (c == '[') {
            Token t = make_token(Kind::Class);
            std::size_t j = i + 1;
            if (j < n && (source[j] == '!' || source[j] == '^')) {
                t.negated = true;
                ++j;
            }
            bool first = true;
            while (j < n && (source[j] != ']' || first)) {
                auto lo = static_cast<unsigned char>(source[j]);
                if (j + 2 < n && source[j + 1] == '-' && source[j + 2] != ']') {
                    auto hi = static_cast<unsigned char>(source[j + 2]);
                    if (hi < lo) throw Error(ErrorCode::BadGlob, "reversed range in '" + g.source_ + "'");
                    t.ranges.emplace_back(lo, hi);
                    j += 3;
                } else {
                    t.ranges.emplace_back(lo, lo);
                    ++j;
                }
                first = false;
            }
            if (j >= n) throw Error(ErrorCode::BadGlob, "unterminated character class in '" + g.source_ + "'");
            g.tokens_.push_back(std::move(t));
            i = j + 1;
        } else {
            g.tokens_.push_back(make_token(Kind::Literal, c));
            ++i;
        }
    }
    return g;
}

bool Glob::class_matches(const Token& t, unsigned char c) const {
    if (c == '/') return false;
    bool in = false;
    for (const auto& [lo, hi] : t.ranges) {
        if (c >= lo && c <= hi) {
            in = true;
            break;
        }
    }
    return in != t.negated;
}

bool Glob::matches(std::string_view path) const {
    const std::size_t nt = tokens_.size();
    const std::size_t np = path.size();
    // reachable[k][p]: tokens [0,k) can consume path [0,p).
    std::vector<char> cur(np + 1, 0), next(np + 1, 0);
    cur[0] = 1;
    for (std::size_t k = 0; k < nt; ++k) {
        const Token& t = tokens_[k];
        std::fill(next.begin(), next.end(), 0);
        for (std::size_t p = 0; p <= np; ++p) {
            if (!cur[p]) continue;
            switch (t.kind) {
                case Kind::Literal:
                    if (p < np && path[p] == t.literal) next[p + 1] = 1;
                    break;
                case Kind::AnyChar:
                    if (p < np && path[p] != '/') next[p + 1] = 1;
                    break;
                case Kind::Class:
                    if (p < np && class_matches(t, static_cast<unsigned char>(path[p]))) next[p + 1] = 1;
                    break;
                case Kind::Star:
                    for (std::size_t q = p;; ++q) {
                        next[q] = 1;
                        if (q >= np || path[q] == '/') break;
                    }
                    break;
                case Kind::DoubleStar:
                    for (std::size_t q = p; q <= np; ++q) next[q] = 1;
                    break;
                case Kind::DirPrefix:
                    next[p] = 1;
                    for (std::size_t q = p; q < np; ++q) {
                        if (path[q] == '/') next[q + 1] = 1;
                    }
                    break;
            }
        }
        std::swap(cur, next);
    }
    return cur[np] != 0;
}

bool glob_gate(const std::vector<Glob>& globs, std::string_view path) {
    if (globs.empty()) return true;
    for (const auto& g : globs) {
        if (g.matches(path)) return true;
    }
    return false;
}

}  // namespace migbench
