#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace migbench {

/// A compiled Perl-syntax regular expression plus its source text.
class Pattern {
public:
    /// Throws Error(BadRegex) carrying the offending offset.
    static Pattern compile(std::string_view source);

    /// True iff the pattern has a nonempty match somewhere in `line`.
    bool search_nonempty(std::string_view line) const;

    /// True iff the pattern matches the empty string.
    bool matches_empty() const;

    const std::string& source() const noexcept { return source_; }

    struct Compiled;

private:
    std::string source_;
    std::shared_ptr<const Compiled> compiled_;
};

}  // namespace migbench
