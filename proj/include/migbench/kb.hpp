#pragma once

#include "migbench/glob.hpp"
#include "migbench/pattern.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace migbench {

/// Source line numbers (1-based) of parsed fields; used for diagnostics only.
struct KbSourceLines {
    std::size_t id = 0;
    std::size_t description = 0;
    std::vector<std::size_t> file_globs;
    std::vector<std::size_t> keywords;
    std::vector<std::size_t> patterns;
    std::vector<std::size_t> pattern_descriptions;
};

/// One Knowledge Base document: a narrow migration sub-task and the matchers
/// that locate its edits in commit hunks.
struct KbDoc {
    std::string id;
    std::string title;
    std::string description;
    std::vector<std::string> file_globs;
    std::vector<std::string> keywords;
    std::vector<std::string> pattern_descriptions;
    std::vector<std::string> patterns;
    // Optional example lines that synthesized patterns must match / must not match.
    std::vector<std::string> positive_examples;
    std::vector<std::string> negative_examples;
    std::string version;

    std::filesystem::path source_path;
    KbSourceLines lines;

    std::vector<Glob> compiled_globs() const;
    std::vector<Pattern> compiled_patterns() const;

    /// Structural equality over content fields and version; provenance is ignored.
    friend bool operator==(const KbDoc& a, const KbDoc& b) {
        return a.id == b.id && a.title == b.title && a.description == b.description &&
               a.file_globs == b.file_globs && a.keywords == b.keywords &&
               a.pattern_descriptions == b.pattern_descriptions && a.patterns == b.patterns &&
               a.positive_examples == b.positive_examples && a.negative_examples == b.negative_examples &&
               a.version == b.version;
    }
};

struct KbSet {
    std::vector<KbDoc> docs;  // sorted by id
    std::string set_hash;

    const KbDoc* find(std::string_view id) const;
    bool empty() const noexcept { return docs.empty(); }
    std::size_t size() const noexcept { return docs.size(); }

    friend bool operator==(const KbSet&, const KbSet&) = default;
};

/// Strips trailing whitespace, normalizes line endings to LF, collapses blank-line
/// runs and drops leading/trailing blank lines. The KB version hashes this form.
std::string canonicalize_kb_text(std::string_view text);

bool is_valid_slug(std::string_view id);

KbDoc parse_kb_document(std::string_view text, const std::filesystem::path& source_path = {});

/// Sorts by id, rejects duplicates, computes set_hash.
KbSet make_kb_set(std::vector<KbDoc> docs);

/// Parses every `*.kb.md` under `root` recursively.
KbSet load_kb_set(const std::filesystem::path& root);

enum class Severity { Info, Warning };

struct Diagnostic {
    Severity severity = Severity::Warning;
    std::string code;
    std::string message;
    std::filesystem::path path;
    std::size_t line = 0;

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Static quality checks. Never throws on a parsed document.
std::vector<Diagnostic> lint_kb(const KbDoc& doc);

/// `SEVERITY CODE path:line message`
std::string format_diagnostic(const Diagnostic& d);

}  // namespace migbench
