#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace migbench {

enum class LineKind : char { Context = ' ', Add = '+', Del = '-' };

struct HunkLine {
    LineKind kind = LineKind::Context;
    std::string content;       // without the trailing newline
    bool no_newline = false;   // followed by "\ No newline at end of file"

    friend bool operator==(const HunkLine&, const HunkLine&) = default;
};

struct Hunk {
    std::string file_old;
    std::string file_new;
    std::size_t old_start = 0;
    std::size_t old_len = 0;
    std::size_t new_start = 0;
    std::size_t new_len = 0;
    std::string section;  // text after the closing "@@", if any
    std::vector<HunkLine> lines;
    std::string hunk_id;

    friend bool operator==(const Hunk&, const Hunk&) = default;
};

/// Body lines in unified-diff form (`" ctx"`, `"-del"`, `"+add"`, `"\\"` for a
/// no-newline marker). This is the form hunks take inside serialized suites.
std::vector<std::string> canonical_lines(const Hunk& hunk);

/// Inverse of canonical_lines; throws Error(MalformedPatch) on an unknown prefix.
std::vector<HunkLine> decode_canonical_lines(std::span<const std::string> lines);

/// Digest of (file_new, old_start, new_start, canonical line list), 16 hex chars.
std::string compute_hunk_id(const Hunk& hunk);

enum class FileStatus { Added, Deleted, Modified, Renamed };

std::string_view to_string(FileStatus status);

/// Paths are repo-relative without `a/` or `b/` prefixes. For added and deleted
/// files both paths hold the real path; the status says which side is empty.
struct FileDiff {
    std::string old_path;
    std::string new_path;
    FileStatus status = FileStatus::Modified;
    std::vector<Hunk> hunks;
    bool binary = false;

    friend bool operator==(const FileDiff&, const FileDiff&) = default;
};

struct CommitDiff {
    std::string commit_id;
    std::string parent_id;
    std::string message;
    std::vector<FileDiff> files;

    friend bool operator==(const CommitDiff&, const CommitDiff&) = default;
};

enum class EditOp { Add, Del };

struct LineEdit {
    std::string file;
    EditOp op = EditOp::Add;
    std::string content;
    std::size_t anchor = 1;  // post-image line for Add, pre-image line for Del

    friend bool operator==(const LineEdit&, const LineEdit&) = default;
    friend auto operator<=>(const LineEdit&, const LineEdit&) = default;
};

/// Parses a unified diff (git or GNU headers). Text preceding the first file
/// header is ignored. Throws Error(MalformedHunkHeader | CountMismatch |
/// TruncatedPatch | MalformedPatch).
std::vector<FileDiff> parse_unified_diff(std::string_view text);

/// Parses one commit in `git format-patch` / `git show` style: metadata
/// headers, message, then the diff. Explicit ids take precedence over headers.
CommitDiff parse_commit_patch(std::string_view text, std::string_view commit_id = {},
                              std::string_view parent_id = {});

/// Canonical bytes: LF endings, git-style headers in file order, hunks in ascending old_start.
std::string render_unified_diff(std::span<const FileDiff> files);

enum class EditKind : char { Keep = '=', Delete = '-', Insert = '+' };

/// Minimal edit script (Myers, linear space). Within each change block,
/// deletions precede insertions.
std::vector<EditKind> shortest_edit_script(std::span<const std::string> old_lines,
                                           std::span<const std::string> new_lines);

/// Shortest edit script rendered as hunks with `context` lines of context;
/// edits whose context windows touch or overlap share a hunk.
std::vector<Hunk> compute_file_diff(std::span<const std::string> old_lines, std::span<const std::string> new_lines,
                                    std::size_t context = 3, std::string_view old_path = {},
                                    std::string_view new_path = {});

/// Applies hunks (ascending, non-overlapping) to `old_lines`. Throws
/// Error(MalformedPatch) if context or deleted lines disagree with the input.
std::vector<std::string> apply_hunks(std::span<const std::string> old_lines, std::span<const Hunk> hunks);

std::vector<LineEdit> extract_line_edits(const Hunk& hunk);

/// Diffs two directory snapshots. Files containing NUL bytes are recorded as binary.
std::vector<FileDiff> diff_directories(const std::filesystem::path& old_root, const std::filesystem::path& new_root,
                                       std::size_t context = 3);

}  // namespace migbench
