#include "migbench/diff.hpp"

#include "migbench/digest.hpp"
#include "migbench/error.hpp"
#include "migbench/text.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <set>

namespace migbench {

namespace {

constexpr std::string_view kNoNewlineMarker = "\\ No newline at end of file";
constexpr std::string_view kDevNull = "/dev/null";

std::string line_ref(std::size_t line_no) { return "line " + std::to_string(line_no); }

std::optional<std::size_t> parse_number(std::string_view s) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return value;
}

// "12" or "12,4"; a missing length means 1.
bool parse_range(std::string_view s, std::size_t& start, std::size_t& len) {
    const auto comma = s.find(',');
    const auto a = parse_number(s.substr(0, comma));
    if (!a) return false;
    start = *a;
    len = 1;
    if (comma != std::string_view::npos) {
        const auto b = parse_number(s.substr(comma + 1));
        if (!b) return false;
        len = *b;
    }
    return true;
}

// Drops a tab-separated timestamp and surrounding quotes.
std::string clean_header_path(std::string_view s) {
    if (const auto tab = s.find('\t'); tab != std::string_view::npos) s = s.substr(0, tab);
    s = text::trim_right(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

std::string strip_prefix(std::string path, std::string_view prefix) {
    if (text::starts_with(path, prefix)) path.erase(0, prefix.size());
    return path;
}

std::string header_ref(const Hunk& h) {
    return "@@ -" + std::to_string(h.old_start) + "," + std::to_string(h.old_len) + " +" +
           std::to_string(h.new_start) + "," + std::to_string(h.new_len) + " @@ in " + h.file_new;
}

class DiffParser {
public:
    explicit DiffParser(std::string_view text) : lines_(text::split_lines(text)) {}

    std::vector<FileDiff> run() {
        std::vector<FileDiff> files;
        while (i_ < lines_.size()) {
            const std::string_view line = lines_[i_];
            if (text::starts_with(line, "diff --git ")) {
                files.push_back(parse_git_file());
            } else if (text::starts_with(line, "--- ") && i_ + 1 < lines_.size() &&
                       text::starts_with(lines_[i_ + 1], "+++ ")) {
                FileDiff fd;
                parse_file_headers(fd);
                parse_hunks(fd);
                finish(fd);
                files.push_back(std::move(fd));
            } else {
                ++i_;
            }
        }
        return files;
    }

private:
    std::string_view header_line(std::size_t k) const { return text::trim_right(lines_[k]); }

    FileDiff parse_git_file() {
        FileDiff fd;
        const std::string_view spec = header_line(i_).substr(std::string_view("diff --git ").size());
        split_git_paths(spec, fd);
        ++i_;
        while (i_ < lines_.size()) {
            const std::string_view line = header_line(i_);
            if (text::starts_with(line, "diff --git ")) break;
            if (text::starts_with(line, "new file mode")) {
                fd.status = FileStatus::Added;
            } else if (text::starts_with(line, "deleted file mode")) {
                fd.status = FileStatus::Deleted;
            } else if (text::starts_with(line, "rename from ")) {
                fd.old_path = clean_header_path(line.substr(12));
                fd.status = FileStatus::Renamed;
            } else if (text::starts_with(line, "rename to ")) {
                fd.new_path = clean_header_path(line.substr(10));
                fd.status = FileStatus::Renamed;
            } else if (text::starts_with(line, "Binary files ")) {
                fd.binary = true;
                ++i_;
                break;
            } else if (line == "GIT binary patch") {
                fd.binary = true;
                ++i_;
                while (i_ < lines_.size() && !text::starts_with(lines_[i_], "diff --git ")) ++i_;
                break;
            } else if (text::starts_with(line, "--- ")) {
                parse_file_headers(fd);
                parse_hunks(fd);
                break;
            } else if (text::starts_with(line, "index ") || text::starts_with(line, "similarity index") ||
                       text::starts_with(line, "dissimilarity index") || text::starts_with(line, "old mode") ||
                       text::starts_with(line, "new mode") || text::starts_with(line, "copy from") ||
                       text::starts_with(line, "copy to")) {
                // Metadata that the model does not keep.
            } else {
                break;
            }
            ++i_;
        }
        finish(fd);
        return fd;
    }

    static void split_git_paths(std::string_view spec, FileDiff& fd) {
        std::string s = clean_header_path(spec);
        // Prefer a split where both sides name the same path.
        std::size_t split = std::string::npos;
        for (std::size_t pos = s.find(" b/"); pos != std::string::npos; pos = s.find(" b/", pos + 1)) {
            if (split == std::string::npos) split = pos;
            if (text::starts_with(s, "a/") && s.substr(2, pos - 2) == s.substr(pos + 3)) {
                split = pos;
                break;
            }
        }
        if (split == std::string::npos) {
            fd.old_path = fd.new_path = s;
            return;
        }
        fd.old_path = strip_prefix(s.substr(0, split), "a/");
        fd.new_path = strip_prefix(s.substr(split + 1), "b/");
    }

    void parse_file_headers(FileDiff& fd) {
        const std::size_t minus_line = i_;
        if (i_ + 1 >= lines_.size()) {
            throw Error(ErrorCode::TruncatedPatch, line_ref(minus_line + 1) + ": '---' header without '+++'");
        }
        if (!text::starts_with(lines_[i_ + 1], "+++ ")) {
            throw Error(ErrorCode::MalformedPatch, line_ref(minus_line + 2) + ": expected '+++' header");
        }
        const std::string old_name = clean_header_path(lines_[i_].substr(4));
        const std::string new_name = clean_header_path(lines_[i_ + 1].substr(4));
        i_ += 2;
        const bool old_null = old_name == kDevNull;
        const bool new_null = new_name == kDevNull;
        if (old_null && new_null) throw Error(ErrorCode::MalformedPatch, line_ref(minus_line + 1) + ": both sides /dev/null");
        if (old_null) {
            fd.status = FileStatus::Added;
            fd.new_path = strip_prefix(new_name, "b/");
            fd.old_path = fd.new_path;
        } else if (new_null) {
            fd.status = FileStatus::Deleted;
            fd.old_path = strip_prefix(old_name, "a/");
            fd.new_path = fd.old_path;
        } else {
            fd.old_path = strip_prefix(old_name, "a/");
            fd.new_path = strip_prefix(new_name, "b/");
            if (fd.old_path != fd.new_path) fd.status = FileStatus::Renamed;
        }
        if (i_ >= lines_.size() || !text::starts_with(lines_[i_], "@@")) {
            throw Error(ErrorCode::TruncatedPatch, line_ref(minus_line + 1) + ": file header for '" + fd.new_path +
                                                       "' is not followed by a hunk");
        }
    }

    void parse_hunks(FileDiff& fd) {
        while (i_ < lines_.size() && text::starts_with(lines_[i_], "@@")) {
            fd.hunks.push_back(parse_hunk(fd));
        }
        if (i_ < lines_.size()) {
            const std::string_view next = lines_[i_];
            const bool body_like = !next.empty() && (next[0] == ' ' || next[0] == '+' || next[0] == '-');
            const bool header_or_trailer = text::starts_with(next, "--- ") || text::trim_right(next) == "--" ||
                                           text::trim_right(next) == "-- ";
            if (body_like && !header_or_trailer && !fd.hunks.empty()) {
                const Hunk& last = fd.hunks.back();
                throw Error(ErrorCode::CountMismatch, header_ref(last) + ": " + line_ref(i_ + 1) +
                                                          " continues the hunk past its declared length");
            }
        }
    }

    Hunk parse_hunk(const FileDiff& fd) {
        const std::size_t header_no = i_ + 1;
        const std::string_view header = text::trim_right(lines_[i_]);
        Hunk h;
        h.file_old = fd.old_path;
        h.file_new = fd.new_path;
        // "@@ -a[,b] +c[,d] @@[ section]"
        const auto close = header.find(" @@", 3);
        bool ok = text::starts_with(header, "@@ -") && close != std::string_view::npos;
        if (ok) {
            const std::string_view ranges = header.substr(4, close - 4);
            const auto space = ranges.find(" +");
            ok = space != std::string_view::npos && parse_range(ranges.substr(0, space), h.old_start, h.old_len) &&
                 parse_range(ranges.substr(space + 2), h.new_start, h.new_len);
            std::string_view rest = header.substr(close + 3);
            if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
            h.section = std::string(rest);
        }
        if (!ok) throw Error(ErrorCode::MalformedHunkHeader, line_ref(header_no) + ": '" + std::string(header) + "'");
        ++i_;

        std::size_t old_seen = 0;
        std::size_t new_seen = 0;
        auto mismatch = [&]() {
            return Error(ErrorCode::CountMismatch, header_ref(h) + " (" + line_ref(header_no) + "): expected old " +
                                                       std::to_string(h.old_len) + " new " + std::to_string(h.new_len) +
                                                       ", found old " + std::to_string(old_seen) + " new " +
                                                       std::to_string(new_seen));
        };
        while (old_seen < h.old_len || new_seen < h.new_len) {
            if (i_ >= lines_.size()) throw mismatch();
            const std::string& line = lines_[i_];
            const char tag = line.empty() ? ' ' : line[0];
            const std::string content = line.empty() ? std::string() : line.substr(1);
            if (tag == '\\') {
                if (h.lines.empty()) throw mismatch();
                h.lines.back().no_newline = true;
                ++i_;
                continue;
            }
            if (tag == ' ') {
                if (old_seen >= h.old_len || new_seen >= h.new_len) throw mismatch();
                ++old_seen;
                ++new_seen;
                h.lines.push_back({LineKind::Context, content});
            } else if (tag == '-') {
                if (old_seen >= h.old_len) throw mismatch();
                ++old_seen;
                h.lines.push_back({LineKind::Del, content});
            } else if (tag == '+') {
                if (new_seen >= h.new_len) throw mismatch();
                ++new_seen;
                h.lines.push_back({LineKind::Add, content});
            } else {
                throw mismatch();
            }
            ++i_;
        }
        if (i_ < lines_.size() && text::starts_with(lines_[i_], "\\")) {
            if (!h.lines.empty()) h.lines.back().no_newline = true;
            ++i_;
        }
        h.hunk_id = compute_hunk_id(h);
        return h;
    }

    static void finish(FileDiff& fd) {
        for (const auto& h : fd.hunks) {
            for (const auto& l : h.lines) {
                if (fd.status == FileStatus::Added && l.kind != LineKind::Add) {
                    throw Error(ErrorCode::MalformedPatch, "added file '" + fd.new_path + "' has a non-added line");
                }
                if (fd.status == FileStatus::Deleted && l.kind != LineKind::Del) {
                    throw Error(ErrorCode::MalformedPatch, "deleted file '" + fd.old_path + "' has a non-deleted line");
                }
            }
        }
        if (fd.status == FileStatus::Renamed && fd.old_path == fd.new_path) fd.status = FileStatus::Modified;
    }

    std::vector<std::string> lines_;
    std::size_t i_ = 0;
};

bool is_file_header_at(const std::vector<std::string>& lines, std::size_t k) {
    if (text::starts_with(lines[k], "diff --git ")) return true;
    return text::starts_with(lines[k], "--- ") && k + 1 < lines.size() && text::starts_with(lines[k + 1], "+++ ");
}

std::string first_token(std::string_view s) {
    s = text::trim(s);
    return std::string(s.substr(0, s.find(' ')));
}

}  // namespace

std::string_view to_string(FileStatus status) {
    switch (status) {
        case FileStatus::Added: return "ADDED";
        case FileStatus::Deleted: return "DELETED";
        case FileStatus::Modified: return "MODIFIED";
        case FileStatus::Renamed: return "RENAMED";
    }
    return "MODIFIED";
}

std::vector<std::string> canonical_lines(const Hunk& hunk) {
    std::vector<std::string> out;
    out.reserve(hunk.lines.size());
    for (const auto& l : hunk.lines) {
        out.push_back(static_cast<char>(l.kind) + l.content);
        if (l.no_newline) out.emplace_back("\\");
    }
    return out;
}

std::vector<HunkLine> decode_canonical_lines(std::span<const std::string> lines) {
    std::vector<HunkLine> out;
    out.reserve(lines.size());
    for (const auto& s : lines) {
        if (s.empty()) throw Error(ErrorCode::MalformedPatch, "empty canonical hunk line");
        switch (s[0]) {
            case ' ': out.push_back({LineKind::Context, s.substr(1)}); break;
            case '+': out.push_back({LineKind::Add, s.substr(1)}); break;
            case '-': out.push_back({LineKind::Del, s.substr(1)}); break;
            case '\\':
                if (out.empty() || s != "\\") throw Error(ErrorCode::MalformedPatch, "misplaced no-newline marker");
                out.back().no_newline = true;
                break;
            default: throw Error(ErrorCode::MalformedPatch, "unknown canonical line prefix '" + s.substr(0, 1) + "'");
        }
    }
    return out;
}

std::string compute_hunk_id(const Hunk& hunk) {
    Sha256 h;
    h.field(hunk.file_new).field(std::to_string(hunk.old_start)).field(std::to_string(hunk.new_start));
    for (const auto& l : canonical_lines(hunk)) h.field(l);
    return h.hex().substr(0, 16);
}

std::vector<FileDiff> parse_unified_diff(std::string_view text) {
    return DiffParser(text::sanitize_utf8(text)).run();
}

CommitDiff parse_commit_patch(std::string_view raw, std::string_view commit_id, std::string_view parent_id) {
    const std::string clean = text::sanitize_utf8(raw);
    const auto lines = text::split_lines(clean);
    CommitDiff c;
    std::string subject;
    std::vector<std::string> body;
    std::size_t k = 0;
    bool in_headers = true;
    bool body_done = false;
    for (; k < lines.size() && !is_file_header_at(lines, k); ++k) {
        const std::string_view line = text::trim_right(lines[k]);
        if (in_headers) {
            if (text::starts_with(line, "From ") && k == 0) {
                c.commit_id = first_token(line.substr(5));
            } else if (text::starts_with(line, "commit ")) {
                c.commit_id = first_token(line.substr(7));
            } else if (text::starts_with(line, "Parent: ") || text::starts_with(line, "parent ")) {
                c.parent_id = first_token(line.substr(line.find(' ') + 1));
            } else if (text::starts_with(line, "Subject: ")) {
                std::string_view s = line.substr(9);
                if (text::starts_with(s, "[")) {
                    if (const auto close = s.find("] "); close != std::string_view::npos) s = s.substr(close + 2);
                }
                subject = std::string(s);
            } else if (line.empty()) {
                in_headers = false;
            }
            continue;
        }
        if (line == "---") body_done = true;
        if (!body_done) body.emplace_back(line);
    }
    while (!body.empty() && body.back().empty()) body.pop_back();
    c.message = subject;
    if (!body.empty()) {
        if (!c.message.empty()) c.message += "\n\n";
        for (std::size_t b = 0; b < body.size(); ++b) {
            if (b > 0) c.message += '\n';
            c.message += body[b];
        }
    }
    if (!commit_id.empty()) c.commit_id = std::string(commit_id);
    if (!parent_id.empty()) c.parent_id = std::string(parent_id);
    if (c.commit_id.empty()) throw Error(ErrorCode::MalformedPatch, "commit id missing");

    std::string diff_text;
    for (; k < lines.size(); ++k) {
        diff_text += lines[k];
        diff_text += '\n';
    }
    c.files = parse_unified_diff(diff_text);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& f : c.files) {
        if (!seen.emplace(f.old_path, f.new_path).second) {
            throw Error(ErrorCode::MalformedPatch, "commit " + c.commit_id + " lists '" + f.new_path + "' twice");
        }
    }
    return c;
}

std::string render_unified_diff(std::span<const FileDiff> files) {
    std::string out;
    auto range = [](std::size_t start, std::size_t len) {
        return len == 1 ? std::to_string(start) : std::to_string(start) + "," + std::to_string(len);
    };
    for (const auto& fd : files) {
        const std::string old_side = fd.status == FileStatus::Added ? std::string(kDevNull) : "a/" + fd.old_path;
        const std::string new_side = fd.status == FileStatus::Deleted ? std::string(kDevNull) : "b/" + fd.new_path;
        out += "diff --git a/" + fd.old_path + " b/" + fd.new_path + "\n";
        switch (fd.status) {
            case FileStatus::Added: out += "new file mode 100644\n"; break;
            case FileStatus::Deleted: out += "deleted file mode 100644\n"; break;
            case FileStatus::Renamed: out += "rename from " + fd.old_path + "\nrename to " + fd.new_path + "\n"; break;
            case FileStatus::Modified: break;
        }
        if (fd.binary) {
            out += "Binary files " + old_side + " and " + new_side + " differ\n";
            continue;
        }
        if (fd.hunks.empty()) continue;
        out += "--- " + old_side + "\n+++ " + new_side + "\n";
        std::vector<const Hunk*> ordered;
        for (const auto& h : fd.hunks) ordered.push_back(&h);
        std::stable_sort(ordered.begin(), ordered.end(),
                         [](const Hunk* a, const Hunk* b) { return a->old_start < b->old_start; });
        for (const Hunk* h : ordered) {
            out += "@@ -" + range(h->old_start, h->old_len) + " +" + range(h->new_start, h->new_len) + " @@";
            if (!h->section.empty()) out += " " + h->section;
            out += '\n';
            for (const auto& l : h->lines) {
                out += static_cast<char>(l.kind);
                out += l.content;
                out += '\n';
                if (l.no_newline) {
                    out += kNoNewlineMarker;
                    out += '\n';
                }
            }
        }
    }
    return out;
}

std::vector<std::string> apply_hunks(std::span<const std::string> old_lines, std::span<const Hunk> hunks) {
    std::vector<std::string> out;
    std::size_t pos = 0;  // next unread old line (0-based)
    for (const auto& h : hunks) {
        const std::size_t begin = h.old_len == 0 ? h.old_start : h.old_start - 1;
        if (begin < pos || begin > old_lines.size()) {
            throw Error(ErrorCode::MalformedPatch, header_ref(h) + ": hunk out of order or out of range");
        }
        out.insert(out.end(), old_lines.begin() + static_cast<std::ptrdiff_t>(pos),
                   old_lines.begin() + static_cast<std::ptrdiff_t>(begin));
        pos = begin;
        for (const auto& l : h.lines) {
            if (l.kind == LineKind::Add) {
                out.push_back(l.content);
                continue;
            }
            if (pos >= old_lines.size() || old_lines[pos] != l.content) {
                throw Error(ErrorCode::MalformedPatch, header_ref(h) + ": does not apply at old line " +
                                                           std::to_string(pos + 1));
            }
            if (l.kind == LineKind::Context) out.push_back(l.content);
            ++pos;
        }
    }
    out.insert(out.end(), old_lines.begin() + static_cast<std::ptrdiff_t>(pos), old_lines.end());
    return out;
}

std::vector<LineEdit> extract_line_edits(const Hunk& hunk) {
    std::vector<LineEdit> edits;
    std::size_t old_line = hunk.old_start;
    std::size_t new_line = hunk.new_start;
    for (const auto& l : hunk.lines) {
        switch (l.kind) {
            case LineKind::Context:
                ++old_line;
                ++new_line;
                break;
            case LineKind::Del:
                edits.push_back({hunk.file_new, EditOp::Del, l.content, std::max<std::size_t>(old_line, 1)});
                ++old_line;
                break;
            case LineKind::Add:
                edits.push_back({hunk.file_new, EditOp::Add, l.content, std::max<std::size_t>(new_line, 1)});
                ++new_line;
                break;
        }
    }
    return edits;
}

std::vector<FileDiff> diff_directories(const std::filesystem::path& old_root, const std::filesystem::path& new_root,
                                       std::size_t context) {
    namespace fs = std::filesystem;
    auto collect = [](const fs::path& root) {
        std::set<std::string> rel;
        std::error_code ec;
        if (!fs::is_directory(root, ec)) throw Error(ErrorCode::UnreadableSource, root.string() + " is not a directory");
        for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
            if (it->is_regular_file()) rel.insert(fs::relative(it->path(), root).generic_string());
        }
        return rel;
    };
    const auto old_files = collect(old_root);
    const auto new_files = collect(new_root);
    std::set<std::string> all = old_files;
    all.insert(new_files.begin(), new_files.end());

    std::vector<FileDiff> out;
    for (const auto& rel : all) {
        const bool in_old = old_files.count(rel) != 0;
        const bool in_new = new_files.count(rel) != 0;
        const std::string old_bytes = in_old ? text::read_file(old_root / rel) : std::string();
        const std::string new_bytes = in_new ? text::read_file(new_root / rel) : std::string();
        if (in_old && in_new && old_bytes == new_bytes) continue;
        FileDiff fd;
        fd.old_path = fd.new_path = rel;
        fd.status = !in_old ? FileStatus::Added : !in_new ? FileStatus::Deleted : FileStatus::Modified;
        if (old_bytes.find('\0') != std::string::npos || new_bytes.find('\0') != std::string::npos) {
            fd.binary = true;
            out.push_back(std::move(fd));
            continue;
        }
        const auto old_lines = text::split_lines(text::sanitize_utf8(old_bytes));
        const auto new_lines = text::split_lines(text::sanitize_utf8(new_bytes));
        fd.hunks = compute_file_diff(old_lines, new_lines, context, rel, rel);
        if (fd.hunks.empty() && fd.status == FileStatus::Modified) continue;
        out.push_back(std::move(fd));
    }
    return out;
}

}  // namespace migbench
