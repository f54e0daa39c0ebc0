#include "migbench/kb.hpp"

#include "migbench/digest.hpp"
#include "migbench/error.hpp"
#include "migbench/text.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <optional>

namespace migbench {

namespace {

constexpr std::size_t kMinKeywordLength = 3;
constexpr std::size_t kMinDescriptionWords = 10;

enum class FieldKind { Scalar, List };

const std::map<std::string, FieldKind, std::less<>>& known_fields() {
    static const std::map<std::string, FieldKind, std::less<>> fields = {
        {"id", FieldKind::Scalar},
        {"title", FieldKind::Scalar},
        {"file_globs", FieldKind::List},
        {"keywords", FieldKind::List},
        {"patterns", FieldKind::List},
        {"pattern_descriptions", FieldKind::List},
        {"positive_examples", FieldKind::List},
        {"negative_examples", FieldKind::List},
    };
    return fields;
}

std::string unquote(std::string_view s) {
    s = text::trim(s);
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        return std::string(s.substr(1, s.size() - 2));
    }
    return std::string(s);
}

// Splits the inside of `[a, b]` on top-level commas. Quotes, bracket/brace/paren
// nesting and backslash escapes keep regex sources intact.
std::vector<std::string> split_inline_list(std::string_view inner) {
    std::vector<std::string> items;
    if (text::trim(inner).empty()) return items;
    int depth = 0;
    char quote = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < inner.size(); ++i) {
        const char c = inner[i];
        if (quote != 0) {
            if (c == quote) quote = 0;
            continue;
        }
        if (c == '\\') {
            ++i;
            continue;
        }
        if ((c == '"' || c == '\'') && text::trim(inner.substr(start, i - start)).empty()) {
            quote = c;
        } else if (c == '[' || c == '{' || c == '(') {
            ++depth;
        } else if ((c == ']' || c == '}' || c == ')') && depth > 0) {
            --depth;
        } else if (c == ',' && depth == 0) {
            items.push_back(unquote(inner.substr(start, i - start)));
            start = i + 1;
        }
    }
    items.push_back(unquote(inner.substr(start)));
    return items;
}

std::string normalize_newlines(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

struct ListField {
    std::vector<std::string>* values;
    std::vector<std::size_t>* lines;
};

}  // namespace

std::vector<Glob> KbDoc::compiled_globs() const {
    std::vector<Glob> out;
    out.reserve(file_globs.size());
    for (const auto& g : file_globs) out.push_back(Glob::compile(g));
    return out;
}

std::vector<Pattern> KbDoc::compiled_patterns() const {
    std::vector<Pattern> out;
    out.reserve(patterns.size());
    for (const auto& p : patterns) out.push_back(Pattern::compile(p));
    return out;
}

const KbDoc* KbSet::find(std::string_view id) const {
    auto it = std::lower_bound(docs.begin(), docs.end(), id,
                               [](const KbDoc& d, std::string_view key) { return d.id < key; });
    return it != docs.end() && it->id == id ? &*it : nullptr;
}

std::string canonicalize_kb_text(std::string_view text) {
    std::string out;
    bool pending_blank = false;
    for (const auto& raw : text::split_lines(normalize_newlines(text))) {
        const auto line = text::trim_right(raw);
        if (line.empty()) {
            pending_blank = !out.empty();
            continue;
        }
        if (pending_blank) out.push_back('\n');
        pending_blank = false;
        out.append(line);
        out.push_back('\n');
    }
    return out;
}

bool is_valid_slug(std::string_view id) {
    if (id.empty()) return false;
    return std::all_of(id.begin(), id.end(),
                       [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-'; });
}

KbDoc parse_kb_document(std::string_view raw, const std::filesystem::path& source_path) {
    KbDoc doc;
    doc.source_path = source_path;
    doc.version = sha256_hex(canonicalize_kb_text(raw));

    const auto lines = text::split_lines(normalize_newlines(text::sanitize_utf8(raw)));
    std::size_t i = 0;
    while (i < lines.size() && text::trim(lines[i]).empty()) ++i;
    if (i >= lines.size() || text::trim(lines[i]) != "---") {
        throw Error(ErrorCode::MissingField, "id (no front-matter block)");
    }
    ++i;

    std::map<std::string, ListField, std::less<>> list_fields = {
        {"file_globs", {&doc.file_globs, &doc.lines.file_globs}},
        {"keywords", {&doc.keywords, &doc.lines.keywords}},
        {"patterns", {&doc.patterns, &doc.lines.patterns}},
        {"pattern_descriptions", {&doc.pattern_descriptions, &doc.lines.pattern_descriptions}},
        {"positive_examples", {&doc.positive_examples, nullptr}},
        {"negative_examples", {&doc.negative_examples, nullptr}},
    };
    auto push_item = [](ListField& f, std::string value, std::size_t line_no) {
        f.values->push_back(std::move(value));
        if (f.lines != nullptr) f.lines->push_back(line_no);
    };

    bool have_id = false;
    bool have_title = false;
    bool closed = false;
    ListField* open_list = nullptr;
    for (; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const std::string_view line = text::trim_right(lines[i]);
        const std::string_view trimmed = text::trim(line);
        if (trimmed == "---") {
            closed = true;
            ++i;
            break;
        }
        if (trimmed.empty() || trimmed.front() == '#') continue;
        if (text::starts_with(trimmed, "- ") || trimmed == "-") {
            if (open_list == nullptr) {
                throw Error(ErrorCode::MalformedKb, "line " + std::to_string(line_no) + ": list item outside a list");
            }
            push_item(*open_list, unquote(trimmed.substr(1)), line_no);
            continue;
        }
        const auto colon = trimmed.find(':');
        if (colon == std::string_view::npos) {
            throw Error(ErrorCode::MalformedKb, "line " + std::to_string(line_no) + ": expected 'key: value'");
        }
        const auto key = text::trim(trimmed.substr(0, colon));
        const auto value = text::trim(trimmed.substr(colon + 1));
        const auto known = known_fields().find(key);
        if (known == known_fields().end()) {
            throw Error(ErrorCode::MalformedKb,
                        "line " + std::to_string(line_no) + ": unknown field '" + std::string(key) + "'");
        }
        open_list = nullptr;
        if (known->second == FieldKind::Scalar) {
            if (key == "id") {
                doc.id = unquote(value);
                doc.lines.id = line_no;
                have_id = true;
            } else {
                doc.title = unquote(value);
                have_title = true;
            }
            continue;
        }
        auto& field = list_fields.at(std::string(key));
        if (value.empty()) {
            open_list = &field;
        } else if (value.front() == '[' && value.back() == ']') {
            for (auto& item : split_inline_list(value.substr(1, value.size() - 2))) {
                push_item(field, std::move(item), line_no);
            }
        } else {
            push_item(field, unquote(value), line_no);
        }
    }
    if (!closed) throw Error(ErrorCode::MalformedKb, "unterminated front-matter block");

    // Body: free-text description plus an optional pattern-description section.
    std::string description;
    std::size_t description_line = 0;
    bool in_section = false;
    for (; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const std::string_view line = text::trim_right(lines[i]);
        const std::string_view trimmed = text::trim(line);
        if (text::starts_with(trimmed, "#")) {
            const bool section = text::to_lower_ascii(trimmed) == "## pattern descriptions";
            if (section) {
                in_section = true;
                continue;
            }
            in_section = false;
        }
        if (in_section) {
            if (trimmed.empty()) continue;
            if (text::starts_with(trimmed, "- ") || text::starts_with(trimmed, "* ")) {
                doc.pattern_descriptions.push_back(std::string(text::trim(trimmed.substr(2))));
                doc.lines.pattern_descriptions.push_back(line_no);
            } else if (!doc.pattern_descriptions.empty()) {
                doc.pattern_descriptions.back() += " " + std::string(trimmed);
            }
            continue;
        }
        if (description.empty() && trimmed.empty()) continue;
        if (description_line == 0) description_line = line_no;
        description.append(line);
        description.push_back('\n');
    }
    doc.description = std::string(text::trim(description));
    doc.lines.description = description_line;

    if (!have_id || doc.id.empty()) throw Error(ErrorCode::MissingField, "id");
    if (!is_valid_slug(doc.id)) throw Error(ErrorCode::InvalidId, "'" + doc.id + "' is not a [a-z0-9-]+ slug");
    if (!have_title || doc.title.empty()) throw Error(ErrorCode::MissingField, "title");
    for (const auto& kw : doc.keywords) {
        if (text::code_points(text::trim(kw)).size() < kMinKeywordLength) {
            throw Error(ErrorCode::ShortKeyword, "'" + kw + "' is shorter than " +
                                                     std::to_string(kMinKeywordLength) + " characters");
        }
    }
    for (auto& d : doc.pattern_descriptions) d = std::string(text::trim(d));
    std::erase_if(doc.pattern_descriptions, [](const std::string& d) { return d.empty(); });
    (void)doc.compiled_globs();
    (void)doc.compiled_patterns();
    if (doc.keywords.empty() && doc.patterns.empty() && doc.pattern_descriptions.empty()) {
        throw Error(ErrorCode::NoMatchers, "document '" + doc.id + "' has no keywords, patterns or pattern descriptions");
    }
    return doc;
}

KbSet make_kb_set(std::vector<KbDoc> docs) {
    std::sort(docs.begin(), docs.end(), [](const KbDoc& a, const KbDoc& b) {
        return a.id != b.id ? a.id < b.id : a.source_path < b.source_path;
    });
    for (std::size_t k = 1; k < docs.size(); ++k) {
        if (docs[k].id == docs[k - 1].id) {
            throw Error(ErrorCode::DuplicateId, "'" + docs[k].id + "' declared in " + docs[k - 1].source_path.string() +
                                                    " and " + docs[k].source_path.string());
        }
    }
    Sha256 h;
    for (const auto& d : docs) h.field(d.id).field(d.version);
    KbSet set;
    set.set_hash = h.hex();
    set.docs = std::move(docs);
    return set;
}

KbSet load_kb_set(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw Error(ErrorCode::UnreadableSource, "KB root " + root.string() + " is not a directory");
    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        if (it->is_regular_file() && text::ends_with(it->path().filename().string(), ".kb.md")) {
            files.push_back(it->path());
        }
    }
    if (ec) throw Error(ErrorCode::UnreadableSource, root.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());

    std::vector<KbDoc> docs;
    docs.reserve(files.size());
    for (const auto& file : files) {
        try {
            docs.push_back(parse_kb_document(text::read_file(file), file));
        } catch (const Error& e) {
            throw e.annotated(file.string());
        }
    }
    return make_kb_set(std::move(docs));
}

namespace {

const std::array<std::string_view, 30> kStopList = {
    "the",  "and",   "for",    "file",   "files",   "code",  "line",   "lines",  "data", "value",
    "name", "path",  "paths",  "test",   "todo",    "new",   "old",    "var",    "use",  "using",
    "this", "that",  "with",   "from",   "class",   "public", "string", "return", "import", "include",
};

// Probe paths covering conventional source, build, script and deployment files.
const std::vector<std::string>& probe_paths() {
    static const std::vector<std::string> paths = [] {
        const std::array<std::string_view, 34> exts = {
            "c",    "cc",     "cpp",   "cxx",   "h",     "hpp",  "cs",    "csproj", "vbproj", "fs",   "sln",
            "java", "kt",     "py",    "js",    "ts",    "go",   "rs",    "rb",     "ps1",    "psm1", "sh",
            "cmd",  "bat",    "yaml",  "yml",   "json",  "xml",  "config", "props", "targets", "toml", "ini",
            "gradle"};
        const std::array<std::string_view, 3> dirs = {"", "src/", "src/app/deploy/"};
        std::vector<std::string> out;
        for (const auto dir : dirs) {
            for (const auto ext : exts) out.push_back(std::string(dir) + "main." + std::string(ext));
            out.push_back(std::string(dir) + "Dockerfile");
            out.push_back(std::string(dir) + "Makefile");
            out.push_back(std::string(dir) + "CMakeLists.txt");
        }
        return out;
    }();
    return paths;
}

std::size_t line_at(const std::vector<std::size_t>& lines, std::size_t k) { return k < lines.size() ? lines[k] : 0; }

}  // namespace

std::vector<Diagnostic> lint_kb(const KbDoc& doc) {
    std::vector<Diagnostic> out;
    auto emit = [&](std::string code, std::string message, std::size_t line) {
        out.push_back({Severity::Warning, std::move(code), std::move(message), doc.source_path, line});
    };

    for (std::size_t k = 0; k < doc.keywords.size(); ++k) {
        const auto lowered = text::to_lower_ascii(text::trim(doc.keywords[k]));
        if (std::find(kStopList.begin(), kStopList.end(), lowered) != kStopList.end()) {
            emit("GENERIC_KEYWORD", "keyword '" + doc.keywords[k] + "' is too generic to locate migration edits",
                 line_at(doc.lines.keywords, k));
        }
    }
    for (std::size_t k = 0; k < doc.file_globs.size(); ++k) {
        std::optional<Glob> glob;
        try {
            glob = Glob::compile(doc.file_globs[k]);
        } catch (const Error&) {
            continue;
        }
        const auto& probes = probe_paths();
        const bool any = std::any_of(probes.begin(), probes.end(), [&](const std::string& p) { return glob->matches(p); });
        if (!any) {
            emit("GLOB_NO_SOURCE_EXT", "glob '" + doc.file_globs[k] + "' matches no conventional source file",
                 line_at(doc.lines.file_globs, k));
        }
    }
    if (const auto words = text::word_count(doc.description); words < kMinDescriptionWords) {
        emit("SHORT_DESCRIPTION",
             "description has " + std::to_string(words) + " words; at least " + std::to_string(kMinDescriptionWords) +
                 " expected",
             doc.lines.description != 0 ? doc.lines.description : doc.lines.id);
    }
    for (std::size_t k = 0; k < doc.patterns.size(); ++k) {
        try {
            if (Pattern::compile(doc.patterns[k]).matches_empty()) {
                emit("EMPTY_MATCH_PATTERN", "pattern '" + doc.patterns[k] + "' matches the empty string",
                     line_at(doc.lines.patterns, k));
            }
        } catch (const Error&) {
        }
    }
    return out;
}

std::string format_diagnostic(const Diagnostic& d) {
    std::string out = d.severity == Severity::Warning ? "WARNING " : "INFO ";
    out += d.code;
    out += ' ';
    out += d.path.empty() ? std::string("<input>") : d.path.generic_string();
    out += ':';
    out += std::to_string(d.line);
    out += ' ';
    out += d.message;
    return out;
}

}  // namespace migbench
