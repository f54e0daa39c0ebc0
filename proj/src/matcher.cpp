#include "migbench/matcher.hpp"

#include "migbench/error.hpp"

#include <algorithm>
#include <optional>
#include <thread>

namespace migbench {

namespace {

bool changed(const HunkLine& l) { return l.kind != LineKind::Context; }

std::optional<std::size_t> first_keyword_line(const Hunk& hunk, std::string_view keyword) {
    for (std::size_t k = 0; k < hunk.lines.size(); ++k) {
        if (changed(hunk.lines[k]) && hunk.lines[k].content.find(keyword) != std::string::npos) return k;
    }
    return std::nullopt;
}

std::optional<std::size_t> first_pattern_line(const Hunk& hunk, const Pattern& pattern) {
    for (std::size_t k = 0; k < hunk.lines.size(); ++k) {
        if (changed(hunk.lines[k]) && pattern.search_nonempty(hunk.lines[k].content)) return k;
    }
    return std::nullopt;
}

bool gate(const Hunk& hunk, std::span<const Glob> globs) {
    if (globs.empty()) return true;
    return std::any_of(globs.begin(), globs.end(), [&](const Glob& g) { return g.matches(hunk.file_new); });
}

struct Slot {
    const CommitDiff* commit;
    std::size_t commit_index;
    const Hunk* hunk;
};

}  // namespace

std::string_view to_string(MatcherKind kind) { return kind == MatcherKind::Keyword ? "KEYWORD" : "PATTERN"; }

EvidenceDetail parse_evidence_detail(std::string_view name) {
    if (name == "first") return EvidenceDetail::First;
    if (name == "all") return EvidenceDetail::All;
    throw Error(ErrorCode::BadConfig, "evidence detail must be 'first' or 'all', got '" + std::string(name) + "'");
}

bool keyword_match(const Hunk& hunk, std::string_view keyword, std::span<const Glob> globs) {
    return gate(hunk, globs) && first_keyword_line(hunk, keyword).has_value();
}

bool pattern_match(const Hunk& hunk, const Pattern& pattern, std::span<const Glob> globs) {
    return gate(hunk, globs) && first_pattern_line(hunk, pattern).has_value();
}

KbMatcher::KbMatcher(const KbSet& kbs, const PatternSynthesizer& synth, const MatchOptions& options)
    : detail_(options.detail) {
    for (const auto& doc : kbs.docs) {
        CompiledKb kb;
        kb.id = doc.id;
        kb.globs = doc.compiled_globs();
        kb.keywords = doc.keywords;
        for (auto& p : doc.compiled_patterns()) kb.patterns.push_back({std::move(p), {}});
        for (const auto& description : doc.pattern_descriptions) {
            SynthRequest req{doc.id, description, doc.positive_examples, doc.negative_examples, doc.patterns};
            SynthResult res;
            try {
                res = synth.synthesize(req);
            } catch (const Error& e) {
                if (!options.skip_synth_failures) {
                    throw Error(ErrorCode::SynthFailure, "KB '" + doc.id + "', description '" + description + "': " +
                                                             std::string(e.what()));
                }
                warnings_.push_back("skipping description '" + description + "' of KB '" + doc.id + "': " + e.what());
                continue;
            }
            for (const auto& source : res.patterns) {
                const bool known = std::any_of(kb.patterns.begin(), kb.patterns.end(),
                                               [&](const CompiledPattern& c) { return c.pattern.source() == source; });
                if (!known) kb.patterns.push_back({Pattern::compile(source), description});
            }
        }
        kbs_.push_back(std::move(kb));
    }
}

std::vector<std::string> KbMatcher::kb_ids() const {
    std::vector<std::string> ids;
    for (const auto& kb : kbs_) ids.push_back(kb.id);
    return ids;
}

std::vector<KbMatch> KbMatcher::match(const Hunk& hunk) const {
    std::vector<KbMatch> out;
    for (const auto& kb : kbs_) {
        if (!gate(hunk, kb.globs)) continue;
        KbMatch m{kb.id, {}};
        const bool first_only = detail_ == EvidenceDetail::First;
        for (const auto& kw : kb.keywords) {
            if (first_only && !m.evidence.empty()) break;
            if (auto line = first_keyword_line(hunk, kw)) {
                m.evidence.push_back({kb.id, MatcherKind::Keyword, kw, *line, {}});
            }
        }
        for (const auto& cp : kb.patterns) {
            if (first_only && !m.evidence.empty()) break;
            if (auto line = first_pattern_line(hunk, cp.pattern)) {
                m.evidence.push_back({kb.id, MatcherKind::Pattern, cp.pattern.source(), *line, cp.from_description});
            }
        }
        if (!m.evidence.empty()) out.push_back(std::move(m));
    }
    return out;
}

MappingResult map_hunks(std::string_view service_id, std::span<const CommitDiff> commits, const KbSet& kbs,
                        const PatternSynthesizer& synth, const MatchOptions& options) {
    const KbMatcher matcher(kbs, synth, options);
    auto result = map_hunks(service_id, commits, matcher, options.jobs);
    result.warnings.insert(result.warnings.begin(), matcher.warnings().begin(), matcher.warnings().end());
    return result;
}

MappingResult map_hunks(std::string_view service_id, std::span<const CommitDiff> commits, const KbMatcher& matcher,
                        std::size_t jobs) {
    std::vector<Slot> slots;
    for (std::size_t c = 0; c < commits.size(); ++c) {
        const std::size_t first = slots.size();
        for (const auto& fd : commits[c].files) {
            if (fd.binary) continue;
            for (const auto& h : fd.hunks) slots.push_back({&commits[c], c, &h});
        }
        std::stable_sort(slots.begin() + static_cast<std::ptrdiff_t>(first), slots.end(),
                         [](const Slot& a, const Slot& b) {
                             if (a.hunk->file_new != b.hunk->file_new) return a.hunk->file_new < b.hunk->file_new;
                             return a.hunk->old_start < b.hunk->old_start;
                         });
    }

    std::vector<std::vector<KbMatch>> matches(slots.size());
    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, slots.size()));
    if (workers == 1) {
        for (std::size_t k = 0; k < slots.size(); ++k) matches[k] = matcher.match(*slots[k].hunk);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t k = w; k < slots.size(); k += workers) matches[k] = matcher.match(*slots[k].hunk);
            });
        }
    }

    MappingResult result;
    result.service_id = std::string(service_id);
    for (const auto& id : matcher.kb_ids()) result.kb_hit_counts[id] = 0;
    for (std::size_t k = 0; k < slots.size(); ++k) {
        const Hunk& h = *slots[k].hunk;
        if (matches[k].empty()) {
            result.unmatched.push_back({slots[k].commit->commit_id, h.hunk_id, h.file_new, h.old_start});
            continue;
        }
        for (const auto& m : matches[k]) ++result.kb_hit_counts[m.kb_id];
        result.assigned.push_back({slots[k].commit->commit_id, h, std::move(matches[k])});
    }
    return result;
}

bool replay_evidence(const Hunk& hunk, const MatchEvidence& evidence, const KbDoc& doc) {
    const auto globs = doc.compiled_globs();
    if (evidence.kind == MatcherKind::Keyword) return keyword_match(hunk, evidence.value, globs);
    return pattern_match(hunk, Pattern::compile(evidence.value), globs);
}

}  // namespace migbench
