#pragma once

#include "migbench/diff.hpp"
#include "migbench/glob.hpp"
#include "migbench/kb.hpp"
#include "migbench/pattern.hpp"
#include "migbench/synth.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace migbench {

enum class MatcherKind { Keyword, Pattern };

std::string_view to_string(MatcherKind kind);

struct MatchEvidence {
    std::string kb_id;
    MatcherKind kind = MatcherKind::Keyword;
    std::string value;             // keyword or regex source that fired
    std::size_t line_index = 0;    // index in Hunk::lines of the first firing ADD/DEL line
    std::string from_description;  // set when the pattern was synthesized

    friend bool operator==(const MatchEvidence&, const MatchEvidence&) = default;
};

struct KbMatch {
    std::string kb_id;
    std::vector<MatchEvidence> evidence;

    friend bool operator==(const KbMatch&, const KbMatch&) = default;
};

struct MappedHunk {
    std::string commit_id;
    Hunk hunk;
    std::vector<KbMatch> kbs;  // sorted by kb_id, nonempty
};

struct HunkRef {
    std::string commit_id;
    std::string hunk_id;
    std::string file;
    std::size_t old_start = 0;

    friend bool operator==(const HunkRef&, const HunkRef&) = default;
};

/// Assigned and unmatched hunks partition the service's text hunks; both are
/// ordered by (commit order, file path, old_start).
struct MappingResult {
    std::string service_id;
    std::vector<MappedHunk> assigned;
    std::vector<HunkRef> unmatched;
    std::map<std::string, std::size_t> kb_hit_counts;  // every KB id, zero included
    std::vector<std::string> warnings;

    std::size_t text_hunk_count() const noexcept { return assigned.size() + unmatched.size(); }
};

enum class EvidenceDetail { First, All };

EvidenceDetail parse_evidence_detail(std::string_view name);

struct MatchOptions {
    EvidenceDetail detail = EvidenceDetail::All;
    // Drop pattern descriptions the synthesizer cannot resolve instead of failing.
    bool skip_synth_failures = false;
    std::size_t jobs = 1;
};

/// Glob gate on the hunk's post-image path, then a case-sensitive substring
/// test over ADD/DEL line content. Context lines never count.
bool keyword_match(const Hunk& hunk, std::string_view keyword, std::span<const Glob> globs);

/// Glob gate, then a nonempty regex match in some ADD/DEL line.
bool pattern_match(const Hunk& hunk, const Pattern& pattern, std::span<const Glob> globs);

/// The KB set with globs, patterns and synthesized patterns compiled once.
class KbMatcher {
public:
    KbMatcher(const KbSet& kbs, const PatternSynthesizer& synth, const MatchOptions& options);

    /// Every KB whose matchers fire on `hunk`, sorted by kb_id.
    std::vector<KbMatch> match(const Hunk& hunk) const;

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    std::vector<std::string> kb_ids() const;

private:
    struct CompiledPattern {
        Pattern pattern;
        std::string from_description;
    };
    struct CompiledKb {
        std::string id;
        std::vector<Glob> globs;
        std::vector<std::string> keywords;
        std::vector<CompiledPattern> patterns;
    };

    std::vector<CompiledKb> kbs_;
    EvidenceDetail detail_;
    std::vector<std::string> warnings_;
};

/// Maps every text hunk of `commits` to the KBs whose matchers fire on it.
/// Binary files are skipped. Throws Error(SynthFailure) unless skipping is enabled.
MappingResult map_hunks(std::string_view service_id, std::span<const CommitDiff> commits, const KbSet& kbs,
                        const PatternSynthesizer& synth, const MatchOptions& options = {});

/// Overload reusing an already compiled matcher.
MappingResult map_hunks(std::string_view service_id, std::span<const CommitDiff> commits, const KbMatcher& matcher,
                        std::size_t jobs = 1);

/// Re-runs the matcher named by `evidence` on `hunk` under `doc`'s globs.
bool replay_evidence(const Hunk& hunk, const MatchEvidence& evidence, const KbDoc& doc);

}  // namespace migbench
