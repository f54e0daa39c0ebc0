#pragma once

#include "migbench/diff.hpp"
#include "migbench/kb.hpp"
#include "migbench/matcher.hpp"
#include "migbench/service.hpp"
#include "migbench/synth.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace migbench {

inline constexpr int kSuiteFormatVersion = 1;

struct Provenance {
    std::string commit_id;
    std::string hunk_id;
    std::string evidence;                  // e.g. "KEYWORD:C:\@1; PATTERN:...@1 [Windows drive names]"
    std::vector<std::string> shared_with;  // other KBs the same hunk was assigned to

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// One benchmark task: the pre-migration state of a service, a KB, and the
/// hunks relevant to that KB. `provenance[k]` describes `hunks[k]`.
struct BenchmarkInstance {
    std::string service_id;
    std::string pre_migration_ref;
    std::string kb_id;
    std::string kb_version;
    std::vector<Hunk> hunks;
    std::vector<Provenance> provenance;

    friend bool operator==(const BenchmarkInstance&, const BenchmarkInstance&) = default;
};

struct ServiceEntry {
    std::string service_id;
    std::string pre_ref;
    std::vector<std::string> migration_commits;
    std::map<std::string, std::string> snapshot;  // path -> digest, version-control mode only

    friend bool operator==(const ServiceEntry&, const ServiceEntry&) = default;
};

struct SuiteManifest {
    std::string tool_version;
    std::string kb_set_hash;
    std::vector<ServiceEntry> services;  // sorted by service_id
    std::string generated_at;
    std::string config_digest;

    friend bool operator==(const SuiteManifest&, const SuiteManifest&) = default;
};

struct BenchmarkSuite {
    SuiteManifest manifest;
    std::vector<BenchmarkInstance> instances;  // sorted by (service_id, kb_id), unique

    const BenchmarkInstance* find(std::string_view service_id, std::string_view kb_id) const;
    std::vector<const BenchmarkInstance*> instances_for(std::string_view service_id) const;

    friend bool operator==(const BenchmarkSuite&, const BenchmarkSuite&) = default;
};

/// Mapping statistics of one service; what the feedback report is computed from.
struct ServiceStats {
    std::string service_id;
    std::map<std::string, std::size_t> kb_hit_counts;
    std::size_t unmatched_hunks = 0;

    friend bool operator==(const ServiceStats&, const ServiceStats&) = default;
};

ServiceStats stats_of(const MappingResult& mapping);

struct KbFeedback {
    std::vector<std::string> silent_kbs;
    std::map<std::string, std::size_t> unmatched_hunk_count;  // per service
    std::vector<std::string> noisy_kbs;
    std::map<std::string, std::size_t> kb_hit_counts;  // summed over services
    double noisy_threshold = 0.0;                      // 0 when no KB fired

    friend bool operator==(const KbFeedback&, const KbFeedback&) = default;
};

inline constexpr double kDefaultNoisyFactor = 5.0;

/// silent: zero hits everywhere; noisy: hits > factor x median of nonzero hit counts.
KbFeedback compute_feedback(std::span<const ServiceStats> stats, double noisy_factor = kDefaultNoisyFactor);

struct GenerateConfig {
    MatchOptions match;
    VcsTool vcs;
    double noisy_factor = kDefaultNoisyFactor;
    std::size_t jobs = 1;
    bool reproducible = false;
    std::string tool_version;
    std::string config_digest;
};

struct GenerateOutput {
    BenchmarkSuite suite;
    KbFeedback feedback;
    std::vector<MappingResult> mappings;  // in suite service order
};

/// Loads each service's commits, maps hunks to KBs and groups them into one
/// instance per (service, KB) with at least one hunk.
GenerateOutput generate(std::span<const ServiceRecord> services, const KbSet& kbs, const PatternSynthesizer& synth,
                        const GenerateConfig& config);

/// Builds instances from finished mappings (the assembly half of generate).
std::vector<BenchmarkInstance> assemble_instances(std::span<const MappingResult> mappings,
                                                  std::span<const ServiceRecord> services, const KbSet& kbs);

/// Canonical JSON: sorted keys, two-space indent, trailing LF.
std::string write_suite(const BenchmarkSuite& suite);

/// Throws Error(SchemaViolation) with a JSON-pointer location, or Error(VersionMismatch).
BenchmarkSuite read_suite(std::string_view document);

struct InstanceKey {
    std::string service_id;
    std::string kb_id;

    friend bool operator==(const InstanceKey&, const InstanceKey&) = default;
    friend auto operator<=>(const InstanceKey&, const InstanceKey&) = default;
};

struct ChangedInstance {
    InstanceKey key;
    std::vector<std::string> hunks_added;
    std::vector<std::string> hunks_removed;

    friend bool operator==(const ChangedInstance&, const ChangedInstance&) = default;
};

struct SuiteDelta {
    std::vector<InstanceKey> added;
    std::vector<InstanceKey> removed;
    std::vector<ChangedInstance> changed;

    bool empty() const noexcept { return added.empty() && removed.empty() && changed.empty(); }
    friend bool operator==(const SuiteDelta&, const SuiteDelta&) = default;
};

SuiteDelta diff_suites(const BenchmarkSuite& old_suite, const BenchmarkSuite& new_suite);

/// One line per key; "no changes" when empty.
std::string format_delta(const SuiteDelta& delta);

std::string write_feedback(const KbFeedback& feedback);
std::string render_feedback_table(const KbFeedback& feedback);

/// Mapping artifact: per-service assignments (by hunk id), unmatched hunks and hit counts.
std::string write_mapping(std::span<const MappingResult> mappings, std::string_view kb_set_hash);

struct MappingArtifact {
    std::string kb_set_hash;
    std::vector<ServiceStats> services;
};

MappingArtifact read_mapping(std::string_view document);

}  // namespace migbench
