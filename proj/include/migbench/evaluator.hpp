#pragma once

#include "migbench/benchgen.hpp"
#include "migbench/diff.hpp"
#include "migbench/kb.hpp"
#include "migbench/matcher.hpp"
#include "migbench/synth.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace migbench {

/// Levenshtein distance over code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// levenshtein(a, b) / max(len a, len b) in code points; 0 for two empty strings.
double normalized_levenshtein(std::string_view a, std::string_view b);

struct EditPair {
    std::size_t predicted;  // index into the predicted edits
    std::size_t truth;      // index into the truth edits
    double distance;

    friend bool operator==(const EditPair&, const EditPair&) = default;
};

struct EditMatching {
    std::vector<EditPair> pairs;  // sorted by predicted index
    std::vector<std::size_t> unmatched_predicted;
    std::vector<std::size_t> unmatched_truth;
};

inline constexpr double kDefaultTau = 0.2;

/// Maximum-cardinality pairing of predicted and truth edits where a pair needs
/// the same file, the same op and normalized distance <= tau. Among maximum
/// pairings the total distance is minimal; remaining ties are resolved by a
/// fixed processing order over (file, anchor, content).
EditMatching match_edits(std::span<const LineEdit> predicted, std::span<const LineEdit> truth, double tau);

struct LineMetrics {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

LineMetrics line_metrics(const EditMatching& matching);

/// Harmonic mean; throws Error(DomainError) when precision + recall == 0.
double f1(double precision, double recall);

struct AgentPatch {
    std::string service_id;
    std::vector<FileDiff> diff;

    static AgentPatch parse(std::string_view service_id, std::string_view unified_diff);
    std::vector<LineEdit> line_edits() const;
};

struct KbVerdict {
    bool required = false;
    bool attempted = false;
    bool validated = false;

    friend bool operator==(const KbVerdict&, const KbVerdict&) = default;
};

struct EvalReport {
    std::string service_id;
    double tau = kDefaultTau;
    std::optional<double> line_precision;
    std::optional<double> line_recall;
    std::optional<double> line_f1;
    std::map<std::string, KbVerdict> per_kb;
    std::optional<double> kb_precision;
    std::optional<double> kb_recall;
    std::vector<LineEdit> predicted;
    std::vector<LineEdit> truth;
    EditMatching matching;
    std::vector<std::string> notes;  // why absent metrics are absent
};

struct EvalOptions {
    double tau = kDefaultTau;
    MatchOptions match;
};

/// Scores `patch` against the suite's instances for its service. Throws
/// Error(UnknownService) when the suite has no instance for it.
EvalReport evaluate(const AgentPatch& patch, const BenchmarkSuite& suite, const KbSet& kbs,
                    const PatternSynthesizer& synth, const EvalOptions& options = {});

/// The service's truth hunks (each hunk once) grouped into file diffs.
std::vector<FileDiff> oracle_patch(const BenchmarkSuite& suite, std::string_view service_id);

std::string write_report(const EvalReport& report);
std::string render_report_table(const EvalReport& report);

}  // namespace migbench
