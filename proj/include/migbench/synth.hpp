#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace migbench {

enum class Backend { Static, Rulebook, Remote };

std::string_view to_string(Backend backend);
/// "static" | "rulebook" | "remote"; throws Error(BadConfig) otherwise.
Backend parse_backend(std::string_view name);

struct SynthRequest {
    std::string kb_id;
    std::string description;
    std::vector<std::string> positive_examples;
    std::vector<std::string> negative_examples;
    // The KB's explicit patterns; the STATIC backend returns these unchanged.
    std::vector<std::string> static_patterns;
};

struct SynthResult {
    std::vector<std::string> patterns;
    Backend backend = Backend::Static;
    bool cached = false;
};

inline constexpr std::size_t kMaxPatternLength = 512;

/// Throws Error(ValidationFailure) naming the first offending pattern/example:
/// a pattern that fails to compile, exceeds kMaxPatternLength or matches the
/// empty string; a positive line no pattern matches; a negative line some
/// pattern matches.
void validate_patterns(std::span<const std::string> patterns, std::span<const std::string> positive,
                       std::span<const std::string> negative);

/// Normalized description -> patterns. Text form: one `description<TAB>pattern`
/// per line, `#` comments, repeated descriptions accumulate patterns.
class Rulebook {
public:
    static Rulebook parse(std::string_view text);
    static Rulebook load(const std::filesystem::path& path);
    /// The table shipped in data/rulebook.tsv, compiled in.
    static const Rulebook& builtin();

    /// Lowercase, ASCII punctuation to spaces, whitespace collapsed.
    static std::string normalize(std::string_view description);

    const std::vector<std::string>* lookup(std::string_view description) const;
    const std::string& digest() const noexcept { return digest_; }
    std::size_t size() const noexcept { return rules_.size(); }

private:
    std::map<std::string, std::vector<std::string>, std::less<>> rules_;
    std::string digest_;
};

struct RemoteConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8080/synthesize
    std::string token_env = "MIGBENCH_SYNTH_TOKEN";
    int timeout_seconds = 30;
    std::size_t max_concurrent = 4;
};

struct SynthConfig {
    Backend backend = Backend::Rulebook;
    std::shared_ptr<const Rulebook> rulebook;  // null = builtin
    RemoteConfig remote;
    std::optional<std::filesystem::path> cache_dir;
};

/// Turns pattern descriptions into validated regular expressions. Results are
/// cached in memory and, when configured, as content-addressed records under
/// `<cache_dir>/<backend>/<digest>`. Safe to share across threads.
class PatternSynthesizer {
public:
    explicit PatternSynthesizer(SynthConfig config = {});
    ~PatternSynthesizer();

    SynthResult synthesize(const SynthRequest& request) const;
    SynthResult synthesize(const SynthRequest& request, Backend backend) const;

    Backend backend() const noexcept { return config_.backend; }
    std::string cache_key(const SynthRequest& request, Backend backend) const;

    std::size_t cache_hits() const noexcept { return hits_.load(); }
    std::size_t cache_misses() const noexcept { return misses_.load(); }

private:
    std::vector<std::string> run_backend(const SynthRequest& request, Backend backend) const;
    std::vector<std::string> call_remote(const SynthRequest& request) const;
    const Rulebook& rulebook() const;

    SynthConfig config_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::vector<std::string>> memory_;
    mutable std::atomic<std::size_t> hits_{0};
    mutable std::atomic<std::size_t> misses_{0};
    struct RemoteGate;
    std::unique_ptr<RemoteGate> gate_;
};

}  // namespace migbench
