#include "migbench/synth.hpp"

#include "migbench/digest.hpp"
#include "migbench/error.hpp"
#include "migbench/pattern.hpp"
#include "migbench/text.hpp"

#include "migbench_rulebook_data.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <condition_variable>
#include <cstdlib>

#include <unistd.h>

namespace migbench {

using nlohmann::json;

struct PatternSynthesizer::RemoteGate {
    std::mutex mutex;
    std::condition_variable cv;
    std::size_t available = 0;

    void acquire() {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return available > 0; });
        --available;
    }
    void release() {
        {
            std::lock_guard lock(mutex);
            ++available;
        }
        cv.notify_one();
    }
};

std::string_view to_string(Backend backend) {
    switch (backend) {
        case Backend::Static: return "static";
        case Backend::Rulebook: return "rulebook";
        case Backend::Remote: return "remote";
    }
    return "static";
}

Backend parse_backend(std::string_view name) {
    const auto lowered = text::to_lower_ascii(name);
    if (lowered == "static") return Backend::Static;
    if (lowered == "rulebook") return Backend::Rulebook;
    if (lowered == "remote") return Backend::Remote;
    throw Error(ErrorCode::BadConfig, "unknown synthesizer backend '" + std::string(name) + "'");
}

void validate_patterns(std::span<const std::string> patterns, std::span<const std::string> positive,
                       std::span<const std::string> negative) {
    std::vector<Pattern> compiled;
    compiled.reserve(patterns.size());
    for (const auto& source : patterns) {
        if (source.size() > kMaxPatternLength) {
            throw Error(ErrorCode::ValidationFailure, "pattern longer than " + std::to_string(kMaxPatternLength) +
                                                          " characters: '" + source.substr(0, 40) + "...'");
        }
        try {
            compiled.push_back(Pattern::compile(source));
        } catch (const Error& e) {
            throw Error(ErrorCode::ValidationFailure, "pattern '" + source + "' does not compile (" + e.detail() + ")");
        }
        if (compiled.back().matches_empty()) {
            throw Error(ErrorCode::ValidationFailure, "pattern '" + source + "' matches the empty string");
        }
    }
    for (const auto& line : positive) {
        const bool hit =
            std::any_of(compiled.begin(), compiled.end(), [&](const Pattern& p) { return p.search_nonempty(line); });
        if (!hit) {
            throw Error(ErrorCode::ValidationFailure, "no pattern matches positive example '" + line + "'");
        }
    }
    for (const auto& line : negative) {
        for (const auto& p : compiled) {
            if (p.search_nonempty(line)) {
                throw Error(ErrorCode::ValidationFailure,
                            "pattern '" + p.source() + "' matches negative example '" + line + "'");
            }
        }
    }
}

std::string Rulebook::normalize(std::string_view description) {
    std::string out;
    bool space = false;
    for (const char c : description) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x80 && (std::isspace(u) || std::ispunct(u))) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(static_cast<char>(u < 0x80 ? std::tolower(u) : u));
    }
    return out;
}

Rulebook Rulebook::parse(std::string_view table) {
    Rulebook rb;
    rb.digest_ = sha256_hex(table);
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(table)) {
        ++line_no;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) {
            throw Error(ErrorCode::BadConfig, "rulebook line " + std::to_string(line_no) + ": expected description<TAB>pattern");
        }
        const auto key = normalize(line.substr(0, tab));
        const std::string pattern(line.substr(tab + 1));
        try {
            (void)Pattern::compile(pattern);
        } catch (const Error& e) {
            throw Error(ErrorCode::BadConfig, "rulebook line " + std::to_string(line_no) + ": " + e.detail());
        }
        rb.rules_[key].push_back(pattern);
    }
    return rb;
}

Rulebook Rulebook::load(const std::filesystem::path& path) {
    try {
        return parse(text::read_file(path));
    } catch (const Error& e) {
        throw e.annotated(path.string());
    }
}

const Rulebook& Rulebook::builtin() {
    static const Rulebook rb = parse(detail::kBuiltinRulebook);
    return rb;
}

const std::vector<std::string>* Rulebook::lookup(std::string_view description) const {
    auto it = rules_.find(normalize(description));
    return it == rules_.end() ? nullptr : &it->second;
}

PatternSynthesizer::PatternSynthesizer(SynthConfig config)
    : config_(std::move(config)), gate_(std::make_unique<RemoteGate>()) {
    gate_->available = std::max<std::size_t>(1, config_.remote.max_concurrent);
}

PatternSynthesizer::~PatternSynthesizer() = default;

const Rulebook& PatternSynthesizer::rulebook() const {
    return config_.rulebook ? *config_.rulebook : Rulebook::builtin();
}

std::string PatternSynthesizer::cache_key(const SynthRequest& request, Backend backend) const {
    Sha256 h;
    h.field(to_string(backend)).field(request.kb_id).field(request.description);
    h.field(std::to_string(request.positive_examples.size()));
    for (const auto& s : request.positive_examples) h.field(s);
    h.field(std::to_string(request.negative_examples.size()));
    for (const auto& s : request.negative_examples) h.field(s);
    h.field(std::to_string(request.static_patterns.size()));
    for (const auto& s : request.static_patterns) h.field(s);
    // A rulebook edit must not be served stale.
    if (backend == Backend::Rulebook) h.field(rulebook().digest());
    return h.hex();
}

std::vector<std::string> PatternSynthesizer::call_remote(const SynthRequest& request) const {
    const std::string& endpoint = config_.remote.endpoint;
    const auto scheme_end = endpoint.find("://");
    if (endpoint.empty() || scheme_end == std::string::npos) {
        throw Error(ErrorCode::BadConfig, "remote synthesizer endpoint '" + endpoint + "' is not an http(s) URL");
    }
    const auto path_start = endpoint.find('/', scheme_end + 3);
    const std::string origin = endpoint.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);

    json body = {{"kb_id", request.kb_id},
                 {"description", request.description},
                 {"positive_examples", request.positive_examples},
                 {"negative_examples", request.negative_examples}};
    httplib::Headers headers;
    if (!config_.remote.token_env.empty()) {
        if (const char* token = std::getenv(config_.remote.token_env.c_str()); token != nullptr && *token != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }

    gate_->acquire();
    httplib::Result res;
    try {
        httplib::Client client(origin);
        client.set_connection_timeout(config_.remote.timeout_seconds, 0);
        client.set_read_timeout(config_.remote.timeout_seconds, 0);
        res = client.Post(path, headers, body.dump(), "application/json");
    } catch (...) {
        gate_->release();
        throw;
    }
    gate_->release();

    if (!res) throw Error(ErrorCode::RemoteError, "status 0: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw Error(ErrorCode::RemoteError,
                    "status " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::exception&) {
        throw Error(ErrorCode::BadRemotePattern, "response is not JSON: " + res->body.substr(0, 200));
    }
    if (!reply.is_object() || !reply.contains("patterns") || !reply["patterns"].is_array()) {
        throw Error(ErrorCode::BadRemotePattern, "response lacks a 'patterns' array");
    }
    std::vector<std::string> patterns;
    for (const auto& p : reply["patterns"]) {
        if (!p.is_string()) throw Error(ErrorCode::BadRemotePattern, "non-string pattern " + p.dump());
        const auto source = p.get<std::string>();
        try {
            (void)Pattern::compile(source);
        } catch (const Error&) {
            throw Error(ErrorCode::BadRemotePattern, source);
        }
        patterns.push_back(source);
    }
    return patterns;
}

std::vector<std::string> PatternSynthesizer::run_backend(const SynthRequest& request, Backend backend) const {
    switch (backend) {
        case Backend::Static: return request.static_patterns;
        case Backend::Rulebook: {
            const auto* rule = rulebook().lookup(request.description);
            if (rule == nullptr) {
                throw Error(ErrorCode::NoRule, "'" + request.description + "' (normalized '" +
                                                   Rulebook::normalize(request.description) + "')");
            }
            return *rule;
        }
        case Backend::Remote: return call_remote(request);
    }
    return {};
}

SynthResult PatternSynthesizer::synthesize(const SynthRequest& request) const {
    return synthesize(request, config_.backend);
}

SynthResult PatternSynthesizer::synthesize(const SynthRequest& request, Backend backend) const {
    if (text::trim(request.description).empty() && backend != Backend::Static) {
        throw Error(ErrorCode::ValidationFailure, "empty description for KB '" + request.kb_id + "'");
    }
    const std::string key = cache_key(request, backend);
    const auto record_path = config_.cache_dir ? std::optional(*config_.cache_dir / std::string(to_string(backend)) / key)
                                               : std::nullopt;
    SynthResult result;
    result.backend = backend;

    std::optional<std::vector<std::string>> cached;
    {
        std::lock_guard lock(mutex_);
        if (auto it = memory_.find(key); it != memory_.end()) cached = it->second;
    }
    if (!cached && record_path && std::filesystem::exists(*record_path)) {
        try {
            const auto doc = json::parse(text::read_file(*record_path));
            cached = doc.at("patterns").get<std::vector<std::string>>();
        } catch (const json::exception&) {
            // Unreadable record: fall through and regenerate it.
        }
    }
    if (cached) {
        ++hits_;
        result.patterns = std::move(*cached);
        result.cached = true;
    } else {
        ++misses_;
        result.patterns = run_backend(request, backend);
    }
    validate_patterns(result.patterns, request.positive_examples, request.negative_examples);

    if (!result.cached) {
        std::lock_guard lock(mutex_);
        memory_[key] = result.patterns;
        if (record_path) {
            json record = {{"backend", to_string(backend)},
                           {"kb_id", request.kb_id},
                           {"description", request.description},
                           {"patterns", result.patterns}};
            // Content-addressed: concurrent writers of one key write identical bytes.
            static std::atomic<unsigned> sequence{0};
            const auto tmp = record_path->string() + ".tmp." + std::to_string(::getpid()) + "." +
                             std::to_string(sequence++);
            text::write_file(tmp, record.dump(2) + "\n");
            std::filesystem::rename(tmp, *record_path);
        }
    } else {
        std::lock_guard lock(mutex_);
        memory_.try_emplace(key, result.patterns);
    }
    return result;
}

}  // namespace migbench
