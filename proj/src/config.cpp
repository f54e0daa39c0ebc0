#include "migbench/config.hpp"

#include "migbench/digest.hpp"
#include "migbench/error.hpp"
#include "migbench/kb.hpp"
#include "migbench/text.hpp"

#include <json.hpp>

#include <set>

namespace migbench {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::BadConfig, where + ": " + what);
}

void expect_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) bad(where, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) bad(where, "unknown key '" + key + "'");
    }
}

std::string get_string(const json& obj, const std::string& where, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_string()) bad(where + "/" + key, "expected a string");
    return v.get<std::string>();
}

std::vector<std::string> get_strings(const json& obj, const std::string& where, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_array()) bad(where + "/" + key, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& item : v) {
        if (!item.is_string()) bad(where + "/" + key, "expected an array of strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

double get_number(const json& obj, const std::string& where, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_number()) bad(where + "/" + key, "expected a number");
    return v.get<double>();
}

std::size_t get_count(const json& obj, const std::string& where, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) bad(where + "/" + key, "expected a non-negative integer");
    return v.get<std::size_t>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

SourceMode parse_mode(const std::string& where, const std::string& name) {
    if (name == "patch_dir") return SourceMode::PatchDirectory;
    if (name == "vcs") return SourceMode::VersionControl;
    bad(where, "mode must be 'patch_dir' or 'vcs', got '" + name + "'");
}

}  // namespace

RunConfig parse_config(std::string_view document, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::BadConfig, e.what());
    }
    expect_keys(doc, "config",
                {"kb_root", "services", "synth", "tau", "context", "evidence_detail", "skip_synth_failures",
                 "noisy_factor", "vcs", "out_dir"});
    RunConfig cfg;
    if (doc.contains("kb_root")) cfg.kb_root = resolve(base_dir, get_string(doc, "config", "kb_root"));
    if (doc.contains("services")) {
        if (!doc["services"].is_array()) bad("config/services", "expected an array");
        std::size_t k = 0;
        for (const auto& s : doc["services"]) {
            const std::string where = "config/services/" + std::to_string(k++);
            expect_keys(s, where, {"service_id", "source", "mode", "pre_ref", "migration_commits"});
            for (const char* key : {"service_id", "source", "pre_ref", "migration_commits"}) {
                if (!s.contains(key)) bad(where, std::string("missing '") + key + "'");
            }
            ServiceRecord rec;
            rec.service_id = get_string(s, where, "service_id");
            rec.source = resolve(base_dir, get_string(s, where, "source"));
            if (s.contains("mode")) rec.mode = parse_mode(where + "/mode", get_string(s, where, "mode"));
            rec.pre_ref = get_string(s, where, "pre_ref");
            rec.migration_commits = get_strings(s, where, "migration_commits");
            if (!is_valid_slug(rec.service_id)) bad(where + "/service_id", "'" + rec.service_id + "' is not a slug");
            if (rec.migration_commits.empty()) bad(where + "/migration_commits", "must list at least one commit");
            for (const auto& other : cfg.services) {
                if (other.service_id == rec.service_id) bad(where + "/service_id", "duplicate '" + rec.service_id + "'");
            }
            cfg.services.push_back(std::move(rec));
        }
    }
    if (doc.contains("synth")) {
        const auto& s = doc["synth"];
        expect_keys(s, "config/synth",
                    {"backend", "rulebook", "endpoint", "token_env", "timeout_seconds", "max_concurrent", "cache_dir"});
        if (s.contains("backend")) cfg.backend = parse_backend(get_string(s, "config/synth", "backend"));
        if (s.contains("rulebook")) cfg.rulebook = resolve(base_dir, get_string(s, "config/synth", "rulebook"));
        if (s.contains("endpoint")) cfg.remote.endpoint = get_string(s, "config/synth", "endpoint");
        if (s.contains("token_env")) cfg.remote.token_env = get_string(s, "config/synth", "token_env");
        if (s.contains("timeout_seconds")) {
            cfg.remote.timeout_seconds = static_cast<int>(get_count(s, "config/synth", "timeout_seconds"));
        }
        if (s.contains("max_concurrent")) {
            cfg.remote.max_concurrent = get_count(s, "config/synth", "max_concurrent");
            if (cfg.remote.max_concurrent == 0) bad("config/synth/max_concurrent", "must be at least 1");
        }
        if (s.contains("cache_dir")) cfg.cache_dir = resolve(base_dir, get_string(s, "config/synth", "cache_dir"));
    }
    if (doc.contains("tau")) cfg.tau = get_number(doc, "config", "tau");
    if (doc.contains("context")) cfg.vcs.context = get_count(doc, "config", "context");
    if (doc.contains("evidence_detail")) {
        cfg.detail = parse_evidence_detail(get_string(doc, "config", "evidence_detail"));
    }
    if (doc.contains("skip_synth_failures")) {
        if (!doc["skip_synth_failures"].is_boolean()) bad("config/skip_synth_failures", "expected a boolean");
        cfg.skip_synth_failures = doc["skip_synth_failures"].get<bool>();
    }
    if (doc.contains("noisy_factor")) cfg.noisy_factor = get_number(doc, "config", "noisy_factor");
    if (doc.contains("vcs")) {
        const auto& v = doc["vcs"];
        expect_keys(v, "config/vcs", {"program", "show_args", "snapshot_args"});
        if (v.contains("program")) cfg.vcs.program = get_string(v, "config/vcs", "program");
        if (v.contains("show_args")) cfg.vcs.show_args = get_strings(v, "config/vcs", "show_args");
        if (v.contains("snapshot_args")) cfg.vcs.snapshot_args = get_strings(v, "config/vcs", "snapshot_args");
    }
    if (doc.contains("out_dir")) cfg.out_dir = resolve(base_dir, get_string(doc, "config", "out_dir"));
    if (cfg.tau < 0.0 || cfg.tau > 1.0) bad("config/tau", "must lie in [0, 1]");
    if (cfg.noisy_factor <= 0.0) bad("config/noisy_factor", "must be positive");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    const auto text = text::read_file(path);
    try {
        return parse_config(text, path.parent_path());
    } catch (const Error& e) {
        throw e.annotated(path.string());
    }
}

void check_config(const RunConfig& config) {
    if (config.tau < 0.0 || config.tau > 1.0) throw Error(ErrorCode::BadConfig, "tau must lie in [0, 1]");
    auto require = [](const std::filesystem::path& p, const std::string& what) {
        if (!std::filesystem::exists(p)) throw Error(ErrorCode::UnreadableSource, what + " '" + p.string() + "' does not exist");
    };
    if (config.kb_root.empty()) throw Error(ErrorCode::BadConfig, "no KB root configured");
    require(config.kb_root, "KB root");
    for (const auto& s : config.services) require(s.source, "source of service " + s.service_id);
    if (config.rulebook) require(*config.rulebook, "rulebook");
}

std::string config_digest(const RunConfig& config) {
    Sha256 h;
    h.field("services");
    for (const auto& s : config.services) {
        h.field(s.service_id);
        h.field(s.mode == SourceMode::PatchDirectory ? "patch_dir" : "vcs");
        h.field(s.pre_ref);
        for (const auto& c : s.migration_commits) h.field(c);
        h.field("");
    }
    h.field(to_string(config.backend));
    h.field(config.rulebook ? Rulebook::load(*config.rulebook).digest() : Rulebook::builtin().digest());
    h.field(config.detail == EvidenceDetail::All ? "all" : "first");
    h.field(config.skip_synth_failures ? "skip" : "strict");
    h.field(std::to_string(config.vcs.context));
    return h.hex();
}

SynthConfig synth_config(const RunConfig& config) {
    SynthConfig s;
    s.backend = config.backend;
    if (config.rulebook) s.rulebook = std::make_shared<const Rulebook>(Rulebook::load(*config.rulebook));
    s.remote = config.remote;
    s.cache_dir = config.cache_dir;
    return s;
}

}  // namespace migbench
