#include "migbench/benchgen.hpp"

#include "migbench/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <future>
#include <iomanip>
#include <set>
#include <sstream>

namespace migbench {

using nlohmann::json;

namespace {

constexpr std::string_view kReproducibleTimestamp = "1970-01-01T00:00:00Z";
constexpr std::string_view kReproducibleVersion = "reproducible";

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string evidence_summary(const std::vector<MatchEvidence>& evidence) {
    std::string out;
    for (const auto& e : evidence) {
        if (!out.empty()) out += "; ";
        out += to_string(e.kind);
        out += ':';
        out += e.value;
        out += '@';
        out += std::to_string(e.line_index);
        if (!e.from_description.empty()) out += " [" + e.from_description + "]";
    }
    return out;
}

// ---- JSON encoding --------------------------------------------------------

json hunk_to_json(const Hunk& h) {
    return {{"file_old", h.file_old}, {"file_new", h.file_new}, {"old_start", h.old_start},
            {"old_len", h.old_len},   {"new_start", h.new_start}, {"new_len", h.new_len},
            {"section", h.section},   {"lines", canonical_lines(h)}, {"hunk_id", h.hunk_id}};
}

json instance_to_json(const BenchmarkInstance& inst) {
    json hunks = json::array();
    for (const auto& h : inst.hunks) hunks.push_back(hunk_to_json(h));
    json prov = json::array();
    for (const auto& p : inst.provenance) {
        prov.push_back({{"commit_id", p.commit_id},
                        {"hunk_id", p.hunk_id},
                        {"evidence", p.evidence},
                        {"shared_with", p.shared_with}});
    }
    return {{"service_id", inst.service_id}, {"pre_migration_ref", inst.pre_migration_ref},
            {"kb_id", inst.kb_id},           {"kb_version", inst.kb_version},
            {"hunks", std::move(hunks)},     {"provenance", std::move(prov)}};
}

json manifest_to_json(const SuiteManifest& m) {
    json services = json::array();
    for (const auto& s : m.services) {
        json entry = {{"service_id", s.service_id}, {"pre_ref", s.pre_ref}, {"migration_commits", s.migration_commits}};
        if (!s.snapshot.empty()) entry["snapshot"] = s.snapshot;
        services.push_back(std::move(entry));
    }
    return {{"tool_version", m.tool_version}, {"kb_set_hash", m.kb_set_hash}, {"services", std::move(services)},
            {"generated_at", m.generated_at}, {"config_digest", m.config_digest}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- Schema-checked decoding ----------------------------------------------

[[noreturn]] void violation(const std::string& path, const std::string& reason) {
    throw Error(ErrorCode::SchemaViolation, (path.empty() ? "/" : path) + ": " + reason);
}

void expect_object(const json& j, const std::string& path, std::initializer_list<std::string_view> required,
                   std::initializer_list<std::string_view> optional = {}) {
    if (!j.is_object()) violation(path, "expected an object");
    for (const auto key : required) {
        if (!j.contains(std::string(key))) violation(path + "/" + std::string(key), "missing required field");
    }
    for (const auto& [key, _] : j.items()) {
        const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                           std::find(optional.begin(), optional.end(), key) != optional.end();
        if (!known) violation(path + "/" + key, "unknown field");
    }
}

std::string get_string(const json& obj, const std::string& path, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_string()) violation(path + "/" + key, "expected a string");
    return v.get<std::string>();
}

std::size_t get_uint(const json& obj, const std::string& path, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) violation(path + "/" + key, "expected a non-negative integer");
    return v.get<std::size_t>();
}

const json& get_array(const json& obj, const std::string& path, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_array()) violation(path + "/" + key, "expected an array");
    return v;
}

std::vector<std::string> get_strings(const json& obj, const std::string& path, const char* key) {
    const auto& arr = get_array(obj, path, key);
    std::vector<std::string> out;
    for (std::size_t k = 0; k < arr.size(); ++k) {
        if (!arr[k].is_string()) violation(path + "/" + key + "/" + std::to_string(k), "expected a string");
        out.push_back(arr[k].get<std::string>());
    }
    return out;
}

Hunk hunk_from_json(const json& j, const std::string& path) {
    expect_object(j, path, {"file_old", "file_new", "old_start", "old_len", "new_start", "new_len", "section", "lines",
                            "hunk_id"});
    Hunk h;
    h.file_old = get_string(j, path, "file_old");
    h.file_new = get_string(j, path, "file_new");
    h.old_start = get_uint(j, path, "old_start");
    h.old_len = get_uint(j, path, "old_len");
    h.new_start = get_uint(j, path, "new_start");
    h.new_len = get_uint(j, path, "new_len");
    h.section = get_string(j, path, "section");
    h.hunk_id = get_string(j, path, "hunk_id");
    const auto lines = get_strings(j, path, "lines");
    try {
        h.lines = decode_canonical_lines(lines);
    } catch (const Error& e) {
        violation(path + "/lines", e.detail());
    }
    std::size_t old_count = 0;
    std::size_t new_count = 0;
    for (const auto& l : h.lines) {
        if (l.kind != LineKind::Add) ++old_count;
        if (l.kind != LineKind::Del) ++new_count;
    }
    if (old_count != h.old_len || new_count != h.new_len) violation(path + "/lines", "line counts disagree with lengths");
    if (compute_hunk_id(h) != h.hunk_id) violation(path + "/hunk_id", "does not match hunk content");
    return h;
}

}  // namespace

const BenchmarkInstance* BenchmarkSuite::find(std::string_view service_id, std::string_view kb_id) const {
    for (const auto& inst : instances) {
        if (inst.service_id == service_id && inst.kb_id == kb_id) return &inst;
    }
    return nullptr;
}

std::vector<const BenchmarkInstance*> BenchmarkSuite::instances_for(std::string_view service_id) const {
    std::vector<const BenchmarkInstance*> out;
    for (const auto& inst : instances) {
        if (inst.service_id == service_id) out.push_back(&inst);
    }
    return out;
}

ServiceStats stats_of(const MappingResult& mapping) {
    return {mapping.service_id, mapping.kb_hit_counts, mapping.unmatched.size()};
}

KbFeedback compute_feedback(std::span<const ServiceStats> stats, double noisy_factor) {
    KbFeedback fb;
    for (const auto& s : stats) {
        fb.unmatched_hunk_count[s.service_id] = s.unmatched_hunks;
        for (const auto& [kb, count] : s.kb_hit_counts) fb.kb_hit_counts[kb] += count;
    }
    std::vector<std::size_t> nonzero;
    for (const auto& [kb, count] : fb.kb_hit_counts) {
        if (count == 0) {
            fb.silent_kbs.push_back(kb);
        } else {
            nonzero.push_back(count);
        }
    }
    if (!nonzero.empty()) {
        std::sort(nonzero.begin(), nonzero.end());
        const std::size_t mid = nonzero.size() / 2;
        const double median = nonzero.size() % 2 == 1
                                  ? static_cast<double>(nonzero[mid])
                                  : (static_cast<double>(nonzero[mid - 1]) + static_cast<double>(nonzero[mid])) / 2.0;
        fb.noisy_threshold = noisy_factor * median;
        for (const auto& [kb, count] : fb.kb_hit_counts) {
            if (static_cast<double>(count) > fb.noisy_threshold) fb.noisy_kbs.push_back(kb);
        }
    }
    return fb;
}

std::vector<BenchmarkInstance> assemble_instances(std::span<const MappingResult> mappings,
                                                  std::span<const ServiceRecord> services, const KbSet& kbs) {
    std::map<std::string, const ServiceRecord*> by_id;
    for (const auto& s : services) by_id[s.service_id] = &s;
    std::map<InstanceKey, BenchmarkInstance> grouped;
    for (const auto& mapping : mappings) {
        const auto rec = by_id.find(mapping.service_id);
        if (rec == by_id.end()) throw Error(ErrorCode::UnknownService, mapping.service_id);
        for (const auto& mh : mapping.assigned) {
            for (const auto& m : mh.kbs) {
                auto [it, fresh] = grouped.try_emplace(InstanceKey{mapping.service_id, m.kb_id});
                auto& inst = it->second;
                if (fresh) {
                    const KbDoc* doc = kbs.find(m.kb_id);
                    if (doc == nullptr) throw Error(ErrorCode::SchemaViolation, "mapping names unknown KB '" + m.kb_id + "'");
                    inst.service_id = mapping.service_id;
                    inst.pre_migration_ref = rec->second->pre_ref;
                    inst.kb_id = m.kb_id;
                    inst.kb_version = doc->version;
                }
                Provenance p{mh.commit_id, mh.hunk.hunk_id, evidence_summary(m.evidence), {}};
                for (const auto& other : mh.kbs) {
                    if (other.kb_id != m.kb_id) p.shared_with.push_back(other.kb_id);
                }
                inst.hunks.push_back(mh.hunk);
                inst.provenance.push_back(std::move(p));
            }
        }
    }
    std::vector<BenchmarkInstance> out;
    out.reserve(grouped.size());
    for (auto& [key, inst] : grouped) out.push_back(std::move(inst));
    return out;
}

GenerateOutput generate(std::span<const ServiceRecord> services, const KbSet& kbs, const PatternSynthesizer& synth,
                        const GenerateConfig& config) {
    std::vector<const ServiceRecord*> ordered;
    for (const auto& s : services) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const ServiceRecord* a, const ServiceRecord* b) { return a->service_id < b->service_id; });
    for (std::size_t k = 1; k < ordered.size(); ++k) {
        if (ordered[k]->service_id == ordered[k - 1]->service_id) {
            throw Error(ErrorCode::BadConfig, "service id '" + ordered[k]->service_id + "' listed twice");
        }
    }

    const KbMatcher matcher(kbs, synth, config.match);
    const bool parallel_services = config.jobs > 1 && ordered.size() > 1;
    const std::size_t inner_jobs = parallel_services ? 1 : config.jobs;

    auto run_service = [&](const ServiceRecord& rec) {
        try {
            const auto commits = load_service_commits(rec, config.vcs);
            auto mapping = map_hunks(rec.service_id, commits, matcher, inner_jobs);
            mapping.warnings.insert(mapping.warnings.begin(), matcher.warnings().begin(), matcher.warnings().end());
            return mapping;
        } catch (const Error& e) {
            throw e.annotated("service '" + rec.service_id + "'");
        }
    };

    GenerateOutput out;
    if (parallel_services) {
        std::vector<std::future<MappingResult>> futures;
        for (const auto* rec : ordered) futures.push_back(std::async(std::launch::async, run_service, std::cref(*rec)));
        for (auto& f : futures) out.mappings.push_back(f.get());
    } else {
        for (const auto* rec : ordered) out.mappings.push_back(run_service(*rec));
    }

    auto& manifest = out.suite.manifest;
    manifest.tool_version = config.reproducible ? std::string(kReproducibleVersion) : config.tool_version;
    manifest.generated_at = config.reproducible ? std::string(kReproducibleTimestamp) : utc_now();
    manifest.kb_set_hash = kbs.set_hash;
    manifest.config_digest = config.config_digest;
    for (const auto* rec : ordered) {
        ServiceEntry entry{rec->service_id, rec->pre_ref, rec->migration_commits, {}};
        if (rec->mode == SourceMode::VersionControl) {
            try {
                entry.snapshot = snapshot_manifest(*rec, config.vcs);
            } catch (const Error& e) {
                throw e.annotated("service '" + rec->service_id + "'");
            }
        }
        manifest.services.push_back(std::move(entry));
    }
    out.suite.instances = assemble_instances(out.mappings, services, kbs);

    std::vector<ServiceStats> stats;
    for (const auto& m : out.mappings) stats.push_back(stats_of(m));
    out.feedback = compute_feedback(stats, config.noisy_factor);
    return out;
}

std::string write_suite(const BenchmarkSuite& suite) {
    json instances = json::array();
    for (const auto& inst : suite.instances) instances.push_back(instance_to_json(inst));
    const json doc = {{"format_version", kSuiteFormatVersion},
                      {"manifest", manifest_to_json(suite.manifest)},
                      {"instances", std::move(instances)}};
    return dump(doc);
}

BenchmarkSuite read_suite(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("/: not valid JSON (") + e.what() + ")");
    }
    if (!doc.is_object()) violation("", "expected an object");
    if (!doc.contains("format_version")) violation("/format_version", "missing required field");
    const auto& version = doc["format_version"];
    if (!version.is_number_integer()) violation("/format_version", "expected an integer");
    if (version.get<long long>() != kSuiteFormatVersion) {
        throw Error(ErrorCode::VersionMismatch, "found format_version " + std::to_string(version.get<long long>()) +
                                                    ", supported " + std::to_string(kSuiteFormatVersion));
    }
    expect_object(doc, "", {"format_version", "manifest", "instances"});

    BenchmarkSuite suite;
    const auto& m = doc["manifest"];
    expect_object(m, "/manifest", {"tool_version", "kb_set_hash", "services", "generated_at", "config_digest"});
    suite.manifest.tool_version = get_string(m, "/manifest", "tool_version");
    suite.manifest.kb_set_hash = get_string(m, "/manifest", "kb_set_hash");
    suite.manifest.generated_at = get_string(m, "/manifest", "generated_at");
    suite.manifest.config_digest = get_string(m, "/manifest", "config_digest");
    const auto& services = get_array(m, "/manifest", "services");
    for (std::size_t k = 0; k < services.size(); ++k) {
        const std::string path = "/manifest/services/" + std::to_string(k);
        const auto& s = services[k];
        expect_object(s, path, {"service_id", "pre_ref", "migration_commits"}, {"snapshot"});
        ServiceEntry entry;
        entry.service_id = get_string(s, path, "service_id");
        entry.pre_ref = get_string(s, path, "pre_ref");
        entry.migration_commits = get_strings(s, path, "migration_commits");
        if (s.contains("snapshot")) {
            const auto& snap = s["snapshot"];
            if (!snap.is_object() || snap.empty()) violation(path + "/snapshot", "expected a nonempty object");
            for (const auto& [file, digest] : snap.items()) {
                if (!digest.is_string()) violation(path + "/snapshot/" + file, "expected a string");
                entry.snapshot[file] = digest.get<std::string>();
            }
        }
        if (!suite.manifest.services.empty() && suite.manifest.services.back().service_id >= entry.service_id) {
            violation(path + "/service_id", "services must be sorted and unique");
        }
        suite.manifest.services.push_back(std::move(entry));
    }

    const auto& instances = get_array(doc, "", "instances");
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const std::string path = "/instances/" + std::to_string(k);
        const auto& j = instances[k];
        expect_object(j, path, {"service_id", "pre_migration_ref", "kb_id", "kb_version", "hunks", "provenance"});
        BenchmarkInstance inst;
        inst.service_id = get_string(j, path, "service_id");
        inst.pre_migration_ref = get_string(j, path, "pre_migration_ref");
        inst.kb_id = get_string(j, path, "kb_id");
        inst.kb_version = get_string(j, path, "kb_version");
        const auto& hunks = get_array(j, path, "hunks");
        if (hunks.empty()) violation(path + "/hunks", "an instance needs at least one hunk");
        for (std::size_t h = 0; h < hunks.size(); ++h) {
            inst.hunks.push_back(hunk_from_json(hunks[h], path + "/hunks/" + std::to_string(h)));
        }
        const auto& prov = get_array(j, path, "provenance");
        if (prov.size() != hunks.size()) violation(path + "/provenance", "needs exactly one entry per hunk");
        for (std::size_t p = 0; p < prov.size(); ++p) {
            const std::string ppath = path + "/provenance/" + std::to_string(p);
            expect_object(prov[p], ppath, {"commit_id", "hunk_id", "evidence", "shared_with"});
            Provenance entry{get_string(prov[p], ppath, "commit_id"), get_string(prov[p], ppath, "hunk_id"),
                             get_string(prov[p], ppath, "evidence"), get_strings(prov[p], ppath, "shared_with")};
            if (entry.hunk_id != inst.hunks[p].hunk_id) violation(ppath + "/hunk_id", "does not name the matching hunk");
            inst.provenance.push_back(std::move(entry));
        }
        if (!suite.instances.empty()) {
            const auto& prev = suite.instances.back();
            if (InstanceKey{prev.service_id, prev.kb_id} >= InstanceKey{inst.service_id, inst.kb_id}) {
                violation(path, "instances must be sorted by (service_id, kb_id) and unique");
            }
        }
        suite.instances.push_back(std::move(inst));
    }
    return suite;
}

SuiteDelta diff_suites(const BenchmarkSuite& old_suite, const BenchmarkSuite& new_suite) {
    auto index = [](const BenchmarkSuite& s) {
        std::map<InstanceKey, std::set<std::string>> out;
        for (const auto& inst : s.instances) {
            auto& ids = out[InstanceKey{inst.service_id, inst.kb_id}];
            for (const auto& h : inst.hunks) ids.insert(h.hunk_id);
        }
        return out;
    };
    const auto before = index(old_suite);
    const auto after = index(new_suite);
    SuiteDelta delta;
    for (const auto& [key, ids] : after) {
        const auto it = before.find(key);
        if (it == before.end()) {
            delta.added.push_back(key);
            continue;
        }
        ChangedInstance c{key, {}, {}};
        std::set_difference(ids.begin(), ids.end(), it->second.begin(), it->second.end(),
                            std::back_inserter(c.hunks_added));
        std::set_difference(it->second.begin(), it->second.end(), ids.begin(), ids.end(),
                            std::back_inserter(c.hunks_removed));
        if (!c.hunks_added.empty() || !c.hunks_removed.empty()) delta.changed.push_back(std::move(c));
    }
    for (const auto& [key, ids] : before) {
        if (after.count(key) == 0) delta.removed.push_back(key);
    }
    return delta;
}

std::string format_delta(const SuiteDelta& delta) {
    if (delta.empty()) return "no changes\n";
    std::string out;
    for (const auto& k : delta.added) out += "added   " + k.service_id + "/" + k.kb_id + "\n";
    for (const auto& k : delta.removed) out += "removed " + k.service_id + "/" + k.kb_id + "\n";
    for (const auto& c : delta.changed) {
        out += "changed " + c.key.service_id + "/" + c.key.kb_id + " (+" + std::to_string(c.hunks_added.size()) + " -" +
               std::to_string(c.hunks_removed.size()) + " hunks)\n";
        for (const auto& h : c.hunks_added) out += "  + " + h + "\n";
        for (const auto& h : c.hunks_removed) out += "  - " + h + "\n";
    }
    return out;
}

std::string write_feedback(const KbFeedback& fb) {
    const json doc = {{"silent_kbs", fb.silent_kbs},
                      {"noisy_kbs", fb.noisy_kbs},
                      {"noisy_threshold", fb.noisy_threshold},
                      {"kb_hit_counts", fb.kb_hit_counts},
                      {"unmatched_hunk_count", fb.unmatched_hunk_count}};
    return dump(doc);
}

std::string render_feedback_table(const KbFeedback& fb) {
    std::size_t width = 2;
    for (const auto& [kb, _] : fb.kb_hit_counts) width = std::max(width, kb.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "KB" << "  " << std::right << std::setw(6) << "hunks"
        << "  status\n";
    for (const auto& [kb, count] : fb.kb_hit_counts) {
        const bool silent = std::find(fb.silent_kbs.begin(), fb.silent_kbs.end(), kb) != fb.silent_kbs.end();
        const bool noisy = std::find(fb.noisy_kbs.begin(), fb.noisy_kbs.end(), kb) != fb.noisy_kbs.end();
        out << std::left << std::setw(static_cast<int>(width)) << kb << "  " << std::right << std::setw(6) << count
            << "  " << (silent ? "SILENT" : noisy ? "NOISY" : "ok") << "\n";
    }
    out << "\nunmatched hunks per service:\n";
    for (const auto& [svc, count] : fb.unmatched_hunk_count) out << "  " << svc << ": " << count << "\n";
    return out.str();
}

std::string write_mapping(std::span<const MappingResult> mappings, std::string_view kb_set_hash) {
    json services = json::array();
    for (const auto& m : mappings) {
        json assigned = json::array();
        for (const auto& mh : m.assigned) {
            std::vector<std::string> ids;
            for (const auto& k : mh.kbs) ids.push_back(k.kb_id);
            assigned.push_back({{"commit_id", mh.commit_id},
                                {"hunk_id", mh.hunk.hunk_id},
                                {"file", mh.hunk.file_new},
                                {"old_start", mh.hunk.old_start},
                                {"kb_ids", ids}});
        }
        json unmatched = json::array();
        for (const auto& u : m.unmatched) {
            unmatched.push_back(
                {{"commit_id", u.commit_id}, {"hunk_id", u.hunk_id}, {"file", u.file}, {"old_start", u.old_start}});
        }
        services.push_back({{"service_id", m.service_id},
                            {"assigned", std::move(assigned)},
                            {"unmatched", std::move(unmatched)},
                            {"kb_hit_counts", m.kb_hit_counts}});
    }
    return dump({{"kb_set_hash", kb_set_hash}, {"services", std::move(services)}});
}

MappingArtifact read_mapping(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("/: not valid JSON (") + e.what() + ")");
    }
    expect_object(doc, "", {"kb_set_hash", "services"});
    MappingArtifact art;
    art.kb_set_hash = get_string(doc, "", "kb_set_hash");
    const auto& services = get_array(doc, "", "services");
    for (std::size_t k = 0; k < services.size(); ++k) {
        const std::string path = "/services/" + std::to_string(k);
        const auto& s = services[k];
        expect_object(s, path, {"service_id", "assigned", "unmatched", "kb_hit_counts"});
        ServiceStats st;
        st.service_id = get_string(s, path, "service_id");
        st.unmatched_hunks = get_array(s, path, "unmatched").size();
        const auto& counts = s["kb_hit_counts"];
        if (!counts.is_object()) violation(path + "/kb_hit_counts", "expected an object");
        for (const auto& [kb, n] : counts.items()) {
            if (!n.is_number_unsigned()) violation(path + "/kb_hit_counts/" + kb, "expected a non-negative integer");
            st.kb_hit_counts[kb] = n.get<std::size_t>();
        }
        art.services.push_back(std::move(st));
    }
    return art;
}

}  // namespace migbench
