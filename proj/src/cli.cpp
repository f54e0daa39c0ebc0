#include "migbench/cli.hpp"

#include "migbench/benchgen.hpp"
#include "migbench/config.hpp"
#include "migbench/error.hpp"
#include "migbench/evaluator.hpp"
#include "migbench/kb.hpp"
#include "migbench/text.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>
#include <thread>

namespace migbench {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFindings = 2;

struct Overrides {
    std::string config;
    std::string kb_root;
    std::string out;
    std::string backend;
    std::optional<double> tau;
    std::size_t jobs = std::max(1U, std::thread::hardware_concurrency());
    bool reproducible = false;
    std::string service;
};

RunConfig effective_config(const Overrides& o) {
    RunConfig cfg;
    if (!o.config.empty()) cfg = load_config(o.config);
    if (!o.kb_root.empty()) cfg.kb_root = o.kb_root;
    if (!o.out.empty()) cfg.out_dir = std::filesystem::path(o.out);
    if (!o.backend.empty()) cfg.backend = parse_backend(o.backend);
    if (o.tau) cfg.tau = *o.tau;
    return cfg;
}

void log(std::ostream& err, std::string_view message) { err << "migbench: " << message << "\n"; }

void log_cache(std::ostream& err, const PatternSynthesizer& synth) {
    log(err, "synth cache: " + std::to_string(synth.cache_hits()) + " hits, " + std::to_string(synth.cache_misses()) +
                 " misses");
}

std::string join(const std::vector<std::string>& items) {
    std::string s;
    for (const auto& item : items) s += (s.empty() ? "" : ", ") + item;
    return s.empty() ? "none" : s;
}

int cmd_kb_lint(const Overrides& o, std::ostream& out, std::ostream& err) {
    const auto cfg = effective_config(o);
    if (cfg.kb_root.empty()) throw Error(ErrorCode::BadConfig, "no KB root given (--kb-root or --config)");
    const auto kbs = load_kb_set(cfg.kb_root);
    std::size_t findings = 0;
    for (const auto& doc : kbs.docs) {
        for (const auto& d : lint_kb(doc)) {
            out << format_diagnostic(d) << "\n";
            ++findings;
        }
    }
    if (findings > 0) log(err, std::to_string(findings) + " finding(s) in " + std::to_string(kbs.docs.size()) + " KB(s)");
    return findings > 0 ? kExitFindings : kExitOk;
}

int cmd_generate(const Overrides& o, std::ostream& out, std::ostream& err) {
    const auto cfg = effective_config(o);
    check_config(cfg);
    if (!cfg.out_dir) throw Error(ErrorCode::BadConfig, "no output directory given (--out or out_dir)");
    const auto kbs = load_kb_set(cfg.kb_root);
    log(err, "loaded " + std::to_string(kbs.docs.size()) + " KB(s) from " + cfg.kb_root.string());
    const PatternSynthesizer synth(synth_config(cfg));

    GenerateConfig gc;
    gc.match.detail = cfg.detail;
    gc.match.skip_synth_failures = cfg.skip_synth_failures;
    gc.match.jobs = o.jobs;
    gc.vcs = cfg.vcs;
    gc.noisy_factor = cfg.noisy_factor;
    gc.jobs = o.jobs;
    gc.reproducible = o.reproducible;
    gc.tool_version = std::string(kToolVersion);
    gc.config_digest = config_digest(cfg);
    const auto result = generate(cfg.services, kbs, synth, gc);
    for (const auto& m : result.mappings) {
        for (const auto& w : m.warnings) log(err, m.service_id + ": " + w);
    }
    log_cache(err, synth);

    text::write_file(*cfg.out_dir / "suite.json", write_suite(result.suite));
    text::write_file(*cfg.out_dir / "feedback.json", write_feedback(result.feedback));
    text::write_file(*cfg.out_dir / "mapping.json", write_mapping(result.mappings, result.suite.manifest.kb_set_hash));
    log(err, "wrote suite, feedback and mapping to " + cfg.out_dir->string());

    std::size_t hunks = 0;
    for (const auto& inst : result.suite.instances) hunks += inst.hunks.size();
    out << "instances: " << result.suite.instances.size() << " (" << hunks << " hunks, "
        << result.suite.manifest.services.size() << " services)\n";
    out << "silent KBs: " << join(result.feedback.silent_kbs) << "\n";
    out << "noisy KBs: " << join(result.feedback.noisy_kbs) << "\n";
    out << "unmatched hunks:";
    for (const auto& [svc, n] : result.feedback.unmatched_hunk_count) out << " " << svc << "=" << n;
    out << "\n";
    return kExitOk;
}

int cmd_evaluate(const Overrides& o, const std::string& suite_path, const std::string& patch_path, std::ostream& out,
                 std::ostream& err) {
    const auto cfg = effective_config(o);
    if (cfg.tau < 0.0 || cfg.tau > 1.0) throw Error(ErrorCode::BadConfig, "tau must lie in [0, 1]");
    if (cfg.kb_root.empty()) throw Error(ErrorCode::BadConfig, "no KB root given (--kb-root or --config)");
    const auto suite = read_suite(text::read_file(suite_path));
    std::string service = o.service;
    if (service.empty()) {
        if (suite.manifest.services.size() != 1) {
            throw Error(ErrorCode::BadConfig, "the suite holds several services; pick one with --service");
        }
        service = suite.manifest.services.front().service_id;
    }
    const auto kbs = load_kb_set(cfg.kb_root);
    if (kbs.set_hash != suite.manifest.kb_set_hash) {
        log(err, "warning: KB set differs from the one the suite was generated with");
    }
    const PatternSynthesizer synth(synth_config(cfg));
    const auto patch = AgentPatch::parse(service, text::read_file(patch_path));
    EvalOptions options;
    options.tau = cfg.tau;
    options.match.detail = cfg.detail;
    options.match.skip_synth_failures = cfg.skip_synth_failures;
    options.match.jobs = o.jobs;
    const auto report = evaluate(patch, suite, kbs, synth, options);
    log_cache(err, synth);
    for (const auto& note : report.notes) log(err, note);
    if (cfg.out_dir) {
        const auto path = *cfg.out_dir / ("report-" + service + ".json");
        text::write_file(path, write_report(report));
        log(err, "wrote " + path.string());
    }
    out << render_report_table(report);
    return kExitOk;
}

int cmd_suite_diff(const std::string& old_path, const std::string& new_path, std::ostream& out) {
    const auto old_suite = read_suite(text::read_file(old_path));
    const auto new_suite = read_suite(text::read_file(new_path));
    const auto delta = diff_suites(old_suite, new_suite);
    out << format_delta(delta);
    return delta.empty() ? kExitOk : kExitFindings;
}

int cmd_feedback(const Overrides& o, const std::string& suite_path, const std::string& mapping_path,
                 std::ostream& out, std::ostream& err) {
    const auto cfg = effective_config(o);
    const auto suite = read_suite(text::read_file(suite_path));
    const auto mapping = read_mapping(text::read_file(mapping_path));
    if (mapping.kb_set_hash != suite.manifest.kb_set_hash) {
        throw Error(ErrorCode::SchemaViolation, "/kb_set_hash: mapping artifact belongs to a different KB set");
    }
    const auto feedback = compute_feedback(mapping.services, cfg.noisy_factor);
    if (cfg.out_dir) {
        const auto path = *cfg.out_dir / "feedback.json";
        text::write_file(path, write_feedback(feedback));
        log(err, "wrote " + path.string());
    }
    out << render_feedback_table(feedback);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Benchmark generation and evaluation for code-migration agents", "migbench"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Overrides o;
    std::string first;
    std::string second;

    auto add_config = [&](CLI::App* cmd) { cmd->add_option("--config", o.config, "JSON config file"); };
    auto add_kb_root = [&](CLI::App* cmd) { cmd->add_option("--kb-root", o.kb_root, "Directory of *.kb.md documents"); };
    auto add_out = [&](CLI::App* cmd) { cmd->add_option("--out", o.out, "Output directory"); };
    auto add_backend = [&](CLI::App* cmd) {
        cmd->add_option("--backend", o.backend, "Pattern synthesizer backend")
            ->check(CLI::IsMember({"static", "rulebook", "remote"}));
    };
    auto add_jobs = [&](CLI::App* cmd) {
        cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    };

    auto* kb = app.add_subcommand("kb", "KB document commands");
    kb->require_subcommand(1);
    auto* lint = kb->add_subcommand("lint", "Check KB documents for likely mistakes");
    add_config(lint);
    add_kb_root(lint);

    auto* gen = app.add_subcommand("generate", "Generate a benchmark suite");
    add_config(gen);
    add_kb_root(gen);
    add_out(gen);
    add_backend(gen);
    add_jobs(gen);
    gen->add_flag("--reproducible", o.reproducible, "Pin timestamps and tool version");

    auto* eval = app.add_subcommand("evaluate", "Score an agent patch against a suite");
    eval->add_option("suite", first, "Suite file")->required();
    eval->add_option("patch", second, "Agent patch (unified diff)")->required();
    eval->add_option("--service", o.service, "Service the patch belongs to");
    eval->add_option("--tau", o.tau, "Edit distance threshold")->check(CLI::Range(0.0, 1.0));
    add_config(eval);
    add_kb_root(eval);
    add_out(eval);
    add_backend(eval);
    add_jobs(eval);

    auto* suite = app.add_subcommand("suite", "Suite commands");
    suite->require_subcommand(1);
    auto* diff = suite->add_subcommand("diff", "Compare two suite files");
    diff->add_option("old", first, "Old suite file")->required();
    diff->add_option("new", second, "New suite file")->required();

    auto* fb = app.add_subcommand("feedback", "Re-emit KB feedback from a suite and mapping artifact");
    fb->add_option("suite", first, "Suite file")->required();
    fb->add_option("mapping", second, "Mapping artifact")->required();
    add_config(fb);
    add_out(fb);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (lint->parsed()) return cmd_kb_lint(o, out, err);
        if (gen->parsed()) return cmd_generate(o, out, err);
        if (eval->parsed()) return cmd_evaluate(o, first, second, out, err);
        if (diff->parsed()) return cmd_suite_diff(first, second, out);
        if (fb->parsed()) return cmd_feedback(o, first, second, out, err);
    } catch (const Error& e) {
        err << "migbench: error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "migbench: error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace migbench
