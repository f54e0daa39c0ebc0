#pragma once

#include "migbench/diff.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace migbench {

enum class SourceMode { PatchDirectory, VersionControl };

/// External version-control tool. Argument templates substitute `{source}`,
/// `{commit}`, `{ref}` and `{context}`.
struct VcsTool {
    std::string program = "git";
    std::vector<std::string> show_args = {
        "-C", "{source}", "show", "--no-color", "--no-ext-diff", "-U{context}",
        "--format=From %H%nParent: %P%nSubject: %s%n%n%b%n---", "{commit}"};
    std::vector<std::string> snapshot_args = {"-C", "{source}", "ls-tree", "-r", "{ref}"};
    std::size_t context = 3;
};

struct ServiceRecord {
    std::string service_id;
    std::filesystem::path source;
    SourceMode mode = SourceMode::PatchDirectory;
    std::string pre_ref;
    std::vector<std::string> migration_commits;
};

/// Patch-directory mode reads `NNNN-<commitid>.patch` files in lexical order,
/// restricted to the listed migration commits. Version-control mode runs the
/// tool once per listed commit, in the listed order.
std::vector<CommitDiff> load_service_commits(const ServiceRecord& record, const VcsTool& tool = {});

/// Path -> content digest of the pre-migration tree (version-control mode only).
std::map<std::string, std::string> snapshot_manifest(const ServiceRecord& record, const VcsTool& tool = {});

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs `argv` without a shell and captures both output streams.
ProcessResult run_process(const std::vector<std::string>& argv);

}  // namespace migbench
