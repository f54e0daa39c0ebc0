#include "migbench/service.hpp"

#include "migbench/error.hpp"
#include "migbench/text.hpp"

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <optional>
#include <set>

extern char** environ;

namespace migbench {

namespace {

std::string substitute(std::string arg, const std::map<std::string, std::string>& vars) {
    for (const auto& [key, value] : vars) {
        const std::string token = "{" + key + "}";
        for (auto pos = arg.find(token); pos != std::string::npos; pos = arg.find(token, pos + value.size())) {
            arg.replace(pos, token.size(), value);
        }
    }
    return arg;
}

std::vector<std::string> build_argv(const std::string& program, const std::vector<std::string>& args,
                                    const std::map<std::string, std::string>& vars) {
    std::vector<std::string> argv{program};
    for (const auto& a : args) argv.push_back(substitute(a, vars));
    return argv;
}

// "0001-abc123.patch" -> "abc123"
std::optional<std::string> commit_id_from_filename(const std::string& name) {
    if (!text::ends_with(name, ".patch")) return std::nullopt;
    const auto dash = name.find('-');
    if (dash == std::string::npos || dash == 0) return std::nullopt;
    if (!std::all_of(name.begin(), name.begin() + static_cast<std::ptrdiff_t>(dash),
                     [](char c) { return c >= '0' && c <= '9'; })) {
        return std::nullopt;
    }
    auto id = name.substr(dash + 1, name.size() - dash - 1 - std::string_view(".patch").size());
    if (id.empty()) return std::nullopt;
    return id;
}

std::string excerpt(std::string_view s) {
    s = text::trim(s);
    return std::string(s.substr(0, 200));
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv) {
    if (argv.empty()) throw Error(ErrorCode::SubprocessFailed, "empty command");
    std::array<int, 2> out_pipe{};
    std::array<int, 2> err_pipe{};
    if (pipe(out_pipe.data()) != 0 || pipe(err_pipe.data()) != 0) {
        throw Error(ErrorCode::SubprocessFailed, std::string("pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, err_pipe[1], STDERR_FILENO);
    posix_spawn_file_actions_addclose(&actions, out_pipe[0]);
    posix_spawn_file_actions_addclose(&actions, err_pipe[0]);

    std::vector<char*> cargv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, cargv[0], &actions, nullptr, cargv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(out_pipe[1]);
    close(err_pipe[1]);
    if (rc != 0) {
        close(out_pipe[0]);
        close(err_pipe[0]);
        throw Error(ErrorCode::SubprocessFailed, "cannot start '" + argv[0] + "': " + std::strerror(rc));
    }

    ProcessResult result;
    std::array<pollfd, 2> fds{{{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}}};
    std::array<std::string*, 2> sinks{&result.out, &result.err};
    int open_fds = 2;
    std::array<char, 65536> buf{};
    while (open_fds > 0) {
        if (poll(fds.data(), fds.size(), -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (std::size_t k = 0; k < fds.size(); ++k) {
            if (fds[k].fd < 0 || (fds[k].revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
            const ssize_t n = read(fds[k].fd, buf.data(), buf.size());
            if (n > 0) {
                sinks[k]->append(buf.data(), static_cast<std::size_t>(n));
            } else if (n == 0 || errno != EINTR) {
                close(fds[k].fd);
                fds[k].fd = -1;
                --open_fds;
            }
        }
    }
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::vector<CommitDiff> load_service_commits(const ServiceRecord& record, const VcsTool& tool) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::exists(record.source, ec)) {
        throw Error(ErrorCode::UnreadableSource, "service '" + record.service_id + "': " + record.source.string() +
                                                     " does not exist");
    }
    std::vector<CommitDiff> commits;
    if (record.mode == SourceMode::PatchDirectory) {
        if (!fs::is_directory(record.source, ec)) {
            throw Error(ErrorCode::UnreadableSource, record.source.string() + " is not a directory");
        }
        std::vector<std::pair<std::string, std::string>> files;  // filename, commit id
        for (const auto& entry : fs::directory_iterator(record.source)) {
            if (!entry.is_regular_file()) continue;
            const auto name = entry.path().filename().string();
            if (auto id = commit_id_from_filename(name)) files.emplace_back(name, *id);
        }
        std::sort(files.begin(), files.end());
        const std::set<std::string> wanted(record.migration_commits.begin(), record.migration_commits.end());
        std::set<std::string> found;
        std::string parent = record.pre_ref;
        for (const auto& [name, id] : files) {
            if (wanted.count(id) == 0) continue;
            found.insert(id);
            const auto path = record.source / name;
            try {
                commits.push_back(parse_commit_patch(text::read_file(path), id, parent));
            } catch (const Error& e) {
                throw e.annotated(path.string());
            }
            parent = id;
        }
        for (const auto& id : record.migration_commits) {
            if (found.count(id) == 0) {
                throw Error(ErrorCode::MissingCommit, "service '" + record.service_id + "': no patch file for " + id);
            }
        }
        return commits;
    }

    for (const auto& id : record.migration_commits) {
        const auto argv = build_argv(tool.program, tool.show_args,
                                     {{"source", record.source.string()},
                                      {"commit", id},
                                      {"ref", id},
                                      {"context", std::to_string(tool.context)}});
        const auto res = run_process(argv);
        if (res.exit_code != 0) {
            throw Error(ErrorCode::MissingCommit, "service '" + record.service_id + "': " + id + " (" + tool.program +
                                                      " exited " + std::to_string(res.exit_code) + ": " +
                                                      excerpt(res.err) + ")");
        }
        try {
            commits.push_back(parse_commit_patch(res.out, id));
        } catch (const Error& e) {
            throw e.annotated("service '" + record.service_id + "' commit " + id);
        }
    }
    return commits;
}

std::map<std::string, std::string> snapshot_manifest(const ServiceRecord& record, const VcsTool& tool) {
    std::map<std::string, std::string> manifest;
    if (record.mode != SourceMode::VersionControl || tool.snapshot_args.empty()) return manifest;
    const auto argv = build_argv(tool.program, tool.snapshot_args,
                                 {{"source", record.source.string()},
                                  {"ref", record.pre_ref},
                                  {"commit", record.pre_ref},
                                  {"context", std::to_string(tool.context)}});
    const auto res = run_process(argv);
    if (res.exit_code != 0) {
        throw Error(ErrorCode::MissingCommit, "service '" + record.service_id + "': pre-migration ref " +
                                                  record.pre_ref + " (" + excerpt(res.err) + ")");
    }
    // "<mode> <type> <digest>\t<path>"
    for (const auto& line : text::split_lines(res.out)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) continue;
        const std::string_view meta = text::trim(std::string_view(line).substr(0, tab));
        const auto space = meta.rfind(' ');
        manifest[line.substr(tab + 1)] = std::string(space == std::string_view::npos ? meta : meta.substr(space + 1));
    }
    return manifest;
}

}  // namespace migbench
