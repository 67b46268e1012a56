#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <sys/types.h>

namespace gpc::backends::detail {

/// posix_spawn wrapper. Optional paths redirect stdout / stderr. Throws
/// std::runtime_error naming `what` when the spawn fails.
pid_t spawn(const std::filesystem::path& exe, const std::vector<std::string>& args, const std::string& what,
            const std::filesystem::path& stdout_path = {}, const std::filesystem::path& stderr_path = {});

/// Exit status if the child has terminated (reaping it), else nullopt.
/// Signals map to 128 + signo.
std::optional<int> try_reap(pid_t pid);

/// Polls until the child exits or the timeout passes.
std::optional<int> wait_exit(pid_t pid, std::chrono::milliseconds timeout);

/// SIGKILL plus a blocking reap.
void kill_and_reap(pid_t pid);

std::string read_file(const std::filesystem::path& p);

} // namespace gpc::backends::detail
