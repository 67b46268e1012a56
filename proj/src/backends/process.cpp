#include "process.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>

extern char** environ;

namespace gpc::backends::detail {

pid_t spawn(const std::filesystem::path& exe, const std::vector<std::string>& args, const std::string& what,
            const std::filesystem::path& stdout_path, const std::filesystem::path& stderr_path)
{
    std::string exe_s = exe.string();
    std::vector<char*> argv;
    argv.push_back(exe_s.data());
    std::vector<std::string> copy = args;
    for (auto& a : copy)
        argv.push_back(a.data());
    argv.push_back(nullptr);

    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    std::string out_s = stdout_path.string();
    std::string err_s = stderr_path.string();
    if (!out_s.empty())
        posix_spawn_file_actions_addopen(&fa, 1, out_s.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (!err_s.empty())
        posix_spawn_file_actions_addopen(&fa, 2, err_s.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);

    pid_t pid = 0;
    int rc = posix_spawn(&pid, exe_s.c_str(), &fa, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    if (rc != 0)
        throw std::runtime_error("cannot spawn " + what + " (" + exe_s + "): " + std::strerror(rc));
    return pid;
}

std::optional<int> try_reap(pid_t pid)
{
    if (pid <= 0)
        return -1; // waitpid would match any child
    int st = 0;
    pid_t r = waitpid(pid, &st, WNOHANG);
    if (r == 0)
        return std::nullopt;
    if (r < 0)
        return -1; // not our child any more
    if (WIFEXITED(st))
        return WEXITSTATUS(st);
    if (WIFSIGNALED(st))
        return 128 + WTERMSIG(st);
    return -1;
}

std::optional<int> wait_exit(pid_t pid, std::chrono::milliseconds timeout)
{
    auto deadline = std::chrono::steady_clock::now() + timeout;
    auto nap = std::chrono::microseconds(50);
    while (true) {
        if (auto s = try_reap(pid))
            return s;
        if (std::chrono::steady_clock::now() >= deadline)
            return std::nullopt;
        std::this_thread::sleep_for(nap);
        nap = std::min<std::chrono::microseconds>(nap * 2, std::chrono::milliseconds(10));
    }
}

void kill_and_reap(pid_t pid)
{
    if (pid <= 0)
        return;
    ::kill(pid, SIGKILL);
    int st = 0;
    while (waitpid(pid, &st, 0) < 0 && errno == EINTR) {
    }
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace gpc::backends::detail
