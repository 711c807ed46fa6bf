// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/process.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include "leti/error.hpp"
#include "leti/problem.hpp"

namespace leti {

namespace fs = std::filesystem;

void ExecutionLimits::validate() const {
    if (!(wall_clock_timeout > 0.0)) {
        throw ValidationError("wall_clock_timeout must be positive");
    }
    if (max_stream_capture == 0) {
        throw ValidationError("max_stream_capture must be positive");
    }
}

std::vector<std::string> default_interpreter() {
    std::vector<std::string> argv;
    if (const char* env = std::getenv("LETI_INTERPRETER"); env != nullptr && *env != '\0') {
        std::istringstream in(env);
        for (std::string word; in >> word;) {
            argv.push_back(word);
        }
    }
    if (argv.empty()) {
        argv.push_back("python3");
    }
    return argv;
}

std::string resolve_executable(const std::string& name) {
    if (name.empty()) {
        return {};
    }
    if (name.find('/') != std::string::npos) {
        return ::access(name.c_str(), X_OK) == 0 ? name : std::string{};
    }
    const char* path = std::getenv("PATH");
    std::string_view dirs = path != nullptr ? path : "/usr/local/bin:/usr/bin:/bin";
    while (!dirs.empty()) {
        auto colon = dirs.find(':');
        std::string dir(dirs.substr(0, colon));
        dirs = colon == std::string_view::npos ? std::string_view{} : dirs.substr(colon + 1);
        if (dir.empty()) {
            dir = ".";
        }
        std::string candidate = dir + "/" + name;
        struct stat st {};
        if (::stat(candidate.c_str(), &st) == 0 && S_ISREG(st.st_mode) &&
            ::access(candidate.c_str(), X_OK) == 0) {
            return candidate;
        }
    }
    return {};
}

namespace {

class TempDir {
public:
    TempDir() {
        std::string pattern = (fs::temp_directory_path() / "leti-XXXXXX").string();
        if (::mkdtemp(pattern.data()) == nullptr) {
            throw InfrastructureError(std::string("mkdtemp failed: ") + std::strerror(errno));
        }
        path_ = fs::canonical(pattern);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    ~Fd() { reset(); }
    Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Fd& operator=(Fd&& other) noexcept {
        if (this != &other) {
            reset();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }

    int get() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void reset() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
};

struct Pipe {
    Fd read;
    Fd write;
};

Pipe make_pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) {
        throw InfrastructureError(std::string("pipe2 failed: ") + std::strerror(errno));
    }
    return {Fd(fds[0]), Fd(fds[1])};
}

struct Capture {
    std::string text;
    std::size_t cap;
    bool truncated = false;

    void append(const char* data, std::size_t n) {
        if (truncated) {
            return;
        }
        std::size_t room = cap - text.size();
        if (n <= room) {
            text.append(data, n);
            return;
        }
        text.append(data, room);
        text += kTruncationMarker;
        truncated = true;
    }
};

void replace_all(std::string& text, std::string_view from, std::string_view to) {
    if (from.empty()) {
        return;
    }
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
}

// Drains whatever is readable without blocking.
void drain(Fd& fd, Capture& capture) {
    if (!fd.valid()) {
        return;
    }
    ::fcntl(fd.get(), F_SETFL, O_NONBLOCK);
    char buf[16384];
    for (;;) {
        ssize_t n = ::read(fd.get(), buf, sizeof buf);
        if (n > 0) {
            capture.append(buf, static_cast<std::size_t>(n));
            continue;
        }
        break;
    }
    fd.reset();
}

}  // namespace

ExecutionOutcome run_interpreter(const std::vector<std::string>& interpreter, std::string_view script,
                                 const ExecutionLimits& limits,
                                 const std::vector<std::string>& leading_args) {
    limits.validate();
    ExecutionOutcome outcome;

    if (interpreter.empty()) {
        outcome.exit_status = ExitStatus::spawn_failed("empty interpreter command");
        return outcome;
    }
    const std::string exe = resolve_executable(interpreter.front());
    if (exe.empty()) {
        outcome.exit_status = ExitStatus::spawn_failed("interpreter '" + interpreter.front() +
                                                       "' not found on PATH");
        return outcome;
    }

    TempDir dir;
    const fs::path script_path = dir.path() / "main.py";
    write_file(script_path, script);

    // Everything the child needs is prepared before fork: only
    // async-signal-safe calls are allowed between fork and execve.
    std::vector<std::string> args;
    args.push_back(exe);
    args.insert(args.end(), interpreter.begin() + 1, interpreter.end());
    args.insert(args.end(), leading_args.begin(), leading_args.end());
    args.push_back(script_path.string());
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    argv.push_back(nullptr);

    std::vector<std::string> env = {
        "PATH=/usr/local/bin:/usr/bin:/bin",
        "LANG=C.UTF-8",
        "LC_ALL=C.UTF-8",
        "HOME=" + dir.path().string(),
        "TMPDIR=" + dir.path().string(),
        "PYTHONHASHSEED=0",
        "PYTHONDONTWRITEBYTECODE=1",
        "PYTHONIOENCODING=utf-8",
        "PYTHONUNBUFFERED=1",
    };
    std::vector<char*> envp;
    for (auto& e : env) {
        envp.push_back(e.data());
    }
    envp.push_back(nullptr);
    const std::string workdir = dir.path().string();

    Pipe out = make_pipe();
    Pipe err = make_pipe();
    Pipe status = make_pipe();
    Fd devnull(::open("/dev/null", O_RDONLY | O_CLOEXEC));

    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) {
        outcome.exit_status = ExitStatus::spawn_failed(std::string("fork failed: ") + std::strerror(errno));
        return outcome;
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        if (::chdir(workdir.c_str()) != 0 || ::dup2(devnull.get(), 0) < 0 ||
            ::dup2(out.write.get(), 1) < 0 || ::dup2(err.write.get(), 2) < 0) {
            int e = errno;
            [[maybe_unused]] auto n = ::write(status.write.get(), &e, sizeof e);
            ::_exit(127);
        }
        ::execve(argv[0], argv.data(), envp.data());
        int e = errno;
        [[maybe_unused]] auto n = ::write(status.write.get(), &e, sizeof e);
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    out.write.reset();
    err.write.reset();
    status.write.reset();
    devnull.reset();

    int exec_errno = 0;
    ssize_t got = 0;
    do {
        got = ::read(status.read.get(), &exec_errno, sizeof exec_errno);
    } while (got < 0 && errno == EINTR);
    if (got == static_cast<ssize_t>(sizeof exec_errno)) {
        int ignored = 0;
        ::waitpid(pid, &ignored, 0);
        outcome.exit_status = ExitStatus::spawn_failed("exec '" + exe + "' failed: " + std::strerror(exec_errno));
        return outcome;
    }

    Capture out_cap{{}, limits.max_stream_capture};
    Capture err_cap{{}, limits.max_stream_capture};
    const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(limits.wall_clock_timeout));
    bool reaped = false;
    bool timed_out = false;
    int wait_status = 0;
    char buf[16384];

    while (!reaped) {
        if (::waitpid(pid, &wait_status, WNOHANG) == pid) {
            reaped = true;
            break;
        }
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &wait_status, 0);
            reaped = true;
            timed_out = true;
            break;
        }
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1;
        pollfd fds[2];
        nfds_t nfds = 0;
        Capture* caps[2];
        Fd* owners[2];
        for (auto [fd, cap] : {std::pair{&out.read, &out_cap}, std::pair{&err.read, &err_cap}}) {
            if (fd->valid()) {
                fds[nfds] = {fd->get(), POLLIN, 0};
                caps[nfds] = cap;
                owners[nfds] = fd;
                ++nfds;
            }
        }
        if (nfds == 0) {
            // Both streams closed but the child still runs: poll for exit.
            ::usleep(static_cast<useconds_t>(std::min<long long>(remaining, 5) * 1000));
            continue;
        }
        int ready = ::poll(fds, nfds, static_cast<int>(std::min<long long>(remaining, 50)));
        if (ready < 0) {
            if (errno == EINTR) {
                continue;
            }
            break;
        }
        for (nfds_t i = 0; i < nfds; ++i) {
            if ((fds[i].revents & (POLLIN | POLLHUP | POLLERR)) == 0) {
                continue;
            }
            ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
            if (n > 0) {
                caps[i]->append(buf, static_cast<std::size_t>(n));
            } else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN)) {
                owners[i]->reset();
            }
        }
    }
    // Stray grandchildren share the process group; they must not outlive the run.
    ::kill(-pid, SIGKILL);
    drain(out.read, out_cap);
    drain(err.read, err_cap);
    outcome.duration =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (timed_out) {
        outcome.exit_status = ExitStatus::timed_out();
    } else if (WIFEXITED(wait_status)) {
        outcome.exit_status = ExitStatus::normal(WEXITSTATUS(wait_status));
    } else if (WIFSIGNALED(wait_status)) {
        outcome.exit_status = ExitStatus::normal(128 + WTERMSIG(wait_status));
    } else {
        outcome.exit_status = ExitStatus::normal(1);
    }

    outcome.stdout_text = std::move(out_cap.text);
    outcome.stderr_text = std::move(err_cap.text);
    const std::string dir_str = dir.path().string();
    for (std::string* s : {&outcome.stdout_text, &outcome.stderr_text}) {
        replace_all(*s, dir_str, kSourcePathToken);
    }
    return outcome;
}

}  // namespace leti
