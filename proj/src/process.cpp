#include "regraph/process.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace regraph {

namespace {

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

struct Pipe {
    int fds[2] = {-1, -1};
    bool open() { return ::pipe(fds) == 0; }
    void close_read() {
        if (fds[0] >= 0) ::close(fds[0]);
        fds[0] = -1;
    }
    void close_write() {
        if (fds[1] >= 0) ::close(fds[1]);
        fds[1] = -1;
    }
    ~Pipe() {
        close_read();
        close_write();
    }
};

void set_nonblocking(int fd) {
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

RunResult run_process(const RunSpec& spec) {
    ignore_sigpipe_once();
    RunResult result;
    if (spec.argv.empty()) throw std::runtime_error("run_process: empty argv");

    Pipe in, out, err;
    if (!in.open() || !out.open() || !err.open())
        throw std::runtime_error(std::string("pipe failed: ") + std::strerror(errno));

    auto start = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) throw std::runtime_error(std::string("fork failed: ") + std::strerror(errno));

    if (pid == 0) {
        // Child: own process group so a timeout can kill compiler subtrees too.
        ::setpgid(0, 0);
        ::dup2(in.fds[0], STDIN_FILENO);
        ::dup2(out.fds[1], STDOUT_FILENO);
        ::dup2(err.fds[1], STDERR_FILENO);
        for (int fd = 3; fd < 256; ++fd) ::close(fd);
        if (!spec.cwd.empty() && ::chdir(spec.cwd.c_str()) != 0) ::_exit(127);
        std::vector<char*> argv;
        argv.reserve(spec.argv.size() + 1);
        for (const std::string& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        ::execvp(argv[0], argv.data());
        ::_exit(127);
    }

    in.close_read();
    out.close_write();
    err.close_write();
    set_nonblocking(in.fds[1]);
    set_nonblocking(out.fds[0]);
    set_nonblocking(err.fds[0]);

    std::size_t written = 0;
    bool stdin_open = true;
    if (spec.stdin_data.empty()) {
        in.close_write();
        stdin_open = false;
    }

    auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(spec.timeout_s));
    bool out_open = true, err_open = true;

    while (out_open || err_open || stdin_open) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            ::kill(-pid, SIGKILL);
            break;
        }
        struct pollfd fds[3];
        nfds_t n = 0;
        int idx_out = -1, idx_err = -1, idx_in = -1;
        if (out_open) {
            fds[n] = {out.fds[0], POLLIN, 0};
            idx_out = static_cast<int>(n++);
        }
        if (err_open) {
            fds[n] = {err.fds[0], POLLIN, 0};
            idx_err = static_cast<int>(n++);
        }
        if (stdin_open) {
            fds[n] = {in.fds[1], POLLOUT, 0};
            idx_in = static_cast<int>(n++);
        }
        auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        int rc = ::poll(fds, n, static_cast<int>(std::min<long long>(remaining + 1, 1000)));
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }

        char buf[16384];
        if (idx_out >= 0 && (fds[idx_out].revents & (POLLIN | POLLHUP))) {
            ssize_t got = ::read(out.fds[0], buf, sizeof(buf));
            if (got > 0)
                result.out.append(buf, static_cast<std::size_t>(got));
            else if (got == 0 || (got < 0 && errno != EAGAIN))
                out_open = false;
        }
        if (idx_err >= 0 && (fds[idx_err].revents & (POLLIN | POLLHUP))) {
            ssize_t got = ::read(err.fds[0], buf, sizeof(buf));
            if (got > 0)
                result.err.append(buf, static_cast<std::size_t>(got));
            else if (got == 0 || (got < 0 && errno != EAGAIN))
                err_open = false;
        }
        if (idx_in >= 0 && (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
            if (fds[idx_in].revents & (POLLERR | POLLHUP)) {
                in.close_write();
                stdin_open = false;
            } else {
                ssize_t put = ::write(in.fds[1], spec.stdin_data.data() + written,
                                      spec.stdin_data.size() - written);
                if (put > 0) written += static_cast<std::size_t>(put);
                if (put < 0 && errno != EAGAIN) {
                    in.close_write();
                    stdin_open = false;
                } else if (written == spec.stdin_data.size()) {
                    in.close_write();
                    stdin_open = false;
                }
            }
        }
    }

    // Reap under the same deadline: a child that closed its stdio but keeps
    // running must not hang the harness.
    int status = 0;
    for (;;) {
        pid_t done = ::waitpid(pid, &status, result.timed_out ? 0 : WNOHANG);
        if (done == pid || done < 0) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            result.timed_out = true;
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            break;
        }
        ::usleep(2000);
    }
    result.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (result.timed_out) {
        result.exit_code = -1;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
        if (result.exit_code == 127 && result.out.empty() && result.err.empty())
            result.spawn_failed = true;
    } else {
        result.exit_code = -1;
    }
    return result;
}

}  // namespace regraph
