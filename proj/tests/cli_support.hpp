#pragma once

#include "support.hpp"

#include <chrono>
#include <csignal>
#include <fcntl.h>
#include <cstdlib>
#include <spawn.h>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

extern char** environ;

namespace multimind::test {

inline const std::string cli_path{MULTIMIND_CLI_PATH};

struct CliRun {
    int exit_code = -1;
    std::string out;
    std::string err;
};

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

// Runs the multimind binary with args, feeding stdin_text, and captures output.
inline CliRun run_cli(const std::vector<std::string>& args, const std::string& stdin_text = {}) {
    TempDir io;
    write_file(io / "stdin", stdin_text);
    std::string cmd = shell_quote(cli_path);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " <" + shell_quote((io / "stdin").string()) + " >" + shell_quote((io / "stdout").string()) +
           " 2>" + shell_quote((io / "stderr").string());
    const int status = std::system(cmd.c_str());
    CliRun run;
    run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    run.out = read_file(io / "stdout");
    run.err = read_file(io / "stderr");
    return run;
}

// `multimind serve` on an ephemeral port, stopped with SIGTERM on destruction.
class Daemon {
public:
    explicit Daemon(const std::filesystem::path& config) {
        const auto log = (dir_ / "serve.log").string();
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_addopen(&actions, 2, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
        std::vector<std::string> args{cli_path, "--config", config.string(), "serve", "--port", "0"};
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        if (posix_spawn(&pid_, cli_path.c_str(), &actions, nullptr, argv.data(), environ) != 0) {
            pid_ = -1;
        }
        posix_spawn_file_actions_destroy(&actions);

        const std::string marker = "listening on 127.0.0.1:";
        for (int i = 0; i < 200 && pid_ > 0; ++i) {
            const auto text = read_file(log);
            if (auto at = text.find(marker); at != std::string::npos && text.find('\n', at) != std::string::npos) {
                port_ = std::stoi(text.substr(at + marker.size()));
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(25));
        }
    }

    ~Daemon() {
        if (pid_ <= 0) return;
        kill(pid_, SIGTERM);
        int status = 0;
        waitpid(pid_, &status, 0);
    }

    Daemon(const Daemon&) = delete;
    Daemon& operator=(const Daemon&) = delete;

    bool ready() const { return port_ > 0; }
    int port() const { return port_; }
    std::string address() const { return "127.0.0.1:" + std::to_string(port_); }

    // Waits for the process to exit after SIGTERM; returns its exit code.
    int terminate() {
        if (pid_ <= 0) return -1;
        kill(pid_, SIGTERM);
        int status = 0;
        waitpid(pid_, &status, 0);
        pid_ = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

private:
    TempDir dir_;
    pid_t pid_ = -1;
    int port_ = 0;
};

} // namespace multimind::test
