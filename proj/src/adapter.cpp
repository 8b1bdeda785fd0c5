#include "sonify/adapter.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "sonify/error.hpp"

namespace sonify {
namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string log_tail(const std::filesystem::path& log_path, std::size_t max_bytes = 2048) {
  std::ifstream in(log_path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  auto text = ss.str();
  if (text.size() > max_bytes) text = "..." + text.substr(text.size() - max_bytes);
  return text;
}

}  // namespace

std::string_view adapter_kind_name(AdapterKind kind) {
  switch (kind) {
    case AdapterKind::kCaptioner: return "captioner";
    case AdapterKind::kAudioGenerator: return "audio_generator";
    case AdapterKind::kEncoder: return "encoder";
  }
  return "adapter";
}

void validate(const AdapterSpec& spec) {
  const auto stage = std::string(adapter_kind_name(spec.kind));
  if (spec.variants < 1) throw Error(ErrorCode::kInvalidConfig, stage + ": variants must be >= 1");
  if (spec.command.find("{input}") == std::string::npos ||
      spec.command.find("{output}") == std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig,
                stage + ": command must contain {input} and {output} placeholders");
  }
  if (!(spec.timeout_seconds > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, stage + ": timeout must be positive");
  }
}

std::string expand_command(const AdapterSpec& spec, const std::filesystem::path& input,
                           const std::filesystem::path& output) {
  std::string cmd = spec.command;
  replace_all(cmd, "{input}", shell_quote(input.string()));
  replace_all(cmd, "{output}", shell_quote(output.string()));
  replace_all(cmd, "{variants}", std::to_string(spec.variants));
  return cmd;
}

void run_adapter(const AdapterSpec& spec, const std::filesystem::path& input,
                 const std::filesystem::path& output, const std::filesystem::path& log_path) {
  validate(spec);
  const auto stage = std::string(adapter_kind_name(spec.kind));
  const auto cmd = expand_command(spec, input, output);
  const auto log = log_path.string();

  const pid_t pid = fork();
  if (pid < 0) throw Error(ErrorCode::kAdapterFailure, stage + ": fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    const int fd = open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int devnull = open("/dev/null", O_RDONLY);
    if (fd >= 0) {
      dup2(fd, STDOUT_FILENO);
      dup2(fd, STDERR_FILENO);
    }
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(spec.timeout_seconds));
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) {
      throw Error(ErrorCode::kAdapterFailure, stage + ": waitpid failed");
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      std::ostringstream msg;
      msg << stage << ": timed out after " << spec.timeout_seconds << " s running `" << cmd
          << "`\n"
          << log_tail(log_path);
      throw Error(ErrorCode::kAdapterFailure, msg.str());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  if (WIFEXITED(status) && WEXITSTATUS(status) == 0) return;
  std::ostringstream msg;
  msg << stage << ": ";
  if (WIFEXITED(status)) {
    msg << "exit code " << WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    msg << "killed by signal " << WTERMSIG(status);
  }
  msg << " running `" << cmd << "`\n" << log_tail(log_path);
  throw Error(ErrorCode::kAdapterFailure, msg.str());
}

}  // namespace sonify
