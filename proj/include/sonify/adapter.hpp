#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sonify {

enum class AdapterKind { kCaptioner, kAudioGenerator, kEncoder };

std::string_view adapter_kind_name(AdapterKind kind);

/// An external model wrapped as a shell command. The command template must
/// contain `{input}` and `{output}`; `{variants}` is optional. Substituted
/// paths are single-quoted.
struct AdapterSpec {
  AdapterKind kind = AdapterKind::kCaptioner;
  std::string command;
  int variants = 1;
  double timeout_seconds = 60.0;
};

void validate(const AdapterSpec& spec);

std::string expand_command(const AdapterSpec& spec, const std::filesystem::path& input,
                           const std::filesystem::path& output);

/// Runs the adapter through /bin/sh with stdout and stderr captured in
/// `log_path`. Throws AdapterFailure on a nonzero exit, a signal or a timeout;
/// the message names the stage and includes the tail of the log.
void run_adapter(const AdapterSpec& spec, const std::filesystem::path& input,
                 const std::filesystem::path& output, const std::filesystem::path& log_path);

}  // namespace sonify
