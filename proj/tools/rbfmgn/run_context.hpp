#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rbfmgn/config.hpp"

namespace rbfmgn::cli {

enum class LogLevel { Error, Info, Debug };

/// RBFMGN_LOG={error|info|debug}; unset means info.
LogLevel log_level_from_env();

struct Options {
  std::string config_path;
  std::string out_dir = "rbfmgn_out";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool dump_system = false;
  std::string checkpoint;
};

/// One command invocation: the loaded config, logging, and the manifest of
/// artifacts it writes under the output directory.
class RunContext {
 public:
  RunContext(std::string command, Options options);

  const RunConfig& config() const { return config_; }
  const Options& options() const { return options_; }
  const std::string& command() const { return command_; }

  void error(const std::string& msg) const;
  void info(const std::string& msg) const;
  void debug(const std::string& msg) const;

  std::string path(const std::string& name) const;
  /// Writes out_dir/name and records it as an artifact.
  void write(const std::string& name, std::string_view contents);

  /// Merges this command's entry into out_dir/manifest.json.
  void finish(const std::string& status);

 private:
  std::string command_;
  Options options_;
  RunConfig config_;
  std::string config_hash_;
  std::string started_at_;
  std::vector<std::string> artifacts_;
  LogLevel level_;
};

}  // namespace rbfmgn::cli
