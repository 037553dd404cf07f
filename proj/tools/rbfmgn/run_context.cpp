#include "run_context.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>

#include "json.hpp"
#include "rbfmgn/error.hpp"
#include "rbfmgn/serialize.hpp"

namespace rbfmgn::cli {

namespace {

// SOURCE_DATE_EPOCH pins timestamps so reruns stay byte-identical.
std::string timestamp() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

LogLevel log_level_from_env() {
  const char* v = std::getenv("RBFMGN_LOG");
  if (v == nullptr || *v == '\0') return LogLevel::Info;
  const std::string s(v);
  if (s == "error") return LogLevel::Error;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  fail(ErrorKind::Config, "RBFMGN_LOG must be error, info or debug (got '" + s + "')");
}

RunContext::RunContext(std::string command, Options options)
    : command_(std::move(command)), options_(std::move(options)), level_(log_level_from_env()) {
  started_at_ = timestamp();
  if (options_.jobs < 1) fail(ErrorKind::Config, "--jobs must be >= 1");
  std::string text;
  try {
    text = read_file(options_.config_path);
  } catch (const Error&) {
    fail(ErrorKind::Config, "cannot read config file '" + options_.config_path + "'");
  }
  config_hash_ = hex64(fnv1a(text));
  config_ = parse_config(text);
  if (options_.seed) {
    config_.seed = *options_.seed;
    config_.train.seed = *options_.seed;
  }
  debug("config " + options_.config_path + " hash " + config_hash_ + " seed " + std::to_string(config_.seed));
}

void RunContext::error(const std::string& msg) const { std::cerr << "rbfmgn " << command_ << ": error: " << msg << '\n'; }

void RunContext::info(const std::string& msg) const {
  if (level_ != LogLevel::Error) std::cerr << "rbfmgn " << command_ << ": " << msg << '\n';
}

void RunContext::debug(const std::string& msg) const {
  if (level_ == LogLevel::Debug) std::cerr << "rbfmgn " << command_ << ": [debug] " << msg << '\n';
}

std::string RunContext::path(const std::string& name) const {
  return (std::filesystem::path(options_.out_dir) / name).string();
}

void RunContext::write(const std::string& name, std::string_view contents) {
  write_file(path(name), contents);
  if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) artifacts_.push_back(name);
  debug("wrote " + path(name));
}

void RunContext::finish(const std::string& status) {
  using nlohmann::json;
  const std::string manifest_path = path("manifest.json");
  json manifest = json::object();
  if (std::filesystem::exists(manifest_path)) {
    try {
      manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception&) {
      manifest = json::object();
    }
    if (!manifest.is_object()) manifest = json::object();
  }
  std::vector<std::string> artifacts = artifacts_;
  std::sort(artifacts.begin(), artifacts.end());
  manifest["commands"][command_] = {
      {"config", options_.config_path},
      {"config_hash", config_hash_},
      {"seed", config_.seed},
      {"started_at", started_at_},
      {"finished_at", timestamp()},
      {"status", status},
      {"artifacts", artifacts},
  };
  write_file(manifest_path, manifest.dump(2) + "\n");
}

}  // namespace rbfmgn::cli
