#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ncouple::cli {

// Record of one command invocation, written next to its outputs.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  nlohmann::json& config() { return config_; }
  void set_flags(std::string flags) { flags_ = std::move(flags); }

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  // Starts a named stage; the previous one (if any) is closed.
  void stage(const std::string& name);

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path);

 private:
  using Clock = std::chrono::steady_clock;
  struct FileEntry {
    std::string path;
    std::string sha256;
  };
  struct StageTime {
    std::string name;
    double seconds = 0.0;
  };

  void close_stage();

  std::string command_;
  std::vector<std::string> argv_;
  std::string flags_;
  nlohmann::json config_ = nlohmann::json::object();
  std::vector<FileEntry> inputs_;
  std::vector<FileEntry> outputs_;
  std::vector<StageTime> stages_;
  Clock::time_point stage_start_;
  bool stage_open_ = false;
};

}  // namespace ncouple::cli
