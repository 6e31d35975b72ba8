#include "manifest.hpp"

#include "ncouple/binio.hpp"
#include "ncouple/hash.hpp"

#ifndef NCOUPLE_VERSION
#define NCOUPLE_VERSION "0.0.0"
#endif

namespace ncouple::cli {

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back({path.string(), sha256_file(path)});
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs_.push_back({path.string(), sha256_file(path)});
}

void RunManifest::close_stage() {
  if (!stage_open_) return;
  stages_.back().seconds = std::chrono::duration<double>(Clock::now() - stage_start_).count();
  stage_open_ = false;
}

void RunManifest::stage(const std::string& name) {
  close_stage();
  stages_.push_back({name, 0.0});
  stage_start_ = Clock::now();
  stage_open_ = true;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "ncouple";
  j["version"] = NCOUPLE_VERSION;
  j["command"] = command_;
  j["argv"] = argv_;
  j["flags"] = flags_;
  j["config"] = config_;
  auto files = [](const std::vector<FileEntry>& entries) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) arr.push_back({{"path", e.path}, {"sha256", e.sha256}});
    return arr;
  };
  j["inputs"] = files(inputs_);
  j["outputs"] = files(outputs_);
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& s : stages_) timings.push_back({{"stage", s.name}, {"wall_clock_s", s.seconds}});
  j["timings"] = timings;
  return j;
}

void RunManifest::write(const std::filesystem::path& path) {
  close_stage();
  write_text_atomic(path, to_json().dump(2) + "\n");
}

}  // namespace ncouple::cli
