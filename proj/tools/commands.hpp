#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "manifest.hpp"

namespace ncouple::cli {

namespace fs = std::filesystem;

struct SynthOptions {
  fs::path out;
  std::size_t bins = 64;
  std::size_t frames = 4000;
  std::size_t tracks = 4;
  std::uint64_t seed = 0;
  std::optional<fs::path> scaler_from;
};

struct IngestOptions {
  fs::path input;
  fs::path out;
  std::uint32_t fft = 4096;
  std::uint32_t hop = 384;
  std::uint32_t window = 2048;
  std::uint32_t sr = 44100;
  std::optional<fs::path> scaler_from;
};

struct TrainOptions {
  std::string model;
  fs::path dataset;
  std::vector<std::uint64_t> seeds{0};
  fs::path out;
  std::uint32_t hidden = 2;
  std::size_t batch = 128;
  double lr = 1e-3;
  std::uint32_t max_epochs = 200;
};

struct NcaOptions {
  fs::path checkpoint;
  fs::path dataset;
  std::string strategy = "student";
  std::string segment = "all";  // index, "all" or "active"
  std::uint32_t iters = 600;
  double lr = 4e-4;
  std::uint32_t frames = 350;
  std::uint64_t seed = 0;
  fs::path out;
};

struct AnalyzeOptions {
  std::string couplings;  // glob pattern
  fs::path checkpoints;
  fs::path dataset;
  fs::path out;  // report prefix; .json and .csv are appended
};

struct HeatmapOptions {
  fs::path couplings;
  std::string zoom;  // "a:b", empty for the full matrix
  bool row_normalize = false;
  fs::path out;
};

// Each command writes its outputs and a manifest, returning the manifest path.
fs::path run_synth(const SynthOptions& opt, RunManifest& manifest);
fs::path run_ingest(const IngestOptions& opt, RunManifest& manifest);
fs::path run_train(const TrainOptions& opt, RunManifest& manifest);
fs::path run_nca(const NcaOptions& opt, RunManifest& manifest);
fs::path run_analyze(const AnalyzeOptions& opt, RunManifest& manifest);
fs::path run_heatmap(const HeatmapOptions& opt, RunManifest& manifest);

// Segment ids carry the pair index and frame range so analysis can recover
// the exact columns: "seg<k>/pair<p>/<begin>-<end>" or "active/pair<p>/...".
struct SegmentId {
  std::string label;
  std::size_t pair = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};
std::string format_segment_id(const std::string& label, std::size_t pair, std::size_t begin, std::size_t end);
SegmentId parse_segment_id(const std::string& id);

}  // namespace ncouple::cli
