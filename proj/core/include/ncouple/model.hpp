#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ncouple/mat.hpp"

namespace ncouple {

class Rng;

enum class ArchTag : std::uint8_t { dae = 0, mss_dae = 1, sf = 2 };

std::string_view to_string(ArchTag tag) noexcept;
// Accepts "dae", "mss-dae" / "mss_dae", "sf" (case-insensitive).
std::optional<ArchTag> parse_arch(std::string_view name) noexcept;

struct Arch {
  ArchTag tag = ArchTag::dae;
  std::uint32_t hidden_layers = 0;  // L for MSS-DAE, 0 otherwise

  static Arch dae() { return {ArchTag::dae, 0}; }
  static Arch mss_dae(std::uint32_t hidden = 2) { return {ArchTag::mss_dae, hidden}; }
  static Arch sf() { return {ArchTag::sf, 0}; }
  static Arch from_tag(ArchTag tag, std::uint32_t hidden = 2);

  // Total weight layers: 2 for DAE/SF, hidden_layers + 2 for MSS-DAE.
  std::size_t layer_count() const noexcept { return hidden_layers + 2; }

  friend bool operator==(const Arch&, const Arch&) = default;
};

// One affine layer: W is N x N, b is N x 1.
struct Layer {
  Mat w;
  Mat b;
  friend bool operator==(const Layer&, const Layer&) = default;
};

// Layers ordered encoder first, decoder last.
struct ModelParams {
  Arch arch;
  std::size_t n = 0;
  std::vector<Layer> layers;

  // Throws ShapeError/ConfigError on a broken invariant.
  void validate() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct ForwardTrace {
  Mat input;                  // x~, N x T
  std::vector<Mat> pre;       // W x + b per layer
  std::vector<Mat> post;      // relu(pre) per layer
  Mat output;                 // x^ : last post for DAE/MSS-DAE, mask (.) x~ for SF
  std::optional<Mat> mask;    // SF only: last post
};

ModelParams init_params(const Arch& arch, std::size_t n, Rng& rng);

ForwardTrace forward(const ModelParams& params, const Mat& x_batch);

// Last-layer activation: the spectral estimate for DAE/MSS-DAE, the mask for SF.
const Mat& decoder_output(const ForwardTrace& trace);

// Mean over columns of (1/N) * ||x - x^||^2.
double mse(const Mat& x, const Mat& x_hat);

// dMSE/dW and dMSE/db per layer for the trace's batch.
std::vector<Layer> backward(const ModelParams& params, const ForwardTrace& trace, const Mat& x_target);

// Flat views in the order W0, b0, W1, b1, ... used by the optimiser.
std::vector<Mat*> parameter_refs(ModelParams& params);
std::vector<Mat> flatten(std::vector<Layer>&& grads);

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  std::uint32_t epochs = 0;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ncouple
