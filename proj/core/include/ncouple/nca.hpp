#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ncouple/adam.hpp"
#include "ncouple/mat.hpp"
#include "ncouple/model.hpp"

namespace ncouple {

// Neural couplings: approximate a trained model's mapping as one N x N
// matrix C, either by direct L1 regression on the model's input/output pairs
// (student) or by learning non-negative gates over each layer's weights and
// composing the gated layers (compositional).

enum class Strategy : std::uint8_t { student = 0, compositional = 1 };

std::string_view to_string(Strategy s) noexcept;
std::optional<Strategy> parse_strategy(std::string_view name) noexcept;

struct NcaConfig {
  Strategy strategy = Strategy::student;
  std::uint32_t iterations = 600;
  double lr = 4e-4;
  std::uint32_t batch_frames = 350;  // T
  std::uint64_t seed = 0;

  void validate() const;
};

// Model inputs and the model's last hierarchical output: the spectral
// estimate for DAE/MSS-DAE and the mask (not mask (.) input) for SF.
struct TargetBatch {
  Mat mixture;  // N x T
  Mat target;   // N x T
};

TargetBatch make_target(const ModelParams& params, const Mat& mixture);

// sum |Y - C X|
double l1_loss(const Mat& couplings, const TargetBatch& batch);
// sgn(C X - Y) X^T
Mat student_grad(const Mat& couplings, const TargetBatch& batch);

struct Gate {
  Mat pre;   // P (W + b)^T with the bias indexed by column
  Mat gate;  // relu(pre)
};
Gate compute_gate(const Mat& projection, const Mat& w, const Mat& b);

// (G_L (.) W_L) ... (G_1 (.) W_1), encoder applied first.
Mat compose(const ModelParams& params, std::span<const Mat> gates);

struct NcaState {
  Strategy strategy = Strategy::student;
  Mat couplings;                 // C
  std::vector<Mat> projections;  // P_l, compositional only
  std::vector<Gate> gates;       // derived from projections
  AdamState adam;
  std::vector<double> loss_history;  // E before each update
};

// Algorithm initialisation: C (student) or every P_l (compositional) drawn
// from N(0, 1/N) in layer order, then gates and C rebuilt.
NcaState init_nca_state(const ModelParams& params, const NcaConfig& cfg);

// Rebuilds gates and C from the current projections.
void rebuild_couplings(NcaState& state, const ModelParams& params);

// dE/dP_l for every layer, E = l1_loss(C, batch).
std::vector<Mat> compositional_grads(const NcaState& state, const ModelParams& params, const TargetBatch& batch);

// One iteration: record E, take an Adam step on the unknowns, rebuild C.
void nca_step(NcaState& state, const ModelParams& params, const TargetBatch& batch);

struct NcaResult {
  Mat couplings;                     // C after the final update
  std::vector<double> loss_history;  // one entry per iteration
  double final_loss = 0.0;           // E of the returned C
};

NcaResult run_nca(const ModelParams& params, const Mat& mixture, const NcaConfig& cfg);
NcaResult run_nca(const ModelParams& params, const TargetBatch& batch, const NcaConfig& cfg);

// Couplings file payload.
struct CouplingsFile {
  Mat couplings;
  std::string strategy;
  std::string arch;
  std::string checkpoint_hash;
  std::string segment_id;
  double final_loss = 0.0;
  std::uint32_t iterations = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const CouplingsFile&, const CouplingsFile&) = default;
};

inline constexpr std::uint32_t kCouplingsVersion = 1;
std::vector<std::uint8_t> encode_couplings(const CouplingsFile& file);
CouplingsFile decode_couplings(std::span<const std::uint8_t> bytes);
void save_couplings(const CouplingsFile& file, const std::filesystem::path& path);
CouplingsFile load_couplings(const std::filesystem::path& path);

}  // namespace ncouple
