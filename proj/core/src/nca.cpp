#include "ncouple/nca.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ncouple/binio.hpp"
#include "ncouple/error.hpp"
#include "ncouple/rng.hpp"

namespace ncouple {

std::string_view to_string(Strategy s) noexcept {
  return s == Strategy::student ? "student" : "compositional";
}

std::optional<Strategy> parse_strategy(std::string_view name) noexcept {
  if (name == "student") return Strategy::student;
  if (name == "compositional") return Strategy::compositional;
  return std::nullopt;
}

void NcaConfig::validate() const {
  if (iterations == 0) throw ConfigError("nca: iterations must be positive");
  if (batch_frames == 0) throw ConfigError("nca: batch_frames must be positive");
  if (!(lr > 0.0)) throw ConfigError("nca: learning rate must be positive");
}

TargetBatch make_target(const ModelParams& params, const Mat& mixture) {
  if (std::any_of(mixture.data().begin(), mixture.data().end(), [](double v) { return v < 0.0; })) {
    throw ConfigError("make_target: mixture magnitudes must be non-negative");
  }
  ForwardTrace trace = forward(params, mixture);
  return {mixture, std::move(trace.post.back())};
}

namespace {

Mat residual(const Mat& couplings, const TargetBatch& batch) {
  return sub(matmul(couplings, batch.mixture), batch.target);
}

}  // namespace

double l1_loss(const Mat& couplings, const TargetBatch& batch) { return l1_norm(residual(couplings, batch)); }

Mat student_grad(const Mat& couplings, const TargetBatch& batch) {
  return matmul(signum(residual(couplings, batch)), transpose(batch.mixture));
}

Gate compute_gate(const Mat& projection, const Mat& w, const Mat& b) {
  if (!projection.is_square() || !w.is_square() || projection.rows() != w.rows()) {
    throw ShapeError("compute_gate: P " + projection.shape_str() + " vs W " + w.shape_str());
  }
  Mat pre = matmul(projection, transpose(add_bias_cols(w, b)));
  Mat gate = relu(pre);
  return {std::move(pre), std::move(gate)};
}

Mat compose(const ModelParams& params, std::span<const Mat> gates) {
  if (gates.size() != params.layers.size()) {
    throw ConfigError("compose: " + std::to_string(gates.size()) + " gates for " +
                      std::to_string(params.layers.size()) + " layers");
  }
  if (gates.empty()) return Mat::identity(params.n);
  Mat c = hadamard(gates[0], params.layers[0].w);
  for (std::size_t l = 1; l < gates.size(); ++l) c = matmul(hadamard(gates[l], params.layers[l].w), c);
  return c;
}

void rebuild_couplings(NcaState& state, const ModelParams& params) {
  if (state.projections.size() != params.layers.size()) {
    throw ConfigError("nca: " + std::to_string(state.projections.size()) + " projections for " +
                      std::to_string(params.layers.size()) + " layers");
  }
  state.gates.clear();
  std::vector<Mat> gate_values;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    state.gates.push_back(compute_gate(state.projections[l], params.layers[l].w, params.layers[l].b));
    gate_values.push_back(state.gates.back().gate);
  }
  state.couplings = compose(params, gate_values);
}

NcaState init_nca_state(const ModelParams& params, const NcaConfig& cfg) {
  cfg.validate();
  params.validate();
  NcaState state;
  state.strategy = cfg.strategy;
  state.adam.lr = cfg.lr;
  Rng rng(cfg.seed);
  if (cfg.strategy == Strategy::student) {
    state.couplings = glorot_like_init(rng, params.n, params.n, params.n);
  } else {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      state.projections.push_back(glorot_like_init(rng, params.n, params.n, params.n));
    }
    rebuild_couplings(state, params);
  }
  return state;
}

std::vector<Mat> compositional_grads(const NcaState& state, const ModelParams& params, const TargetBatch& batch) {
  if (state.strategy != Strategy::compositional) throw ConfigError("compositional_grads: state uses the student strategy");
  const std::size_t L = params.layers.size();
  if (state.gates.size() != L) throw ConfigError("compositional_grads: gate count does not match model depth");

  std::vector<Mat> gated(L);
  for (std::size_t l = 0; l < L; ++l) gated[l] = hadamard(params.layers[l].w, state.gates[l].gate);

  // upstream[l] = A_{l-1} ... A_0, downstream[l] = A_{L-1} ... A_{l+1};
  // empty when there is nothing on that side.
  std::vector<std::optional<Mat>> upstream(L), downstream(L);
  for (std::size_t l = 1; l < L; ++l) {
    upstream[l] = l == 1 ? gated[0] : matmul(gated[l - 1], *upstream[l - 1]);
  }
  for (std::size_t l = L - 1; l-- > 0;) {
    downstream[l] = l + 2 == L ? gated[L - 1] : matmul(*downstream[l + 1], gated[l + 1]);
  }

  const Mat delta = student_grad(state.couplings, batch);
  std::vector<Mat> grads(L);
  for (std::size_t l = 0; l < L; ++l) {
    Mat d_gated = delta;
    if (downstream[l]) d_gated = matmul(transpose(*downstream[l]), d_gated);
    if (upstream[l]) d_gated = matmul(d_gated, transpose(*upstream[l]));
    const Mat d_pre = hadamard(hadamard(d_gated, params.layers[l].w), relu_deriv(state.gates[l].pre));
    grads[l] = matmul(d_pre, add_bias_cols(params.layers[l].w, params.layers[l].b));
  }
  return grads;
}

void nca_step(NcaState& state, const ModelParams& params, const TargetBatch& batch) {
  const double loss = l1_loss(state.couplings, batch);
  if (!std::isfinite(loss)) {
    throw NumericError("nca: non-finite loss at iteration " + std::to_string(state.loss_history.size()));
  }
  state.loss_history.push_back(loss);
  if (state.strategy == Strategy::student) {
    const Mat grad = student_grad(state.couplings, batch);
    Mat* refs[] = {&state.couplings};
    adam_step(state.adam, refs, std::span(&grad, 1));
    return;
  }
  const auto grads = compositional_grads(state, params, batch);
  std::vector<Mat*> refs;
  for (auto& p : state.projections) refs.push_back(&p);
  adam_step(state.adam, refs, grads);
  rebuild_couplings(state, params);
}

NcaResult run_nca(const ModelParams& params, const TargetBatch& batch, const NcaConfig& cfg) {
  if (batch.mixture.cols() != cfg.batch_frames) {
    throw ShapeError("run_nca: batch has " + std::to_string(batch.mixture.cols()) + " frames, config expects T=" +
                     std::to_string(cfg.batch_frames));
  }
  NcaState state = init_nca_state(params, cfg);
  for (std::uint32_t i = 0; i < cfg.iterations; ++i) nca_step(state, params, batch);
  const double final_loss = l1_loss(state.couplings, batch);
  if (!std::isfinite(final_loss)) throw NumericError("nca: non-finite loss after the final iteration");
  return {std::move(state.couplings), std::move(state.loss_history), final_loss};
}

NcaResult run_nca(const ModelParams& params, const Mat& mixture, const NcaConfig& cfg) {
  return run_nca(params, make_target(params, mixture), cfg);
}

std::vector<std::uint8_t> encode_couplings(const CouplingsFile& file) {
  if (!file.couplings.is_square()) throw ShapeError("couplings must be square, got " + file.couplings.shape_str());
  ByteWriter w;
  w.magic("NCC1");
  w.u32(kCouplingsVersion);
  w.u32(static_cast<std::uint32_t>(file.couplings.rows()));
  for (double v : file.couplings.data()) w.f64(v);
  const nlohmann::json meta = {
      {"strategy", file.strategy},
      {"arch", file.arch},
      {"checkpoint_hash", file.checkpoint_hash},
      {"segment_id", file.segment_id},
      {"final_loss", file.final_loss},
      {"iterations", file.iterations},
      {"lr", file.lr},
      {"seed", file.seed},
  };
  w.str(meta.dump());
  return w.take();
}

CouplingsFile decode_couplings(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "couplings");
  r.expect_magic("NCC1");
  r.version(kCouplingsVersion);
  const std::size_t n = r.u32();
  if (n * n > r.remaining() / 8) throw FormatError("couplings: truncated file (matrix " + std::to_string(n) + "x" + std::to_string(n) + ")");
  std::vector<double> data(n * n);
  for (double& v : data) v = r.f64();
  CouplingsFile file;
  file.couplings = Mat(n, n, std::move(data));
  const std::string text = r.str();
  if (!r.at_end()) throw FormatError("couplings: " + std::to_string(r.remaining()) + " trailing bytes");
  try {
    const auto meta = nlohmann::json::parse(text);
    file.strategy = meta.at("strategy").get<std::string>();
    file.arch = meta.at("arch").get<std::string>();
    file.checkpoint_hash = meta.at("checkpoint_hash").get<std::string>();
    file.segment_id = meta.at("segment_id").get<std::string>();
    file.final_loss = meta.at("final_loss").get<double>();
    file.iterations = meta.at("iterations").get<std::uint32_t>();
    file.lr = meta.value("lr", 0.0);
    file.seed = meta.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("couplings: bad metadata block: ") + e.what());
  }
  return file;
}

void save_couplings(const CouplingsFile& file, const std::filesystem::path& path) {
  write_file_atomic(path, encode_couplings(file));
}

CouplingsFile load_couplings(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_couplings(bytes);
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace ncouple
