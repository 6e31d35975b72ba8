#include "ncouple/model.hpp"

#include <algorithm>
#include <cctype>

#include "ncouple/binio.hpp"
#include "ncouple/error.hpp"
#include "ncouple/rng.hpp"

namespace ncouple {

std::string_view to_string(ArchTag tag) noexcept {
  switch (tag) {
    case ArchTag::dae: return "dae";
    case ArchTag::mss_dae: return "mss-dae";
    case ArchTag::sf: return "sf";
  }
  return "unknown";
}

std::optional<ArchTag> parse_arch(std::string_view name) noexcept {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(s.begin(), s.end(), '_', '-');
  if (s == "dae") return ArchTag::dae;
  if (s == "mss-dae") return ArchTag::mss_dae;
  if (s == "sf") return ArchTag::sf;
  return std::nullopt;
}

Arch Arch::from_tag(ArchTag tag, std::uint32_t hidden) {
  return tag == ArchTag::mss_dae ? mss_dae(hidden) : Arch{tag, 0};
}

void ModelParams::validate() const {
  if (arch.tag != ArchTag::mss_dae && arch.hidden_layers != 0) {
    throw ConfigError(std::string(to_string(arch.tag)) + " has no hidden layers");
  }
  if (layers.size() != arch.layer_count()) {
    throw ConfigError("model has " + std::to_string(layers.size()) + " layers, " + std::string(to_string(arch.tag)) +
                      " needs " + std::to_string(arch.layer_count()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.w.rows() != n || l.w.cols() != n || l.b.rows() != n || l.b.cols() != 1) {
      throw ShapeError("layer " + std::to_string(i) + ": W " + l.w.shape_str() + ", b " + l.b.shape_str() +
                       " for N=" + std::to_string(n));
    }
  }
}

ModelParams init_params(const Arch& arch, std::size_t n, Rng& rng) {
  ModelParams p{arch, n, {}};
  p.layers.reserve(arch.layer_count());
  for (std::size_t i = 0; i < arch.layer_count(); ++i) {
    p.layers.push_back({glorot_like_init(rng, n, n, n), Mat(n, 1)});
  }
  return p;
}

ForwardTrace forward(const ModelParams& params, const Mat& x_batch) {
  if (x_batch.rows() != params.n) {
    throw ShapeError("forward: input " + x_batch.shape_str() + " for model with N=" + std::to_string(params.n));
  }
  if (!all_finite(x_batch)) throw NumericError("forward: non-finite input");

  ForwardTrace t;
  t.input = x_batch;
  t.pre.reserve(params.layers.size());
  t.post.reserve(params.layers.size());
  const Mat* h = &t.input;
  for (const auto& layer : params.layers) {
    t.pre.push_back(add_column_vector(matmul(layer.w, *h), layer.b));
    t.post.push_back(relu(t.pre.back()));
    h = &t.post.back();
  }
  if (params.arch.tag == ArchTag::sf) {
    t.mask = t.post.back();
    t.output = hadamard(*t.mask, t.input);
  } else {
    t.output = t.post.back();
  }
  return t;
}

const Mat& decoder_output(const ForwardTrace& trace) { return trace.post.back(); }

double mse(const Mat& x, const Mat& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) {
    throw ShapeError("mse: shape mismatch " + x.shape_str() + " vs " + x_hat.shape_str());
  }
  if (x.empty()) return 0.0;
  return l2_norm_sq(sub(x, x_hat)) / static_cast<double>(x.rows() * x.cols());
}

std::vector<Layer> backward(const ModelParams& params, const ForwardTrace& trace, const Mat& x_target) {
  const std::size_t L = params.layers.size();
  if (trace.pre.size() != L || trace.post.size() != L) throw ShapeError("backward: trace does not match model depth");
  if (x_target.rows() != trace.output.rows() || x_target.cols() != trace.output.cols()) {
    throw ShapeError("backward: target " + x_target.shape_str() + " vs output " + trace.output.shape_str());
  }
  const double norm = 2.0 / static_cast<double>(x_target.rows() * x_target.cols());
  Mat grad_out = scale(sub(trace.output, x_target), norm);  // dL/dx^
  if (params.arch.tag == ArchTag::sf) grad_out = hadamard(grad_out, trace.input);  // dL/dm

  std::vector<Layer> grads(L);
  Mat delta = hadamard(grad_out, relu_deriv(trace.pre[L - 1]));
  for (std::size_t i = L; i-- > 0;) {
    const Mat& in = i == 0 ? trace.input : trace.post[i - 1];
    grads[i].w = matmul(delta, transpose(in));
    grads[i].b = row_sums(delta);
    if (i > 0) delta = hadamard(matmul(transpose(params.layers[i].w), delta), relu_deriv(trace.pre[i - 1]));
  }
  return grads;
}

std::vector<Mat*> parameter_refs(ModelParams& params) {
  std::vector<Mat*> out;
  out.reserve(2 * params.layers.size());
  for (auto& l : params.layers) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<Mat> flatten(std::vector<Layer>&& grads) {
  std::vector<Mat> out;
  out.reserve(2 * grads.size());
  for (auto& l : grads) {
    out.push_back(std::move(l.w));
    out.push_back(std::move(l.b));
  }
  return out;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  p.validate();
  ByteWriter w;
  w.magic("NCM1");
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(p.arch.tag));
  w.u32(static_cast<std::uint32_t>(p.n));
  w.u32(static_cast<std::uint32_t>(p.layers.size()));
  for (const auto& l : p.layers) {
    w.mat(l.w);
    w.mat(l.b);
  }
  w.u64(ckpt.seed);
  w.u32(ckpt.epochs);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "checkpoint");
  r.expect_magic("NCM1");
  r.version(kCheckpointVersion);
  const std::uint8_t tag = r.u8();
  if (tag > static_cast<std::uint8_t>(ArchTag::sf)) throw FormatError("checkpoint: unknown arch tag " + std::to_string(tag));
  Checkpoint ckpt;
  auto& p = ckpt.params;
  p.n = r.u32();
  const std::uint32_t layer_count = r.u32();
  if (layer_count < 2) throw FormatError("checkpoint: layer count " + std::to_string(layer_count) + " < 2");
  p.arch = Arch{static_cast<ArchTag>(tag), layer_count - 2};
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    Layer l;
    l.w = r.mat();
    l.b = r.mat();
    p.layers.push_back(std::move(l));
  }
  ckpt.seed = r.u64();
  ckpt.epochs = r.u32();
  if (!r.at_end()) throw FormatError("checkpoint: " + std::to_string(r.remaining()) + " trailing bytes");
  try {
    p.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace ncouple
