#include "commands.hpp"

#include <glob.h>

#include <algorithm>
#include <charconv>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "ncouple/analysis.hpp"
#include "ncouple/binio.hpp"
#include "ncouple/error.hpp"
#include "ncouple/hash.hpp"
#include "ncouple/heatmap.hpp"
#include "ncouple/model.hpp"
#include "ncouple/nca.hpp"
#include "ncouple/parallel.hpp"
#include "ncouple/rng.hpp"
#include "ncouple/spectral.hpp"
#include "ncouple/synth.hpp"
#include "ncouple/trainer.hpp"
#include "ncouple/wav.hpp"

namespace ncouple::cli {

namespace {

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw IoError(std::string(what) + " not found: " + p.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::optional<std::size_t> parse_size(std::string_view s) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

nlohmann::json stft_json(const StftConfig& c) {
  return {{"sample_rate", c.sample_rate}, {"window_len", c.window_len}, {"hop", c.hop},
          {"fft_size", c.fft_size},      {"bins_kept", c.bins_kept},   {"window", "hamming"}};
}

std::size_t dataset_bins(const Dataset& ds) {
  if (ds.pairs.empty()) throw ConfigError("dataset has no pairs");
  return ds.pairs.front().mixture.rows();
}

}  // namespace

std::string format_segment_id(const std::string& label, std::size_t pair, std::size_t begin, std::size_t end) {
  return label + "/pair" + std::to_string(pair) + "/" + std::to_string(begin) + "-" + std::to_string(end);
}

SegmentId parse_segment_id(const std::string& id) {
  const auto bad = [&] { return FormatError("malformed segment id '" + id + "'"); };
  const auto slash1 = id.find('/');
  if (slash1 == std::string::npos) throw bad();
  const auto slash2 = id.find('/', slash1 + 1);
  if (slash2 == std::string::npos || id.compare(slash1 + 1, 4, "pair") != 0) throw bad();
  const auto dash = id.find('-', slash2 + 1);
  if (dash == std::string::npos) throw bad();
  const auto pair = parse_size(std::string_view(id).substr(slash1 + 5, slash2 - slash1 - 5));
  const auto begin = parse_size(std::string_view(id).substr(slash2 + 1, dash - slash2 - 1));
  const auto end = parse_size(std::string_view(id).substr(dash + 1));
  if (!pair || !begin || !end || *end <= *begin) throw bad();
  return {id.substr(0, slash1), *pair, *begin, *end};
}

fs::path run_synth(const SynthOptions& opt, RunManifest& manifest) {
  manifest.stage("synth");
  std::optional<BinScaler> scaler;
  if (opt.scaler_from) {
    require_file(*opt.scaler_from, "scaler source dataset");
    scaler = load_dataset(*opt.scaler_from).scaler;
    manifest.add_input(*opt.scaler_from);
  }
  const SynthConfig cfg{opt.bins, opt.frames, opt.tracks, opt.seed};
  const Dataset ds = synth_dataset(cfg, scaler);
  save_dataset(ds, opt.out);
  manifest.add_output(opt.out);
  manifest.config()["synth"] = {{"bins", cfg.bins}, {"frames", cfg.frames}, {"tracks", cfg.tracks}, {"seed", cfg.seed}};
  manifest.config()["stft"] = stft_json(ds.config);
  const fs::path mpath = with_suffix(opt.out, ".manifest.json");
  manifest.write(mpath);
  return mpath;
}

fs::path run_ingest(const IngestOptions& opt, RunManifest& manifest) {
  manifest.stage("scan");
  if (!fs::is_directory(opt.input)) throw IoError("input directory not found: " + opt.input.string());
  StftConfig cfg;
  cfg.sample_rate = opt.sr;
  cfg.window_len = opt.window;
  cfg.hop = opt.hop;
  cfg.fft_size = opt.fft;
  cfg.bins_kept = opt.fft / 2 + 1;
  cfg.validate();

  const std::string mix_ext = ".mix.wav";
  const std::string vox_ext = ".vox.wav";
  std::set<std::string> mixes;
  std::set<std::string> voxes;
  for (const auto& entry : fs::directory_iterator(opt.input)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    auto ends_with = [&](const std::string& ext) {
      return name.size() > ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0;
    };
    if (ends_with(mix_ext)) mixes.insert(name.substr(0, name.size() - mix_ext.size()));
    if (ends_with(vox_ext)) voxes.insert(name.substr(0, name.size() - vox_ext.size()));
  }
  std::vector<std::string> unpaired;
  for (const auto& t : mixes) {
    if (!voxes.contains(t)) unpaired.push_back(t + " (missing " + t + vox_ext + ")");
  }
  for (const auto& t : voxes) {
    if (!mixes.contains(t)) unpaired.push_back(t + " (missing " + t + mix_ext + ")");
  }
  if (!unpaired.empty()) {
    std::string msg = "unpaired tracks:";
    for (const auto& u : unpaired) msg += " " + u;
    throw IoError(msg);
  }
  if (mixes.empty()) throw IoError("no <track>.mix.wav / <track>.vox.wav pairs in " + opt.input.string());

  const std::vector<std::string> tracks(mixes.begin(), mixes.end());
  Dataset ds;
  ds.config = cfg;
  ds.pairs.resize(tracks.size());
  for (const auto& t : tracks) {
    manifest.add_input(opt.input / (t + mix_ext));
    manifest.add_input(opt.input / (t + vox_ext));
  }

  manifest.stage("stft");
  parallel_for(tracks.size(), default_thread_count(), [&](std::size_t i) {
    std::vector<float> mix = load_wav_mono(opt.input / (tracks[i] + mix_ext));
    std::vector<float> vox = load_wav_mono(opt.input / (tracks[i] + vox_ext));
    const std::size_t len = std::min(mix.size(), vox.size());
    mix.resize(len);
    vox.resize(len);
    ds.pairs[i] = {tracks[i], stft_mag(mix, cfg, tracks[i]).mags, stft_mag(vox, cfg, tracks[i]).mags};
  });

  manifest.stage("scaler");
  if (opt.scaler_from) {
    require_file(*opt.scaler_from, "scaler source dataset");
    const Dataset src = load_dataset(*opt.scaler_from);
    if (src.scaler.per_bin_std.size() != cfg.bins_kept) {
      throw ConfigError("scaler source has " + std::to_string(src.scaler.per_bin_std.size()) + " bins, expected " +
                        std::to_string(cfg.bins_kept));
    }
    ds.scaler = src.scaler;
    manifest.add_input(*opt.scaler_from);
  } else {
    std::vector<Mat> mixtures;
    for (const auto& p : ds.pairs) mixtures.push_back(p.mixture);
    ds.scaler = fit_scaler(mixtures);
  }
  save_dataset(ds, opt.out);
  manifest.add_output(opt.out);
  manifest.config()["stft"] = stft_json(cfg);
  manifest.config()["tracks"] = tracks;
  const fs::path mpath = with_suffix(opt.out, ".manifest.json");
  manifest.write(mpath);
  return mpath;
}

fs::path run_train(const TrainOptions& opt, RunManifest& manifest) {
  manifest.stage("load");
  const auto tag = parse_arch(opt.model);
  if (!tag) throw ConfigError("unknown model '" + opt.model + "' (expected dae, mss-dae or sf)");
  if (opt.seeds.empty()) throw ConfigError("train: --seeds is empty");
  require_file(opt.dataset, "dataset");
  const Dataset ds = load_dataset(opt.dataset);
  manifest.add_input(opt.dataset);
  const Arch arch = Arch::from_tag(*tag, opt.hidden);

  TrainConfig cfg;
  cfg.batch_size = opt.batch;
  cfg.initial_lr = opt.lr;
  cfg.max_epochs = opt.max_epochs;
  cfg.validate();
  ensure_dir(opt.out);

  manifest.stage("train");
  const auto runs = train_multi_seed(arch, ds, cfg, opt.seeds, default_thread_count());

  manifest.stage("write");
  const std::string model_name(to_string(*tag));
  std::vector<std::string> failures;
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& run : runs) {
    if (!run.result) {
      failures.push_back("seed " + std::to_string(run.seed) + ": " + run.error);
      continue;
    }
    const std::string stem = model_name + "-seed" + std::to_string(run.seed);
    const fs::path ckpt = opt.out / (stem + ".ncm");
    const fs::path csv = opt.out / (stem + ".loss.csv");
    save_checkpoint(run.result->checkpoint, ckpt);
    write_text_atomic(csv, loss_history_csv(run.result->history));
    manifest.add_output(ckpt);
    manifest.add_output(csv);
    per_seed.push_back({{"seed", run.seed},
                        {"epochs", run.result->checkpoint.epochs},
                        {"best_loss", run.result->best_loss},
                        {"initial_loss", run.result->initial_loss}});
  }
  manifest.config()["model"] = {{"arch", model_name}, {"layers", arch.layer_count()}, {"n", dataset_bins(ds)}};
  manifest.config()["train"] = {{"batch_size", cfg.batch_size},       {"initial_lr", cfg.initial_lr},
                                {"halve_patience", cfg.halve_patience}, {"stop_patience", cfg.stop_patience},
                                {"max_epochs", cfg.max_epochs},       {"seeds", opt.seeds}};
  manifest.config()["stft"] = stft_json(ds.config);
  manifest.config()["runs"] = per_seed;
  const fs::path mpath = opt.out / ("train-" + model_name + ".manifest.json");
  manifest.write(mpath);
  if (!failures.empty()) {
    std::string msg = "training failed for";
    for (const auto& f : failures) msg += " [" + f + "]";
    throw NumericError(msg);
  }
  return mpath;
}

fs::path run_nca(const NcaOptions& opt, RunManifest& manifest) {
  manifest.stage("load");
  const auto strategy = parse_strategy(opt.strategy);
  if (!strategy) throw ConfigError("unknown strategy '" + opt.strategy + "' (expected student or compositional)");
  require_file(opt.checkpoint, "checkpoint");
  require_file(opt.dataset, "dataset");
  const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
  const Dataset ds = load_dataset(opt.dataset);
  const std::string ckpt_hash = sha256_file(opt.checkpoint);
  manifest.add_input(opt.checkpoint);
  manifest.add_input(opt.dataset);
  if (dataset_bins(ds) != ckpt.params.n) {
    throw ShapeError("checkpoint has N=" + std::to_string(ckpt.params.n) + " but dataset has " +
                     std::to_string(dataset_bins(ds)) + " bins");
  }

  NcaConfig cfg;
  cfg.strategy = *strategy;
  cfg.iterations = opt.iters;
  cfg.lr = opt.lr;
  cfg.batch_frames = opt.frames;
  cfg.seed = opt.seed;
  cfg.validate();

  struct Job {
    SegmentRef ref;
    std::string label;
  };
  std::vector<Job> jobs;
  const auto windows = segment_windows(ds, cfg.batch_frames);
  if (opt.segment == "all") {
    for (const auto& w : windows) jobs.push_back({w, "seg" + std::to_string(w.index)});
  } else if (opt.segment == "active") {
    for (std::size_t p = 0; p < ds.pairs.size(); ++p) {
      const Mat mix = apply_scaler(ds.pairs[p].mixture, ds.scaler);
      const Mat tgt = apply_scaler(ds.pairs[p].target, ds.scaler);
      if (mix.cols() < cfg.batch_frames) continue;
      const std::vector<Mat> sources{tgt, relu(sub(mix, tgt))};
      const FrameRange r = select_active_segment(mix, sources, cfg.batch_frames);
      jobs.push_back({{p, p, r}, "active"});
    }
  } else {
    const auto idx = parse_size(opt.segment);
    if (!idx) throw ConfigError("--segment must be an index, 'all' or 'active', got '" + opt.segment + "'");
    if (*idx >= windows.size()) {
      throw ConfigError("segment " + opt.segment + " out of range (" + std::to_string(windows.size()) +
                        " windows of " + std::to_string(cfg.batch_frames) + " frames)");
    }
    jobs.push_back({windows[*idx], "seg" + std::to_string(*idx)});
  }
  if (jobs.empty()) throw ConfigError("dataset has no full " + std::to_string(cfg.batch_frames) + "-frame window");

  ensure_dir(opt.out);
  manifest.stage("nca");
  const std::string stem = opt.checkpoint.stem().string() + "." + std::string(to_string(*strategy));
  std::vector<fs::path> outputs(jobs.size() * 2);
  std::vector<double> final_losses(jobs.size());
  parallel_for(jobs.size(), default_thread_count(), [&](std::size_t i) {
    const Job& job = jobs[i];
    const SegmentData seg = segment_data(ds, job.ref);
    // Independent initialisation per (checkpoint, segment) so that averages
    // over segments and seeds do not share one projection draw.
    NcaConfig run_cfg = cfg;
    const std::uint64_t stream = job.label == "active" ? (std::uint64_t{1} << 32) + job.ref.pair : job.ref.index;
    run_cfg.seed = derive_seed(derive_seed(cfg.seed, ckpt.seed), stream);
    const NcaResult res = ncouple::run_nca(ckpt.params, seg.mixture, run_cfg);
    if (!all_finite(res.couplings)) throw NumericError("nca: non-finite couplings for " + job.label);
    CouplingsFile file;
    file.couplings = res.couplings;
    file.strategy = std::string(to_string(*strategy));
    file.arch = std::string(to_string(ckpt.params.arch.tag));
    file.checkpoint_hash = ckpt_hash;
    file.segment_id = format_segment_id(job.label, job.ref.pair, job.ref.frames.begin, job.ref.frames.end);
    file.final_loss = res.final_loss;
    file.iterations = cfg.iterations;
    file.lr = cfg.lr;
    file.seed = run_cfg.seed;
    const std::string name = job.label == "active" ? "active-pair" + std::to_string(job.ref.pair) : job.label;
    const fs::path out = opt.out / (stem + "." + name + ".ncc");
    const fs::path csv = opt.out / (stem + "." + name + ".loss.csv");
    save_couplings(file, out);
    std::ostringstream os;
    os.precision(17);
    os << "iteration,l1_loss\n";
    for (std::size_t k = 0; k < res.loss_history.size(); ++k) os << k << ',' << res.loss_history[k] << '\n';
    write_text_atomic(csv, os.str());
    outputs[2 * i] = out;
    outputs[2 * i + 1] = csv;
    final_losses[i] = res.final_loss;
  });

  manifest.stage("write");
  for (const auto& p : outputs) manifest.add_output(p);
  manifest.config()["nca"] = {{"strategy", to_string(*strategy)}, {"iterations", cfg.iterations},
                              {"lr", cfg.lr},                    {"batch_frames", cfg.batch_frames},
                              {"seed", cfg.seed},                {"segment", opt.segment}};
  manifest.config()["model"] = {{"arch", to_string(ckpt.params.arch.tag)},
                                {"layers", ckpt.params.layers.size()},
                                {"n", ckpt.params.n},
                                {"checkpoint_sha256", ckpt_hash}};
  manifest.config()["stft"] = stft_json(ds.config);
  manifest.config()["final_losses"] = final_losses;
  const std::string suffix = opt.segment == "all" ? "" : "-" + opt.segment;
  const fs::path mpath = opt.out / ("nca-" + stem + suffix + ".manifest.json");
  manifest.write(mpath);
  return mpath;
}

namespace {

std::vector<fs::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<fs::path> out;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw IoError("glob failed for pattern '" + pattern + "'");
  std::sort(out.begin(), out.end());
  return out;
}

fs::path report_prefix(const fs::path& out) {
  const auto ext = out.extension();
  if (ext == ".json" || ext == ".csv") return fs::path(out).replace_extension();
  return out;
}

}  // namespace

fs::path run_analyze(const AnalyzeOptions& opt, RunManifest& manifest) {
  manifest.stage("load");
  const auto files = expand_glob(opt.couplings);
  if (files.empty()) throw IoError("no couplings files match '" + opt.couplings + "'");
  if (!fs::is_directory(opt.checkpoints)) throw IoError("checkpoint directory not found: " + opt.checkpoints.string());
  require_file(opt.dataset, "dataset");
  const Dataset ds = load_dataset(opt.dataset);
  manifest.add_input(opt.dataset);

  std::map<std::string, fs::path> by_hash;
  std::vector<fs::path> ckpt_files;
  for (const auto& entry : fs::directory_iterator(opt.checkpoints)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ncm") ckpt_files.push_back(entry.path());
  }
  std::sort(ckpt_files.begin(), ckpt_files.end());
  for (const auto& p : ckpt_files) by_hash.emplace(sha256_file(p), p);

  manifest.stage("evaluate");
  std::map<fs::path, Checkpoint> loaded;
  std::set<std::string> baseline_done;
  std::vector<MetricsRecord> records;
  for (const auto& path : files) {
    const CouplingsFile cf = load_couplings(path);
    manifest.add_input(path);
    const auto it = by_hash.find(cf.checkpoint_hash);
    if (it == by_hash.end()) {
      throw ConfigError(path.string() + " refers to checkpoint " + cf.checkpoint_hash + ", not found in " +
                        opt.checkpoints.string());
    }
    auto [slot, fresh] = loaded.try_emplace(it->second);
    if (fresh) {
      slot->second = load_checkpoint(it->second);
      manifest.add_input(it->second);
    }
    const ModelParams& params = slot->second.params;
    if (cf.arch != to_string(params.arch.tag)) {
      throw ConfigError(path.string() + " claims arch " + cf.arch + " but its checkpoint is " +
                        std::string(to_string(params.arch.tag)));
    }
    if (!parse_strategy(cf.strategy)) throw FormatError(path.string() + ": unknown strategy '" + cf.strategy + "'");
    const SegmentId sid = parse_segment_id(cf.segment_id);
    if (sid.pair >= ds.pairs.size() || sid.end > ds.pairs[sid.pair].mixture.cols()) {
      throw ConfigError(path.string() + ": segment " + cf.segment_id + " is outside the dataset");
    }
    const SegmentData seg = segment_data(ds, {0, sid.pair, {sid.begin, sid.end}});
    const std::string label = it->second.stem().string() + ":" + cf.segment_id;
    records.push_back(evaluate_segment(params, cf.couplings, seg.mixture, seg.target, cf.strategy, label));
    if (baseline_done.insert(label).second) {
      for (auto& r : evaluate_baselines(params, seg.mixture, seg.target, label)) records.push_back(std::move(r));
    }
  }

  manifest.stage("report");
  const Report report = aggregate(std::move(records));
  const fs::path prefix = report_prefix(opt.out);
  if (prefix.has_parent_path()) ensure_dir(prefix.parent_path());
  const fs::path json_path = with_suffix(prefix, ".json");
  const fs::path csv_path = with_suffix(prefix, ".csv");
  write_text_atomic(json_path, report_json(report));
  write_text_atomic(csv_path, report_csv(report));
  manifest.add_output(json_path);
  manifest.add_output(csv_path);
  manifest.config()["analysis"] = {{"couplings_pattern", opt.couplings},
                                   {"couplings_files", files.size()},
                                   {"snr_cap_db", kSnrCapDb},
                                   {"estimate_clipping", "relu"}};
  manifest.config()["stft"] = stft_json(ds.config);
  const fs::path mpath = with_suffix(prefix, ".manifest.json");
  manifest.write(mpath);
  return mpath;
}

fs::path run_heatmap(const HeatmapOptions& opt, RunManifest& manifest) {
  manifest.stage("render");
  require_file(opt.couplings, "couplings file");
  const CouplingsFile cf = load_couplings(opt.couplings);
  manifest.add_input(opt.couplings);
  HeatmapSpec spec;
  spec.row_normalize = opt.row_normalize;
  if (!opt.zoom.empty()) {
    const auto colon = opt.zoom.find(':');
    const auto a = colon == std::string::npos ? std::nullopt : parse_size(std::string_view(opt.zoom).substr(0, colon));
    const auto b = colon == std::string::npos ? std::nullopt : parse_size(std::string_view(opt.zoom).substr(colon + 1));
    if (!a || !b || *b <= *a || *b > cf.couplings.rows()) {
      throw ConfigError("--zoom must be a:b with a < b <= " + std::to_string(cf.couplings.rows()) + ", got '" +
                        opt.zoom + "'");
    }
    spec.zoom_begin = *a;
    spec.zoom_end = *b;
  }
  if (opt.out.has_parent_path()) ensure_dir(opt.out.parent_path());
  export_heatmap(cf.couplings, spec, opt.out);
  manifest.add_output(opt.out);
  manifest.config()["heatmap"] = {{"zoom_begin", spec.zoom_begin},
                                  {"zoom_end", spec.zoom_end == 0 ? cf.couplings.rows() : spec.zoom_end},
                                  {"row_normalize", spec.row_normalize},
                                  {"format", "pgm"}};
  const fs::path mpath = with_suffix(opt.out, ".manifest.json");
  manifest.write(mpath);
  return mpath;
}

}  // namespace ncouple::cli
