#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "ncouple/error.hpp"

#ifndef NCOUPLE_VERSION
#define NCOUPLE_VERSION "0.0.0"
#endif

namespace {

int exit_code_for(const ncouple::Error& e) {
  const std::string kind = e.kind();
  if (kind == "io") return 3;
  if (kind == "format") return 4;
  if (kind == "version") return 5;
  if (kind == "config") return 6;
  if (kind == "numeric") return 7;
  if (kind == "shape") return 8;
  return 1;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ncouple::cli;

  CLI::App app{"Neural couplings for spectral source separation models"};
  app.set_version_flag("--version", NCOUPLE_VERSION);
  app.require_subcommand(1);

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic spectrogram dataset");
  s->add_option("--out", synth.out, "Dataset file")->required();
  s->add_option("--n", synth.bins, "Frequency bins")->capture_default_str();
  s->add_option("--frames", synth.frames, "Total frames")->capture_default_str();
  s->add_option("--tracks", synth.tracks, "Tracks")->capture_default_str();
  s->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  s->add_option("--scaler-from", synth.scaler_from, "Reuse the scaler of this dataset");

  IngestOptions ingest;
  auto* in = app.add_subcommand("ingest", "Build a dataset from <track>.mix.wav / <track>.vox.wav pairs");
  in->add_option("--input", ingest.input, "Directory of WAV pairs")->required();
  in->add_option("--out", ingest.out, "Dataset file")->required();
  in->add_option("--fft", ingest.fft, "FFT size")->capture_default_str();
  in->add_option("--hop", ingest.hop, "Hop in samples")->capture_default_str();
  in->add_option("--window", ingest.window, "Window length in samples")->capture_default_str();
  in->add_option("--sr", ingest.sr, "Expected sample rate")->capture_default_str();
  in->add_option("--scaler-from", ingest.scaler_from, "Reuse the scaler of this dataset");

  TrainOptions train;
  auto* tr = app.add_subcommand("train", "Train one model per seed");
  tr->add_option("--model", train.model, "dae, mss-dae or sf")->required();
  tr->add_option("--dataset", train.dataset, "Dataset file")->required();
  tr->add_option("--seeds", train.seeds, "Seeds")->delimiter(',')->capture_default_str();
  tr->add_option("--out", train.out, "Output directory")->required();
  tr->add_option("--hidden", train.hidden, "Hidden layers for mss-dae")->capture_default_str();
  tr->add_option("--batch", train.batch, "Batch size")->capture_default_str();
  tr->add_option("--lr", train.lr, "Initial learning rate")->capture_default_str();
  tr->add_option("--max-epochs", train.max_epochs, "Epoch cap")->capture_default_str();

  NcaOptions nca;
  auto* nc = app.add_subcommand("nca", "Fit couplings matrices to a trained model");
  nc->add_option("--checkpoint", nca.checkpoint, "Checkpoint file")->required();
  nc->add_option("--dataset", nca.dataset, "Dataset file")->required();
  nc->add_option("--strategy", nca.strategy, "student or compositional")->capture_default_str();
  nc->add_option("--segment", nca.segment, "Window index, all or active")->capture_default_str();
  nc->add_option("--iters", nca.iters, "Iterations")->capture_default_str();
  nc->add_option("--lr", nca.lr, "Learning rate")->capture_default_str();
  nc->add_option("--frames", nca.frames, "Frames per segment (T)")->capture_default_str();
  nc->add_option("--seed", nca.seed, "Base seed; each checkpoint and segment derives its own")->capture_default_str();
  nc->add_option("--out", nca.out, "Output directory")->required();

  AnalyzeOptions analyze;
  auto* an = app.add_subcommand("analyze", "Score couplings files and aggregate a report");
  an->add_option("--couplings", analyze.couplings, "Glob of couplings files")->required();
  an->add_option("--checkpoints", analyze.checkpoints, "Checkpoint directory")->required();
  an->add_option("--dataset", analyze.dataset, "Dataset file")->required();
  an->add_option("--out", analyze.out, "Report path prefix")->required();

  HeatmapOptions heat;
  auto* hm = app.add_subcommand("heatmap", "Render |C| as a grayscale image");
  hm->add_option("--couplings", heat.couplings, "Couplings file")->required();
  hm->add_option("--zoom", heat.zoom, "Bin window a:b");
  hm->add_flag("--row-normalize", heat.row_normalize, "Divide each row by its maximum");
  hm->add_option("--out", heat.out, "PGM file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error:usage: " << one_line(e.what()) << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  RunManifest manifest(sub->get_name(), std::vector<std::string>(argv, argv + argc));
  manifest.set_flags(sub->config_to_str(true, false));
  try {
    std::filesystem::path mpath;
    if (sub == s) mpath = run_synth(synth, manifest);
    if (sub == in) mpath = run_ingest(ingest, manifest);
    if (sub == tr) mpath = run_train(train, manifest);
    if (sub == nc) mpath = run_nca(nca, manifest);
    if (sub == an) mpath = run_analyze(analyze, manifest);
    if (sub == hm) mpath = run_heatmap(heat, manifest);
    std::cout << "manifest: " << mpath.string() << "\n";
  } catch (const ncouple::Error& e) {
    std::cerr << "error:" << e.kind() << ": " << one_line(e.what()) << "\n";
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error:io: " << one_line(e.what()) << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error:internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
