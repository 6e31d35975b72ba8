#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "ncouple/mat.hpp"
#include "ncouple/model.hpp"
#include "ncouple/nca.hpp"
#include "ncouple/rng.hpp"
#include "ncouple/spectral.hpp"

using namespace ncouple;

namespace {

Mat random_mat(Rng& rng, std::size_t r, std::size_t c, double lo, double hi) {
  Mat m(r, c);
  for (double& v : m.data()) v = lo + (hi - lo) * rng.uniform();
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Mat a = random_mat(rng, n, n, -1, 1);
  const Mat b = random_mat(rng, n, 350, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * 350));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(513);

void BM_ForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Arch arch = state.range(1) == 0 ? Arch::dae() : Arch::mss_dae();
  Rng rng(2);
  const ModelParams p = init_params(arch, n, rng);
  const Mat x = random_mat(rng, n, 128, 0, 1);
  for (auto _ : state) {
    const auto tr = forward(p, x);
    benchmark::DoNotOptimize(backward(p, tr, x));
  }
}
BENCHMARK(BM_ForwardBackward)->Args({64, 0})->Args({64, 1})->Args({256, 1});

void BM_NcaStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  NcaConfig cfg;
  cfg.strategy = state.range(1) == 0 ? Strategy::student : Strategy::compositional;
  Rng rng(3);
  const ModelParams p = init_params(Arch::mss_dae(), n, rng);
  const TargetBatch b = make_target(p, random_mat(rng, n, cfg.batch_frames, 0, 1));
  NcaState st = init_nca_state(p, cfg);
  for (auto _ : state) nca_step(st, p, b);
}
BENCHMARK(BM_NcaStep)->Args({64, 0})->Args({64, 1})->Args({256, 1});

void BM_Stft(benchmark::State& state) {
  StftConfig cfg;
  cfg.fft_size = static_cast<std::uint32_t>(state.range(0));
  cfg.window_len = cfg.fft_size / 2;
  cfg.hop = cfg.window_len / 4;
  cfg.bins_kept = cfg.fft_size / 2 + 1;
  std::vector<float> signal(44100 * 10);
  for (std::size_t i = 0; i < signal.size(); ++i) signal[i] = static_cast<float>(std::sin(0.01 * i));
  for (auto _ : state) benchmark::DoNotOptimize(stft_mag(signal, cfg));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(signal.size() * sizeof(float)));
}
BENCHMARK(BM_Stft)->Arg(128)->Arg(4096)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
