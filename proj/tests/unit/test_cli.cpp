#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "ncouple/hash.hpp"
#include "ncouple/nca.hpp"
#include "ncouple/rng.hpp"
#include "ncouple/spectral.hpp"
#include "ncouple/wav.hpp"
#include "support.hpp"

namespace ncouple {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunResult run_cli(const test::TempDir& dir, const std::string& args) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + NCOUPLE_CLI_PATH + "' " + args + " > '" + (dir / "stdout.txt").string() +
                          "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void write_tone(const fs::path& path, double freq, double seconds, std::uint32_t sr) {
  std::vector<float> s(static_cast<std::size_t>(seconds * sr));
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<float>(0.3 * std::sin(2 * M_PI * freq * i / sr));
  write_wav(path, s, 1, sr, 16);
}

TEST(Cli, IngestTwoPairs) {
  test::TempDir dir("cli-ingest");
  fs::create_directories(dir / "wav");
  for (const char* t : {"a", "b"}) {
    write_tone(dir / "wav" / (std::string(t) + ".mix.wav"), 440, 0.5, 8000);
    write_tone(dir / "wav" / (std::string(t) + ".vox.wav"), 220, 0.5, 8000);
  }
  const auto r = run_cli(dir, "ingest --input " + q(dir / "wav") + " --out " + q(dir / "d.ncd") +
                                  " --fft 128 --window 64 --hop 16 --sr 8000");
  ASSERT_EQ(r.code, 0) << r.err;
  const Dataset ds = load_dataset(dir / "d.ncd");
  ASSERT_EQ(ds.pairs.size(), 2u);
  EXPECT_EQ(ds.pairs[0].id, "a");
  EXPECT_EQ(ds.pairs[0].mixture.rows(), 65u);
}

TEST(Cli, IngestTenSecondsAtFft128IsFast) {
  test::TempDir dir("cli-ingest-speed");
  fs::create_directories(dir / "wav");
  write_tone(dir / "wav" / "t.mix.wav", 440, 10.0, 44100);
  write_tone(dir / "wav" / "t.vox.wav", 220, 10.0, 44100);
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_cli(dir, "ingest --input " + q(dir / "wav") + " --out " + q(dir / "d.ncd") +
                                  " --fft 128 --window 64 --hop 16");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(secs, 5.0);
}

TEST(Cli, IngestMissingVoxNamesTrack) {
  test::TempDir dir("cli-unpaired");
  fs::create_directories(dir / "wav");
  write_tone(dir / "wav" / "good.mix.wav", 440, 0.2, 8000);
  write_tone(dir / "wav" / "good.vox.wav", 440, 0.2, 8000);
  write_tone(dir / "wav" / "lonely.mix.wav", 440, 0.2, 8000);
  const auto r = run_cli(dir, "ingest --input " + q(dir / "wav") + " --out " + q(dir / "d.ncd") + " --sr 8000");
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.err.rfind("error:io:", 0), 0u) << r.err;
  EXPECT_NE(r.err.find("lonely"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "d.ncd"));
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new test::TempDir("cli-pipeline");
    run_or_die("synth --out " + q(*dir_ / "train.ncd") + " --n 16 --frames 400 --tracks 2 --seed 1");
    run_or_die("synth --out " + q(*dir_ / "test.ncd") + " --n 16 --frames 100 --tracks 1 --seed 2 --scaler-from " +
               q(*dir_ / "train.ncd"));
    for (const char* m : {"dae", "mss-dae", "sf"}) {
      run_or_die(std::string("train --model ") + m + " --dataset " + q(*dir_ / "train.ncd") +
                 " --seeds 0 --max-epochs 3 --out " + q(*dir_ / "ckpt"));
      for (const char* s : {"student", "compositional"}) {
        run_or_die(std::string("nca --checkpoint ") + q(*dir_ / "ckpt" / (std::string(m) + "-seed0.ncm")) +
                   " --dataset " + q(*dir_ / "test.ncd") + " --strategy " + s +
                   " --iters 20 --frames 50 --out " + q(*dir_ / "ncc"));
      }
    }
    run_or_die("analyze --couplings " + q(*dir_ / "ncc" / "*.ncc") + " --checkpoints " + q(*dir_ / "ckpt") +
               " --dataset " + q(*dir_ / "test.ncd") + " --out " + q(*dir_ / "report"));
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static void run_or_die(const std::string& args) {
    const auto r = run_cli(*dir_, args);
    ASSERT_EQ(r.code, 0) << args << "\n" << r.err;
  }
  static test::TempDir* dir_;
};

test::TempDir* CliPipeline::dir_ = nullptr;

TEST_F(CliPipeline, SfCompositionalCouplingsCarryStrategy) {
  const auto f = load_couplings(*dir_ / "ncc" / "sf-seed0.compositional.seg0.ncc");
  EXPECT_EQ(f.strategy, "compositional");
  EXPECT_EQ(f.arch, "sf");
  EXPECT_EQ(f.checkpoint_hash, sha256_file(*dir_ / "ckpt" / "sf-seed0.ncm"));
  EXPECT_EQ(f.iterations, 20u);
  EXPECT_EQ(f.segment_id, "seg0/pair0/0-50");
}

TEST_F(CliPipeline, EachRunDrawsItsOwnInitialisation) {
  const auto a = load_couplings(*dir_ / "ncc" / "dae-seed0.student.seg0.ncc");
  const auto b = load_couplings(*dir_ / "ncc" / "dae-seed0.student.seg1.ncc");
  EXPECT_NE(a.seed, b.seed);
  EXPECT_EQ(a.seed, derive_seed(derive_seed(0, 0), 0));
  EXPECT_EQ(b.seed, derive_seed(derive_seed(0, 0), 1));
}

TEST_F(CliPipeline, ReportHasSixTodRCells) {
  const auto j = nlohmann::json::parse(slurp(*dir_ / "report.json"));
  int defined = 0;
  for (const char* m : {"dae", "mss-dae", "sf"}) {
    for (const char* s : {"student", "compositional"}) defined += !j["cells"][m][s]["tod_r"].is_null();
    EXPECT_TRUE(j["cells"][m]["linear_composition"]["tod_r"].is_null());
    EXPECT_TRUE(j["cells"][m]["identity"]["tod_r"].is_null());
  }
  EXPECT_EQ(defined, 6);
  EXPECT_TRUE(fs::exists(*dir_ / "report.csv"));
}

TEST_F(CliPipeline, ManifestRecordsFlagsInputsAndTimings) {
  const auto j = nlohmann::json::parse(slurp(*dir_ / "report.manifest.json"));
  EXPECT_EQ(j["command"], "analyze");
  EXPECT_NE(j["flags"].get<std::string>().find("couplings"), std::string::npos);
  EXPECT_GE(j["inputs"].size(), 7u);
  EXPECT_FALSE(j["timings"].empty());
  for (const auto& in : j["inputs"]) EXPECT_EQ(in["sha256"], sha256_file(in["path"].get<std::string>()));
}

TEST_F(CliPipeline, RerunIsIdempotent) {
  const fs::path ckpt = *dir_ / "ckpt" / "dae-seed0.ncm";
  const fs::path ncc = *dir_ / "ncc" / "dae-seed0.student.seg1.ncc";
  const std::string h1 = sha256_file(ckpt), h2 = sha256_file(ncc), h3 = sha256_file(*dir_ / "report.csv");
  run_or_die("train --model dae --dataset " + q(*dir_ / "train.ncd") + " --seeds 0 --max-epochs 3 --out " +
             q(*dir_ / "ckpt"));
  run_or_die("nca --checkpoint " + q(ckpt) + " --dataset " + q(*dir_ / "test.ncd") +
             " --strategy student --iters 20 --frames 50 --out " + q(*dir_ / "ncc"));
  run_or_die("analyze --couplings " + q(*dir_ / "ncc" / "*.ncc") + " --checkpoints " + q(*dir_ / "ckpt") +
             " --dataset " + q(*dir_ / "test.ncd") + " --out " + q(*dir_ / "report"));
  EXPECT_EQ(sha256_file(ckpt), h1);
  EXPECT_EQ(sha256_file(ncc), h2);
  EXPECT_EQ(sha256_file(*dir_ / "report.csv"), h3);
}

TEST_F(CliPipeline, HeatmapWritesPgm) {
  run_or_die("heatmap --couplings " + q(*dir_ / "ncc" / "sf-seed0.compositional.seg0.ncc") +
             " --zoom 0:8 --row-normalize --out " + q(*dir_ / "h.pgm"));
  EXPECT_EQ(slurp(*dir_ / "h.pgm").rfind("P5\n8 8\n255\n", 0), 0u);
  const auto r = run_cli(*dir_, "heatmap --couplings " + q(*dir_ / "ncc" / "sf-seed0.compositional.seg0.ncc") +
                                    " --zoom 8:2 --out " + q(*dir_ / "bad.pgm"));
  EXPECT_EQ(r.code, 6);
  EXPECT_EQ(r.err.rfind("error:config:", 0), 0u);
}

TEST(Cli, ExitCodesAndErrorLine) {
  test::TempDir dir("cli-errors");
  auto r = run_cli(dir, "nca --checkpoint " + q(dir / "missing.ncm") + " --dataset " + q(dir / "x.ncd") +
                            " --out " + q(dir / "o"));
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.err.rfind("error:io:", 0), 0u);
  r = run_cli(dir, "frobnicate");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error:usage:", 0), 0u);
  r = run_cli(dir, "synth --out " + q(dir / "d.ncd") + " --n 16 --frames 100 --tracks 1");
  ASSERT_EQ(r.code, 0);
  r = run_cli(dir, "train --model rnn --dataset " + q(dir / "d.ncd") + " --out " + q(dir / "c"));
  EXPECT_EQ(r.code, 6);
  std::ofstream(dir / "junk.ncd") << "not a dataset";
  r = run_cli(dir, "train --model dae --dataset " + q(dir / "junk.ncd") + " --out " + q(dir / "c"));
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(r.err.rfind("error:format:", 0), 0u);
  auto bytes = encode_dataset(load_dataset(dir / "d.ncd"));
  bytes[4] = 99;
  std::ofstream(dir / "future.ncd", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  r = run_cli(dir, "train --model dae --dataset " + q(dir / "future.ncd") + " --out " + q(dir / "c"));
  EXPECT_EQ(r.code, 5);
  EXPECT_EQ(r.err.rfind("error:version:", 0), 0u);
}

}  // namespace
}  // namespace ncouple
