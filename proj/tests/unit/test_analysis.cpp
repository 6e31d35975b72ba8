#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "ncouple/analysis.hpp"
#include "ncouple/error.hpp"
#include "ncouple/heatmap.hpp"
#include "ncouple/binio.hpp"
#include "support.hpp"

namespace ncouple {
namespace {

using test::random_mat;

TEST(TodR, Examples) {
  EXPECT_NEAR(*tod_r(Mat::ones(4, 4)), 2.0 * 4.0 / 12.0, 1e-12);
  EXPECT_NEAR(*tod_r(Mat::from_rows({{1, 2}, {3, -4}})), std::sqrt(2.0), 1e-12);
  EXPECT_EQ(*tod_r(Mat::from_rows({{0, 1}, {1, 0}})), 0.0);
}

TEST(TodR, DiagonalIsUndefined) {
  EXPECT_FALSE(tod_r(Mat::identity(5)).has_value());
  EXPECT_FALSE(tod_r(Mat(3, 3)).has_value());
}

TEST(TodR, NonSquareThrows) { EXPECT_THROW(tod_r(Mat(2, 3)), ShapeError); }

TEST(TodR, ScaleInvariant) {
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + rng.below(9);
    const Mat c = random_mat(rng, n, n);
    const double a = std::pow(10.0, test::uniform(rng, -3.0, 3.0)) * (rng.below(2) ? -1.0 : 1.0);
    const double base = *tod_r(c);
    EXPECT_LE(std::fabs(*tod_r(scale(c, a)) - base), 1e-9 * base + 1e-12);
  }
}

TEST(Snr, Examples) {
  const Mat ref = Mat::column({1, 2, 3});
  EXPECT_EQ(snr_db(ref, ref), kSnrCapDb);
  EXPECT_NEAR(snr_db(ref, Mat(3, 1)), 0.0, 1e-12);
  EXPECT_NEAR(snr_db(Mat::column({1, 0}), Mat::column({1, 1})), 0.0, 1e-12);
  EXPECT_NEAR(snr_db(Mat::column({10}), Mat::column({9})), 20.0, 1e-12);
  EXPECT_THROW(snr_db(Mat(3, 1), ref), ConfigError);
}

TEST(Snr, DecreasesWithNoise) {
  Rng rng(2);
  const Mat ref = random_mat(rng, 8, 10, 0.0, 1.0);
  const Mat noise = random_mat(rng, 8, 10);
  double prev = INFINITY;
  for (double s : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const double v = snr_db(ref, add(ref, scale(noise, s)));
    EXPECT_LT(v, prev);
    prev = v;
  }
}

ModelParams identity_params(Arch arch, std::size_t n) {
  ModelParams p{arch, n, {}};
  for (std::size_t l = 0; l < arch.layer_count(); ++l) p.layers.push_back({Mat::identity(n), Mat(n, 1)});
  return p;
}

TEST(EvaluateSegment, ZeroCouplingsGiveZeroDbAgainstModel) {
  Rng rng(3);
  const auto p = identity_params(Arch::dae(), 4);
  const Mat x = random_mat(rng, 4, 6, 0.1, 1.0);
  const auto r = evaluate_segment(p, Mat(4, 4), x, x, method::student, "s");
  EXPECT_NEAR(r.snr_model_db, 0.0, 1e-12);
  EXPECT_FALSE(r.tod_r.has_value());
  EXPECT_EQ(r.method, "student");
}

TEST(EvaluateSegment, IdentityCouplingsReproduceIdentityModel) {
  Rng rng(4);
  const auto p = identity_params(Arch::mss_dae(), 4);
  const Mat x = random_mat(rng, 4, 6, 0.1, 1.0);
  const auto r = evaluate_segment(p, Mat::identity(4), x, random_mat(rng, 4, 6, 0.0, 1.0), method::compositional, "s");
  EXPECT_EQ(r.snr_model_db, kSnrCapDb);
}

TEST(EvaluateSegment, SfEstimateIsMasked) {
  const Mat x = Mat::column({0.5, 2});
  EXPECT_EQ(couplings_estimate(ArchTag::sf, Mat::identity(2), x), Mat::column({0.25, 4}));
  EXPECT_EQ(couplings_estimate(ArchTag::dae, Mat::identity(2), x), x);
  EXPECT_EQ(couplings_estimate(ArchTag::dae, scale(Mat::identity(2), -1), x), Mat(2, 1));
}

TEST(EvaluateBaselines, IdentityEstimateIsMixtureForEveryArch) {
  Rng rng(5);
  for (Arch arch : {Arch::dae(), Arch::mss_dae(), Arch::sf()}) {
    ModelParams p{arch, 4, {}};
    for (std::size_t l = 0; l < arch.layer_count(); ++l) p.layers.push_back({random_mat(rng, 4, 4), random_mat(rng, 4, 1)});
    const Mat x = random_mat(rng, 4, 5, 0.1, 1.0);
    const Mat truth = random_mat(rng, 4, 5, 0.0, 1.0);
    const auto recs = evaluate_baselines(p, x, truth, "seg");
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].method, method::linear_composition);
    EXPECT_FALSE(recs[0].tod_r.has_value());
    EXPECT_EQ(recs[0].snr_model_db, snr_db(forward(p, x).output, couplings_estimate(arch.tag, linear_composition(p), x)));
    EXPECT_EQ(recs[1].method, method::identity);
    EXPECT_EQ(recs[1].snr_model_db, snr_db(forward(p, x).output, x));
    EXPECT_EQ(recs[1].snr_truth_db, snr_db(truth, x));
  }
}

TEST(EvaluateSegment, ShapeMismatchThrows) {
  const auto p = identity_params(Arch::dae(), 3);
  EXPECT_THROW(evaluate_segment(p, Mat::identity(3), Mat(3, 4, 1.0), Mat(3, 5, 1.0), "m", "s"), ShapeError);
}

TEST(LinearComposition, ProductInLayerOrder) {
  ModelParams p{Arch::dae(), 2, {}};
  p.layers.push_back({Mat::from_rows({{1, 1}, {0, 1}}), Mat(2, 1)});
  p.layers.push_back({Mat::from_rows({{2, 0}, {1, 0}}), Mat(2, 1)});
  EXPECT_EQ(linear_composition(p), Mat::from_rows({{2, 2}, {1, 1}}));
}

MetricsRecord rec(ArchTag a, std::string m, std::optional<double> t, double snr) {
  return {a, std::move(m), "s", t, snr, snr - 1};
}

TEST(Aggregate, SingleRecordHasZeroStd) {
  const auto r = aggregate({rec(ArchTag::sf, "student", 0.5, 3.0)});
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.cells[0].tod_r->mean, 0.5);
  EXPECT_EQ(r.cells[0].tod_r->std, 0.0);
  EXPECT_EQ(r.cells[0].snr_model_db.std, 0.0);
}

TEST(Aggregate, PopulationMeanAndStd) {
  const auto r = aggregate({rec(ArchTag::dae, "student", 4.0, 1.0), rec(ArchTag::dae, "student", 6.0, 3.0)});
  EXPECT_EQ(r.cells[0].tod_r->mean, 5.0);
  EXPECT_EQ(r.cells[0].tod_r->std, 1.0);
  EXPECT_EQ(r.cells[0].snr_model_db.mean, 2.0);
  EXPECT_EQ(r.cells[0].records, 2u);
}

TEST(Aggregate, UndefinedTodRExcludedWithWarning) {
  auto r = aggregate({rec(ArchTag::dae, "student", std::nullopt, 1.0), rec(ArchTag::dae, "student", 2.0, 1.0)});
  EXPECT_EQ(r.cells[0].tod_r_excluded, 1u);
  EXPECT_EQ(r.cells[0].tod_r->mean, 2.0);
  EXPECT_TRUE(r.warnings.empty());
  r = aggregate({rec(ArchTag::mss_dae, "compositional", std::nullopt, 1.0)});
  EXPECT_FALSE(r.cells[0].tod_r.has_value());
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("mss-dae/compositional"), std::string::npos);
}

TEST(Aggregate, CellsSortedAndMeanWithinRange) {
  Rng rng(6);
  std::vector<MetricsRecord> recs;
  for (int k = 0; k < 60; ++k) {
    const ArchTag a = static_cast<ArchTag>(rng.below(3));
    recs.push_back(rec(a, rng.below(2) ? "student" : "compositional", test::uniform(rng, 0.0, 2.0), test::uniform(rng, -5.0, 20.0)));
  }
  const auto r = aggregate(recs);
  for (std::size_t i = 1; i < r.cells.size(); ++i) {
    EXPECT_TRUE(std::pair(r.cells[i - 1].arch, r.cells[i - 1].method) < std::pair(r.cells[i].arch, r.cells[i].method));
  }
  for (const auto& c : r.cells) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& x : recs) {
      if (x.arch == c.arch && x.method == c.method) {
        lo = std::min(lo, *x.tod_r);
        hi = std::max(hi, *x.tod_r);
      }
    }
    EXPECT_GE(c.tod_r->mean, lo - 1e-12);
    EXPECT_LE(c.tod_r->mean, hi + 1e-12);
    EXPECT_GE(c.tod_r->std, 0.0);
  }
}

TEST(Report, CsvColumnOrderAndEmptyTodR) {
  const auto r = aggregate({rec(ArchTag::sf, "identity", std::nullopt, 2.0), rec(ArchTag::dae, "student", 0.25, 1.5)});
  EXPECT_EQ(report_csv(r),
            "arch,method,segment,tod_r,snr_model_db,snr_truth_db\n"
            "sf,identity,s,,2,1\n"
            "dae,student,s,0.25,1.5,0.5\n");
}

TEST(Report, JsonNestsCellsByArchAndMethod) {
  const auto r = aggregate({rec(ArchTag::sf, "identity", std::nullopt, 2.0), rec(ArchTag::dae, "student", 0.25, 1.5)});
  const auto j = nlohmann::json::parse(report_json(r));
  EXPECT_TRUE(j["cells"]["sf"]["identity"]["tod_r"].is_null());
  EXPECT_EQ(j["cells"]["dae"]["student"]["tod_r"]["mean"], 0.25);
  EXPECT_EQ(j["records"].size(), 2u);
}

TEST(Heatmap, IdentityIsWhiteDiagonal) {
  const auto img = render_heatmap(Mat::identity(3), {});
  EXPECT_EQ(img.width, 3u);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{255, 0, 0, 0, 255, 0, 0, 0, 255}));
}

TEST(Heatmap, RowNormalizeSaturatesEveryNonZeroRow) {
  const Mat c = Mat::from_rows({{1, 0.5, 0}, {0, 0, 0}, {-0.01, 0, 0.002}});
  const auto img = render_heatmap(c, {0, 0, true});
  EXPECT_EQ(img.pixels[0], 255);
  EXPECT_EQ(img.pixels[1], 128);
  EXPECT_EQ(img.pixels[3] + img.pixels[4] + img.pixels[5], 0);
  EXPECT_EQ(img.pixels[6], 255);
  const auto global = render_heatmap(c, {});
  EXPECT_EQ(global.pixels[6], 3);
}

TEST(Heatmap, ZoomWindowAndErrors) {
  Mat c(4, 4);
  c(2, 3) = 2.0;
  c(0, 0) = 100.0;
  const auto img = render_heatmap(c, {2, 4, false});
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 255, 0, 0}));
  EXPECT_THROW(render_heatmap(c, {3, 3, false}), ConfigError);
  EXPECT_THROW(render_heatmap(c, {0, 5, false}), ConfigError);
  EXPECT_THROW(render_heatmap(Mat(2, 3), {}), ShapeError);
}

TEST(Heatmap, PgmEncoding) {
  test::TempDir dir("pgm");
  export_heatmap(Mat::identity(2), {}, dir / "h.pgm");
  const auto bytes = read_file(dir / "h.pgm");
  const std::string head = "P5\n2 2\n255\n";
  ASSERT_EQ(bytes.size(), head.size() + 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + head.size()), head);
  EXPECT_EQ(bytes.back(), 255);
}

}  // namespace
}  // namespace ncouple
