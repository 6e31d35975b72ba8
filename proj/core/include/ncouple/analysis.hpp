#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncouple/mat.hpp"
#include "ncouple/model.hpp"

namespace ncouple {

// W_L ... W_1, biases ignored: the mapping a purely linear model would have.
Mat linear_composition(const ModelParams& params);

// sqrt(N) * tr(|C|) / ||C (.) (J - I)||_1. Empty when the off-diagonal mass is
// zero. Throws ShapeError for non-square input.
std::optional<double> tod_r(const Mat& c);

inline constexpr double kSnrCapDb = 300.0;

// 10 log10(||ref||^2 / ||ref - est||^2), capped at kSnrCapDb.
double snr_db(const Mat& reference, const Mat& estimate);

namespace method {
inline constexpr const char* student = "student";
inline constexpr const char* compositional = "compositional";
inline constexpr const char* linear_composition = "linear_composition";
inline constexpr const char* identity = "identity";
}  // namespace method

struct MetricsRecord {
  ArchTag arch = ArchTag::dae;
  std::string method;
  std::string segment;
  std::optional<double> tod_r;
  double snr_model_db = 0.0;
  double snr_truth_db = 0.0;
};

// Spectral estimate implied by a couplings matrix: relu(C X) for DAE/MSS-DAE,
// relu(C X) (.) X for SF (the couplings predict a mask).
Mat couplings_estimate(ArchTag arch, const Mat& couplings, const Mat& mixture);

// Scores `couplings` on one segment against the model's output and against
// the true source. `with_tod_r` is false for baselines.
MetricsRecord evaluate_segment(const ModelParams& params, const Mat& couplings, const Mat& mixture,
                               const Mat& truth, std::string method, std::string segment, bool with_tod_r = true);

// Linear-composition and identity records for one segment. The identity
// estimate is the mixture itself for every architecture.
std::vector<MetricsRecord> evaluate_baselines(const ModelParams& params, const Mat& mixture, const Mat& truth,
                                              const std::string& segment);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

struct ReportCell {
  ArchTag arch = ArchTag::dae;
  std::string method;
  std::size_t records = 0;
  std::optional<Stat> tod_r;          // empty when every record is undefined
  std::size_t tod_r_excluded = 0;     // records without a defined TOD-R
  Stat snr_model_db;
  Stat snr_truth_db;
};

struct Report {
  std::vector<ReportCell> cells;  // sorted by (arch, method)
  std::vector<MetricsRecord> records;
  std::vector<std::string> warnings;
};

Stat population_stat(std::span<const double> values);
Report aggregate(std::vector<MetricsRecord> records);

// Fixed column order: arch, method, segment, tod_r, snr_model_db, snr_truth_db.
std::string report_csv(const Report& report);
std::string report_json(const Report& report);

}  // namespace ncouple
