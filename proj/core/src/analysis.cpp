#include "ncouple/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "ncouple/error.hpp"

namespace ncouple {

Mat linear_composition(const ModelParams& params) {
  if (params.layers.empty()) return Mat::identity(params.n);
  Mat c = params.layers.front().w;
  for (std::size_t l = 1; l < params.layers.size(); ++l) c = matmul(params.layers[l].w, c);
  return c;
}

std::optional<double> tod_r(const Mat& c) {
  if (!c.is_square()) throw ShapeError("tod_r: matrix is not square: " + c.shape_str());
  const double diag = trace_abs(c);
  double off = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j)
      if (i != j) off += std::fabs(c(i, j));
  if (off == 0.0) return std::nullopt;
  return std::sqrt(static_cast<double>(c.rows())) * diag / off;
}

double snr_db(const Mat& reference, const Mat& estimate) {
  const double signal = l2_norm_sq(reference);
  if (signal == 0.0) throw ConfigError("snr_db: reference is all zero");
  const double noise = l2_norm_sq(sub(reference, estimate));
  if (noise == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(signal / noise));
}

Mat couplings_estimate(ArchTag arch, const Mat& couplings, const Mat& mixture) {
  Mat est = relu(matmul(couplings, mixture));
  if (arch == ArchTag::sf) est = hadamard(est, mixture);
  return est;
}

namespace {

MetricsRecord score_estimate(const ModelParams& params, const Mat& est, const Mat& mixture, const Mat& truth,
                             std::string method, std::string segment) {
  if (truth.rows() != mixture.rows() || truth.cols() != mixture.cols()) {
    throw ShapeError("evaluate_segment: truth " + truth.shape_str() + " vs mixture " + mixture.shape_str());
  }
  const Mat model_out = forward(params, mixture).output;
  MetricsRecord rec;
  rec.arch = params.arch.tag;
  rec.method = std::move(method);
  rec.segment = std::move(segment);
  rec.snr_model_db = snr_db(model_out, est);
  rec.snr_truth_db = snr_db(truth, est);
  return rec;
}

}  // namespace

MetricsRecord evaluate_segment(const ModelParams& params, const Mat& couplings, const Mat& mixture,
                               const Mat& truth, std::string method, std::string segment, bool with_tod_r) {
  const Mat est = couplings_estimate(params.arch.tag, couplings, mixture);
  MetricsRecord rec = score_estimate(params, est, mixture, truth, std::move(method), std::move(segment));
  if (with_tod_r) rec.tod_r = tod_r(couplings);
  return rec;
}

std::vector<MetricsRecord> evaluate_baselines(const ModelParams& params, const Mat& mixture, const Mat& truth,
                                              const std::string& segment) {
  // The identity baseline uses the mixture itself as the estimate for every
  // architecture, so for SF it is not routed through the mask product.
  return {evaluate_segment(params, linear_composition(params), mixture, truth, method::linear_composition, segment,
                           false),
          score_estimate(params, mixture, mixture, truth, method::identity, segment)};
}

Stat population_stat(std::span<const double> values) {
  Stat s;
  s.count = values.size();
  if (values.empty()) return s;
  double acc = 0.0;
  for (double v : values) acc += v;
  s.mean = acc / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

Report aggregate(std::vector<MetricsRecord> records) {
  Report report;
  std::map<std::pair<ArchTag, std::string>, std::vector<const MetricsRecord*>> groups;
  for (const auto& r : records) groups[{r.arch, r.method}].push_back(&r);

  for (const auto& [key, members] : groups) {
    ReportCell cell;
    cell.arch = key.first;
    cell.method = key.second;
    cell.records = members.size();
    std::vector<double> tods, snr_model, snr_truth;
    for (const MetricsRecord* r : members) {
      if (r->tod_r) {
        tods.push_back(*r->tod_r);
      } else {
        ++cell.tod_r_excluded;
      }
      snr_model.push_back(r->snr_model_db);
      snr_truth.push_back(r->snr_truth_db);
    }
    if (!tods.empty()) {
      cell.tod_r = population_stat(tods);
    } else {
      report.warnings.push_back("TOD-R omitted for " + std::string(to_string(cell.arch)) + "/" + cell.method + ": " +
                                std::to_string(cell.tod_r_excluded) + " undefined records");
    }
    cell.snr_model_db = population_stat(snr_model);
    cell.snr_truth_db = population_stat(snr_truth);
    report.cells.push_back(std::move(cell));
  }
  report.records = std::move(records);
  return report;
}

}  // namespace ncouple
