#include <sstream>

#include <json.hpp>

#include "ncouple/analysis.hpp"

namespace ncouple {

namespace {

nlohmann::json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; }

}  // namespace

std::string report_csv(const Report& report) {
  std::ostringstream out;
  out.precision(17);
  out << "arch,method,segment,tod_r,snr_model_db,snr_truth_db\n";
  for (const auto& r : report.records) {
    out << to_string(r.arch) << ',' << r.method << ',' << r.segment << ',';
    if (r.tod_r) out << *r.tod_r;
    out << ',' << r.snr_model_db << ',' << r.snr_truth_db << '\n';
  }
  return out.str();
}

std::string report_json(const Report& report) {
  nlohmann::json cells = nlohmann::json::object();
  for (const auto& c : report.cells) {
    nlohmann::json cell = {
        {"records", c.records},
        {"tod_r", c.tod_r ? stat_json(*c.tod_r) : nlohmann::json(nullptr)},
        {"tod_r_excluded", c.tod_r_excluded},
        {"snr_model_db", stat_json(c.snr_model_db)},
        {"snr_truth_db", stat_json(c.snr_truth_db)},
    };
    cells[std::string(to_string(c.arch))][c.method] = std::move(cell);
  }
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) {
    records.push_back({{"arch", to_string(r.arch)},
                       {"method", r.method},
                       {"segment", r.segment},
                       {"tod_r", r.tod_r ? nlohmann::json(*r.tod_r) : nlohmann::json(nullptr)},
                       {"snr_model_db", r.snr_model_db},
                       {"snr_truth_db", r.snr_truth_db}});
  }
  const nlohmann::json doc = {{"cells", cells}, {"records", records}, {"warnings", report.warnings}};
  return doc.dump(2) + "\n";
}

}  // namespace ncouple
