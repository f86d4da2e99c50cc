#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "matteforge/metrics/metrics.hpp"

namespace mf::metrics {

std::string report_to_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["convention"] =
      "SAD, Grad and Conn are sums over the trimap unknown region divided by 1000; "
      "MSE is the mean squared error over the unknown region with alpha in [0,1]";
  auto rows = nlohmann::ordered_json::array();
  for (const auto& s : report.samples) {
    nlohmann::ordered_json row;
    row["id"] = s.id;
    row["sad"] = s.sad;
    row["mse"] = s.mse ? nlohmann::ordered_json(*s.mse) : nlohmann::ordered_json(nullptr);
    row["grad"] = s.grad;
    row["conn"] = s.conn;
    rows.push_back(row);
  }
  j["samples"] = rows;
  j["mean"] = {{"id", "mean"},
               {"sad", report.mean_sad},
               {"mse", report.mean_mse},
               {"grad", report.mean_grad},
               {"conn", report.mean_conn}};
  j["count"] = report.samples.size();
  j["undefined_mse"] = report.undefined_mse;
  return j.dump(2) + "\n";
}

std::string report_to_table(const MetricReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %10s %10s %10s %10s\n", "sample", "SAD", "MSE", "Grad", "Conn");
  os << line;
  for (const auto& s : report.samples) {
    if (s.mse) {
      std::snprintf(line, sizeof line, "%-28s %10.4f %10.6f %10.4f %10.4f\n", s.id.c_str(), s.sad,
                    *s.mse, s.grad, s.conn);
    } else {
      std::snprintf(line, sizeof line, "%-28s %10.4f %10s %10.4f %10.4f\n", s.id.c_str(), s.sad, "n/a",
                    s.grad, s.conn);
    }
    os << line;
  }
  std::snprintf(line, sizeof line, "%-28s %10.4f %10.6f %10.4f %10.4f\n", "mean", report.mean_sad,
                report.mean_mse, report.mean_grad, report.mean_conn);
  os << line;
  return os.str();
}

}  // namespace mf::metrics
