#include "bmilasso/report.hpp"

#include <cstdio>
#include <stdexcept>

#include "bmilasso/numeric.hpp"
#include "bmilasso/stack_io.hpp"

namespace bmilasso {

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument("report: " + message);
}

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

}  // namespace

std::vector<ScanCurveRow> scan_curve(
    const std::vector<std::vector<ScanRow>>& per_replication) {
  if (per_replication.empty()) {
    fail("scan curve needs at least one replication");
  }
  const std::size_t rows = per_replication.front().size();
  if (rows == 0) fail("scan curve needs at least one scanned width");
  for (const auto& scan : per_replication) {
    if (scan.size() != rows) {
      fail("replications scanned different width grids");
    }
    for (std::size_t r = 0; r < rows; ++r) {
      if (scan[r].x_pct != per_replication.front()[r].x_pct) {
        fail("replications scanned different width grids");
      }
    }
  }

  std::vector<ScanCurveRow> curve(rows);
  std::vector<double> sen(per_replication.size());
  std::vector<double> spe(per_replication.size());
  std::vector<double> dist(per_replication.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < per_replication.size(); ++i) {
      sen[i] = per_replication[i][r].sensitivity;
      spe[i] = per_replication[i][r].specificity;
      dist[i] = per_replication[i][r].distance;
    }
    curve[r].x_pct = per_replication.front()[r].x_pct;
    curve[r].sensitivity = compensated_mean(sen);
    curve[r].specificity = compensated_mean(spe);
    curve[r].distance = compensated_mean(dist);
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < rows; ++r) {
    if (curve[r].distance >= curve[best].distance) best = r;
  }
  curve[best].best = true;
  return curve;
}

std::string scan_curve_csv(const std::vector<ScanCurveRow>& curve) {
  std::string out = "x_pct,sensitivity,specificity,distance,best\n";
  for (const ScanCurveRow& row : curve) {
    out += format_double(row.x_pct) + "," + format_double(row.sensitivity) +
           "," + format_double(row.specificity) + "," +
           format_double(row.distance) + "," + (row.best ? "1" : "0") + "\n";
  }
  return out;
}

namespace {

std::string table_csv(const std::vector<ArmSummary>& table, bool scaled) {
  std::string out =
      "arm,replications,sen,sen_se,spe,spe_se,f1,f1_se,mse,mse_se,note\n";
  for (const ArmSummary& row : table) {
    out += row.arm + "," + std::to_string(row.replications) + ",";
    if (row.replications == 0) {
      out += ",,,,,,,,\n";
      continue;
    }
    const auto rate = [&](double v) {
      return scaled ? format_fixed(100.0 * v, 1) : format_double(v);
    };
    const auto error = [&](double v) {
      return scaled ? format_fixed(v, 3) : format_double(v);
    };
    out += rate(row.sen_mean) + "," + rate(row.sen_se) + "," +
           rate(row.spe_mean) + "," + rate(row.spe_se) + "," +
           rate(row.f1_mean) + "," + rate(row.f1_se) + "," +
           error(row.mse_mean) + "," + error(row.mse_se) + ",";
    out += row.se_flagged ? "single_replication" : "";
    out += "\n";
  }
  return out;
}

}  // namespace

std::string table_report_csv(const std::vector<ArmSummary>& table) {
  return table_csv(table, true);
}

std::string table_report_raw_csv(const std::vector<ArmSummary>& table) {
  return table_csv(table, false);
}

}  // namespace bmilasso
