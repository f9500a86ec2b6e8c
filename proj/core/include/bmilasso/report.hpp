#pragma once

#include <string>
#include <vector>

#include "bmilasso/experiment.hpp"
#include "bmilasso/selection.hpp"

namespace bmilasso {

// Mean interval-scan operating point per credible width, averaged over
// replications; the row maximizing the mean distance is marked (ties go to
// the wider interval).
struct ScanCurveRow {
  double x_pct = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double distance = 0.0;
  bool best = false;
};

std::vector<ScanCurveRow> scan_curve(
    const std::vector<std::vector<ScanRow>>& per_replication);

// CSV with header x_pct,sensitivity,specificity,distance,best; full
// precision, one row per scanned width.
std::string scan_curve_csv(const std::vector<ScanCurveRow>& curve);

// Display table: SEN, SPE, F1 and their standard errors scaled by 100 and
// printed with one decimal; MSE printed with three. Arms with no successful
// replications keep blank cells. The raw sibling carries full precision.
std::string table_report_csv(const std::vector<ArmSummary>& table);
std::string table_report_raw_csv(const std::vector<ArmSummary>& table);

}  // namespace bmilasso
