#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace hydra {

// Confusion counts plus the derived ratios. A ratio whose denominator is
// zero is reported as absent rather than coerced to 0 — downstream tables
// print it as "NA" and comparisons must handle the missing case explicitly.
struct MetricsReport {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> fpr;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

// predictions/labels as 0 = benign, 1 = malware; equal length, non-empty.
MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> labels);

// F1 = 2pr/(p+r); absent when p + r == 0.
std::optional<double> f1_from_pr(double precision, double recall);

// Relative change in percent. higher-is-better: 100*(new-base)/base;
// lower-is-better (e.g. FPR): 100*(base-new)/base. Absent when base == 0.
std::optional<double> percent_improvement(double new_value, double base_value,
                                          bool lower_is_better);

// Fixed-precision cell for tables; absent -> "NA".
std::string metric_cell(const std::optional<double>& v, int digits = 4);
std::string metric_cell(double v, int digits = 4);

} // namespace hydra
