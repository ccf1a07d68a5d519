#include "hydra/metrics.hpp"

#include "hydra/error.hpp"
#include "hydra/numeric.hpp"

namespace hydra {

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.empty()) throw DataError("compute_metrics: empty input");
    if (predictions.size() != labels.size())
        throw DataError("compute_metrics: " + std::to_string(predictions.size()) +
                        " predictions vs " + std::to_string(labels.size()) + " labels");
    MetricsReport r;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i], y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1))
            throw DataError("compute_metrics: predictions and labels must be 0 or 1");
        if (y == 1)
            (p == 1 ? r.tp : r.fn)++;
        else
            (p == 1 ? r.fp : r.tn)++;
    }
    r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.total());
    if (r.tp + r.fp > 0) r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
    if (r.tp + r.fn > 0) r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    if (r.precision && r.recall) r.f1 = f1_from_pr(*r.precision, *r.recall);
    if (r.fp + r.tn > 0) r.fpr = static_cast<double>(r.fp) / static_cast<double>(r.fp + r.tn);
    return r;
}

std::optional<double> f1_from_pr(double precision, double recall) {
    if (precision + recall == 0.0) return std::nullopt;
    return 2.0 * precision * recall / (precision + recall);
}

std::optional<double> percent_improvement(double new_value, double base_value,
                                          bool lower_is_better) {
    if (base_value == 0.0) return std::nullopt;
    const double delta = lower_is_better ? base_value - new_value : new_value - base_value;
    return 100.0 * delta / base_value;
}

std::string metric_cell(const std::optional<double>& v, int digits) {
    return v ? format_fixed(*v, digits) : std::string("NA");
}

std::string metric_cell(double v, int digits) { return format_fixed(v, digits); }

} // namespace hydra
