#include "hydra/ranking.hpp"

#include "hydra/error.hpp"
#include "hydra/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace hydra {

// Values are sorted before reduction so the result does not depend on the
// order samples were supplied in (floating-point addition is not
// permutation-safe otherwise).
static double aggregate_column(std::vector<double>& vals, PrototypeAggregator agg) {
    std::sort(vals.begin(), vals.end());
    if (agg == PrototypeAggregator::median) {
        const std::size_t n = vals.size();
        return n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    }
    return mean(vals);
}

std::vector<EventRanking> rank_events_by_prototype_distance(const std::vector<EventTrace>& traces,
                                                            PrototypeAggregator aggregator) {
    if (traces.empty()) throw DataError("prototype ranking: no traces");
    std::size_t common_len = traces.front().num_intervals;
    const std::size_t num_events = traces.front().num_events;
    bool has_benign = false, has_malware = false;
    for (const auto& tr : traces) {
        if (tr.num_events != num_events)
            throw DataError("prototype ranking: traces disagree on event count");
        common_len = std::min(common_len, tr.num_intervals);
        (tr.label == 1 ? has_malware : has_benign) = true;
    }
    if (!has_benign || !has_malware)
        throw DataError("prototype ranking: both classes must be present");
    if (common_len == 0) throw DataError("prototype ranking: zero-length trace");

    std::vector<EventRanking> out;
    out.reserve(num_events);
    std::vector<double> col;
    std::vector<double> diff(common_len);
    for (std::size_t e = 0; e < num_events; ++e) {
        std::vector<double> proto[2];
        for (int cls = 0; cls < 2; ++cls) {
            proto[cls].resize(common_len);
            for (std::size_t t = 0; t < common_len; ++t) {
                col.clear();
                for (const auto& tr : traces)
                    if (tr.label == cls) col.push_back(static_cast<double>(tr.count(t, e)));
                proto[cls][t] = aggregate_column(col, aggregator);
            }
        }
        for (std::size_t t = 0; t < common_len; ++t) {
            const double d = proto[1][t] - proto[0][t];
            diff[t] = d * d;
        }
        out.push_back({static_cast<int>(e + 1), std::sqrt(pairwise_sum(diff))});
    }
    std::stable_sort(out.begin(), out.end(), [](const EventRanking& a, const EventRanking& b) {
        if (a.distance != b.distance) return a.distance > b.distance;
        return a.event_id < b.event_id;
    });
    return out;
}

} // namespace hydra
