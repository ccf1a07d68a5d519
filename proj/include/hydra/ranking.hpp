#pragma once

#include "hydra/types.hpp"

#include <utility>
#include <vector>

namespace hydra {

enum class PrototypeAggregator { mean, median };

struct EventRanking {
    int event_id;
    double distance; // Euclidean distance between class prototypes
};

// Ranks events by the Euclidean distance between their per-class prototype
// series: for each event, aggregate its column across all samples of a class
// (mean or median per interval), then measure how far apart the two class
// prototypes lie. Larger distance means more discriminative. All traces are
// truncated to the shortest trace length so prototypes align.
//
// Result is sorted by descending distance, ties broken by ascending event id,
// and is invariant under permuting the input samples.
//
// Throws DataError if either class is absent or traces are empty.
std::vector<EventRanking> rank_events_by_prototype_distance(
    const std::vector<EventTrace>& traces,
    PrototypeAggregator aggregator = PrototypeAggregator::mean);

} // namespace hydra
