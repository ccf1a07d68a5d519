#pragma once

#include "hydra/types.hpp"

#include <span>
#include <vector>

namespace hydra {

// Segments a trace into non-overlapping windows of window_ms, summing each
// event's counts over the window's intervals. A trailing block shorter than
// one window is dropped.
//
// Throws ConfigError if window_ms is not a positive multiple of the trace's
// interval_ms, DataError if the trace is shorter than one window.
std::vector<WindowVector> windowize(const EventTrace& trace, int window_ms);

// Splits `count` windows into L contiguous slices whose sizes differ by at
// most one; when count = n*L + r, the first r slices get n+1 windows.
// Throws DataError if count < L.
SlicePartition partition_slices(std::size_t count, int num_slices);

// Convenience overload; also stamps slice_index into the windows.
SlicePartition partition_slices(std::vector<WindowVector>& windows, int num_slices);

// Groups windows by their slice assignment, preserving window order.
std::vector<std::vector<WindowVector>> group_by_slice(const std::vector<WindowVector>& windows,
                                                      const SlicePartition& part);

} // namespace hydra
