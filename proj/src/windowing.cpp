#include "hydra/windowing.hpp"

#include "hydra/error.hpp"

namespace hydra {

std::vector<WindowVector> windowize(const EventTrace& trace, int window_ms) {
    if (window_ms <= 0 || trace.interval_ms <= 0 || window_ms % trace.interval_ms != 0)
        throw ConfigError("window of " + std::to_string(window_ms) +
                          " ms is not a positive multiple of the " +
                          std::to_string(trace.interval_ms) + " ms sampling interval");
    const std::size_t per_window = static_cast<std::size_t>(window_ms / trace.interval_ms);
    const std::size_t num_windows = trace.num_intervals / per_window;
    if (num_windows == 0)
        throw DataError("trace '" + trace.sample_id + "' is shorter than one window (" +
                        std::to_string(trace.num_intervals) + " intervals, " +
                        std::to_string(per_window) + " needed)");

    std::vector<WindowVector> out;
    out.reserve(num_windows);
    for (std::size_t w = 0; w < num_windows; ++w) {
        WindowVector win;
        win.sample_id = trace.sample_id;
        win.window_index = static_cast<int>(w);
        win.features.assign(trace.num_events, 0);
        const std::size_t t0 = w * per_window;
        for (std::size_t t = t0; t < t0 + per_window; ++t)
            for (std::size_t e = 0; e < trace.num_events; ++e)
                win.features[e] += trace.count(t, e);
        out.push_back(std::move(win));
    }
    return out;
}

SlicePartition partition_slices(std::size_t count, int num_slices) {
    if (num_slices <= 0) throw ConfigError("slice count must be positive");
    if (count < static_cast<std::size_t>(num_slices))
        throw DataError("cannot partition " + std::to_string(count) + " windows into " +
                        std::to_string(num_slices) + " slices");
    const std::size_t L = static_cast<std::size_t>(num_slices);
    const std::size_t base = count / L;
    const std::size_t remainder = count % L; // first `remainder` slices get one extra window
    SlicePartition part;
    part.num_slices = num_slices;
    part.assignment.reserve(count);
    for (std::size_t s = 0; s < L; ++s) {
        const std::size_t len = base + (s < remainder ? 1 : 0);
        part.assignment.insert(part.assignment.end(), len, static_cast<int>(s));
    }
    return part;
}

SlicePartition partition_slices(std::vector<WindowVector>& windows, int num_slices) {
    SlicePartition part = partition_slices(windows.size(), num_slices);
    for (std::size_t i = 0; i < windows.size(); ++i)
        windows[i].slice_index = part.assignment[i];
    return part;
}

std::vector<std::vector<WindowVector>> group_by_slice(const std::vector<WindowVector>& windows,
                                                      const SlicePartition& part) {
    std::vector<std::vector<WindowVector>> groups(static_cast<std::size_t>(part.num_slices));
    for (std::size_t i = 0; i < windows.size(); ++i) {
        WindowVector w = windows[i];
        w.slice_index = part.assignment[i];
        groups[static_cast<std::size_t>(w.slice_index)].push_back(std::move(w));
    }
    return groups;
}

} // namespace hydra
