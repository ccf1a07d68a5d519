#pragma once

#include "hydra/aggregate.hpp"
#include "hydra/detectors.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hydra {

// One schedulable detector: either a per-feature-set ensemble or a single
// (architecture, feature set) model. Units reference detectors owned by the
// pipeline; they carry a stable id used in sequence encoding and artifacts.
struct DetectorUnit {
    int id = 0;
    std::string name;
    int feature_set_id = 0;
    bool is_ensemble = false;
    Architecture architecture = Architecture::decision_tree; // individual units only
    const EnsembleDetector* ensemble = nullptr;
    const Detector* detector = nullptr;
};

DetectorUnit make_unit(int id, const EnsembleDetector& e);
DetectorUnit make_unit(int id, const Detector& d);

// Sample-level majority verdict of one unit (used for baseline metrics and
// the validation filter).
int unit_classify(const DetectorUnit& u, std::span<const WindowVector> windows);

// |S| = num_units^L, refusing to overflow instead of wrapping.
std::uint64_t sequence_space_size(std::size_t num_units, int L);

// A point of S: which unit monitors each of the L slices. slots holds
// positions into the units vector; id is the lexicographic rank.
struct DetectorSequence {
    std::uint64_t id = 0;
    std::vector<int> slots;
};

// Full Cartesian power in lexicographic slot order, ids 0..|S|-1.
std::vector<DetectorSequence> enumerate_sequences(const std::vector<DetectorUnit>& units, int L);
DetectorSequence decode_sequence(std::uint64_t id, std::size_t num_units, int L);

// Keeps the units whose architecture is among the top_architectures best
// architectures AND whose feature set is among the top_feature_sets best
// sets, both ranked by mean sample-level F1 on the validation samples. Ties
// break toward the lower architecture/feature-set id. Ensemble units are
// not rankable this way and are rejected.
std::vector<DetectorUnit> filter_detectors_by_validation(const std::vector<DetectorUnit>& units,
                                                         const std::vector<SampleWindows>& validation,
                                                         int top_architectures,
                                                         int top_feature_sets);

// p_{i,s} for every sample of I and every sequence of S, plus the labels the
// schedule learner needs.
struct SequenceConfidenceMatrix {
    std::vector<std::string> sample_ids;      // rows
    std::vector<int> labels;                  // y_i per row
    std::vector<std::uint64_t> sequence_ids;  // columns
    std::vector<double> values;               // row-major |I| x |S|

    std::size_t num_samples() const { return sample_ids.size(); }
    std::size_t num_sequences() const { return sequence_ids.size(); }
    double at(std::size_t i, std::size_t s) const { return values[i * num_sequences() + s]; }
};

// Builds the matrix over samples whose windows carry slice_index in [0, L).
// Slice confidences are computed once per (sample, slice, unit) and shared
// across all sequences touching that pair; entries equal the naive
// per-sequence recomputation bit for bit.
SequenceConfidenceMatrix build_confidence_matrix(const std::vector<SampleWindows>& samples, int L,
                                                 const std::vector<DetectorUnit>& units,
                                                 const std::vector<DetectorSequence>& sequences,
                                                 AggregationMethod method);

// CSV persistence: header "sample_id,label,<sequence ids>", one row per
// sample, doubles rendered so parse(serialize(m)) is bit-identical.
std::string serialize_matrix_csv(const SequenceConfidenceMatrix& m);
SequenceConfidenceMatrix parse_matrix_csv(const std::string& text);
void save_matrix_csv(const SequenceConfidenceMatrix& m, const std::string& path);
SequenceConfidenceMatrix load_matrix_csv(const std::string& path);

} // namespace hydra
