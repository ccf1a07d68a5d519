#pragma once

#include "hydra/config.hpp"
#include "hydra/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hydra {

// One execution phase: a fraction of the trace during which every event
// follows a fixed Poisson rate per sampling interval.
struct PhaseSpec {
    double duration_frac = 0.0;
    std::vector<double> rates; // expected counts per interval, one per event
};

// A malware subfamily. Events belonging to any feature set listed in
// blind_feature_sets are generated from the *benign* rate schedule, so a
// detector restricted to such a set cannot tell this subfamily from benign.
struct SubfamilySpec {
    std::string name;
    double weight = 1.0;                 // relative share of malware samples
    std::vector<int> blind_feature_sets; // feature-set ids, may be empty
};

struct GeneratorSpec {
    std::uint64_t seed = 0;
    int num_benign = 0;
    int num_malware = 0;
    std::size_t intervals_per_trace = 0;
    int interval_ms = 10;
    // Per-sample, per-event lognormal scale factor exp(sigma * N(0,1)).
    // Models program-to-program baseline variation; 0 disables it.
    double jitter_sigma = 0.0;
    std::vector<PhaseSpec> benign_phases;
    std::vector<PhaseSpec> malware_phases;
    std::vector<SubfamilySpec> subfamilies; // empty → one family, no blind spots

    // Throws ConfigError on bad shapes/fractions, or if some subfamily is
    // indistinguishable from benign in every feature set.
    void validate(const EventTable& table, const FeatureSetRegistry& registry) const;

    // Reads [generator], [benign-phase N], [malware-phase N], [subfamily NAME].
    static GeneratorSpec from_config(const ConfigFile& cfg, const EventTable& table,
                                     const FeatureSetRegistry& registry);
};

// Deterministic given spec.seed. Sample i draws from substream
// ("datagen", i), so per-sample output is independent of generation order.
// timestamp_tag is the position in generation order; benign/malware and the
// subfamilies are interleaved proportionally so every tag range contains
// both classes. Malware sample ids carry their subfamily name as a suffix.
std::vector<EventTrace> generate(const GeneratorSpec& spec, const EventTable& table,
                                 const FeatureSetRegistry& registry);

// How to carve generated traces into the three partitions. model_frac and
// seq_frac are shares of the *training pool* (they must sum to 1); the
// newest test_malware_frac of malware is held out first, and benign test
// samples are subsampled to hit test_benign_share.
struct SplitSpec {
    double model_frac = 0.8;
    double seq_frac = 0.2;
    double test_malware_frac = 0.3;
    double test_benign_share = 0.9;
    std::uint64_t seed = 0;
};

struct DatasetSplit {
    std::vector<EventTrace> model_train; // trains the per-feature-set models
    std::vector<EventTrace> seq_train;   // I: drives schedule learning
    std::vector<EventTrace> test;
};

// Samples are indivisible: a sample_id lands in exactly one partition.
// Malware timestamp_tags in test strictly exceed every malware tag in the
// training partitions (ties at the cut go to training). Throws DataError
// when a partition would end up without both classes.
DatasetSplit split_dataset(const std::vector<EventTrace>& traces, const SplitSpec& spec);

} // namespace hydra
