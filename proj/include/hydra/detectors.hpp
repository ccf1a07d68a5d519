#pragma once

#include "hydra/config.hpp"
#include "hydra/types.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hydra {

enum class Architecture {
    decision_tree,
    random_forest,
    rank_reduced_forest,   // rank-reduced features (PCA) feeding a forest
    reduced_error_tree,    // tree grown deep, then reduced-error pruned
    multilayer_perceptron, // one hidden layer, sigmoid output
};

const char* architecture_name(Architecture a);
Architecture parse_architecture(const std::string& name); // throws ConfigError

// Shared training knobs. Every architecture derives its randomness from
// (seed, architecture, feature-set id), so training one detector never
// perturbs another.
struct TrainConfig {
    std::uint64_t seed = 0;
    int max_depth = 8;
    int min_samples_leaf = 1;
    int forest_size = 15;
    int rank = 2;              // retained components of rank_reduced_forest
    double prune_frac = 0.3;   // held-out share for reduced-error pruning
    int hidden_units = 16;
    int epochs = 40;
    int batch_size = 32;
    double learning_rate = 0.01;
    double l2 = 1e-4;

    static TrainConfig from_config(const ConfigFile& cfg, std::uint64_t seed); // [train] section
};

// A trained classifier over windows, restricted to one feature set. It only
// ever reads the events of its feature set, so predictions are invariant to
// everything outside it. Posteriors are clipped into [clip, 1-clip].
class Detector {
public:
    virtual ~Detector() = default;

    Architecture architecture() const { return architecture_; }
    const FeatureSet& feature_set() const { return feature_set_; }
    int feature_set_id() const { return feature_set_.id; }

    // Malware posterior for one window. Throws DataError if the window lacks
    // an event column the feature set needs.
    double predict_window(const WindowVector& w) const;

protected:
    Detector(Architecture a, FeatureSet fs) : architecture_(a), feature_set_(std::move(fs)) {}

    // x holds the feature-set events, in feature-set order, as doubles.
    virtual double predict_features(const std::vector<double>& x) const = 0;
    virtual void write_params(std::string& out) const = 0;

private:
    friend std::string serialize_detector(const Detector&);
    Architecture architecture_;
    FeatureSet feature_set_;
};

// Trains one (architecture, feature set) detector on labeled windows.
// Throws TrainError when the windows are empty or single-class.
std::unique_ptr<Detector> train_detector(Architecture arch, const FeatureSet& fs,
                                         const std::vector<WindowVector>& windows,
                                         const std::vector<int>& labels, const TrainConfig& cfg);

// Majority vote across architectures trained on one feature set.
struct EnsembleDetector {
    int feature_set_id = 0;
    std::vector<std::unique_ptr<Detector>> members;
};

EnsembleDetector train_ensemble(std::span<const Architecture> archs, const FeatureSet& fs,
                                const std::vector<WindowVector>& windows,
                                const std::vector<int>& labels, const TrainConfig& cfg);

inline int hard_label(double q) { return q >= 0.5 ? 1 : 0; }

// Member majority on one window; exact ties go benign.
int ensemble_vote(const EnsembleDetector& e, const WindowVector& w);

// Sample-level majority over window hard labels; a sample is malware iff
// strictly more than half its windows are, so ties go benign.
int classify_sample_majority(const Detector& d, std::span<const WindowVector> windows);
int classify_sample_majority(const EnsembleDetector& e, std::span<const WindowVector> windows);

// One sample's windows plus its ground truth, the unit all sample-level
// evaluation works in.
struct SampleWindows {
    std::string sample_id;
    int label = 0;
    std::vector<WindowVector> windows;
};

// percent[i][j] = share (in %) of samples ensemble i gets wrong that
// ensemble j gets right; the diagonal stays 0. Rows for ensembles with no
// mistakes are 0 and flagged in zero_mistakes.
struct MistakeCoverage {
    std::vector<std::vector<double>> percent;
    std::vector<char> zero_mistakes;
};

MistakeCoverage mistake_coverage_matrix(const std::vector<EnsembleDetector>& ensembles,
                                        const std::vector<SampleWindows>& samples);

// Versioned text persistence; parse(serialize(d)) predicts bit-identically.
std::string serialize_detector(const Detector& d);
std::unique_ptr<Detector> parse_detector(const std::string& text);
void save_detector(const Detector& d, const std::string& path);
std::unique_ptr<Detector> load_detector(const std::string& path);

} // namespace hydra
