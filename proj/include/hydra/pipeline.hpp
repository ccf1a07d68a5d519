#pragma once

#include "hydra/config.hpp"
#include "hydra/datagen.hpp"
#include "hydra/detectors.hpp"
#include "hydra/metrics.hpp"
#include "hydra/scheduler.hpp"
#include "hydra/sequences.hpp"
#include "hydra/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace hydra {

// How detector units are formed from the trained models.
enum class UnitMode {
    ensemble,   // one unit per feature set: majority/aggregate over all architectures
    individual, // one unit per (feature set, architecture) pair
};

// Whole experiment, read from one INI file shared by every subcommand.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    int window_ms = 140;
    int num_slices = 3; // L

    EventTable table;
    FeatureSetRegistry registry;
    GeneratorSpec generator;
    SplitSpec split;
    TrainConfig train;

    std::vector<Architecture> architectures; // roster, order fixes unit ids
    std::vector<int> feature_set_ids;
    UnitMode unit_mode = UnitMode::individual;
    int filter_top_architectures = 0; // 0 disables the validation filter
    int filter_top_feature_sets = 0;

    ObjectiveSpec objective;
    AggregationMethod aggregation = AggregationMethod::logit_mean;
    SolverOptions solver;

    void validate() const; // throws ConfigError
    static ExperimentConfig from_config(const ConfigFile& cfg);
    static ExperimentConfig load(const std::string& path);
};

// Windowing + slicing for each trace, preserving order.
std::vector<SampleWindows> prepare_samples(const std::vector<EventTrace>& traces, int window_ms,
                                           int num_slices);

// Expected metrics under schedule x: Sigma_s x_s m(s) per metric. A metric is
// reported absent when sequences carrying more than 1e-9 total weight have it
// absent; below that the mass cannot move any metric beyond 1e-9 and is
// treated as contributing zero.
struct ExpectedMetricsRow {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> fpr;
};

ExpectedMetricsRow expected_metrics(std::span<const double> x,
                                    const std::vector<MetricsReport>& per_sequence);

// Per-column hard verdicts (confidence > 0.5, ties benign) scored against the
// matrix labels.
std::vector<MetricsReport> per_sequence_metrics(const SequenceConfidenceMatrix& test_matrix);

struct UnitMetricsRow {
    std::string name;
    int feature_set_id = 0;
    MetricsReport metrics;
};

// Everything one in-memory run produces. DetectorUnit entries point into
// `ensembles`; keep the struct alive while using them and do not resize that
// vector.
struct PipelineResult {
    DatasetSplit split;
    std::vector<SampleWindows> model_samples;
    std::vector<SampleWindows> seq_samples;
    std::vector<SampleWindows> test_samples;
    std::vector<EnsembleDetector> ensembles; // one per roster feature set, owns all models
    std::vector<DetectorUnit> units;         // scheduling roster, after any filtering
    std::vector<DetectorSequence> sequences;
    SequenceConfidenceMatrix matrix; // on the sequence-training partition
    ScheduleWeights weights;
    std::vector<UnitMetricsRow> baselines; // per-feature-set ensembles, majority vote on test
    MistakeCoverage mistakes;
    SequenceConfidenceMatrix test_matrix;
    std::vector<MetricsReport> per_sequence_test; // aligned with matrix columns
    ExpectedMetricsRow hydra;
};

// Full offline phase in memory: generate, split, train, enumerate, solve,
// evaluate. Deterministic in cfg.
PipelineResult run_pipeline(const ExperimentConfig& cfg);

// Online phase: per sample, draw a sequence from x (substream "deploy", one
// per sample), monitor only that sequence's feature set per slice (enforced
// by masking every window before prediction), verdict at threshold 0.5 with
// ties benign.
struct DeploymentOutcome {
    std::vector<std::size_t> chosen; // position into sequences, per sample
    std::vector<int> verdicts;
    MetricsReport realized;
};

DeploymentOutcome simulate_deployment(const ScheduleWeights& weights,
                                      const std::vector<DetectorSequence>& sequences,
                                      const std::vector<DetectorUnit>& units,
                                      const std::vector<SampleWindows>& test,
                                      AggregationMethod method, std::uint64_t seed);

// Sensitivity studies on one config: the objective x aggregation grid over
// shared trained models, and the 80/20 vs 90/10 training-pool split
// comparison (two full runs).
struct SensitivityGridRow {
    std::string objective;
    std::string aggregation;
    ExpectedMetricsRow metrics;
};

struct SensitivitySplitRow {
    std::string label; // "80/20" or "90/10"
    std::size_t seq_train_size = 0;
    ExpectedMetricsRow metrics;
};

struct SensitivityReport {
    std::vector<SensitivityGridRow> grid; // 2 objectives x 4 aggregations
    std::vector<SensitivitySplitRow> splits;
};

SensitivityReport run_sensitivity(const ExperimentConfig& cfg);

// ---- persisted-artifact stages ----------------------------------------------
// All stages read the same config; artifacts live under out_dir. Later stages
// load what earlier stages wrote, so each stage can be rerun independently.

void stage_simulate(const ExperimentConfig& cfg, const std::string& out_dir);
void stage_train_base(const ExperimentConfig& cfg, const std::string& out_dir);
void stage_learn_schedule(const ExperimentConfig& cfg, const std::string& out_dir);
void stage_evaluate(const ExperimentConfig& cfg, const std::string& out_dir);
// Renders report.txt purely from persisted tables; with_sensitivity reruns
// the (deterministic) sensitivity studies and appends their tables.
void stage_report(const ExperimentConfig& cfg, const std::string& out_dir, bool with_sensitivity);
void stage_deploy_sim(const ExperimentConfig& cfg, const std::string& out_dir);

// table rendering shared by reports and the CLI
std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);
std::string render_aligned(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows);

} // namespace hydra
