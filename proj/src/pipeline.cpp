#include "hydra/pipeline.hpp"

#include "hydra/aggregate.hpp"
#include "hydra/error.hpp"
#include "hydra/ingest.hpp"
#include "hydra/numeric.hpp"
#include "hydra/rng.hpp"
#include "hydra/windowing.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hydra {

namespace {

constexpr const char* kDatasetFile = "dataset.csv";
constexpr const char* kSplitFile = "split.csv";
constexpr const char* kModelsFile = "models.csv";
constexpr const char* kRosterFile = "roster.csv";
constexpr const char* kBaselineFile = "baseline_metrics.csv";
constexpr const char* kMistakeFile = "mistake_matrix.csv";
constexpr const char* kMatrixFile = "matrix.csv";
constexpr const char* kScheduleFile = "schedule.csv";
constexpr const char* kPerSequenceFile = "per_sequence_metrics.csv";
constexpr const char* kHydraFile = "hydra_metrics.csv";
constexpr const char* kImprovementsFile = "improvements.csv";
constexpr const char* kReportFile = "report.txt";
constexpr const char* kDeploymentFile = "deployment.csv";
constexpr const char* kDeploymentSummaryFile = "deployment_summary.csv";
constexpr const char* kSensitivityGridFile = "sensitivity_grid.csv";
constexpr const char* kSensitivitySplitFile = "sensitivity_split.csv";

std::string join_path(const std::string& dir, const std::string& name) {
    return dir + "/" + name;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw DataError("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::vector<std::string>> parse_table(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        rows.push_back(split_csv(line));
    }
    return rows;
}

} // namespace

// ---- config ------------------------------------------------------------------

static UnitMode parse_unit_mode(const std::string& s) {
    if (s == "ensemble") return UnitMode::ensemble;
    if (s == "individual") return UnitMode::individual;
    throw ConfigError("unknown unit-mode '" + s + "' (expected ensemble or individual)");
}

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& cfg) {
    ExperimentConfig e;
    e.table = EventTable::from_config(cfg);
    e.registry = FeatureSetRegistry::from_config(cfg, e.table);

    const ConfigSection* x = cfg.find("experiment");
    if (!x) throw ConfigError("missing [experiment] section");
    e.seed = static_cast<std::uint64_t>(x->get_int_or("seed", 0));
    e.window_ms = static_cast<int>(x->get_int_or("window-ms", 140));
    e.num_slices = static_cast<int>(x->get_int_or("slices", 3));

    e.generator = GeneratorSpec::from_config(cfg, e.table, e.registry);
    const ConfigSection* gsec = cfg.find("generator");
    if (gsec && !gsec->has("seed")) e.generator.seed = e.seed;

    e.split.model_frac = x->get_double_or("model-frac", 0.8);
    e.split.seq_frac = x->get_double_or("seq-frac", 0.2);
    e.split.test_malware_frac = x->get_double_or("test-malware-frac", 0.3);
    e.split.test_benign_share = x->get_double_or("test-benign-share", 0.9);
    e.split.seed = e.seed;

    e.train = TrainConfig::from_config(cfg, e.seed);

    for (const std::string& name : x->get_string_list("architectures"))
        e.architectures.push_back(parse_architecture(name));
    for (std::int64_t id : x->get_int_list("feature-sets"))
        e.feature_set_ids.push_back(static_cast<int>(id));
    e.unit_mode = parse_unit_mode(x->get_or("unit-mode", "individual"));
    e.filter_top_architectures = static_cast<int>(x->get_int_or("filter-top-architectures", 0));
    e.filter_top_feature_sets = static_cast<int>(x->get_int_or("filter-top-feature-sets", 0));

    e.objective.kind = parse_objective(x->get_or("objective", "logistic"));
    e.objective.lambda = x->get_double_or("lambda", 0.0);
    e.objective.penalty = e.objective.lambda > 0.0 ? PenaltyKind::l2 : PenaltyKind::none;
    e.aggregation = parse_aggregation(x->get_or("aggregation", "logit-mean"));

    e.solver.max_iters = static_cast<int>(x->get_int_or("max-iters", 50000));
    e.solver.tol = x->get_double_or("tol", 1e-7);
    e.solver.multi_starts = static_cast<int>(x->get_int_or("multi-starts", 8));
    e.solver.seed = e.seed;
    const std::string algo = x->get_or("algorithm", "pairwise-frank-wolfe");
    if (algo == "projected-gradient")
        e.solver.use_projected_gradient = true;
    else if (algo != "pairwise-frank-wolfe")
        throw ConfigError("unknown algorithm '" + algo + "'");

    e.validate();
    return e;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    return from_config(ConfigFile::load(path));
}

void ExperimentConfig::validate() const {
    if (window_ms <= 0) throw ConfigError("window-ms must be positive");
    if (num_slices < 1) throw ConfigError("slices must be at least 1");
    if (architectures.empty()) throw ConfigError("experiment needs at least one architecture");
    if (feature_set_ids.empty()) throw ConfigError("experiment needs at least one feature set");
    std::set<int> archs;
    for (Architecture a : architectures)
        if (!archs.insert(static_cast<int>(a)).second)
            throw ConfigError(std::string("duplicate architecture '") + architecture_name(a) + "'");
    std::set<int> fss;
    for (int id : feature_set_ids) {
        registry.get(id); // throws on unknown id
        if (!fss.insert(id).second)
            throw ConfigError("duplicate feature set " + std::to_string(id));
    }
    if ((filter_top_architectures > 0) != (filter_top_feature_sets > 0))
        throw ConfigError("filter-top-architectures and filter-top-feature-sets go together");
    if (filter_top_architectures > 0 && unit_mode == UnitMode::ensemble)
        throw ConfigError("the validation filter ranks individual detectors; use unit-mode = individual");
    generator.validate(table, registry);
    if (window_ms % generator.interval_ms != 0)
        throw ConfigError("window-ms must be a multiple of the generator interval");
    const std::size_t windows_per_trace =
        generator.intervals_per_trace * static_cast<std::size_t>(generator.interval_ms) /
        static_cast<std::size_t>(window_ms);
    if (windows_per_trace < static_cast<std::size_t>(num_slices))
        throw ConfigError("traces yield " + std::to_string(windows_per_trace) + " windows, fewer than " +
                          std::to_string(num_slices) + " slices");
}

// ---- shared building blocks ---------------------------------------------------

std::vector<SampleWindows> prepare_samples(const std::vector<EventTrace>& traces, int window_ms,
                                           int num_slices) {
    std::vector<SampleWindows> out;
    out.reserve(traces.size());
    for (const EventTrace& t : traces) {
        SampleWindows s;
        s.sample_id = t.sample_id;
        s.label = t.label;
        s.windows = windowize(t, window_ms);
        partition_slices(s.windows, num_slices);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<MetricsReport> per_sequence_metrics(const SequenceConfidenceMatrix& m) {
    std::vector<MetricsReport> out;
    out.reserve(m.num_sequences());
    std::vector<int> preds(m.num_samples());
    for (std::size_t s = 0; s < m.num_sequences(); ++s) {
        for (std::size_t i = 0; i < m.num_samples(); ++i) preds[i] = m.at(i, s) > 0.5 ? 1 : 0;
        out.push_back(compute_metrics(preds, m.labels));
    }
    return out;
}

ExpectedMetricsRow expected_metrics(std::span<const double> x,
                                    const std::vector<MetricsReport>& per_sequence) {
    if (x.size() != per_sequence.size())
        throw DataError("expected_metrics: weights and per-sequence metrics differ in length");
    auto expect = [&](auto&& get) -> std::optional<double> {
        std::vector<double> vals(x.size(), 0.0);
        double absent_mass = 0.0;
        for (std::size_t s = 0; s < x.size(); ++s) {
            const std::optional<double> v = get(per_sequence[s]);
            if (v)
                vals[s] = *v;
            else if (x[s] > 0.0)
                absent_mass += x[s];
        }
        if (absent_mass > 1e-9) return std::nullopt;
        return expected_metric(x, vals);
    };
    ExpectedMetricsRow row;
    row.accuracy = *expect([](const MetricsReport& m) { return std::optional<double>(m.accuracy); });
    row.precision = expect([](const MetricsReport& m) { return m.precision; });
    row.recall = expect([](const MetricsReport& m) { return m.recall; });
    row.f1 = expect([](const MetricsReport& m) { return m.f1; });
    row.fpr = expect([](const MetricsReport& m) { return m.fpr; });
    return row;
}

namespace {

std::vector<EnsembleDetector> train_base_models(const ExperimentConfig& cfg,
                                                const std::vector<SampleWindows>& model_samples) {
    std::vector<WindowVector> windows;
    std::vector<int> labels;
    for (const SampleWindows& s : model_samples)
        for (const WindowVector& w : s.windows) {
            windows.push_back(w);
            labels.push_back(s.label);
        }
    std::vector<EnsembleDetector> ensembles;
    ensembles.reserve(cfg.feature_set_ids.size());
    for (int fs_id : cfg.feature_set_ids)
        ensembles.push_back(
            train_ensemble(cfg.architectures, cfg.registry.get(fs_id), windows, labels, cfg.train));
    return ensembles;
}

// Unit ids are roster positions: ensemble mode gives one per feature set,
// individual mode walks feature sets outer, architectures inner.
std::vector<DetectorUnit> build_units(const std::vector<EnsembleDetector>& ensembles,
                                      UnitMode mode) {
    std::vector<DetectorUnit> units;
    int id = 0;
    for (const EnsembleDetector& e : ensembles) {
        if (mode == UnitMode::ensemble) {
            units.push_back(make_unit(id++, e));
        } else {
            for (const auto& m : e.members) units.push_back(make_unit(id++, *m));
        }
    }
    return units;
}

std::vector<UnitMetricsRow> baseline_rows(const std::vector<EnsembleDetector>& ensembles,
                                          const std::vector<SampleWindows>& test) {
    std::vector<UnitMetricsRow> rows;
    std::vector<int> preds(test.size()), labels(test.size());
    for (const EnsembleDetector& e : ensembles) {
        for (std::size_t i = 0; i < test.size(); ++i) {
            preds[i] = classify_sample_majority(e, test[i].windows);
            labels[i] = test[i].label;
        }
        UnitMetricsRow row;
        row.name = "ens-fs" + std::to_string(e.feature_set_id);
        row.feature_set_id = e.feature_set_id;
        row.metrics = compute_metrics(preds, labels);
        rows.push_back(std::move(row));
    }
    return rows;
}

struct BaseArtifacts {
    DatasetSplit split;
    std::vector<SampleWindows> model_samples, seq_samples, test_samples;
    std::vector<EnsembleDetector> ensembles;
    std::vector<DetectorUnit> units; // post-filter roster
    std::vector<DetectorSequence> sequences;
};

BaseArtifacts build_base(const ExperimentConfig& cfg) {
    BaseArtifacts b;
    const auto traces = generate(cfg.generator, cfg.table, cfg.registry);
    b.split = split_dataset(traces, cfg.split);
    b.model_samples = prepare_samples(b.split.model_train, cfg.window_ms, cfg.num_slices);
    b.seq_samples = prepare_samples(b.split.seq_train, cfg.window_ms, cfg.num_slices);
    b.test_samples = prepare_samples(b.split.test, cfg.window_ms, cfg.num_slices);
    b.ensembles = train_base_models(cfg, b.model_samples);
    b.units = build_units(b.ensembles, cfg.unit_mode);
    if (cfg.filter_top_architectures > 0)
        b.units = filter_detectors_by_validation(b.units, b.seq_samples,
                                                 cfg.filter_top_architectures,
                                                 cfg.filter_top_feature_sets);
    b.sequences = enumerate_sequences(b.units, cfg.num_slices);
    return b;
}

} // namespace

PipelineResult run_pipeline(const ExperimentConfig& cfg) {
    cfg.validate();
    PipelineResult r;
    BaseArtifacts base = build_base(cfg);
    r.split = std::move(base.split);
    r.model_samples = std::move(base.model_samples);
    r.seq_samples = std::move(base.seq_samples);
    r.test_samples = std::move(base.test_samples);
    r.ensembles = std::move(base.ensembles);
    r.units = std::move(base.units);
    r.sequences = std::move(base.sequences);

    r.baselines = baseline_rows(r.ensembles, r.test_samples);
    r.mistakes = mistake_coverage_matrix(r.ensembles, r.test_samples);

    r.matrix = build_confidence_matrix(r.seq_samples, cfg.num_slices, r.units, r.sequences,
                                       cfg.aggregation);
    r.weights = solve_schedule(r.matrix, cfg.objective, cfg.solver);

    r.test_matrix = build_confidence_matrix(r.test_samples, cfg.num_slices, r.units, r.sequences,
                                            cfg.aggregation);
    r.per_sequence_test = per_sequence_metrics(r.test_matrix);
    r.hydra = expected_metrics(r.weights.x, r.per_sequence_test);
    return r;
}

DeploymentOutcome simulate_deployment(const ScheduleWeights& weights,
                                      const std::vector<DetectorSequence>& sequences,
                                      const std::vector<DetectorUnit>& units,
                                      const std::vector<SampleWindows>& test,
                                      AggregationMethod method, std::uint64_t seed) {
    if (weights.x.size() != sequences.size())
        throw DataError("deployment: schedule and sequence list differ in length");
    if (test.empty()) throw DataError("deployment: no test samples");
    DeploymentOutcome out;
    out.chosen.reserve(test.size());
    out.verdicts.reserve(test.size());
    std::vector<int> labels(test.size());

    for (std::size_t i = 0; i < test.size(); ++i) {
        const SampleWindows& sample = test[i];
        labels[i] = sample.label;
        auto g = rng::make_stream(seed, "deploy", i);
        const std::size_t pos = sample_sequence(weights.x, g);
        const DetectorSequence& seq = sequences[pos];
        const int L = static_cast<int>(seq.slots.size());

        std::vector<std::vector<const WindowVector*>> by_slice(static_cast<std::size_t>(L));
        for (const WindowVector& w : sample.windows) {
            if (w.slice_index < 0 || w.slice_index >= L)
                throw DataError("deployment: sample '" + sample.sample_id +
                                "' has a window outside the slice range");
            by_slice[static_cast<std::size_t>(w.slice_index)].push_back(&w);
        }

        std::vector<std::vector<std::vector<double>>> posteriors(static_cast<std::size_t>(L));
        for (int t = 0; t < L; ++t) {
            const int slot = seq.slots[static_cast<std::size_t>(t)];
            if (slot < 0 || slot >= static_cast<int>(units.size()))
                throw DataError("deployment: sequence slot outside the unit roster");
            const DetectorUnit& unit = units[static_cast<std::size_t>(slot)];
            std::vector<const Detector*> members;
            if (unit.is_ensemble)
                for (const auto& m : unit.ensemble->members) members.push_back(m.get());
            else
                members.push_back(unit.detector);
            auto& slice_post = posteriors[static_cast<std::size_t>(t)];
            slice_post.resize(members.size());
            for (std::size_t k = 0; k < members.size(); ++k) {
                // only this unit's feature set is monitored during slice t
                const FeatureSet& fs = members[k]->feature_set();
                for (const WindowVector* w : by_slice[static_cast<std::size_t>(t)])
                    slice_post[k].push_back(members[k]->predict_window(mask_to(*w, fs)));
            }
        }
        const double confidence = sequence_confidence(posteriors, method);
        out.chosen.push_back(pos);
        out.verdicts.push_back(confidence > 0.5 ? 1 : 0); // ties go benign
    }
    out.realized = compute_metrics(out.verdicts, labels);
    return out;
}

SensitivityReport run_sensitivity(const ExperimentConfig& cfg) {
    cfg.validate();
    SensitivityReport rep;

    BaseArtifacts base = build_base(cfg);
    constexpr std::array<AggregationMethod, 4> kAggs = {
        AggregationMethod::logit_mean, AggregationMethod::logit_sum, AggregationMethod::prob_mean,
        AggregationMethod::hard_vote};
    constexpr std::array<ObjectiveKind, 2> kObjectives = {ObjectiveKind::logistic,
                                                          ObjectiveKind::mse};
    std::array<SequenceConfidenceMatrix, 4> train_m;
    std::array<std::vector<MetricsReport>, 4> per_seq;
    for (std::size_t a = 0; a < kAggs.size(); ++a) {
        train_m[a] = build_confidence_matrix(base.seq_samples, cfg.num_slices, base.units,
                                             base.sequences, kAggs[a]);
        const auto test_m = build_confidence_matrix(base.test_samples, cfg.num_slices, base.units,
                                                    base.sequences, kAggs[a]);
        per_seq[a] = per_sequence_metrics(test_m);
    }
    for (ObjectiveKind kind : kObjectives) {
        ObjectiveSpec spec = cfg.objective;
        spec.kind = kind;
        for (std::size_t a = 0; a < kAggs.size(); ++a) {
            const ScheduleWeights w = solve_schedule(train_m[a], spec, cfg.solver);
            rep.grid.push_back(
                {objective_name(kind), aggregation_name(kAggs[a]), expected_metrics(w.x, per_seq[a])});
        }
    }

    for (const auto& [label, model_frac, seq_frac] :
         {std::tuple<const char*, double, double>{"80/20", 0.8, 0.2},
          std::tuple<const char*, double, double>{"90/10", 0.9, 0.1}}) {
        ExperimentConfig c = cfg;
        c.split.model_frac = model_frac;
        c.split.seq_frac = seq_frac;
        const PipelineResult res = run_pipeline(c);
        rep.splits.push_back({label, res.seq_samples.size(), res.hydra});
    }
    return rep;
}

// ---- table rendering ----------------------------------------------------------

std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return out;
}

std::string render_aligned(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size() && c < width.size(); ++c)
            width[c] = std::max(width[c], r[c].size());
    std::string out;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c > 0) out += "  ";
            out += cells[c];
            if (c + 1 < cells.size() && width[c] > cells[c].size())
                out.append(width[c] - cells[c].size(), ' ');
        }
        out += '\n';
    };
    emit(header);
    std::string rule;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c > 0) rule += "  ";
        rule.append(width[c], '-');
    }
    out += rule + '\n';
    for (const auto& r : rows) emit(r);
    return out;
}

// ---- persisted stages ---------------------------------------------------------

namespace {

const std::vector<std::string> kMetricsHeader = {"accuracy", "precision", "recall",
                                                 "f1",       "fpr",       "tp",
                                                 "fp",       "tn",        "fn"};

std::vector<std::string> metrics_cells(const MetricsReport& m) {
    return {metric_cell(m.accuracy, 6), metric_cell(m.precision, 6), metric_cell(m.recall, 6),
            metric_cell(m.f1, 6),       metric_cell(m.fpr, 6),       std::to_string(m.tp),
            std::to_string(m.fp),       std::to_string(m.tn),        std::to_string(m.fn)};
}

std::vector<std::string> expected_cells(const ExpectedMetricsRow& m) {
    return {metric_cell(m.accuracy, 6), metric_cell(m.precision, 6), metric_cell(m.recall, 6),
            metric_cell(m.f1, 6), metric_cell(m.fpr, 6)};
}

std::string trace_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "traces/trace-%06zu.csv", index);
    return buf;
}

std::vector<EventTrace> load_dataset(const ExperimentConfig& cfg, const std::string& out_dir) {
    const std::string manifest_path = join_path(out_dir, kDatasetFile);
    const auto table = parse_table(read_file(manifest_path));
    if (table.empty() || table[0] != std::vector<std::string>{"sample_id", "label",
                                                              "timestamp_tag", "file"})
        throw ParseError(manifest_path + ": unexpected manifest header");
    std::vector<EventTrace> traces;
    traces.reserve(table.size() - 1);
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        if (row.size() != 4)
            throw ParseError(manifest_path + " row " + std::to_string(r) + ": expected 4 fields");
        EventTrace t = load_trace_csv(join_path(out_dir, row[3]), cfg.table);
        if (t.sample_id != row[0])
            throw DataError(manifest_path + ": '" + row[3] + "' holds sample '" + t.sample_id +
                            "', manifest says '" + row[0] + "'");
        traces.push_back(std::move(t));
    }
    if (traces.empty()) throw DataError(manifest_path + ": empty dataset");
    return traces;
}

std::string model_file_name(int fs_id, Architecture arch) {
    return "models/fs" + std::to_string(fs_id) + "-" + architecture_name(arch) + ".txt";
}

std::vector<EnsembleDetector> load_trained_base(const ExperimentConfig& cfg,
                                                const std::string& out_dir) {
    const std::string models_path = join_path(out_dir, kModelsFile);
    const auto table = parse_table(read_file(models_path));
    if (table.empty() ||
        table[0] != std::vector<std::string>{"feature_set_id", "architecture", "file"})
        throw ParseError(models_path + ": unexpected header");
    std::map<std::pair<int, int>, std::string> files;
    for (std::size_t r = 1; r < table.size(); ++r) {
        if (table[r].size() != 3)
            throw ParseError(models_path + " row " + std::to_string(r) + ": expected 3 fields");
        const int fs = std::stoi(table[r][0]);
        const Architecture arch = parse_architecture(table[r][1]);
        files[{fs, static_cast<int>(arch)}] = table[r][2];
    }
    std::vector<EnsembleDetector> ensembles;
    ensembles.reserve(cfg.feature_set_ids.size());
    for (int fs_id : cfg.feature_set_ids) {
        EnsembleDetector e;
        e.feature_set_id = fs_id;
        for (Architecture arch : cfg.architectures) {
            const auto it = files.find({fs_id, static_cast<int>(arch)});
            if (it == files.end())
                throw DataError(models_path + ": no model for feature set " + std::to_string(fs_id) +
                                ", architecture " + architecture_name(arch) +
                                " (rerun train-base after changing the roster)");
            auto d = load_detector(join_path(out_dir, it->second));
            if (d->architecture() != arch || d->feature_set_id() != fs_id)
                throw DataError(it->second + ": model header disagrees with the roster entry");
            e.members.push_back(std::move(d));
        }
        ensembles.push_back(std::move(e));
    }
    return ensembles;
}

void save_roster(const std::vector<DetectorUnit>& units, const std::string& out_dir) {
    std::vector<std::vector<std::string>> rows;
    for (const DetectorUnit& u : units)
        rows.push_back({std::to_string(u.id), u.name, std::to_string(u.feature_set_id),
                        u.is_ensemble ? "ensemble" : "single"});
    write_file(join_path(out_dir, kRosterFile),
               render_csv({"unit_id", "name", "feature_set_id", "kind"}, rows));
}

// Selects the persisted scheduling roster out of the full unit list.
std::vector<DetectorUnit> load_roster(const std::vector<DetectorUnit>& all,
                                      const std::string& out_dir) {
    const std::string path = join_path(out_dir, kRosterFile);
    const auto table = parse_table(read_file(path));
    if (table.empty() ||
        table[0] != std::vector<std::string>{"unit_id", "name", "feature_set_id", "kind"})
        throw ParseError(path + ": unexpected header");
    std::vector<DetectorUnit> units;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const int id = std::stoi(table[r][0]);
        const auto it = std::find_if(all.begin(), all.end(),
                                     [id](const DetectorUnit& u) { return u.id == id; });
        if (it == all.end())
            throw DataError(path + ": unit " + std::to_string(id) +
                            " does not exist under the current config");
        if (it->name != table[r][1])
            throw DataError(path + ": unit " + std::to_string(id) + " is now '" + it->name +
                            "', roster says '" + table[r][1] + "'");
        units.push_back(*it);
    }
    if (units.empty()) throw DataError(path + ": empty roster");
    return units;
}

// Weight vector in matrix column order from a schedule file, cross-checking
// the slot unit ids against the enumeration.
ScheduleWeights weights_from_schedule(const ScheduleFile& f,
                                      const std::vector<DetectorSequence>& sequences,
                                      const std::vector<DetectorUnit>& units) {
    ScheduleWeights w;
    w.x.assign(sequences.size(), 0.0);
    w.sequence_ids.reserve(sequences.size());
    for (const DetectorSequence& s : sequences) w.sequence_ids.push_back(s.id);
    w.objective_value = f.objective_value;
    for (const ScheduleEntry& e : f.entries) {
        if (e.sequence_id >= sequences.size())
            throw DataError("schedule entry " + std::to_string(e.sequence_id) +
                            " is outside the sequence space");
        const DetectorSequence& seq = sequences[e.sequence_id];
        for (std::size_t t = 0; t < seq.slots.size(); ++t)
            if (units[static_cast<std::size_t>(seq.slots[t])].id != e.slot_unit_ids[t])
                throw DataError("schedule slots for sequence " + std::to_string(e.sequence_id) +
                                " disagree with the current roster");
        w.x[e.sequence_id] = e.weight;
    }
    return w;
}

std::vector<std::vector<std::string>> improvement_rows(
    const std::vector<UnitMetricsRow>& baselines, const ExpectedMetricsRow& hydra) {
    auto cell = [](const std::optional<double>& hy, const std::optional<double>& base,
                   bool lower_is_better) {
        if (!hy || !base) return std::string("NA");
        const auto v = percent_improvement(*hy, *base, lower_is_better);
        return metric_cell(v, 2);
    };
    std::vector<std::vector<std::string>> rows;
    for (const UnitMetricsRow& b : baselines)
        rows.push_back({b.name, cell(hydra.accuracy, b.metrics.accuracy, false),
                        cell(hydra.f1, b.metrics.f1, false), cell(hydra.fpr, b.metrics.fpr, true)});
    return rows;
}

} // namespace

void stage_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(join_path(out_dir, "traces"));
    const auto traces = generate(cfg.generator, cfg.table, cfg.registry);
    std::vector<std::vector<std::string>> manifest;
    manifest.reserve(traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const std::string file = trace_file_name(i);
        save_trace_csv(traces[i], cfg.table, join_path(out_dir, file));
        manifest.push_back({traces[i].sample_id, std::to_string(traces[i].label),
                            std::to_string(traces[i].timestamp_tag), file});
    }
    write_file(join_path(out_dir, kDatasetFile),
               render_csv({"sample_id", "label", "timestamp_tag", "file"}, manifest));
}

void stage_train_base(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(join_path(out_dir, "models"));
    const auto traces = load_dataset(cfg, out_dir);
    const DatasetSplit split = split_dataset(traces, cfg.split);

    std::vector<std::vector<std::string>> split_rows;
    const std::array<std::pair<const std::vector<EventTrace>*, const char*>, 3> parts = {
        {{&split.model_train, "model-train"}, {&split.seq_train, "seq-train"}, {&split.test, "test"}}};
    for (const auto& [part, name] : parts)
        for (const EventTrace& t : *part) split_rows.push_back({t.sample_id, name});
    write_file(join_path(out_dir, kSplitFile), render_csv({"sample_id", "partition"}, split_rows));

    const auto model_samples = prepare_samples(split.model_train, cfg.window_ms, cfg.num_slices);
    const auto test_samples = prepare_samples(split.test, cfg.window_ms, cfg.num_slices);
    const auto ensembles = train_base_models(cfg, model_samples);

    std::vector<std::vector<std::string>> model_rows;
    for (const EnsembleDetector& e : ensembles)
        for (const auto& m : e.members) {
            const std::string file = model_file_name(e.feature_set_id, m->architecture());
            save_detector(*m, join_path(out_dir, file));
            model_rows.push_back(
                {std::to_string(e.feature_set_id), architecture_name(m->architecture()), file});
        }
    write_file(join_path(out_dir, kModelsFile),
               render_csv({"feature_set_id", "architecture", "file"}, model_rows));

    std::vector<std::vector<std::string>> base_rows;
    for (const UnitMetricsRow& row : baseline_rows(ensembles, test_samples)) {
        std::vector<std::string> cells = {row.name, std::to_string(row.feature_set_id)};
        for (auto& c : metrics_cells(row.metrics)) cells.push_back(std::move(c));
        base_rows.push_back(std::move(cells));
    }
    std::vector<std::string> base_header = {"name", "feature_set_id"};
    base_header.insert(base_header.end(), kMetricsHeader.begin(), kMetricsHeader.end());
    write_file(join_path(out_dir, kBaselineFile), render_csv(base_header, base_rows));

    const MistakeCoverage cov = mistake_coverage_matrix(ensembles, test_samples);
    std::vector<std::string> mheader = {"unit"};
    for (const EnsembleDetector& e : ensembles)
        mheader.push_back("ens-fs" + std::to_string(e.feature_set_id));
    mheader.push_back("zero_mistakes");
    std::vector<std::vector<std::string>> mrows;
    for (std::size_t i = 0; i < ensembles.size(); ++i) {
        std::vector<std::string> cells = {"ens-fs" + std::to_string(ensembles[i].feature_set_id)};
        for (double v : cov.percent[i]) cells.push_back(metric_cell(v, 2));
        cells.push_back(cov.zero_mistakes[i] ? "yes" : "no");
        mrows.push_back(std::move(cells));
    }
    write_file(join_path(out_dir, kMistakeFile), render_csv(mheader, mrows));
}

void stage_learn_schedule(const ExperimentConfig& cfg, const std::string& out_dir) {
    const auto traces = load_dataset(cfg, out_dir);
    const DatasetSplit split = split_dataset(traces, cfg.split);
    const auto seq_samples = prepare_samples(split.seq_train, cfg.window_ms, cfg.num_slices);

    const auto ensembles = load_trained_base(cfg, out_dir);
    std::vector<DetectorUnit> units = build_units(ensembles, cfg.unit_mode);
    if (cfg.filter_top_architectures > 0)
        units = filter_detectors_by_validation(units, seq_samples, cfg.filter_top_architectures,
                                               cfg.filter_top_feature_sets);
    save_roster(units, out_dir);

    const auto sequences = enumerate_sequences(units, cfg.num_slices);
    const auto matrix =
        build_confidence_matrix(seq_samples, cfg.num_slices, units, sequences, cfg.aggregation);
    save_matrix_csv(matrix, join_path(out_dir, kMatrixFile));

    const ScheduleWeights weights = solve_schedule(matrix, cfg.objective, cfg.solver);
    const ScheduleFile file =
        make_schedule_file(weights, sequences, units, cfg.objective, cfg.aggregation);
    save_schedule_csv(file, join_path(out_dir, kScheduleFile));
}

void stage_evaluate(const ExperimentConfig& cfg, const std::string& out_dir) {
    const auto traces = load_dataset(cfg, out_dir);
    const DatasetSplit split = split_dataset(traces, cfg.split);
    const auto test_samples = prepare_samples(split.test, cfg.window_ms, cfg.num_slices);

    const auto ensembles = load_trained_base(cfg, out_dir);
    const auto all_units = build_units(ensembles, cfg.unit_mode);
    const auto units = load_roster(all_units, out_dir);
    const auto sequences = enumerate_sequences(units, cfg.num_slices);

    const ScheduleFile schedule = load_schedule_csv(join_path(out_dir, kScheduleFile));
    const AggregationMethod agg = parse_aggregation(schedule.aggregation);
    const ScheduleWeights weights = weights_from_schedule(schedule, sequences, units);

    const auto test_matrix =
        build_confidence_matrix(test_samples, cfg.num_slices, units, sequences, agg);
    const auto per_seq = per_sequence_metrics(test_matrix);
    const ExpectedMetricsRow hydra = expected_metrics(weights.x, per_seq);

    std::vector<std::vector<std::string>> seq_rows;
    for (std::size_t s = 0; s < per_seq.size(); ++s) {
        std::vector<std::string> cells = {std::to_string(test_matrix.sequence_ids[s])};
        for (auto& c : metrics_cells(per_seq[s])) cells.push_back(std::move(c));
        seq_rows.push_back(std::move(cells));
    }
    std::vector<std::string> seq_header = {"sequence_id"};
    seq_header.insert(seq_header.end(), kMetricsHeader.begin(), kMetricsHeader.end());
    write_file(join_path(out_dir, kPerSequenceFile), render_csv(seq_header, seq_rows));

    std::vector<std::string> hydra_cells = expected_cells(hydra);
    hydra_cells.push_back(schedule.objective);
    hydra_cells.push_back(schedule.aggregation);
    hydra_cells.push_back(format_double(schedule.objective_value));
    write_file(join_path(out_dir, kHydraFile),
               render_csv({"accuracy", "precision", "recall", "f1", "fpr", "objective",
                           "aggregation", "objective_value"},
                          {hydra_cells}));

    const auto baselines = baseline_rows(ensembles, test_samples);
    write_file(join_path(out_dir, kImprovementsFile),
               render_csv({"baseline", "accuracy_pct", "f1_pct", "fpr_pct"},
                          improvement_rows(baselines, hydra)));
}

void stage_report(const ExperimentConfig& cfg, const std::string& out_dir, bool with_sensitivity) {
    auto table_of = [&](const char* file) { return parse_table(read_file(join_path(out_dir, file))); };
    auto section = [](std::string& out, const std::string& title,
                      const std::vector<std::vector<std::string>>& table) {
        out += "== " + title + " ==\n";
        if (table.size() <= 1) {
            out += "(empty)\n\n";
            return;
        }
        out += render_aligned(table[0], {table.begin() + 1, table.end()});
        out += '\n';
    };

    std::string out;
    out += "Hydra experiment report\n";
    out += "=======================\n\n";
    out += "Synthetic-workload run; numbers describe this dataset only and are not\n";
    out += "comparable to results on any external corpus.\n\n";

    section(out, "Scheduling units", table_of(kRosterFile));
    section(out, "Per-feature-set ensemble baselines (majority vote, test partition)",
            table_of(kBaselineFile));
    section(out, "Mistake coverage (% of row unit's errors the column unit gets right)",
            table_of(kMistakeFile));

    const ScheduleFile schedule = load_schedule_csv(join_path(out_dir, kScheduleFile));
    std::vector<std::vector<std::string>> sched_rows;
    for (const ScheduleEntry& e : schedule.entries) {
        if (e.weight < 1e-3 && !sched_rows.empty()) break; // entries are sorted by weight
        std::string slots;
        for (std::size_t t = 0; t < e.slot_unit_ids.size(); ++t) {
            if (t > 0) slots += '|';
            slots += std::to_string(e.slot_unit_ids[t]);
        }
        sched_rows.push_back({std::to_string(e.sequence_id), slots, metric_cell(e.weight, 4)});
        if (sched_rows.size() >= 20) break;
    }
    out += "== Learned schedule (" + schedule.objective + " objective, " + schedule.aggregation +
           " aggregation; entries with weight >= 0.001, top 20) ==\n";
    out += render_aligned({"sequence_id", "slots", "weight"}, sched_rows);
    out += "objective value: " + format_fixed(schedule.objective_value, 6) + "\n\n";

    section(out, "Scheduled detection, expected metrics (test partition)", table_of(kHydraFile));
    section(out, "Relative improvement over each baseline, percent (FPR lower-is-better)",
            table_of(kImprovementsFile));

    if (with_sensitivity) {
        const SensitivityReport rep = run_sensitivity(cfg);
        std::vector<std::vector<std::string>> grid_rows;
        for (const SensitivityGridRow& r : rep.grid) {
            std::vector<std::string> cells = {r.objective, r.aggregation};
            for (auto& c : expected_cells(r.metrics)) cells.push_back(std::move(c));
            grid_rows.push_back(std::move(cells));
        }
        const std::vector<std::string> grid_header = {"objective", "aggregation", "accuracy",
                                                      "precision", "recall",      "f1",
                                                      "fpr"};
        write_file(join_path(out_dir, kSensitivityGridFile), render_csv(grid_header, grid_rows));

        std::vector<std::vector<std::string>> split_rows;
        for (const SensitivitySplitRow& r : rep.splits) {
            std::vector<std::string> cells = {r.label, std::to_string(r.seq_train_size)};
            for (auto& c : expected_cells(r.metrics)) cells.push_back(std::move(c));
            split_rows.push_back(std::move(cells));
        }
        const std::vector<std::string> split_header = {"split",  "seq_train_samples", "accuracy",
                                                       "precision", "recall",         "f1",
                                                       "fpr"};
        write_file(join_path(out_dir, kSensitivitySplitFile), render_csv(split_header, split_rows));

        section(out, "Sensitivity: objective x aggregation grid", table_of(kSensitivityGridFile));
        section(out, "Sensitivity: training-pool split 80/20 vs 90/10",
                table_of(kSensitivitySplitFile));
    }

    write_file(join_path(out_dir, kReportFile), out);
}

void stage_deploy_sim(const ExperimentConfig& cfg, const std::string& out_dir) {
    const auto traces = load_dataset(cfg, out_dir);
    const DatasetSplit split = split_dataset(traces, cfg.split);
    const auto test_samples = prepare_samples(split.test, cfg.window_ms, cfg.num_slices);

    const auto ensembles = load_trained_base(cfg, out_dir);
    const auto all_units = build_units(ensembles, cfg.unit_mode);
    const auto units = load_roster(all_units, out_dir);
    const auto sequences = enumerate_sequences(units, cfg.num_slices);

    const ScheduleFile schedule = load_schedule_csv(join_path(out_dir, kScheduleFile));
    const AggregationMethod agg = parse_aggregation(schedule.aggregation);
    const ScheduleWeights weights = weights_from_schedule(schedule, sequences, units);

    const DeploymentOutcome outcome =
        simulate_deployment(weights, sequences, units, test_samples, agg, cfg.seed);

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < test_samples.size(); ++i)
        rows.push_back({test_samples[i].sample_id, std::to_string(test_samples[i].label),
                        std::to_string(sequences[outcome.chosen[i]].id),
                        std::to_string(outcome.verdicts[i])});
    write_file(join_path(out_dir, kDeploymentFile),
               render_csv({"sample_id", "label", "sequence_id", "verdict"}, rows));

    const auto test_matrix =
        build_confidence_matrix(test_samples, cfg.num_slices, units, sequences, agg);
    const ExpectedMetricsRow expected =
        expected_metrics(weights.x, per_sequence_metrics(test_matrix));
    const MetricsReport& real = outcome.realized;
    auto line = [](const char* name, const std::optional<double>& realized,
                   const std::optional<double>& expect) -> std::vector<std::string> {
        return {name, metric_cell(realized, 6), metric_cell(expect, 6)};
    };
    std::vector<std::vector<std::string>> summary = {
        line("accuracy", real.accuracy, expected.accuracy),
        line("precision", real.precision, expected.precision),
        line("recall", real.recall, expected.recall),
        line("f1", real.f1, expected.f1),
        line("fpr", real.fpr, expected.fpr),
    };
    write_file(join_path(out_dir, kDeploymentSummaryFile),
               render_csv({"metric", "realized", "expected"}, summary));
}

} // namespace hydra
