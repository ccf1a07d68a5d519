// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each check recomputes its expectations independently of the
// library code under test wherever the criterion allows it.

#include "hydra/aggregate.hpp"
#include "hydra/datagen.hpp"
#include "hydra/detectors.hpp"
#include "hydra/error.hpp"
#include "hydra/metrics.hpp"
#include "hydra/pipeline.hpp"
#include "hydra/rng.hpp"
#include "hydra/scheduler.hpp"
#include "hydra/sequences.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace hydra;
namespace fs = std::filesystem;

namespace {

struct Checker {
    std::vector<std::string> failures;

    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol))
            failures.push_back(what + ": got " + std::to_string(got) + ", want " +
                               std::to_string(want) + " +/- " + std::to_string(tol));
    }
};

std::string config_path() {
    return std::string(HYDRA_CONFIG_DIR) + "/blindspot.ini";
}

// ---- criterion 1: reference ensemble table is internally consistent ---------

void criterion_metric_arithmetic(Checker& c) {
    struct Row {
        int id;
        double accuracy, f1, recall, precision, fpr;
    };
    // reference per-feature-set ensemble results (accuracy, F1, recall,
    // precision, FPR)
    const std::vector<Row> rows = {
        {1, 0.878, 0.615, 0.993, 0.446, 0.134},  {2, 0.800, 0.494, 0.998, 0.328, 0.222},
        {3, 0.928, 0.731, 0.995, 0.578, 0.079},  {4, 0.863, 0.588, 0.998, 0.417, 0.152},
        {5, 0.886, 0.630, 0.989, 0.462, 0.125},  {6, 0.833, 0.539, 0.999, 0.369, 0.185},
        {7, 0.889, 0.637, 0.993, 0.469, 0.122},  {8, 0.919, 0.706, 0.995, 0.547, 0.090},
        {9, 0.874, 0.607, 0.998, 0.437, 0.140},  {10, 0.796, 0.489, 0.996, 0.324, 0.225},
        {11, 0.853, 0.570, 0.997, 0.400, 0.163},
    };
    for (const Row& r : rows) {
        const auto f1 = f1_from_pr(r.precision, r.recall);
        c.require(f1.has_value(), "ensemble " + std::to_string(r.id) + ": F1 undefined");
        if (f1)
            c.near(*f1, r.f1, 0.002, "ensemble " + std::to_string(r.id) + " F1 from p/r");
    }
}

// ---- criterion 2: improvement arithmetic over the strongest baseline --------

void criterion_improvement_arithmetic(Checker& c) {
    // scheduled detector summary vs the strongest single-set ensemble
    const double hydra_acc = 0.971, hydra_f1 = 0.872, hydra_fpr = 0.031;
    const double base_acc = 0.928, base_f1 = 0.731, base_fpr = 0.079;

    const auto acc = percent_improvement(hydra_acc, base_acc, false);
    const auto f1 = percent_improvement(hydra_f1, base_f1, false);
    const auto fpr = percent_improvement(hydra_fpr, base_fpr, true);
    c.require(acc && f1 && fpr, "improvement undefined");
    if (acc) c.near(*acc, 4.64, 0.15, "accuracy improvement %");
    if (f1) c.near(*f1, 19.32, 0.5, "F1 improvement %");
    if (fpr) c.near(*fpr, 60.23, 1.5, "FPR improvement %");
}

// ---- criterion 3: sequence-space sizes ---------------------------------------

class NullDetector : public Detector {
public:
    explicit NullDetector(FeatureSet fs) : Detector(Architecture::decision_tree, std::move(fs)) {}

protected:
    double predict_features(const std::vector<double>&) const override { return 0.5; }
    void write_params(std::string&) const override {}
};

std::vector<DetectorUnit> null_units(int n, const Detector& d) {
    std::vector<DetectorUnit> units;
    for (int i = 0; i < n; ++i) {
        DetectorUnit u;
        u.id = i;
        u.name = "u" + std::to_string(i);
        u.feature_set_id = 1;
        u.detector = &d;
        units.push_back(std::move(u));
    }
    return units;
}

void criterion_sequence_counts(Checker& c) {
    FeatureSet fs{1, {1}, ""};
    NullDetector d(fs);

    for (int n : {11, 15}) {
        const auto units = null_units(n, d);
        const auto seqs = enumerate_sequences(units, 3);
        const std::uint64_t want = static_cast<std::uint64_t>(n) * n * n;
        c.require(seqs.size() == want, std::to_string(n) + " units: enumerated " +
                                           std::to_string(seqs.size()) + ", want " +
                                           std::to_string(want));
        // lexicographic ids, dense 0..|S|-1
        bool ids_ok = true, lex_ok = true;
        for (std::size_t s = 0; s < seqs.size(); ++s) {
            if (seqs[s].id != s) ids_ok = false;
            if (s > 0 && !(seqs[s - 1].slots < seqs[s].slots)) lex_ok = false;
        }
        c.require(ids_ok, "sequence ids are not dense ranks");
        c.require(lex_ok, "sequence order is not lexicographic");
    }
    c.require(sequence_space_size(55, 3) == 166375,
              "55^3 = " + std::to_string(sequence_space_size(55, 3)) + ", want 166375");
}

// ---- criterion 4: aggregation properties --------------------------------------

void criterion_aggregation_properties(Checker& c) {
    // 1e6 clipped probabilities round-trip through logit/sigmoid
    auto g = rng::make_stream(2024, "acceptance.roundtrip");
    double worst = 0.0;
    for (int i = 0; i < 1000000; ++i) {
        const double q = clip_posterior(rng::uniform01(g));
        worst = std::max(worst, std::abs(sigmoid(logit(q)) - q));
    }
    // and the clip boundaries themselves
    for (double q : {kPosteriorClip, 1.0 - kPosteriorClip, 0.5})
        worst = std::max(worst, std::abs(sigmoid(logit(q)) - q));
    c.require(worst <= 1e-12, "round-trip error " + std::to_string(worst) + " > 1e-12");

    const std::vector<AggregationMethod> methods = {
        AggregationMethod::logit_mean, AggregationMethod::logit_sum, AggregationMethod::prob_mean,
        AggregationMethod::hard_vote};

    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> qs(2 + trial % 6);
        for (auto& q : qs) q = clip_posterior(rng::uniform01(g));
        for (auto m : methods) {
            const double ref = aggregate_slice(qs, m);
            // permutation invariance
            std::vector<double> perm = qs;
            rng::shuffle(perm, g);
            if (std::abs(aggregate_slice(perm, m) - ref) > 1e-12) {
                c.require(false, "permutation changed an aggregate");
                return;
            }
            // monotonicity
            std::vector<double> up = qs;
            const std::size_t j = trial % qs.size();
            up[j] = clip_posterior(up[j] + 0.3 * (1.0 - up[j]));
            if (aggregate_slice(up, m) < ref - 1e-12) {
                c.require(false, "raising a posterior lowered an aggregate");
                return;
            }
        }
        // duplication: logit-mean invariant, logit-sum strictly diverges when
        // the consensus is off-neutral
        std::vector<double> dup;
        for (double q : qs) {
            dup.push_back(q);
            dup.push_back(q);
        }
        const double lm = aggregate_slice(qs, AggregationMethod::logit_mean);
        if (std::abs(aggregate_slice(dup, AggregationMethod::logit_mean) - lm) > 1e-12) {
            c.require(false, "duplication moved logit-mean");
            return;
        }
        const double ls1 = aggregate_slice(qs, AggregationMethod::logit_sum);
        const double ls2 = aggregate_slice(dup, AggregationMethod::logit_sum);
        if (ls1 > 0.5 + 1e-9 && !(ls2 > ls1)) {
            c.require(false, "duplication did not strengthen a positive logit-sum");
            return;
        }
        if (ls1 < 0.5 - 1e-9 && !(ls2 < ls1)) {
            c.require(false, "duplication did not strengthen a negative logit-sum");
            return;
        }
    }

    // K=1 and L=1 collapse identities
    for (double q : {0.2, 0.5, 0.9}) {
        const std::vector<double> one = {q};
        c.require(aggregate_slice(one, AggregationMethod::logit_mean) == q, "K=1 logit-mean");
        c.require(aggregate_slice(one, AggregationMethod::logit_sum) == q, "K=1 logit-sum");
        c.require(aggregate_slice(one, AggregationMethod::prob_mean) == q, "K=1 mean");
        const double voted = aggregate_slice(one, AggregationMethod::hard_vote);
        c.require(voted == (q >= 0.5 ? 1.0 - kPosteriorClip : kPosteriorClip),
                  "K=1 vote quantization");
        for (auto m : methods)
            c.require(reduce_slices(one, m) == q, "L=1 slice reduction is the identity");
    }
}

// ---- criterion 5: solver vs dense grid search ---------------------------------

// independent logistic objective: never calls the library
double oracle_logistic(const std::vector<double>& x, const std::vector<int>& y,
                       const std::vector<std::vector<double>>& p) {
    double f = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double z = 0.0;
        for (std::size_t s = 0; s < x.size(); ++s) z += x[s] * p[i][s];
        const double softplus = z > 30.0 ? z : std::log1p(std::exp(z));
        f += y[i] * z - softplus;
    }
    return f;
}

void criterion_solver_oracle(Checker& c) {
    auto g = rng::make_stream(99, "acceptance.solver");
    ObjectiveSpec spec; // logistic, no penalty
    SolverOptions opts;
    opts.max_iters = 50000;
    opts.tol = 1e-9;
    opts.seed = 1;

    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t S = 2 + trial % 2;
        const std::size_t n = 10 + rng::uniform_below(g, 31); // 10..40
        std::vector<int> y(n);
        std::vector<std::vector<double>> p(n, std::vector<double>(S));
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(rng::uniform_below(g, 2));
            (y[i] ? has1 : has0) = true;
            for (auto& v : p[i]) v = 0.02 + 0.96 * rng::uniform01(g);
        }
        if (!has0) y[0] = 0;
        if (!has1) y[n - 1] = 1;

        SequenceConfidenceMatrix P;
        P.labels = y;
        for (std::size_t i = 0; i < n; ++i) P.sample_ids.push_back("i" + std::to_string(i));
        for (std::size_t s = 0; s < S; ++s) P.sequence_ids.push_back(s);
        P.values.resize(n * S);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = 0; s < S; ++s) P.values[i * S + s] = p[i][s];

        const ScheduleWeights w = solve_schedule(P, spec, opts);

        // dense simplex grid at 0.005 steps
        double grid_best = -1e300;
        const int steps = 200;
        if (S == 2) {
            for (int a = 0; a <= steps; ++a) {
                const std::vector<double> x = {a / 200.0, 1.0 - a / 200.0};
                grid_best = std::max(grid_best, oracle_logistic(x, y, p));
            }
        } else {
            for (int a = 0; a <= steps; ++a)
                for (int b = 0; b <= steps - a; ++b) {
                    const std::vector<double> x = {a / 200.0, b / 200.0,
                                                   (steps - a - b) / 200.0};
                    grid_best = std::max(grid_best, oracle_logistic(x, y, p));
                }
        }

        // score the returned x with the independent objective
        const double f_solver = oracle_logistic(w.x, y, p);
        if (!(f_solver >= grid_best - 1e-4)) {
            c.require(false, "trial " + std::to_string(trial) + ": solver " +
                                 std::to_string(f_solver) + " below grid optimum " +
                                 std::to_string(grid_best) + " by more than 1e-4");
            return;
        }
        // and the library's reported value agrees with the oracle at that x
        if (std::abs(f_solver - w.objective_value) > 1e-9) {
            c.require(false, "trial " + std::to_string(trial) +
                                 ": reported objective deviates from recomputation");
            return;
        }
    }

    // two-sequence dominant-expert instance
    const std::size_t n = 40;
    std::vector<int> y(n);
    std::vector<std::vector<double>> p(n, std::vector<double>(2));
    SequenceConfidenceMatrix P;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(i % 2);
        p[i][0] = y[i] ? 0.999 : 0.001; // expert
        p[i][1] = 0.45 + 0.1 * rng::uniform01(g);
        P.sample_ids.push_back("i" + std::to_string(i));
    }
    P.labels = y;
    P.sequence_ids = {0, 1};
    P.values.resize(n * 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < 2; ++s) P.values[i * 2 + s] = p[i][s];
    const ScheduleWeights w = solve_schedule(P, spec, opts);
    c.require(w.x[0] >= 0.99, "dominant expert holds only " + std::to_string(w.x[0]) + " mass");
}

// ---- criterion 6: voting vs brute-force recounts -------------------------------

// posterior keyed off bit `bit` of the window's first event count, so any
// vote pattern is constructible
class BitDetector : public Detector {
public:
    BitDetector(FeatureSet fs, int bit)
        : Detector(Architecture::decision_tree, std::move(fs)), bit_(bit) {}

protected:
    double predict_features(const std::vector<double>& x) const override {
        const auto v = static_cast<std::uint64_t>(x[0]);
        return ((v >> bit_) & 1) ? 0.9 : 0.1;
    }
    void write_params(std::string&) const override {}

private:
    int bit_;
};

void criterion_voting_oracle(Checker& c) {
    FeatureSet fs{1, {1}, ""};
    std::vector<std::unique_ptr<BitDetector>> owned;
    for (int k = 0; k < 8; ++k) owned.push_back(std::make_unique<BitDetector>(fs, k));

    auto g = rng::make_stream(7, "acceptance.votes");
    int checked = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int K = 1 + static_cast<int>(rng::uniform_below(g, 7));       // members
        const int W = 1 + static_cast<int>(rng::uniform_below(g, 9));       // windows
        EnsembleDetector ens;
        ens.feature_set_id = 1;
        for (int k = 0; k < K; ++k)
            ens.members.push_back(std::make_unique<BitDetector>(fs, k));

        std::vector<WindowVector> windows(W);
        std::vector<std::vector<int>> votes(W, std::vector<int>(K));
        for (int w = 0; w < W; ++w) {
            std::uint64_t pattern = rng::uniform_below(g, 1ULL << K);
            if (trial % 5 == 0 && K % 2 == 0) {
                // force an exact member tie: half the low bits set
                pattern = (1ULL << (K / 2)) - 1;
            }
            windows[w].features = {static_cast<std::int64_t>(pattern)};
            for (int k = 0; k < K; ++k) votes[w][k] = static_cast<int>((pattern >> k) & 1);
        }

        for (int w = 0; w < W; ++w) {
            int yes = 0;
            for (int k = 0; k < K; ++k) yes += votes[w][k];
            const int want = (2 * yes > K) ? 1 : 0; // strict majority, ties benign
            if (ensemble_vote(ens, windows[w]) != want) {
                c.require(false, "ensemble_vote mismatch at trial " + std::to_string(trial));
                return;
            }
        }

        // sample-level majority for the ensemble
        {
            int mal_windows = 0;
            for (int w = 0; w < W; ++w) {
                int yes = 0;
                for (int k = 0; k < K; ++k) yes += votes[w][k];
                mal_windows += (2 * yes > K) ? 1 : 0;
            }
            const int want = (2 * mal_windows > W) ? 1 : 0;
            if (classify_sample_majority(ens, windows) != want) {
                c.require(false, "ensemble sample majority mismatch at trial " +
                                     std::to_string(trial));
                return;
            }
        }

        // sample-level majority for a lone detector (member 0)
        {
            int mal_windows = 0;
            for (int w = 0; w < W; ++w) mal_windows += votes[w][0];
            const int want = (2 * mal_windows > W) ? 1 : 0;
            if (classify_sample_majority(*owned[0], windows) != want) {
                c.require(false, "detector sample majority mismatch at trial " +
                                     std::to_string(trial));
                return;
            }
        }
        ++checked;
    }
    c.require(checked == 10000, "expected 10000 trials");
}

// ---- criterion 7: end-to-end blind-spot improvement and orderings --------------

double best_baseline_f1(const PipelineResult& res, Checker& c) {
    double best = -1.0;
    for (const auto& row : res.baselines)
        if (row.metrics.f1) best = std::max(best, *row.metrics.f1);
    c.require(best >= 0.0, "no baseline has a defined F1");
    return best;
}

// the strictest reading: among the baselines attaining the best F1, the
// lowest FPR
std::optional<double> best_baseline_fpr(const PipelineResult& res, double best_f1) {
    std::optional<double> best;
    for (const auto& row : res.baselines) {
        if (!row.metrics.f1 || *row.metrics.f1 < best_f1 - 1e-12) continue;
        if (row.metrics.fpr && (!best || *row.metrics.fpr < *best)) best = row.metrics.fpr;
    }
    return best;
}

void criterion_end_to_end(Checker& c) {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path());
    const PipelineResult res = run_pipeline(cfg);

    c.require(res.hydra.f1.has_value(), "scheduled expected F1 is undefined");
    if (!res.hydra.f1) return;
    const double base_f1 = best_baseline_f1(res, c);
    if (base_f1 < 0.0) return;
    c.require(*res.hydra.f1 >= 1.05 * base_f1,
              "expected F1 " + std::to_string(*res.hydra.f1) + " is not a 5% relative gain over " +
                  std::to_string(base_f1));

    const auto base_fpr = best_baseline_fpr(res, base_f1);
    c.require(base_fpr.has_value(), "best baseline FPR undefined");
    c.require(res.hydra.fpr.has_value(), "scheduled expected FPR undefined");
    if (base_fpr && res.hydra.fpr)
        c.require(*res.hydra.fpr <= *base_fpr + 1e-12,
                  "expected FPR " + std::to_string(*res.hydra.fpr) + " exceeds best baseline " +
                      std::to_string(*base_fpr));

    // objective/aggregation orderings on the same trained artifacts
    const std::vector<AggregationMethod> aggs = {
        AggregationMethod::logit_mean, AggregationMethod::logit_sum, AggregationMethod::prob_mean,
        AggregationMethod::hard_vote};
    std::map<std::string, double> f1_of;
    for (auto agg : aggs) {
        const auto train_m = build_confidence_matrix(res.seq_samples, cfg.num_slices, res.units,
                                                     res.sequences, agg);
        const auto test_m = build_confidence_matrix(res.test_samples, cfg.num_slices, res.units,
                                                    res.sequences, agg);
        const auto per_seq = per_sequence_metrics(test_m);
        for (auto kind : {ObjectiveKind::logistic, ObjectiveKind::mse}) {
            ObjectiveSpec spec = cfg.objective;
            spec.kind = kind;
            const ScheduleWeights w = solve_schedule(train_m, spec, cfg.solver);
            const ExpectedMetricsRow row = expected_metrics(w.x, per_seq);
            const std::string key =
                std::string(objective_name(kind)) + "/" + aggregation_name(agg);
            c.require(row.f1.has_value(), "expected F1 undefined for " + key);
            f1_of[key] = row.f1.value_or(-1.0);
        }
    }
    const double lm = f1_of["logistic/logit-mean"];
    const double ls = f1_of["logistic/logit-sum"];
    c.require(lm >= f1_of["mse/logit-mean"] - 1e-12, "mse beats logistic under logit-mean");
    c.require(lm >= ls - 1e-12, "logit-sum beats logit-mean under logistic");
    c.require(ls >= f1_of["logistic/mean"] - 1e-12, "mean beats logit-sum under logistic");
    c.require(ls >= f1_of["logistic/preds"] - 1e-12, "preds beats logit-sum under logistic");
    // headline cell tops the whole grid
    for (const auto& [key, f1] : f1_of)
        c.require(lm >= f1 - 1e-12, key + " beats logistic/logit-mean");
}

// ---- criterion 8: deployment realized vs expected concentration ----------------

void criterion_deployment_concentration(Checker& c) {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path());
    const PipelineResult res = run_pipeline(cfg);

    // fresh 10,000-sample set from the same generating process, different seed
    GeneratorSpec big = cfg.generator;
    big.num_benign = 9000;
    big.num_malware = 1000;
    big.seed = cfg.seed + 101;
    const auto traces = generate(big, cfg.table, cfg.registry);
    const auto samples = prepare_samples(traces, cfg.window_ms, cfg.num_slices);

    const auto test_m = build_confidence_matrix(samples, cfg.num_slices, res.units, res.sequences,
                                                cfg.aggregation);
    const auto per_seq = per_sequence_metrics(test_m);
    const ExpectedMetricsRow expected = expected_metrics(res.weights.x, per_seq);

    const DeploymentOutcome out = simulate_deployment(res.weights, res.sequences, res.units,
                                                      samples, cfg.aggregation, cfg.seed + 555);

    std::int64_t n_mal = 0, n_ben = 0;
    for (const auto& s : samples) (s.label == 1 ? n_mal : n_ben)++;
    const auto total = static_cast<std::int64_t>(samples.size());
    c.require(total == 10000, "expected 10000 samples, generated " + std::to_string(total));

    auto concentration = [&](const char* name, double realized, std::optional<double> expect,
                             std::int64_t n) {
        if (!expect) {
            c.require(false, std::string(name) + ": expected value undefined");
            return;
        }
        const double p = *expect;
        const double sd = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
        const double bound = 2.0 * sd + 1e-12;
        if (std::abs(realized - p) > bound)
            c.require(false, std::string(name) + ": realized " + std::to_string(realized) +
                                 " vs expected " + std::to_string(p) + " exceeds 2 sd (" +
                                 std::to_string(bound) + ")");
    };
    concentration("accuracy", out.realized.accuracy, expected.accuracy, total);
    c.require(out.realized.recall.has_value(), "realized recall undefined");
    if (out.realized.recall) concentration("recall", *out.realized.recall, expected.recall, n_mal);
    c.require(out.realized.fpr.has_value(), "realized FPR undefined");
    if (out.realized.fpr) concentration("fpr", *out.realized.fpr, expected.fpr, n_ben);
}

// ---- criterion 9: byte-identical artifacts ------------------------------------

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), root).string()] = ss.str();
    }
    return files;
}

void criterion_reproducibility(Checker& c) {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path());
    const fs::path base =
        fs::temp_directory_path() / ("hydra_acceptance_" + std::to_string(::getpid()));
    const fs::path d1 = base / "run1", d2 = base / "run2";
    fs::remove_all(base);
    fs::create_directories(d1);
    fs::create_directories(d2);

    auto run_all = [&](const fs::path& dir) {
        stage_simulate(cfg, dir.string());
        stage_train_base(cfg, dir.string());
        stage_learn_schedule(cfg, dir.string());
        stage_evaluate(cfg, dir.string());
        stage_report(cfg, dir.string(), false);
        stage_deploy_sim(cfg, dir.string());
    };
    run_all(d1);
    run_all(d2);

    const auto f1 = tree_bytes(d1);
    const auto f2 = tree_bytes(d2);
    c.require(!f1.empty(), "first run produced no artifacts");
    c.require(f1.size() == f2.size(),
              "artifact counts differ: " + std::to_string(f1.size()) + " vs " +
                  std::to_string(f2.size()));
    for (const auto& [rel, bytes] : f1) {
        const auto it = f2.find(rel);
        if (it == f2.end()) {
            c.require(false, "second run is missing " + rel);
            continue;
        }
        if (it->second != bytes) c.require(false, "artifact differs between runs: " + rel);
    }
    fs::remove_all(base);
}

} // namespace

int main() {
    struct Criterion {
        int number;
        const char* title;
        std::function<void(Checker&)> body;
    };
    const std::vector<Criterion> criteria = {
        {1, "metric arithmetic oracle on the ensemble table", criterion_metric_arithmetic},
        {2, "percent-improvement oracle", criterion_improvement_arithmetic},
        {3, "sequence-space counts (11^3, 15^3, 55^3)", criterion_sequence_counts},
        {4, "aggregation property suite", criterion_aggregation_properties},
        {5, "solver matches dense grid search", criterion_solver_oracle},
        {6, "voting matches brute-force recounts", criterion_voting_oracle},
        {7, "end-to-end blind-spot gain and orderings", criterion_end_to_end},
        {8, "deployment concentration over 10k samples", criterion_deployment_concentration},
        {9, "byte-identical artifacts across reruns", criterion_reproducibility},
    };

    int failures = 0;
    for (const auto& cr : criteria) {
        Checker c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            cr.body(c);
        } catch (const std::exception& e) {
            c.require(false, std::string("exception: ") + e.what());
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.failures.empty()) {
            std::printf("PASS  criterion %d: %s (%.2fs)\n", cr.number, cr.title, secs);
        } else {
            ++failures;
            std::printf("FAIL  criterion %d: %s (%.2fs) -- %s\n", cr.number, cr.title, secs,
                        c.failures.front().c_str());
            for (std::size_t i = 1; i < c.failures.size(); ++i)
                std::printf("      also: %s\n", c.failures[i].c_str());
        }
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
