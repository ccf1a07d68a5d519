#include "doctest.h"

#include "hydra/error.hpp"
#include "hydra/rng.hpp"
#include "hydra/sequences.hpp"

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

using namespace hydra;

namespace {

class StubDetector : public Detector {
public:
    StubDetector(Architecture a, FeatureSet fs, double threshold)
        : Detector(a, std::move(fs)), threshold_(threshold) {}

protected:
    double predict_features(const std::vector<double>& x) const override {
        // graded posterior so confidences vary smoothly with the count
        const double d = (x[0] - threshold_) / 20.0;
        return clip_posterior(sigmoid(d));
    }
    void write_params(std::string& out) const override { (void)out; }

private:
    double threshold_;
};

WindowVector window_of(std::int64_t v, int slice) {
    WindowVector w;
    w.features = {v};
    w.slice_index = slice;
    return w;
}

DetectorUnit stub_unit(int id, Architecture a, int fs_id, const Detector& d) {
    DetectorUnit u;
    u.id = id;
    u.name = "unit-" + std::to_string(id);
    u.feature_set_id = fs_id;
    u.is_ensemble = false;
    u.architecture = a;
    u.detector = &d;
    return u;
}

} // namespace

TEST_CASE("sequence space size: exact powers and overflow refusal") {
    CHECK(sequence_space_size(11, 3) == 1331);
    CHECK(sequence_space_size(15, 3) == 3375);
    CHECK(sequence_space_size(55, 3) == 166375);
    CHECK(sequence_space_size(1, 3) == 1);
    CHECK(sequence_space_size(7, 1) == 7);
    CHECK_THROWS_AS(sequence_space_size(0, 3), DomainError);
    CHECK_THROWS_AS(sequence_space_size(5, 0), DomainError);
    CHECK_THROWS_AS(sequence_space_size(1u << 22, 3), DomainError); // 2^66 overflows
}

TEST_CASE("enumerate_sequences: lexicographic ids and decode round-trip") {
    FeatureSet fs{1, {1}, ""};
    StubDetector d(Architecture::decision_tree, fs, 10.0);
    std::vector<DetectorUnit> units = {
        stub_unit(0, Architecture::decision_tree, 1, d),
        stub_unit(1, Architecture::decision_tree, 2, d),
        stub_unit(2, Architecture::decision_tree, 3, d),
    };
    auto seqs = enumerate_sequences(units, 3);
    REQUIRE(seqs.size() == 27);
    CHECK(seqs.front().slots == std::vector<int>{0, 0, 0});
    CHECK(seqs[1].slots == std::vector<int>{0, 0, 1});    // last slot varies fastest
    CHECK(seqs[3].slots == std::vector<int>{0, 1, 0});
    CHECK(seqs.back().slots == std::vector<int>{2, 2, 2});
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        CHECK(seqs[s].id == s);
        const DetectorSequence dec = decode_sequence(seqs[s].id, units.size(), 3);
        CHECK(dec.slots == seqs[s].slots);
        CHECK(dec.id == seqs[s].id);
    }
    CHECK_THROWS_AS(decode_sequence(27, 3, 3), DomainError);
}

TEST_CASE("filter: keeping every group is the identity") {
    FeatureSet fs{1, {1}, ""};
    StubDetector good(Architecture::decision_tree, fs, 10.0);
    StubDetector bad(Architecture::random_forest, fs, 100.0);
    std::vector<DetectorUnit> units = {
        stub_unit(0, Architecture::decision_tree, 1, good),
        stub_unit(1, Architecture::random_forest, 1, bad),
        stub_unit(2, Architecture::decision_tree, 2, good),
        stub_unit(3, Architecture::random_forest, 2, bad),
    };
    std::vector<SampleWindows> val;
    for (int i = 0; i < 4; ++i) {
        SampleWindows s;
        s.sample_id = "v" + std::to_string(i);
        s.label = i < 2 ? 1 : 0;
        s.windows.push_back(window_of(i < 2 ? 30 : 2, 0));
        val.push_back(std::move(s));
    }
    auto kept = filter_detectors_by_validation(units, val, 2, 2);
    REQUIRE(kept.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(kept[i].id == units[i].id);
}

TEST_CASE("filter: top-k by mean F1 over architectures and feature sets") {
    // validation: two malware (30, 25), two benign (5, 2)
    std::vector<SampleWindows> val;
    const std::int64_t values[4] = {30, 25, 5, 2};
    for (int i = 0; i < 4; ++i) {
        SampleWindows s;
        s.sample_id = "v" + std::to_string(i);
        s.label = i < 2 ? 1 : 0;
        s.windows.push_back(window_of(values[i], 0));
        val.push_back(std::move(s));
    }
    FeatureSet fs{1, {1}, ""};
    // thresholds tuned per unit: F1 1.0 / 0.8 / 2-3 grades
    StubDetector a1(Architecture::decision_tree, fs, 10.0); // predicts 1,1,0,0 -> F1 1.0
    StubDetector a2(Architecture::decision_tree, fs, 4.0);  // 1,1,1,0 -> F1 0.8
    StubDetector a3(Architecture::decision_tree, fs, 27.0); // 1,0,0,0 -> F1 2/3
    StubDetector b1(Architecture::random_forest, fs, 4.0);
    StubDetector b2(Architecture::random_forest, fs, 27.0);
    StubDetector b3(Architecture::random_forest, fs, 27.0);
    std::vector<DetectorUnit> units = {
        stub_unit(0, Architecture::decision_tree, 1, a1),
        stub_unit(1, Architecture::decision_tree, 2, a2),
        stub_unit(2, Architecture::decision_tree, 3, a3),
        stub_unit(3, Architecture::random_forest, 1, b1),
        stub_unit(4, Architecture::random_forest, 2, b2),
        stub_unit(5, Architecture::random_forest, 3, b3),
    };
    // arch means: tree 0.822 > forest 0.711; fs means: 0.9, 0.733, 0.667
    auto kept = filter_detectors_by_validation(units, val, 1, 2);
    REQUIRE(kept.size() == 2); // 1 architecture x 2 feature sets
    CHECK(kept[0].id == 0);    // tree, fs1
    CHECK(kept[1].id == 1);    // tree, fs2

    SUBCASE("ties break toward lower ids") {
        // all units identical: every group ties; lowest architecture & fs win
        std::vector<DetectorUnit> same = {
            stub_unit(0, Architecture::decision_tree, 1, a1),
            stub_unit(1, Architecture::decision_tree, 2, a1),
            stub_unit(2, Architecture::random_forest, 1, a1),
            stub_unit(3, Architecture::random_forest, 2, a1),
        };
        auto one = filter_detectors_by_validation(same, val, 1, 1);
        REQUIRE(one.size() == 1);
        CHECK(one[0].id == 0);
        CHECK(one[0].architecture == Architecture::decision_tree);
        CHECK(one[0].feature_set_id == 1);
    }
    SUBCASE("ensemble units are rejected") {
        EnsembleDetector ens;
        ens.feature_set_id = 1;
        ens.members.push_back(std::make_unique<StubDetector>(Architecture::decision_tree, fs, 10.0));
        std::vector<DetectorUnit> with_ens = units;
        with_ens.push_back(make_unit(6, ens));
        CHECK_THROWS_AS(filter_detectors_by_validation(with_ens, val, 1, 1), DataError);
    }
    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(filter_detectors_by_validation(units, {}, 1, 1), DataError);
        CHECK_THROWS_AS(filter_detectors_by_validation({}, val, 1, 1), DataError);
        CHECK_THROWS_AS(filter_detectors_by_validation(units, val, 0, 1), DataError);
    }
}

namespace {

std::vector<SampleWindows> matrix_samples(int n, std::uint64_t seed) {
    auto g = rng::make_stream(seed, "mat");
    std::vector<SampleWindows> samples;
    for (int i = 0; i < n; ++i) {
        SampleWindows s;
        s.sample_id = "s" + std::to_string(i);
        s.label = i % 2;
        // 3 slices with 2-3 windows each, counts spread around the thresholds
        for (int t = 0; t < 3; ++t) {
            const int wins = 2 + static_cast<int>(rng::uniform_below(g, 2));
            for (int w = 0; w < wins; ++w)
                s.windows.push_back(
                    window_of(static_cast<std::int64_t>(rng::uniform_below(g, 40)), t));
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace

TEST_CASE("confidence matrix: memoized values equal the naive chain bit for bit") {
    FeatureSet fs{1, {1}, ""};
    StubDetector d0(Architecture::decision_tree, fs, 10.0);
    StubDetector d1(Architecture::random_forest, fs, 20.0);
    StubDetector d2(Architecture::multilayer_perceptron, fs, 30.0);
    std::vector<DetectorUnit> units = {
        stub_unit(0, Architecture::decision_tree, 1, d0),
        stub_unit(1, Architecture::random_forest, 1, d1),
        stub_unit(2, Architecture::multilayer_perceptron, 1, d2),
    };
    auto samples = matrix_samples(5, 71);
    auto seqs = enumerate_sequences(units, 3);

    for (auto method : {AggregationMethod::logit_mean, AggregationMethod::logit_sum,
                        AggregationMethod::prob_mean, AggregationMethod::hard_vote}) {
        CAPTURE(aggregation_name(method));
        auto m = build_confidence_matrix(samples, 3, units, seqs, method);
        REQUIRE(m.num_samples() == samples.size());
        REQUIRE(m.num_sequences() == 27);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            CHECK(m.sample_ids[i] == samples[i].sample_id);
            CHECK(m.labels[i] == samples[i].label);
            for (std::size_t s = 0; s < seqs.size(); ++s) {
                // naive recomputation straight through the aggregation chain
                std::vector<std::vector<std::vector<double>>> post(3);
                for (int t = 0; t < 3; ++t) {
                    const DetectorUnit& u = units[static_cast<std::size_t>(seqs[s].slots[t])];
                    std::vector<double> qs;
                    for (const auto& w : samples[i].windows)
                        if (w.slice_index == t) qs.push_back(u.detector->predict_window(w));
                    post[t] = {qs};
                }
                const double naive = sequence_confidence(post, method);
                CHECK(m.at(i, s) == naive);
            }
        }
    }
}

TEST_CASE("confidence matrix: data errors") {
    FeatureSet fs{1, {1}, ""};
    StubDetector d(Architecture::decision_tree, fs, 10.0);
    std::vector<DetectorUnit> units = {stub_unit(0, Architecture::decision_tree, 1, d)};
    auto seqs = enumerate_sequences(units, 3);

    // a sample with an empty slice
    SampleWindows s;
    s.sample_id = "empty2";
    s.label = 0;
    s.windows = {window_of(3, 0), window_of(4, 1)}; // slice 2 missing
    CHECK_THROWS_AS(build_confidence_matrix({s}, 3, units, seqs, AggregationMethod::logit_mean),
                    DataError);

    // a window with an out-of-range slice index
    s.windows = {window_of(3, 0), window_of(4, 1), window_of(5, 3)};
    CHECK_THROWS_AS(build_confidence_matrix({s}, 3, units, seqs, AggregationMethod::logit_mean),
                    DataError);

    CHECK_THROWS_AS(build_confidence_matrix({}, 3, units, seqs, AggregationMethod::logit_mean),
                    DataError);
}

TEST_CASE("confidence matrix: CSV round-trip is bit-identical") {
    FeatureSet fs{1, {1}, ""};
    StubDetector d0(Architecture::decision_tree, fs, 10.0);
    StubDetector d1(Architecture::random_forest, fs, 25.0);
    std::vector<DetectorUnit> units = {
        stub_unit(0, Architecture::decision_tree, 1, d0),
        stub_unit(1, Architecture::random_forest, 1, d1),
    };
    auto samples = matrix_samples(4, 72);
    auto seqs = enumerate_sequences(units, 3);
    auto m = build_confidence_matrix(samples, 3, units, seqs, AggregationMethod::logit_mean);

    const std::string text = serialize_matrix_csv(m);
    auto back = parse_matrix_csv(text);
    CHECK(back.sample_ids == m.sample_ids);
    CHECK(back.labels == m.labels);
    CHECK(back.sequence_ids == m.sequence_ids);
    REQUIRE(back.values.size() == m.values.size());
    for (std::size_t i = 0; i < m.values.size(); ++i) CHECK(back.values[i] == m.values[i]);
    CHECK(serialize_matrix_csv(back) == text);

    const auto path = std::filesystem::temp_directory_path() / "hydra_matrix_test.csv";
    save_matrix_csv(m, path.string());
    auto loaded = load_matrix_csv(path.string());
    CHECK(loaded.values == m.values);
    std::filesystem::remove(path);
}

TEST_CASE("confidence matrix: parse failures") {
    CHECK_THROWS_AS(parse_matrix_csv(""), ParseError);
    CHECK_THROWS_AS(parse_matrix_csv("wrong,header\n"), ParseError);
    CHECK_THROWS_AS(parse_matrix_csv("sample_id,label,0\ns0,7,0.5\n"), ParseError); // bad label
    CHECK_THROWS_AS(parse_matrix_csv("sample_id,label,0,1\ns0,1,0.5\n"), ParseError); // ragged
    CHECK_THROWS_AS(parse_matrix_csv("sample_id,label,0\ns0,1,zebra\n"), ParseError);
    CHECK_THROWS_AS(load_matrix_csv("/nonexistent/matrix.csv"), Error);
}
