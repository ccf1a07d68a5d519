#include "doctest.h"

#include "hydra/datagen.hpp"
#include "hydra/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

using namespace hydra;

namespace {

EventTable small_table() {
    EventTable t;
    t.names = {"ev-a", "ev-b", "ev-c", "ev-d"};
    return t;
}

FeatureSetRegistry small_registry() {
    FeatureSetRegistry r;
    r.counter_budget = 6;
    r.sets.push_back(FeatureSet{1, {1, 2}, "first pair"});
    r.sets.push_back(FeatureSet{2, {3, 4}, "second pair"});
    return r;
}

GeneratorSpec small_spec() {
    GeneratorSpec s;
    s.seed = 123;
    s.num_benign = 40;
    s.num_malware = 40;
    s.intervals_per_trace = 30;
    s.interval_ms = 10;
    s.jitter_sigma = 0.05;
    s.benign_phases = {PhaseSpec{1.0, {20, 20, 20, 20}}};
    s.malware_phases = {PhaseSpec{1.0, {32, 32, 32, 32}}};
    s.subfamilies = {SubfamilySpec{"alpha", 1.0, {1}}, SubfamilySpec{"beta", 1.0, {2}}};
    return s;
}

// Mann-Whitney AUC of score-separates-positives-from-negatives, ties 0.5.
double auc(const std::vector<double>& neg, const std::vector<double>& pos) {
    double wins = 0.0;
    for (double p : pos)
        for (double n : neg) {
            if (p > n)
                wins += 1.0;
            else if (p == n)
                wins += 0.5;
        }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double fs_score(const EventTrace& t, const FeatureSet& fs) {
    double s = 0.0;
    for (int e : fs.events)
        for (std::size_t i = 0; i < t.num_intervals; ++i)
            s += static_cast<double>(t.count(i, static_cast<std::size_t>(e - 1)));
    return s;
}

} // namespace

TEST_CASE("datagen: deterministic, right counts, ids and tags") {
    const EventTable table = small_table();
    const FeatureSetRegistry reg = small_registry();
    const GeneratorSpec spec = small_spec();
    spec.validate(table, reg);

    auto traces = generate(spec, table, reg);
    REQUIRE(traces.size() == 80);

    int benign = 0, malware = 0;
    std::set<std::string> ids;
    std::set<std::int64_t> tags;
    for (auto& t : traces) {
        CHECK(t.num_intervals == 30);
        CHECK(t.num_events == 4);
        CHECK(t.interval_ms == 10);
        CHECK_NOTHROW(t.validate());
        ids.insert(t.sample_id);
        tags.insert(t.timestamp_tag);
        (t.label == 1 ? malware : benign)++;
    }
    CHECK(benign == 40);
    CHECK(malware == 40);
    CHECK(ids.size() == 80);  // unique ids
    CHECK(tags.size() == 80); // unique tags
    CHECK(*tags.begin() == 0);
    CHECK(*tags.rbegin() == 79);

    // classes are interleaved: both classes in each half of the tag range
    for (int half = 0; half < 2; ++half) {
        int b = 0, m = 0;
        for (auto& t : traces)
            if ((t.timestamp_tag < 40) == (half == 0)) (t.label == 1 ? m : b)++;
        CHECK(b > 0);
        CHECK(m > 0);
    }

    auto again = generate(spec, table, reg);
    REQUIRE(again.size() == traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
        CHECK(again[i].sample_id == traces[i].sample_id);
        CHECK(again[i].label == traces[i].label);
        CHECK(again[i].timestamp_tag == traces[i].timestamp_tag);
        CHECK(again[i].counts == traces[i].counts);
    }
}

TEST_CASE("datagen: subfamily proportions and id suffixes") {
    const EventTable table = small_table();
    const FeatureSetRegistry reg = small_registry();
    auto traces = generate(small_spec(), table, reg);

    std::map<std::string, int> fam_counts;
    for (auto& t : traces) {
        if (t.label != 1) continue;
        const bool is_alpha = t.sample_id.find("alpha") != std::string::npos;
        const bool is_beta = t.sample_id.find("beta") != std::string::npos;
        CHECK((is_alpha || is_beta));
        fam_counts[is_alpha ? "alpha" : "beta"]++;
    }
    // equal weights, 40 malware -> 20 each
    CHECK(fam_counts["alpha"] == 20);
    CHECK(fam_counts["beta"] == 20);
}

TEST_CASE("datagen: blind feature sets look benign, exposed ones separate") {
    const EventTable table = small_table();
    const FeatureSetRegistry reg = small_registry();
    // larger run than small_spec(): the AUC thresholds below need the
    // Mann-Whitney noise floor (~0.03 at 300 vs 150) well under 0.1
    GeneratorSpec spec = small_spec();
    spec.num_benign = 300;
    spec.num_malware = 300;
    auto traces = generate(spec, table, reg);

    std::vector<double> benign_fs1, benign_fs2;
    std::vector<double> alpha_fs1, alpha_fs2, beta_fs1, beta_fs2;
    for (auto& t : traces) {
        const double s1 = fs_score(t, reg.get(1));
        const double s2 = fs_score(t, reg.get(2));
        if (t.label == 0) {
            benign_fs1.push_back(s1);
            benign_fs2.push_back(s2);
        } else if (t.sample_id.find("alpha") != std::string::npos) {
            alpha_fs1.push_back(s1);
            alpha_fs2.push_back(s2);
        } else {
            beta_fs1.push_back(s1);
            beta_fs2.push_back(s2);
        }
    }
    // alpha is blind in set 1: counts there are drawn from the benign schedule
    CHECK(auc(benign_fs1, alpha_fs1) < 0.6);
    CHECK(auc(benign_fs2, alpha_fs2) > 0.9);
    // beta is blind in set 2
    CHECK(auc(benign_fs2, beta_fs2) < 0.6);
    CHECK(auc(benign_fs1, beta_fs1) > 0.9);
}

TEST_CASE("datagen: validate rejects bad specs") {
    const EventTable table = small_table();
    const FeatureSetRegistry reg = small_registry();

    GeneratorSpec s = small_spec();
    s.num_benign = 0;
    CHECK_THROWS_AS(s.validate(table, reg), ConfigError);

    s = small_spec();
    s.benign_phases[0].rates.pop_back(); // wrong arity
    CHECK_THROWS_AS(s.validate(table, reg), ConfigError);

    s = small_spec();
    s.benign_phases[0].duration_frac = 0.5; // fractions must sum to 1
    CHECK_THROWS_AS(s.validate(table, reg), ConfigError);

    s = small_spec();
    s.malware_phases[0].rates[2] = -1.0;
    CHECK_THROWS_AS(s.validate(table, reg), ConfigError);

    s = small_spec();
    s.subfamilies[0].blind_feature_sets = {1, 2}; // blind everywhere
    CHECK_THROWS_AS(s.validate(table, reg), ConfigError);

    s = small_spec();
    s.subfamilies[1].name = "alpha"; // duplicate
    CHECK_THROWS_AS(s.validate(table, reg), ConfigError);

    s = small_spec();
    s.jitter_sigma = -0.1;
    CHECK_THROWS_AS(s.validate(table, reg), ConfigError);
}

namespace {

std::vector<EventTrace> labeled_pool(int n_benign, int n_malware) {
    // malware spread evenly through the tag order so every range has both classes
    std::vector<EventTrace> traces;
    const int total = n_benign + n_malware;
    for (int tag = 0; tag < total; ++tag) {
        const bool malware =
            (tag + 1) * n_malware / total > tag * n_malware / total;
        EventTrace t;
        t.label = malware ? 1 : 0;
        t.sample_id = (malware ? "mal-" : "ben-") + std::to_string(tag);
        t.timestamp_tag = tag;
        t.interval_ms = 10;
        t.num_intervals = 2;
        t.num_events = 1;
        t.counts = {1, 1};
        traces.push_back(std::move(t));
    }
    return traces;
}

} // namespace

TEST_CASE("split: partitions are disjoint, temporal, and rebalanced") {
    auto traces = labeled_pool(300, 100);
    SplitSpec spec;
    spec.model_frac = 0.8;
    spec.seq_frac = 0.2;
    spec.test_malware_frac = 0.25;
    spec.test_benign_share = 0.9;
    spec.seed = 7;

    auto split = split_dataset(traces, spec);

    // every id in exactly one partition
    std::set<std::string> seen;
    auto note = [&](const std::vector<EventTrace>& part) {
        for (auto& t : part) {
            CHECK(seen.insert(t.sample_id).second);
        }
    };
    note(split.model_train);
    note(split.seq_train);
    note(split.test);
    CHECK(seen.size() == split.model_train.size() + split.seq_train.size() + split.test.size());

    // the newest quarter of malware goes to test: 25 malware samples
    std::int64_t max_train_mal = -1, min_test_mal = INT64_MAX;
    int test_mal = 0, test_ben = 0;
    for (auto& t : split.model_train)
        if (t.label == 1) max_train_mal = std::max(max_train_mal, t.timestamp_tag);
    for (auto& t : split.seq_train)
        if (t.label == 1) max_train_mal = std::max(max_train_mal, t.timestamp_tag);
    for (auto& t : split.test) {
        if (t.label == 1) {
            min_test_mal = std::min(min_test_mal, t.timestamp_tag);
            ++test_mal;
        } else {
            ++test_ben;
        }
    }
    CHECK(test_mal == 25);
    CHECK(max_train_mal < min_test_mal); // strictly older

    // benign share of test is 0.9 within one sample
    const double share = static_cast<double>(test_ben) / (test_ben + test_mal);
    CHECK(std::abs(test_ben - 0.9 * (test_ben + test_mal)) <= 1.0);
    CHECK(share == doctest::Approx(0.9).epsilon(0.01));

    // training pool splits by the configured fractions
    const std::size_t pool = split.model_train.size() + split.seq_train.size();
    CHECK(split.model_train.size() ==
          static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(pool))));

    // both classes everywhere
    for (auto part : {&split.model_train, &split.seq_train, &split.test}) {
        bool has_b = false, has_m = false;
        for (auto& t : *part) (t.label == 1 ? has_m : has_b) = true;
        CHECK(has_b);
        CHECK(has_m);
    }
}

TEST_CASE("split: seq share doubles when seq_frac doubles") {
    auto traces = labeled_pool(300, 100);
    SplitSpec a;
    a.model_frac = 0.8;
    a.seq_frac = 0.2;
    a.test_malware_frac = 0.25;
    a.test_benign_share = 0.9;
    a.seed = 7;
    SplitSpec b = a;
    b.model_frac = 0.9;
    b.seq_frac = 0.1;

    auto sa = split_dataset(traces, a);
    auto sb = split_dataset(traces, b);
    // each size is rounded independently, so the halved share can drift by
    // up to 1.5 before its own rounding
    CHECK(std::abs(static_cast<long long>(sa.seq_train.size()) -
                   2LL * static_cast<long long>(sb.seq_train.size())) <= 2);
}

TEST_CASE("split: determinism and error cases") {
    auto traces = labeled_pool(100, 40);
    SplitSpec spec;
    spec.model_frac = 0.8;
    spec.seq_frac = 0.2;
    spec.test_malware_frac = 0.25;
    spec.test_benign_share = 0.9;
    spec.seed = 11;

    auto s1 = split_dataset(traces, spec);
    auto s2 = split_dataset(traces, spec);
    auto idlist = [](const std::vector<EventTrace>& v) {
        std::vector<std::string> ids;
        for (auto& t : v) ids.push_back(t.sample_id);
        return ids;
    };
    CHECK(idlist(s1.model_train) == idlist(s2.model_train));
    CHECK(idlist(s1.seq_train) == idlist(s2.seq_train));
    CHECK(idlist(s1.test) == idlist(s2.test));

    SUBCASE("fractions must sum to one") {
        SplitSpec bad = spec;
        bad.model_frac = 0.5;
        CHECK_THROWS_AS(split_dataset(traces, bad), DataError);
    }
    SUBCASE("all-model split leaves I empty") {
        SplitSpec bad = spec;
        bad.model_frac = 1.0;
        bad.seq_frac = 0.0;
        CHECK_THROWS_AS(split_dataset(traces, bad), DataError);
    }
    SUBCASE("test fractions must be interior") {
        SplitSpec bad = spec;
        bad.test_malware_frac = 0.0;
        CHECK_THROWS_AS(split_dataset(traces, bad), DataError);
        bad = spec;
        bad.test_benign_share = 1.0;
        CHECK_THROWS_AS(split_dataset(traces, bad), DataError);
    }
    SUBCASE("single-class input") {
        std::vector<EventTrace> benign_only(traces.begin(), traces.begin() + 10);
        for (auto& t : benign_only) t.label = 0;
        CHECK_THROWS_AS(split_dataset(benign_only, spec), DataError);
    }
}

TEST_CASE("split: timestamp ties at the cut go to training") {
    // all malware shares one tag; a strict cut is impossible
    auto traces = labeled_pool(40, 10);
    for (auto& t : traces)
        if (t.label == 1) t.timestamp_tag = 5;
    SplitSpec spec;
    spec.model_frac = 0.8;
    spec.seq_frac = 0.2;
    spec.test_malware_frac = 0.3;
    spec.test_benign_share = 0.9;
    spec.seed = 3;
    CHECK_THROWS_AS(split_dataset(traces, spec), DataError);
}
