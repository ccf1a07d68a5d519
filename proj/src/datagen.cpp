#include "hydra/datagen.hpp"

#include "hydra/error.hpp"
#include "hydra/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace hydra {

static void validate_phases(const std::vector<PhaseSpec>& phases, const std::string& who, int E) {
    if (phases.empty()) throw ConfigError(who + ": at least one phase is required");
    double total = 0.0;
    for (std::size_t k = 0; k < phases.size(); ++k) {
        const auto& p = phases[k];
        if (!(p.duration_frac > 0.0))
            throw ConfigError(who + " phase " + std::to_string(k + 1) + ": duration-frac must be positive");
        total += p.duration_frac;
        if (static_cast<int>(p.rates.size()) != E)
            throw ConfigError(who + " phase " + std::to_string(k + 1) + ": expected " + std::to_string(E) +
                              " rates, got " + std::to_string(p.rates.size()));
        for (double r : p.rates)
            if (!(r >= 0.0))
                throw ConfigError(who + " phase " + std::to_string(k + 1) + ": rates must be non-negative");
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError(who + ": phase duration fractions sum to " + std::to_string(total) + ", expected 1");
}

// Expected rate per (interval, event), row-major T x E. Phase boundaries are
// rounded cumulative fractions; the final phase always reaches T.
static std::vector<double> rate_matrix(const std::vector<PhaseSpec>& phases, std::size_t T, int E) {
    std::vector<double> out(T * static_cast<std::size_t>(E), 0.0);
    double cum = 0.0;
    std::size_t start = 0;
    for (std::size_t k = 0; k < phases.size(); ++k) {
        cum += phases[k].duration_frac;
        std::size_t end = k + 1 == phases.size()
                              ? T
                              : std::min<std::size_t>(T, static_cast<std::size_t>(std::llround(cum * static_cast<double>(T))));
        for (std::size_t t = start; t < end; ++t)
            for (int e = 0; e < E; ++e) out[t * E + e] = phases[k].rates[static_cast<std::size_t>(e)];
        if (end > start) start = end;
    }
    return out;
}

static std::vector<char> blind_event_mask(const SubfamilySpec& fam, const FeatureSetRegistry& registry, int E) {
    std::vector<char> mask(static_cast<std::size_t>(E), 0);
    for (int fsid : fam.blind_feature_sets) {
        const FeatureSet& fs = registry.get(fsid);
        for (int e : fs.events) mask[static_cast<std::size_t>(e - 1)] = 1;
    }
    return mask;
}

static std::vector<SubfamilySpec> effective_families(const GeneratorSpec& spec) {
    if (!spec.subfamilies.empty()) return spec.subfamilies;
    return {SubfamilySpec{"all", 1.0, {}}};
}

void GeneratorSpec::validate(const EventTable& table, const FeatureSetRegistry& registry) const {
    const int E = table.size();
    if (E == 0) throw ConfigError("generator: event table is empty");
    if (num_benign <= 0 || num_malware <= 0)
        throw ConfigError("generator: num-benign and num-malware must be positive");
    if (intervals_per_trace == 0) throw ConfigError("generator: intervals-per-trace must be positive");
    if (interval_ms <= 0) throw ConfigError("generator: interval-ms must be positive");
    if (!(jitter_sigma >= 0.0)) throw ConfigError("generator: jitter-sigma must be non-negative");
    validate_phases(benign_phases, "benign", E);
    validate_phases(malware_phases, "malware", E);

    const auto families = effective_families(*this);
    const auto ben = rate_matrix(benign_phases, intervals_per_trace, E);
    const auto mal = rate_matrix(malware_phases, intervals_per_trace, E);
    for (const auto& fam : families) {
        if (fam.name.empty()) throw ConfigError("subfamily names must be non-empty");
        if (!(fam.weight > 0.0)) throw ConfigError("subfamily '" + fam.name + "': weight must be positive");
        const auto mask = blind_event_mask(fam, registry, E); // checks ids are known
        // The family must be exposed somewhere: a non-blinded feature set
        // containing a non-blinded event whose rate differs from benign.
        bool exposed = false;
        for (const auto& fs : registry.sets) {
            if (std::find(fam.blind_feature_sets.begin(), fam.blind_feature_sets.end(), fs.id) !=
                fam.blind_feature_sets.end())
                continue;
            for (int e : fs.events) {
                if (mask[static_cast<std::size_t>(e - 1)]) continue;
                for (std::size_t t = 0; t < intervals_per_trace && !exposed; ++t)
                    if (mal[t * E + (e - 1)] != ben[t * E + (e - 1)]) exposed = true;
                if (exposed) break;
            }
            if (exposed) break;
        }
        if (!exposed)
            throw ConfigError("subfamily '" + fam.name +
                              "' is indistinguishable from benign in every feature set");
    }
    for (std::size_t a = 0; a < families.size(); ++a)
        for (std::size_t b = a + 1; b < families.size(); ++b)
            if (families[a].name == families[b].name)
                throw ConfigError("duplicate subfamily name '" + families[a].name + "'");
}

static std::string pad4(int v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", v);
    return buf;
}

// Spread `ones` malware slots evenly over n positions so both classes span
// the whole timestamp range.
static std::vector<int> spread_labels(int n, int ones) {
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (int j = 0; j < ones; ++j) {
        const auto pos = static_cast<std::size_t>((2LL * j + 1) * n / (2LL * ones));
        labels[pos] = 1;
    }
    return labels;
}

// Quota-greedy proportional assignment: slot i goes to the family with the
// largest running deficit, keeping each family's count within one of its quota.
static std::vector<int> proportional_assignment(const std::vector<double>& weights, int n) {
    const double W = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<int> counts(weights.size(), 0);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        std::size_t best = 0;
        double best_deficit = -1e300;
        for (std::size_t f = 0; f < weights.size(); ++f) {
            const double deficit = weights[f] * i / W - counts[f];
            if (deficit > best_deficit) {
                best = f;
                best_deficit = deficit;
            }
        }
        out.push_back(static_cast<int>(best));
        ++counts[best];
    }
    return out;
}

std::vector<EventTrace> generate(const GeneratorSpec& spec, const EventTable& table,
                                 const FeatureSetRegistry& registry) {
    spec.validate(table, registry);
    const int E = table.size();
    const std::size_t T = spec.intervals_per_trace;
    const int N = spec.num_benign + spec.num_malware;

    const auto ben_rate = rate_matrix(spec.benign_phases, T, E);
    const auto mal_rate = rate_matrix(spec.malware_phases, T, E);
    const auto families = effective_families(spec);
    std::vector<std::vector<double>> fam_rate(families.size());
    for (std::size_t f = 0; f < families.size(); ++f) {
        const auto mask = blind_event_mask(families[f], registry, E);
        fam_rate[f] = mal_rate;
        for (std::size_t t = 0; t < T; ++t)
            for (int e = 0; e < E; ++e)
                if (mask[static_cast<std::size_t>(e)]) fam_rate[f][t * E + e] = ben_rate[t * E + e];
    }

    const auto labels = spread_labels(N, spec.num_malware);
    std::vector<double> weights;
    weights.reserve(families.size());
    for (const auto& fam : families) weights.push_back(fam.weight);
    const auto fam_of = proportional_assignment(weights, spec.num_malware);

    std::vector<EventTrace> out;
    out.reserve(static_cast<std::size_t>(N));
    int ben_seen = 0, mal_seen = 0;
    for (int i = 0; i < N; ++i) {
        auto g = rng::make_stream(spec.seed, "datagen", static_cast<std::uint64_t>(i));
        EventTrace tr;
        tr.interval_ms = spec.interval_ms;
        tr.timestamp_tag = i;
        tr.num_intervals = T;
        tr.num_events = static_cast<std::size_t>(E);
        tr.label = labels[static_cast<std::size_t>(i)];
        const std::vector<double>* rates;
        if (tr.label == 0) {
            tr.sample_id = "ben-" + pad4(ben_seen++);
            rates = &ben_rate;
        } else {
            const auto f = static_cast<std::size_t>(fam_of[static_cast<std::size_t>(mal_seen)]);
            tr.sample_id = "mal-" + pad4(mal_seen++) + "-" + families[f].name;
            rates = &fam_rate[f];
        }
        std::vector<double> jitter(static_cast<std::size_t>(E), 1.0);
        if (spec.jitter_sigma > 0.0)
            for (int e = 0; e < E; ++e)
                jitter[static_cast<std::size_t>(e)] = std::exp(spec.jitter_sigma * rng::normal(g));
        tr.counts.resize(T * static_cast<std::size_t>(E));
        for (std::size_t t = 0; t < T; ++t)
            for (int e = 0; e < E; ++e)
                tr.counts[t * static_cast<std::size_t>(E) + static_cast<std::size_t>(e)] =
                    rng::poisson(g, (*rates)[t * E + e] * jitter[static_cast<std::size_t>(e)]);
        out.push_back(std::move(tr));
    }
    return out;
}

GeneratorSpec GeneratorSpec::from_config(const ConfigFile& cfg, const EventTable& table,
                                         const FeatureSetRegistry& registry) {
    const ConfigSection* gen = cfg.find("generator");
    if (!gen) throw ConfigError("missing [generator] section");
    GeneratorSpec spec;
    spec.seed = static_cast<std::uint64_t>(gen->get_int_or("seed", 0));
    spec.num_benign = static_cast<int>(gen->get_int("num-benign"));
    spec.num_malware = static_cast<int>(gen->get_int("num-malware"));
    spec.intervals_per_trace = static_cast<std::size_t>(gen->get_int("intervals-per-trace"));
    spec.interval_ms = static_cast<int>(gen->get_int_or("interval-ms", 10));
    spec.jitter_sigma = gen->get_double_or("jitter-sigma", 0.0);

    auto load_phases = [&](const std::string& name) {
        std::vector<std::pair<long, PhaseSpec>> keyed;
        for (const ConfigSection* sec : cfg.find_all(name)) {
            char* end = nullptr;
            const long idx = std::strtol(sec->arg.c_str(), &end, 10);
            if (sec->arg.empty() || *end != '\0')
                throw ConfigError("[" + name + " " + sec->arg + "]: phase index must be an integer");
            PhaseSpec p;
            p.duration_frac = sec->get_double("duration-frac");
            p.rates = sec->get_double_list("rates");
            keyed.emplace_back(idx, std::move(p));
        }
        std::sort(keyed.begin(), keyed.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < keyed.size(); ++i)
            if (keyed[i].first == keyed[i - 1].first)
                throw ConfigError("duplicate [" + name + " " + std::to_string(keyed[i].first) + "]");
        std::vector<PhaseSpec> phases;
        phases.reserve(keyed.size());
        for (auto& [idx, p] : keyed) phases.push_back(std::move(p));
        return phases;
    };
    spec.benign_phases = load_phases("benign-phase");
    spec.malware_phases = load_phases("malware-phase");

    for (const ConfigSection* sec : cfg.find_all("subfamily")) {
        SubfamilySpec fam;
        fam.name = sec->arg;
        fam.weight = sec->get_double_or("weight", 1.0);
        if (sec->has("blind-feature-sets"))
            for (std::int64_t id : sec->get_int_list("blind-feature-sets"))
                fam.blind_feature_sets.push_back(static_cast<int>(id));
        spec.subfamilies.push_back(std::move(fam));
    }

    spec.validate(table, registry);
    return spec;
}

struct ClassIndex {
    std::vector<const EventTrace*> benign;
    std::vector<const EventTrace*> malware;
};

static bool trace_before(const EventTrace* a, const EventTrace* b) {
    if (a->timestamp_tag != b->timestamp_tag) return a->timestamp_tag < b->timestamp_tag;
    return a->sample_id < b->sample_id;
}

static std::vector<EventTrace> collect_sorted(std::vector<const EventTrace*> part) {
    std::sort(part.begin(), part.end(), trace_before);
    std::vector<EventTrace> out;
    out.reserve(part.size());
    for (const EventTrace* t : part) out.push_back(*t);
    return out;
}

DatasetSplit split_dataset(const std::vector<EventTrace>& traces, const SplitSpec& spec) {
    if (!(spec.model_frac > 0.0) || spec.seq_frac < 0.0 ||
        std::abs(spec.model_frac + spec.seq_frac - 1.0) > 1e-9)
        throw DataError("model_frac and seq_frac must be non-negative shares of the training pool summing to 1");
    if (!(spec.test_malware_frac > 0.0 && spec.test_malware_frac < 1.0))
        throw DataError("test_malware_frac must lie in (0,1)");
    if (!(spec.test_benign_share > 0.0 && spec.test_benign_share < 1.0))
        throw DataError("test_benign_share must lie in (0,1)");

    ClassIndex idx;
    for (const auto& t : traces) (t.label ? idx.malware : idx.benign).push_back(&t);
    if (idx.benign.empty() || idx.malware.empty())
        throw DataError("split needs at least one sample of each class");

    // Newest malware goes to test; ties at the cut stay in training so test
    // tags strictly exceed every training tag.
    std::sort(idx.malware.begin(), idx.malware.end(), trace_before);
    const int n_mal = static_cast<int>(idx.malware.size());
    int n_mal_test = static_cast<int>(std::llround(spec.test_malware_frac * n_mal));
    n_mal_test = std::max(1, std::min(n_mal - 1, n_mal_test));
    std::size_t cut = static_cast<std::size_t>(n_mal - n_mal_test);
    while (cut < idx.malware.size() &&
           idx.malware[cut]->timestamp_tag == idx.malware[cut - 1]->timestamp_tag)
        ++cut;
    if (cut >= idx.malware.size())
        throw DataError("timestamp ties leave no malware for the test partition");
    std::vector<const EventTrace*> mal_pool(idx.malware.begin(), idx.malware.begin() + static_cast<std::ptrdiff_t>(cut));
    std::vector<const EventTrace*> test(idx.malware.begin() + static_cast<std::ptrdiff_t>(cut), idx.malware.end());

    // Rebalance: subsample benign so the test set hits the requested share.
    const auto n_ben_test = static_cast<int>(std::llround(
        static_cast<double>(test.size()) * spec.test_benign_share / (1.0 - spec.test_benign_share)));
    std::sort(idx.benign.begin(), idx.benign.end(), trace_before);
    if (n_ben_test >= static_cast<int>(idx.benign.size()))
        throw DataError("not enough benign samples to rebalance the test set to share " +
                        std::to_string(spec.test_benign_share));
    auto g_test = rng::make_stream(spec.seed, "split.test");
    rng::shuffle(idx.benign, g_test);
    std::vector<const EventTrace*> ben_pool;
    for (std::size_t i = 0; i < idx.benign.size(); ++i) {
        if (static_cast<int>(i) < n_ben_test)
            test.push_back(idx.benign[i]);
        else
            ben_pool.push_back(idx.benign[i]);
    }

    // Carve each class of the training pool into model / sequence shares.
    DatasetSplit split;
    std::vector<const EventTrace*> model_ptrs, seq_ptrs;
    const std::vector<const EventTrace*>* pools[2] = {&ben_pool, &mal_pool};
    for (int c = 0; c < 2; ++c) {
        std::vector<const EventTrace*> pool = *pools[c];
        std::sort(pool.begin(), pool.end(), trace_before);
        auto g = rng::make_stream(spec.seed, "split.model", static_cast<std::uint64_t>(c));
        rng::shuffle(pool, g);
        const auto n_model = static_cast<std::size_t>(
            std::llround(spec.model_frac * static_cast<double>(pool.size())));
        for (std::size_t i = 0; i < pool.size(); ++i)
            (i < n_model ? model_ptrs : seq_ptrs).push_back(pool[i]);
    }

    auto count_class = [](const std::vector<const EventTrace*>& part, int label) {
        return std::count_if(part.begin(), part.end(),
                             [label](const EventTrace* t) { return t->label == label; });
    };
    if (count_class(model_ptrs, 0) == 0 || count_class(model_ptrs, 1) == 0)
        throw DataError("model training partition lacks one class");
    if (seq_ptrs.empty()) throw DataError("sequence training partition I is empty");
    if (count_class(seq_ptrs, 0) == 0 || count_class(seq_ptrs, 1) == 0)
        throw DataError("sequence training partition I lacks one class");

    split.model_train = collect_sorted(std::move(model_ptrs));
    split.seq_train = collect_sorted(std::move(seq_ptrs));
    split.test = collect_sorted(std::move(test));
    return split;
}

} // namespace hydra
