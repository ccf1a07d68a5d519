#include "hydra/sequences.hpp"

#include "hydra/error.hpp"
#include "hydra/numeric.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace hydra {

DetectorUnit make_unit(int id, const EnsembleDetector& e) {
    if (e.members.empty()) throw DataError("ensemble unit has no members");
    DetectorUnit u;
    u.id = id;
    u.feature_set_id = e.feature_set_id;
    u.is_ensemble = true;
    u.ensemble = &e;
    u.name = "ens-fs" + std::to_string(e.feature_set_id);
    return u;
}

DetectorUnit make_unit(int id, const Detector& d) {
    DetectorUnit u;
    u.id = id;
    u.feature_set_id = d.feature_set_id();
    u.is_ensemble = false;
    u.architecture = d.architecture();
    u.detector = &d;
    u.name = std::string(architecture_name(d.architecture())) + "-fs" +
             std::to_string(d.feature_set_id());
    return u;
}

int unit_classify(const DetectorUnit& u, std::span<const WindowVector> windows) {
    if (u.is_ensemble) {
        if (!u.ensemble) throw DataError("unit '" + u.name + "' has no ensemble attached");
        return classify_sample_majority(*u.ensemble, windows);
    }
    if (!u.detector) throw DataError("unit '" + u.name + "' has no detector attached");
    return classify_sample_majority(*u.detector, windows);
}

std::uint64_t sequence_space_size(std::size_t num_units, int L) {
    if (num_units == 0) throw DomainError("sequence space needs at least one unit");
    if (L < 1) throw DomainError("sequence length must be at least 1");
    std::uint64_t size = 1;
    for (int t = 0; t < L; ++t) {
        if (size > std::numeric_limits<std::uint64_t>::max() / num_units)
            throw DomainError("sequence space size overflows: " + std::to_string(num_units) + "^" +
                              std::to_string(L));
        size *= num_units;
    }
    return size;
}

std::vector<DetectorSequence> enumerate_sequences(const std::vector<DetectorUnit>& units, int L) {
    const std::uint64_t total = sequence_space_size(units.size(), L);
    std::vector<DetectorSequence> out;
    out.reserve(total);
    DetectorSequence cur;
    cur.slots.assign(static_cast<std::size_t>(L), 0);
    for (std::uint64_t id = 0; id < total; ++id) {
        cur.id = id;
        out.push_back(cur);
        // increment the least-significant slot, lexicographic order
        for (int t = L - 1; t >= 0; --t) {
            auto& slot = cur.slots[static_cast<std::size_t>(t)];
            if (++slot < static_cast<int>(units.size())) break;
            slot = 0;
        }
    }
    return out;
}

DetectorSequence decode_sequence(std::uint64_t id, std::size_t num_units, int L) {
    const std::uint64_t total = sequence_space_size(num_units, L);
    if (id >= total) throw DomainError("sequence id " + std::to_string(id) + " outside space of " +
                                       std::to_string(total));
    DetectorSequence s;
    s.id = id;
    s.slots.assign(static_cast<std::size_t>(L), 0);
    for (int t = L - 1; t >= 0; --t) {
        s.slots[static_cast<std::size_t>(t)] = static_cast<int>(id % num_units);
        id /= num_units;
    }
    return s;
}

// F1 with the convention that an undefined ratio (no positive predictions or
// no positives) scores 0 for ranking purposes.
static double f1_of_counts(int tp, int fp, int fn) {
    const int denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * tp / static_cast<double>(denom);
}

std::vector<DetectorUnit> filter_detectors_by_validation(const std::vector<DetectorUnit>& units,
                                                         const std::vector<SampleWindows>& validation,
                                                         int top_architectures,
                                                         int top_feature_sets) {
    if (validation.empty()) throw DataError("validation subset is empty");
    if (units.empty()) throw DataError("no units to filter");
    if (top_architectures < 1 || top_feature_sets < 1)
        throw DataError("top-k cutoffs must be positive");
    for (const auto& u : units)
        if (u.is_ensemble)
            throw DataError("validation filter ranks (architecture, feature set) pairs; unit '" +
                            u.name + "' is an ensemble");

    std::vector<double> unit_f1(units.size(), 0.0);
    for (std::size_t k = 0; k < units.size(); ++k) {
        int tp = 0, fp = 0, fn = 0;
        for (const auto& s : validation) {
            const int pred = unit_classify(units[k], s.windows);
            tp += pred == 1 && s.label == 1;
            fp += pred == 1 && s.label == 0;
            fn += pred == 0 && s.label == 1;
        }
        unit_f1[k] = f1_of_counts(tp, fp, fn);
    }

    // group mean F1 by architecture and by feature set
    std::map<int, std::pair<double, int>> by_arch, by_fs; // key -> (sum, count)
    for (std::size_t k = 0; k < units.size(); ++k) {
        auto& a = by_arch[static_cast<int>(units[k].architecture)];
        a.first += unit_f1[k];
        a.second += 1;
        auto& f = by_fs[units[k].feature_set_id];
        f.first += unit_f1[k];
        f.second += 1;
    }
    auto top_keys = [](const std::map<int, std::pair<double, int>>& groups, int top_k) {
        std::vector<std::pair<int, double>> scored;
        for (const auto& [key, sc] : groups) scored.emplace_back(key, sc.first / sc.second);
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first; // tie: lower id first
        });
        std::set<int> keep;
        for (std::size_t k = 0; k < scored.size() && static_cast<int>(k) < top_k; ++k)
            keep.insert(scored[k].first);
        return keep;
    };
    const auto keep_arch = top_keys(by_arch, top_architectures);
    const auto keep_fs = top_keys(by_fs, top_feature_sets);

    std::vector<DetectorUnit> out;
    for (const auto& u : units)
        if (keep_arch.count(static_cast<int>(u.architecture)) && keep_fs.count(u.feature_set_id))
            out.push_back(u);
    return out;
}

static std::vector<const Detector*> unit_members(const DetectorUnit& u) {
    std::vector<const Detector*> members;
    if (u.is_ensemble) {
        if (!u.ensemble) throw DataError("unit '" + u.name + "' has no ensemble attached");
        for (const auto& m : u.ensemble->members) members.push_back(m.get());
    } else {
        if (!u.detector) throw DataError("unit '" + u.name + "' has no detector attached");
        members.push_back(u.detector);
    }
    return members;
}

SequenceConfidenceMatrix build_confidence_matrix(const std::vector<SampleWindows>& samples, int L,
                                                 const std::vector<DetectorUnit>& units,
                                                 const std::vector<DetectorSequence>& sequences,
                                                 AggregationMethod method) {
    if (samples.empty()) throw DataError("confidence matrix needs at least one sample");
    if (units.empty()) throw DataError("confidence matrix needs at least one unit");
    if (L < 1) throw DomainError("sequence length must be at least 1");
    for (const auto& seq : sequences) {
        if (static_cast<int>(seq.slots.size()) != L)
            throw DataError("sequence " + std::to_string(seq.id) + " has length " +
                            std::to_string(seq.slots.size()) + ", expected " + std::to_string(L));
        for (int slot : seq.slots)
            if (slot < 0 || slot >= static_cast<int>(units.size()))
                throw DataError("sequence " + std::to_string(seq.id) + " references unit slot " +
                                std::to_string(slot) + " outside the roster");
    }

    SequenceConfidenceMatrix m;
    m.sequence_ids.reserve(sequences.size());
    for (const auto& seq : sequences) m.sequence_ids.push_back(seq.id);
    m.sample_ids.reserve(samples.size());
    m.labels.reserve(samples.size());
    m.values.resize(samples.size() * sequences.size());

    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& sample = samples[i];
        m.sample_ids.push_back(sample.sample_id);
        m.labels.push_back(sample.label);

        std::vector<std::vector<const WindowVector*>> by_slice(static_cast<std::size_t>(L));
        for (const auto& w : sample.windows) {
            if (w.slice_index < 0 || w.slice_index >= L)
                throw DataError("sample '" + sample.sample_id + "' window " +
                                std::to_string(w.window_index) + " has slice index " +
                                std::to_string(w.slice_index) + " outside [0," + std::to_string(L) +
                                ")");
            by_slice[static_cast<std::size_t>(w.slice_index)].push_back(&w);
        }
        for (int t = 0; t < L; ++t)
            if (by_slice[static_cast<std::size_t>(t)].empty())
                throw DataError("sample '" + sample.sample_id + "' has no windows in slice " +
                                std::to_string(t));

        // slice confidence for every (slice, unit) pair, shared by all
        // sequences that monitor that unit in that slice
        std::vector<std::vector<double>> conf(static_cast<std::size_t>(L),
                                              std::vector<double>(units.size()));
        std::vector<double> member_q, window_q;
        for (int t = 0; t < L; ++t) {
            const auto& slice_windows = by_slice[static_cast<std::size_t>(t)];
            for (std::size_t uidx = 0; uidx < units.size(); ++uidx) {
                const auto members = unit_members(units[uidx]);
                member_q.clear();
                for (const Detector* d : members) {
                    window_q.clear();
                    for (const WindowVector* w : slice_windows)
                        window_q.push_back(d->predict_window(*w));
                    member_q.push_back(reduce_windows(window_q));
                }
                conf[static_cast<std::size_t>(t)][uidx] = aggregate_slice(member_q, method);
            }
        }

        std::vector<double> slice_conf(static_cast<std::size_t>(L));
        for (std::size_t s = 0; s < sequences.size(); ++s) {
            for (int t = 0; t < L; ++t)
                slice_conf[static_cast<std::size_t>(t)] =
                    conf[static_cast<std::size_t>(t)]
                        [static_cast<std::size_t>(sequences[s].slots[static_cast<std::size_t>(t)])];
            m.values[i * sequences.size() + s] = reduce_slices(slice_conf, method);
        }
    }
    return m;
}

std::string serialize_matrix_csv(const SequenceConfidenceMatrix& m) {
    std::string out = "sample_id,label";
    for (std::uint64_t id : m.sequence_ids) out += ',' + std::to_string(id);
    out += '\n';
    for (std::size_t i = 0; i < m.num_samples(); ++i) {
        out += m.sample_ids[i];
        out += ',' + std::to_string(m.labels[i]);
        for (std::size_t s = 0; s < m.num_sequences(); ++s) out += ',' + format_double(m.at(i, s));
        out += '\n';
    }
    return out;
}

SequenceConfidenceMatrix parse_matrix_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("matrix file: missing header");
    const auto head = split_csv(line);
    if (head.size() < 3 || head[0] != "sample_id" || head[1] != "label")
        throw ParseError("matrix file: header must start with sample_id,label");
    SequenceConfidenceMatrix m;
    for (std::size_t k = 2; k < head.size(); ++k) {
        errno = 0;
        char* end = nullptr;
        const unsigned long long id = std::strtoull(head[k].c_str(), &end, 10);
        if (errno != 0 || end == head[k].c_str() || *end != '\0')
            throw ParseError("matrix file: bad sequence id '" + head[k] + "'");
        m.sequence_ids.push_back(id);
    }
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() && in.eof()) break;
        const auto fields = split_csv(line);
        if (fields.size() != head.size())
            throw ParseError("matrix file line " + std::to_string(lineno) + ": expected " +
                             std::to_string(head.size()) + " fields, got " +
                             std::to_string(fields.size()));
        m.sample_ids.push_back(fields[0]);
        if (fields[1] != "0" && fields[1] != "1")
            throw ParseError("matrix file line " + std::to_string(lineno) + ": label must be 0 or 1");
        m.labels.push_back(fields[1] == "1" ? 1 : 0);
        for (std::size_t k = 2; k < fields.size(); ++k) {
            errno = 0;
            char* end = nullptr;
            const double v = std::strtod(fields[k].c_str(), &end);
            if (end == fields[k].c_str() || *end != '\0')
                throw ParseError("matrix file line " + std::to_string(lineno) + ": bad value '" +
                                 fields[k] + "'");
            if (!(v > 0.0 && v < 1.0))
                throw ParseError("matrix file line " + std::to_string(lineno) +
                                 ": confidence outside (0,1)");
            m.values.push_back(v);
        }
    }
    if (m.sample_ids.empty()) throw ParseError("matrix file has no rows");
    return m;
}

void save_matrix_csv(const SequenceConfidenceMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << serialize_matrix_csv(m);
    if (!out) throw DataError("failed writing '" + path + "'");
}

SequenceConfidenceMatrix load_matrix_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open matrix file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_matrix_csv(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace hydra
