#include "hydra/detectors.hpp"

#include "hydra/aggregate.hpp"
#include "hydra/error.hpp"
#include "hydra/numeric.hpp"
#include "hydra/rng.hpp"
#include "models.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

namespace hydra {

const char* architecture_name(Architecture a) {
    switch (a) {
        case Architecture::decision_tree: return "decision-tree";
        case Architecture::random_forest: return "random-forest";
        case Architecture::rank_reduced_forest: return "rank-reduced-forest";
        case Architecture::reduced_error_tree: return "reduced-error-tree";
        case Architecture::multilayer_perceptron: return "multilayer-perceptron";
    }
    throw DomainError("unknown architecture");
}

Architecture parse_architecture(const std::string& name) {
    if (name == "decision-tree") return Architecture::decision_tree;
    if (name == "random-forest") return Architecture::random_forest;
    if (name == "rank-reduced-forest") return Architecture::rank_reduced_forest;
    if (name == "reduced-error-tree") return Architecture::reduced_error_tree;
    if (name == "multilayer-perceptron" || name == "mlp") return Architecture::multilayer_perceptron;
    throw ConfigError("unknown architecture '" + name + "'");
}

TrainConfig TrainConfig::from_config(const ConfigFile& cfg, std::uint64_t seed) {
    TrainConfig tc;
    tc.seed = seed;
    if (const ConfigSection* sec = cfg.find("train")) {
        tc.max_depth = static_cast<int>(sec->get_int_or("max-depth", tc.max_depth));
        tc.min_samples_leaf = static_cast<int>(sec->get_int_or("min-samples-leaf", tc.min_samples_leaf));
        tc.forest_size = static_cast<int>(sec->get_int_or("forest-size", tc.forest_size));
        tc.rank = static_cast<int>(sec->get_int_or("rank", tc.rank));
        tc.prune_frac = sec->get_double_or("prune-frac", tc.prune_frac);
        tc.hidden_units = static_cast<int>(sec->get_int_or("hidden-units", tc.hidden_units));
        tc.epochs = static_cast<int>(sec->get_int_or("epochs", tc.epochs));
        tc.batch_size = static_cast<int>(sec->get_int_or("batch-size", tc.batch_size));
        tc.learning_rate = sec->get_double_or("learning-rate", tc.learning_rate);
        tc.l2 = sec->get_double_or("l2", tc.l2);
    }
    if (tc.max_depth < 1 || tc.min_samples_leaf < 1 || tc.forest_size < 1 || tc.rank < 1 ||
        tc.hidden_units < 1 || tc.epochs < 1 || tc.batch_size < 1)
        throw ConfigError("[train]: all size/count knobs must be positive");
    if (!(tc.prune_frac > 0.0 && tc.prune_frac < 1.0))
        throw ConfigError("[train]: prune-frac must lie in (0,1)");
    return tc;
}

static std::vector<double> extract_row(const FeatureSet& fs, const WindowVector& w) {
    std::vector<double> x;
    x.reserve(fs.events.size());
    for (int e : fs.events) {
        if (e < 1 || static_cast<std::size_t>(e) > w.features.size())
            throw DataError("window of sample '" + w.sample_id + "' lacks event column " +
                            std::to_string(e) + " required by feature set " + std::to_string(fs.id));
        x.push_back(static_cast<double>(w.features[static_cast<std::size_t>(e - 1)]));
    }
    return x;
}

double Detector::predict_window(const WindowVector& w) const {
    return clip_posterior(predict_features(extract_row(feature_set_, w)));
}

static detail::Matrix extract_features(const FeatureSet& fs,
                                       const std::vector<WindowVector>& windows) {
    detail::Matrix X;
    X.reserve(windows.size());
    for (const auto& w : windows) X.push_back(extract_row(fs, w));
    return X;
}

std::unique_ptr<Detector> train_detector(Architecture arch, const FeatureSet& fs,
                                         const std::vector<WindowVector>& windows,
                                         const std::vector<int>& labels, const TrainConfig& cfg) {
    if (windows.empty()) throw TrainError("no training windows");
    if (windows.size() != labels.size())
        throw TrainError("training windows and labels differ in length");
    if (fs.events.empty()) throw TrainError("feature set " + std::to_string(fs.id) + " has no events");
    for (int l : labels)
        if (l != 0 && l != 1) throw TrainError("labels must be 0 or 1");
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    if (positives == 0 || positives == labels.size())
        throw TrainError("training windows contain a single class");

    const detail::Matrix X = extract_features(fs, windows);
    const auto num_features = static_cast<int>(fs.events.size());
    auto g = rng::make_stream(cfg.seed, std::string("train.") + architecture_name(arch),
                              static_cast<std::uint64_t>(fs.id));
    std::vector<int> all(windows.size());
    std::iota(all.begin(), all.end(), 0);

    switch (arch) {
        case Architecture::decision_tree: {
            detail::GrowParams p{cfg.max_depth, cfg.min_samples_leaf, 0};
            return std::make_unique<detail::TreeDetector>(arch, fs,
                                                          detail::grow_tree(X, labels, all, p, nullptr));
        }
        case Architecture::random_forest: {
            detail::GrowParams p{cfg.max_depth, cfg.min_samples_leaf,
                                 std::max(1, static_cast<int>(std::lround(std::sqrt(num_features))))};
            return std::make_unique<detail::ForestDetector>(
                fs, detail::grow_forest(X, labels, cfg.forest_size, p, g));
        }
        case Architecture::rank_reduced_forest: {
            detail::LinearProjection proj = detail::fit_projection(X, cfg.rank);
            detail::Matrix Xp;
            Xp.reserve(X.size());
            for (const auto& row : X) Xp.push_back(proj.apply(row));
            detail::GrowParams p{cfg.max_depth, cfg.min_samples_leaf, 0};
            return std::make_unique<detail::RankReducedDetector>(
                fs, std::move(proj), detail::grow_forest(Xp, labels, cfg.forest_size, p, g));
        }
        case Architecture::reduced_error_tree: {
            std::vector<int> by_class[2];
            for (std::size_t i = 0; i < labels.size(); ++i)
                by_class[labels[i]].push_back(static_cast<int>(i));
            std::vector<int> grow_idx, prune_idx;
            for (auto& ids : by_class) {
                rng::shuffle(ids, g);
                auto n_grow = static_cast<std::size_t>(
                    std::llround((1.0 - cfg.prune_frac) * static_cast<double>(ids.size())));
                n_grow = std::clamp<std::size_t>(n_grow, 1, ids.size());
                for (std::size_t k = 0; k < ids.size(); ++k)
                    (k < n_grow ? grow_idx : prune_idx).push_back(ids[k]);
            }
            detail::GrowParams p{cfg.max_depth, cfg.min_samples_leaf, 0};
            detail::Tree tree = detail::grow_tree(X, labels, grow_idx, p, nullptr);
            if (!prune_idx.empty()) detail::reduced_error_prune(tree, X, labels, prune_idx);
            return std::make_unique<detail::TreeDetector>(arch, fs, std::move(tree));
        }
        case Architecture::multilayer_perceptron:
            return std::make_unique<detail::MlpDetector>(fs, detail::train_mlp(X, labels, cfg, g));
    }
    throw DomainError("unknown architecture");
}

EnsembleDetector train_ensemble(std::span<const Architecture> archs, const FeatureSet& fs,
                                const std::vector<WindowVector>& windows,
                                const std::vector<int>& labels, const TrainConfig& cfg) {
    if (archs.empty()) throw TrainError("ensemble needs at least one architecture");
    EnsembleDetector e;
    e.feature_set_id = fs.id;
    for (Architecture a : archs) e.members.push_back(train_detector(a, fs, windows, labels, cfg));
    return e;
}

int ensemble_vote(const EnsembleDetector& e, const WindowVector& w) {
    if (e.members.empty()) throw DataError("ensemble has no members");
    int votes = 0;
    for (const auto& m : e.members) votes += hard_label(m->predict_window(w));
    return 2 * votes > static_cast<int>(e.members.size()) ? 1 : 0;
}

template <typename LabelFn>
static int majority_over_windows(LabelFn&& label_of, std::span<const WindowVector> windows) {
    if (windows.empty()) throw DataError("sample has no windows to classify");
    int votes = 0;
    for (const auto& w : windows) votes += label_of(w);
    return 2 * votes > static_cast<int>(windows.size()) ? 1 : 0;
}

int classify_sample_majority(const Detector& d, std::span<const WindowVector> windows) {
    return majority_over_windows(
        [&](const WindowVector& w) { return hard_label(d.predict_window(w)); }, windows);
}

int classify_sample_majority(const EnsembleDetector& e, std::span<const WindowVector> windows) {
    return majority_over_windows([&](const WindowVector& w) { return ensemble_vote(e, w); },
                                 windows);
}

MistakeCoverage mistake_coverage_matrix(const std::vector<EnsembleDetector>& ensembles,
                                        const std::vector<SampleWindows>& samples) {
    if (ensembles.empty()) throw DataError("mistake coverage needs at least one ensemble");
    if (samples.empty()) throw DataError("mistake coverage needs at least one sample");
    const std::size_t n = ensembles.size();
    std::vector<std::vector<char>> correct(n, std::vector<char>(samples.size(), 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < samples.size(); ++s)
            correct[i][s] =
                classify_sample_majority(ensembles[i], samples[s].windows) == samples[s].label;

    MistakeCoverage mc;
    mc.percent.assign(n, std::vector<double>(n, 0.0));
    mc.zero_mistakes.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> mistakes;
        for (std::size_t s = 0; s < samples.size(); ++s)
            if (!correct[i][s]) mistakes.push_back(s);
        if (mistakes.empty()) {
            mc.zero_mistakes[i] = 1;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue; // a baseline cannot correct its own errors
            std::size_t covered = 0;
            for (std::size_t s : mistakes) covered += correct[j][s];
            mc.percent[i][j] =
                100.0 * static_cast<double>(covered) / static_cast<double>(mistakes.size());
        }
    }
    return mc;
}

// ---- persistence ----------------------------------------------------------

std::string serialize_detector(const Detector& d) {
    const FeatureSet& fs = d.feature_set();
    std::string out = "hydra-model,1,";
    out += architecture_name(d.architecture());
    out += ',' + std::to_string(fs.id) + '\n';
    out += "feature-set," + std::to_string(fs.id);
    for (int e : fs.events) out += ',' + std::to_string(e);
    out += '\n';
    d.write_params(out);
    out += "end\n";
    return out;
}

namespace {

struct LineReader {
    std::istringstream in;
    int lineno = 0;
    explicit LineReader(const std::string& text) : in(text) {}

    std::string next() {
        std::string line;
        if (!std::getline(in, line))
            throw ParseError("model file truncated after line " + std::to_string(lineno));
        ++lineno;
        return line;
    }
};

[[noreturn]] void bad_line(int lineno, const std::string& msg) {
    throw ParseError("model file line " + std::to_string(lineno) + ": " + msg);
}

int to_int(const std::string& s, int lineno) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (errno != 0 || end == s.c_str() || *end != '\0') bad_line(lineno, "bad integer '" + s + "'");
    return static_cast<int>(v);
}

double to_double(const std::string& s, int lineno) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') bad_line(lineno, "bad number '" + s + "'");
    return v;
}

std::vector<std::string> expect(LineReader& r, const char* tag, std::size_t min_fields) {
    auto fields = split_csv(r.next());
    if (fields.empty() || fields[0] != tag)
        bad_line(r.lineno, std::string("expected '") + tag + "' record, got '" +
                               (fields.empty() ? "" : fields[0]) + "'");
    if (fields.size() < min_fields)
        bad_line(r.lineno, std::string("'") + tag + "' record too short");
    return fields;
}

std::vector<double> expect_doubles(LineReader& r, const char* tag, std::size_t count) {
    auto fields = expect(r, tag, count + 1);
    if (fields.size() != count + 1)
        bad_line(r.lineno, std::string("'") + tag + "' record: expected " + std::to_string(count) +
                               " values, got " + std::to_string(fields.size() - 1));
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t k = 1; k < fields.size(); ++k) out.push_back(to_double(fields[k], r.lineno));
    return out;
}

detail::Tree parse_tree(LineReader& r) {
    expect(r, "tree", 1);
    const auto hdr = expect(r, "nodes", 2);
    const int n = to_int(hdr[1], r.lineno);
    if (n < 1) bad_line(r.lineno, "tree must have at least one node");
    detail::Tree t;
    t.nodes.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto f = expect(r, "node", 7);
        if (f.size() != 7) bad_line(r.lineno, "'node' record needs 6 fields");
        detail::TreeNode nd;
        nd.feature = to_int(f[1], r.lineno);
        nd.threshold = to_double(f[2], r.lineno);
        nd.left = to_int(f[3], r.lineno);
        nd.right = to_int(f[4], r.lineno);
        nd.q = to_double(f[5], r.lineno);
        nd.count = to_int(f[6], r.lineno);
        if (nd.feature >= 0) {
            // children always follow their parent, which also rules out cycles
            if (nd.left <= i || nd.left >= n || nd.right <= i || nd.right >= n)
                bad_line(r.lineno, "node child indices out of range");
        } else if (nd.left != -1 || nd.right != -1) {
            bad_line(r.lineno, "leaf with child indices");
        }
        if (!(nd.q >= 0.0 && nd.q <= 1.0)) bad_line(r.lineno, "node posterior outside [0,1]");
        t.nodes.push_back(nd);
    }
    return t;
}

detail::Forest parse_forest(LineReader& r) {
    const auto hdr = expect(r, "forest", 2);
    const int m = to_int(hdr[1], r.lineno);
    if (m < 1) bad_line(r.lineno, "forest must have at least one tree");
    detail::Forest f;
    f.trees.reserve(static_cast<std::size_t>(m));
    for (int t = 0; t < m; ++t) f.trees.push_back(parse_tree(r));
    return f;
}

detail::LinearProjection parse_projection(LineReader& r) {
    const auto hdr = expect(r, "projection", 3);
    const int rank = to_int(hdr[1], r.lineno);
    const int F = to_int(hdr[2], r.lineno);
    if (rank < 1 || F < 1) bad_line(r.lineno, "projection dimensions must be positive");
    detail::LinearProjection p;
    p.mean = expect_doubles(r, "mean", static_cast<std::size_t>(F));
    p.scale = expect_doubles(r, "scale", static_cast<std::size_t>(F));
    for (int c = 0; c < rank; ++c)
        p.components.push_back(expect_doubles(r, "component", static_cast<std::size_t>(F)));
    for (double s : p.scale)
        if (!(s > 0.0)) bad_line(r.lineno, "projection scale must be positive");
    return p;
}

detail::Mlp parse_mlp(LineReader& r) {
    const auto hdr = expect(r, "mlp", 3);
    detail::Mlp m;
    m.inputs = to_int(hdr[1], r.lineno);
    m.hidden = to_int(hdr[2], r.lineno);
    if (m.inputs < 1 || m.hidden < 1) bad_line(r.lineno, "mlp dimensions must be positive");
    const auto F = static_cast<std::size_t>(m.inputs), H = static_cast<std::size_t>(m.hidden);
    m.mean = expect_doubles(r, "mean", F);
    m.scale = expect_doubles(r, "scale", F);
    m.w1 = expect_doubles(r, "w1", H * F);
    m.b1 = expect_doubles(r, "b1", H);
    m.w2 = expect_doubles(r, "w2", H);
    m.b2 = expect_doubles(r, "b2", 1)[0];
    for (double s : m.scale)
        if (!(s > 0.0)) bad_line(r.lineno, "mlp scale must be positive");
    return m;
}

} // namespace

std::unique_ptr<Detector> parse_detector(const std::string& text) {
    LineReader r(text);
    const auto hdr = split_csv(r.next());
    if (hdr.size() != 4 || hdr[0] != "hydra-model")
        bad_line(r.lineno, "expected 'hydra-model,<version>,<architecture>,<feature-set>' header");
    if (hdr[1] != "1") bad_line(r.lineno, "unsupported model file version '" + hdr[1] + "'");
    Architecture arch;
    try {
        arch = parse_architecture(hdr[2]);
    } catch (const ConfigError&) {
        bad_line(r.lineno, "unknown architecture '" + hdr[2] + "'");
    }
    FeatureSet fs;
    fs.id = to_int(hdr[3], r.lineno);

    const auto fsline = expect(r, "feature-set", 3);
    if (to_int(fsline[1], r.lineno) != fs.id)
        bad_line(r.lineno, "feature-set id disagrees with the header");
    for (std::size_t k = 2; k < fsline.size(); ++k) {
        const int e = to_int(fsline[k], r.lineno);
        if (e < 1) bad_line(r.lineno, "event ids are 1-based");
        if (std::find(fs.events.begin(), fs.events.end(), e) != fs.events.end())
            bad_line(r.lineno, "duplicate event id " + std::to_string(e));
        fs.events.push_back(e);
    }

    std::unique_ptr<Detector> d;
    const auto expect_width = fs.events.size();
    switch (arch) {
        case Architecture::decision_tree:
        case Architecture::reduced_error_tree:
            d = std::make_unique<detail::TreeDetector>(arch, std::move(fs), parse_tree(r));
            break;
        case Architecture::random_forest:
            d = std::make_unique<detail::ForestDetector>(std::move(fs), parse_forest(r));
            break;
        case Architecture::rank_reduced_forest: {
            auto proj = parse_projection(r);
            if (proj.mean.size() != expect_width)
                bad_line(r.lineno, "projection width disagrees with the feature set");
            auto forest = parse_forest(r);
            d = std::make_unique<detail::RankReducedDetector>(std::move(fs), std::move(proj),
                                                              std::move(forest));
            break;
        }
        case Architecture::multilayer_perceptron: {
            auto mlp = parse_mlp(r);
            if (static_cast<std::size_t>(mlp.inputs) != expect_width)
                bad_line(r.lineno, "mlp width disagrees with the feature set");
            d = std::make_unique<detail::MlpDetector>(std::move(fs), std::move(mlp));
            break;
        }
    }
    const auto tail = split_csv(r.next());
    if (tail.empty() || tail[0] != "end") bad_line(r.lineno, "missing 'end' terminator");
    return d;
}

void save_detector(const Detector& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << serialize_detector(d);
    if (!out) throw DataError("failed writing '" + path + "'");
}

std::unique_ptr<Detector> load_detector(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_detector(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace hydra
