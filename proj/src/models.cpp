#include "models.hpp"

#include "hydra/aggregate.hpp"
#include "hydra/error.hpp"
#include "hydra/numeric.hpp"
#include "hydra/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hydra::detail {

double Tree::predict(const std::vector<double>& x) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& nd = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(node)].q;
}

static double gini(int positives, int total) {
    const double p1 = static_cast<double>(positives) / static_cast<double>(total);
    const double p0 = 1.0 - p1;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Gains below this are floating-point noise, not structure.
constexpr double kGainTol = 1e-12;

static SplitChoice best_split(const Matrix& X, const std::vector<int>& y,
                              const std::vector<int>& idx, const std::vector<int>& features,
                              int min_leaf) {
    const int n = static_cast<int>(idx.size());
    int n1 = 0;
    for (int i : idx) n1 += y[static_cast<std::size_t>(i)];
    const double base = gini(n1, n);
    SplitChoice best;
    std::vector<std::pair<double, int>> vals(idx.size());
    for (int f : features) {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto i = static_cast<std::size_t>(idx[k]);
            vals[k] = {X[i][static_cast<std::size_t>(f)], y[i]};
        }
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        int left_n1 = 0;
        for (int k = 0; k + 1 < n; ++k) {
            left_n1 += vals[static_cast<std::size_t>(k)].second;
            if (vals[static_cast<std::size_t>(k)].first == vals[static_cast<std::size_t>(k) + 1].first)
                continue;
            const int left_n = k + 1, right_n = n - left_n;
            if (left_n < min_leaf || right_n < min_leaf) continue;
            const double gain = base -
                                static_cast<double>(left_n) / n * gini(left_n1, left_n) -
                                static_cast<double>(right_n) / n * gini(n1 - left_n1, right_n);
            if (gain > best.gain) { // strict: first best wins, feature- then threshold-ascending
                best.feature = f;
                best.gain = gain;
                best.threshold = vals[static_cast<std::size_t>(k)].first +
                                 (vals[static_cast<std::size_t>(k) + 1].first -
                                  vals[static_cast<std::size_t>(k)].first) /
                                     2.0;
            }
        }
    }
    if (best.gain <= kGainTol) best.feature = -1;
    return best;
}

static int build_node(Tree& t, const Matrix& X, const std::vector<int>& y, std::vector<int> idx,
                      int depth, const GrowParams& p, std::mt19937_64* rng, int num_features) {
    const auto me = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    const int n = static_cast<int>(idx.size());
    int n1 = 0;
    for (int i : idx) n1 += y[static_cast<std::size_t>(i)];
    t.nodes.back().count = n;
    t.nodes.back().q = static_cast<double>(n1) / n;
    if (depth >= p.max_depth || n1 == 0 || n1 == n || n < 2 * p.min_samples_leaf) return me;

    std::vector<int> feats(static_cast<std::size_t>(num_features));
    std::iota(feats.begin(), feats.end(), 0);
    if (p.feature_subsample > 0 && p.feature_subsample < num_features) {
        for (int i = 0; i < p.feature_subsample; ++i) {
            const auto j = i + static_cast<int>(rng::uniform_below(
                                   *rng, static_cast<std::uint64_t>(num_features - i)));
            std::swap(feats[static_cast<std::size_t>(i)], feats[static_cast<std::size_t>(j)]);
        }
        feats.resize(static_cast<std::size_t>(p.feature_subsample));
        std::sort(feats.begin(), feats.end());
    }
    const SplitChoice s = best_split(X, y, idx, feats, p.min_samples_leaf);
    if (s.feature < 0) return me;

    std::vector<int> left, right;
    for (int i : idx)
        (X[static_cast<std::size_t>(i)][static_cast<std::size_t>(s.feature)] <= s.threshold ? left
                                                                                            : right)
            .push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    t.nodes[static_cast<std::size_t>(me)].feature = s.feature;
    t.nodes[static_cast<std::size_t>(me)].threshold = s.threshold;
    const int l = build_node(t, X, y, std::move(left), depth + 1, p, rng, num_features);
    t.nodes[static_cast<std::size_t>(me)].left = l;
    const int r = build_node(t, X, y, std::move(right), depth + 1, p, rng, num_features);
    t.nodes[static_cast<std::size_t>(me)].right = r;
    return me;
}

Tree grow_tree(const Matrix& X, const std::vector<int>& y, std::vector<int> idx,
               const GrowParams& p, std::mt19937_64* rng) {
    if (idx.empty()) throw TrainError("cannot grow a tree from zero rows");
    Tree t;
    build_node(t, X, y, std::move(idx), 0, p, rng, static_cast<int>(X[0].size()));
    return t;
}

static int prune_rec(Tree& t, int node, const Matrix& X, const std::vector<int>& y,
                     const std::vector<int>& rows) {
    const int label = t.nodes[static_cast<std::size_t>(node)].q >= 0.5 ? 1 : 0;
    int leaf_correct = 0;
    for (int i : rows) leaf_correct += y[static_cast<std::size_t>(i)] == label;
    if (t.nodes[static_cast<std::size_t>(node)].feature < 0) return leaf_correct;

    std::vector<int> lrows, rrows;
    {
        const TreeNode& nd = t.nodes[static_cast<std::size_t>(node)];
        for (int i : rows)
            (X[static_cast<std::size_t>(i)][static_cast<std::size_t>(nd.feature)] <= nd.threshold
                 ? lrows
                 : rrows)
                .push_back(i);
    }
    const int sub = prune_rec(t, t.nodes[static_cast<std::size_t>(node)].left, X, y, lrows) +
                    prune_rec(t, t.nodes[static_cast<std::size_t>(node)].right, X, y, rrows);
    if (leaf_correct >= sub) { // ties prune: prefer the simpler tree
        TreeNode& nd = t.nodes[static_cast<std::size_t>(node)];
        nd.feature = -1;
        nd.left = nd.right = -1;
        return leaf_correct;
    }
    return sub;
}

static int copy_reachable(const Tree& src, int node, Tree& dst) {
    const auto me = static_cast<int>(dst.nodes.size());
    dst.nodes.push_back(src.nodes[static_cast<std::size_t>(node)]);
    if (src.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const int l = copy_reachable(src, src.nodes[static_cast<std::size_t>(node)].left, dst);
        const int r = copy_reachable(src, src.nodes[static_cast<std::size_t>(node)].right, dst);
        dst.nodes[static_cast<std::size_t>(me)].left = l;
        dst.nodes[static_cast<std::size_t>(me)].right = r;
    }
    return me;
}

void reduced_error_prune(Tree& t, const Matrix& X, const std::vector<int>& y,
                         const std::vector<int>& prune_idx) {
    if (t.nodes.empty()) return;
    prune_rec(t, 0, X, y, prune_idx);
    Tree compacted;
    copy_reachable(t, 0, compacted);
    t.nodes = std::move(compacted.nodes);
}

double Forest::predict(const std::vector<double>& x) const {
    std::vector<double> outs;
    outs.reserve(trees.size());
    for (const auto& t : trees) outs.push_back(t.predict(x));
    return mean(outs);
}

Forest grow_forest(const Matrix& X, const std::vector<int>& y, int forest_size,
                   const GrowParams& p, std::mt19937_64& rng) {
    if (forest_size < 1) throw TrainError("forest size must be positive");
    const auto n = static_cast<std::uint64_t>(X.size());
    Forest f;
    f.trees.reserve(static_cast<std::size_t>(forest_size));
    for (int t = 0; t < forest_size; ++t) {
        std::vector<int> boot(X.size());
        for (auto& i : boot) i = static_cast<int>(rng::uniform_below(rng, n));
        // a single-class bootstrap just yields a pure root leaf
        f.trees.push_back(grow_tree(X, y, std::move(boot), p, &rng));
    }
    return f;
}

std::vector<double> LinearProjection::apply(const std::vector<double>& x) const {
    std::vector<double> out(components.size(), 0.0);
    for (std::size_t r = 0; r < components.size(); ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            s += components[r][j] * (x[j] - mean[j]) / scale[j];
        out[r] = s;
    }
    return out;
}

// Cyclic Jacobi sweeps; plenty for the small symmetric matrices we see.
static void jacobi_eigen(Matrix a, std::vector<double>& evals, Matrix& evecs) {
    const std::size_t n = a.size();
    evecs.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) evecs[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-22) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t =
                    (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = evecs[k][p], vkq = evecs[k][q];
                    evecs[k][p] = c * vkp - s * vkq;
                    evecs[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    evals.resize(n);
    for (std::size_t i = 0; i < n; ++i) evals[i] = a[i][i];
}

static void standardize_stats(const Matrix& X, std::vector<double>& mu, std::vector<double>& sd) {
    const std::size_t n = X.size(), F = X[0].size();
    mu.assign(F, 0.0);
    sd.assign(F, 1.0);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < F; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = X[i][j];
        mu[j] = mean(col);
        for (std::size_t i = 0; i < n; ++i) col[i] = (col[i] - mu[j]) * (col[i] - mu[j]);
        const double var = mean(col);
        sd[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
}

LinearProjection fit_projection(const Matrix& X, int rank) {
    if (X.empty()) throw TrainError("cannot fit a projection on zero rows");
    const std::size_t n = X.size(), F = X[0].size();
    LinearProjection proj;
    standardize_stats(X, proj.mean, proj.scale);

    Matrix Z(n, std::vector<double>(F));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < F; ++j) Z[i][j] = (X[i][j] - proj.mean[j]) / proj.scale[j];

    Matrix C(F, std::vector<double>(F, 0.0));
    std::vector<double> prods(n);
    for (std::size_t j = 0; j < F; ++j) {
        for (std::size_t k = j; k < F; ++k) {
            for (std::size_t i = 0; i < n; ++i) prods[i] = Z[i][j] * Z[i][k];
            C[j][k] = C[k][j] = mean(prods);
        }
    }

    std::vector<double> evals;
    Matrix evecs;
    jacobi_eigen(std::move(C), evals, evecs);

    std::vector<std::size_t> order(F);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return evals[a] > evals[b]; });

    const auto r = static_cast<std::size_t>(std::clamp<int>(rank, 1, static_cast<int>(F)));
    proj.components.assign(r, std::vector<double>(F));
    for (std::size_t c = 0; c < r; ++c) {
        auto& row = proj.components[c];
        for (std::size_t k = 0; k < F; ++k) row[k] = evecs[k][order[c]];
        // fix the sign so equal data always yields the same component
        std::size_t piv = 0;
        for (std::size_t k = 1; k < F; ++k)
            if (std::abs(row[k]) > std::abs(row[piv])) piv = k;
        if (row[piv] < 0.0)
            for (auto& v : row) v = -v;
    }
    return proj;
}

double Mlp::predict(const std::vector<double>& x) const {
    double z = b2;
    for (int u = 0; u < hidden; ++u) {
        double s = b1[static_cast<std::size_t>(u)];
        for (int j = 0; j < inputs; ++j)
            s += w1[static_cast<std::size_t>(u * inputs + j)] *
                 (x[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]) /
                 scale[static_cast<std::size_t>(j)];
        z += w2[static_cast<std::size_t>(u)] * std::tanh(s);
    }
    return sigmoid(z);
}

namespace {

struct Adam {
    std::vector<double> m, v;
    explicit Adam(std::size_t size) : m(size, 0.0), v(size, 0.0) {}

    void update(std::vector<double>& p, const std::vector<double>& g, double lr, int step) {
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double c1 = 1.0 - std::pow(b1, step), c2 = 1.0 - std::pow(b2, step);
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
        }
    }
};

} // namespace

Mlp train_mlp(const Matrix& X, const std::vector<int>& y, const TrainConfig& cfg,
              std::mt19937_64& rng) {
    const auto n = X.size();
    const auto F = static_cast<int>(X[0].size());
    const int H = cfg.hidden_units;
    if (H < 1) throw TrainError("hidden_units must be positive");

    Mlp m;
    m.inputs = F;
    m.hidden = H;
    standardize_stats(X, m.mean, m.scale);
    Matrix Z(n, std::vector<double>(static_cast<std::size_t>(F)));
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < F; ++j)
            Z[i][static_cast<std::size_t>(j)] =
                (X[i][static_cast<std::size_t>(j)] - m.mean[static_cast<std::size_t>(j)]) /
                m.scale[static_cast<std::size_t>(j)];

    const double lim1 = std::sqrt(6.0 / (F + H)), lim2 = std::sqrt(6.0 / (H + 1));
    m.w1.resize(static_cast<std::size_t>(H * F));
    for (auto& w : m.w1) w = (2.0 * rng::uniform01(rng) - 1.0) * lim1;
    m.b1.assign(static_cast<std::size_t>(H), 0.0);
    m.w2.resize(static_cast<std::size_t>(H));
    for (auto& w : m.w2) w = (2.0 * rng::uniform01(rng) - 1.0) * lim2;
    m.b2 = 0.0;

    Adam aw1(m.w1.size()), ab1(m.b1.size()), aw2(m.w2.size()), ab2(1);
    std::vector<double> gw1(m.w1.size()), gb1(m.b1.size()), gw2(m.w2.size()), gb2(1);
    std::vector<double> h(static_cast<std::size_t>(H));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const int B = std::max(1, cfg.batch_size);
    int step = 0;
    std::vector<double> b2p(1);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng::shuffle(order, rng);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(B)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(B));
            const auto bsz = static_cast<double>(stop - start);
            std::fill(gw1.begin(), gw1.end(), 0.0);
            std::fill(gb1.begin(), gb1.end(), 0.0);
            std::fill(gw2.begin(), gw2.end(), 0.0);
            gb2[0] = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const auto i = static_cast<std::size_t>(order[k]);
                double z = m.b2;
                for (int u = 0; u < H; ++u) {
                    double s = m.b1[static_cast<std::size_t>(u)];
                    for (int j = 0; j < F; ++j)
                        s += m.w1[static_cast<std::size_t>(u * F + j)] * Z[i][static_cast<std::size_t>(j)];
                    h[static_cast<std::size_t>(u)] = std::tanh(s);
                    z += m.w2[static_cast<std::size_t>(u)] * h[static_cast<std::size_t>(u)];
                }
                const double p = sigmoid(z);
                const double dz = (p - y[i]) / bsz;
                gb2[0] += dz;
                for (int u = 0; u < H; ++u) {
                    const double hu = h[static_cast<std::size_t>(u)];
                    gw2[static_cast<std::size_t>(u)] += dz * hu;
                    const double dh = dz * m.w2[static_cast<std::size_t>(u)] * (1.0 - hu * hu);
                    gb1[static_cast<std::size_t>(u)] += dh;
                    for (int j = 0; j < F; ++j)
                        gw1[static_cast<std::size_t>(u * F + j)] += dh * Z[i][static_cast<std::size_t>(j)];
                }
            }
            for (std::size_t k = 0; k < gw1.size(); ++k) gw1[k] += cfg.l2 * m.w1[k];
            for (std::size_t k = 0; k < gw2.size(); ++k) gw2[k] += cfg.l2 * m.w2[k];
            ++step;
            aw1.update(m.w1, gw1, cfg.learning_rate, step);
            ab1.update(m.b1, gb1, cfg.learning_rate, step);
            aw2.update(m.w2, gw2, cfg.learning_rate, step);
            b2p[0] = m.b2;
            ab2.update(b2p, gb2, cfg.learning_rate, step);
            m.b2 = b2p[0];
        }
    }
    return m;
}

static void append_doubles(std::string& out, const char* tag, const std::vector<double>& xs) {
    out += tag;
    for (double x : xs) {
        out += ',';
        out += format_double(x);
    }
    out += '\n';
}

void write_tree(const Tree& t, std::string& out) {
    out += "tree\nnodes," + std::to_string(t.nodes.size()) + "\n";
    for (const auto& nd : t.nodes) {
        out += "node," + std::to_string(nd.feature) + ',' + format_double(nd.threshold) + ',' +
               std::to_string(nd.left) + ',' + std::to_string(nd.right) + ',' + format_double(nd.q) +
               ',' + std::to_string(nd.count) + '\n';
    }
}

void write_forest(const Forest& f, std::string& out) {
    out += "forest," + std::to_string(f.trees.size()) + "\n";
    for (const auto& t : f.trees) write_tree(t, out);
}

void write_projection(const LinearProjection& p, std::string& out) {
    out += "projection," + std::to_string(p.components.size()) + ',' +
           std::to_string(p.mean.size()) + '\n';
    append_doubles(out, "mean", p.mean);
    append_doubles(out, "scale", p.scale);
    for (const auto& row : p.components) append_doubles(out, "component", row);
}

void write_mlp(const Mlp& m, std::string& out) {
    out += "mlp," + std::to_string(m.inputs) + ',' + std::to_string(m.hidden) + '\n';
    append_doubles(out, "mean", m.mean);
    append_doubles(out, "scale", m.scale);
    append_doubles(out, "w1", m.w1);
    append_doubles(out, "b1", m.b1);
    append_doubles(out, "w2", m.w2);
    append_doubles(out, "b2", {m.b2});
}

void TreeDetector::write_params(std::string& out) const { write_tree(tree_, out); }
void ForestDetector::write_params(std::string& out) const { write_forest(forest_, out); }
void RankReducedDetector::write_params(std::string& out) const {
    write_projection(proj_, out);
    write_forest(forest_, out);
}
void MlpDetector::write_params(std::string& out) const { write_mlp(mlp_, out); }

} // namespace hydra::detail
