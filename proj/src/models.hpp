#pragma once

// Internal model machinery behind the Detector interface: CART trees,
// reduced-error pruning, bagged forests, a rank-reducing projection, and a
// one-hidden-layer perceptron. Not installed; detectors.cpp and models.cpp
// are the only users.

#include "hydra/detectors.hpp"

#include <random>
#include <vector>

namespace hydra::detail {

using Matrix = std::vector<std::vector<double>>;

struct TreeNode {
    int feature = -1; // -1 → leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double q = 0.5; // class-1 share of the training rows reaching this node
    int count = 0;
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
    double predict(const std::vector<double>& x) const;
};

struct GrowParams {
    int max_depth = 8;
    int min_samples_leaf = 1;
    int feature_subsample = 0; // 0 → consider every feature at every split
};

// CART with Gini gain on class proportions. Proportions make the learned
// tree invariant to duplicating the training set; candidate thresholds are
// midpoints between distinct values, scanned feature-ascending with
// first-best tie-breaking, so growth is deterministic. rng is only touched
// when feature_subsample > 0.
Tree grow_tree(const Matrix& X, const std::vector<int>& y, std::vector<int> idx,
               const GrowParams& p, std::mt19937_64* rng);

// Bottom-up reduced-error pruning against a held-out set; a subtree is
// collapsed whenever the leaf does at least as well on the rows routed to
// it. Unreachable nodes are compacted away.
void reduced_error_prune(Tree& t, const Matrix& X, const std::vector<int>& y,
                         const std::vector<int>& prune_idx);

struct Forest {
    std::vector<Tree> trees;
    double predict(const std::vector<double>& x) const; // mean member output
};

Forest grow_forest(const Matrix& X, const std::vector<int>& y, int forest_size,
                   const GrowParams& p, std::mt19937_64& rng);

// Standardize-then-project transform: x → components · ((x-mean)/scale).
struct LinearProjection {
    std::vector<double> mean, scale;
    Matrix components; // rank x F, orthonormal rows, leading variance first
    std::vector<double> apply(const std::vector<double>& x) const;
};

LinearProjection fit_projection(const Matrix& X, int rank);

struct Mlp {
    std::vector<double> mean, scale;
    int inputs = 0, hidden = 0;
    std::vector<double> w1; // hidden x inputs, row-major
    std::vector<double> b1; // hidden
    std::vector<double> w2; // hidden
    double b2 = 0.0;
    double predict(const std::vector<double>& x) const; // sigmoid output
};

Mlp train_mlp(const Matrix& X, const std::vector<int>& y, const TrainConfig& cfg,
              std::mt19937_64& rng);

// Concrete detectors. write_params emits the line-oriented payload that
// parse_detector in detectors.cpp reads back.

class TreeDetector : public Detector {
public:
    TreeDetector(Architecture a, FeatureSet fs, Tree tree)
        : Detector(a, std::move(fs)), tree_(std::move(tree)) {}
    const Tree& tree() const { return tree_; }

protected:
    double predict_features(const std::vector<double>& x) const override { return tree_.predict(x); }
    void write_params(std::string& out) const override;

private:
    Tree tree_;
};

class ForestDetector : public Detector {
public:
    ForestDetector(FeatureSet fs, Forest forest)
        : Detector(Architecture::random_forest, std::move(fs)), forest_(std::move(forest)) {}

protected:
    double predict_features(const std::vector<double>& x) const override {
        return forest_.predict(x);
    }
    void write_params(std::string& out) const override;

private:
    Forest forest_;
};

class RankReducedDetector : public Detector {
public:
    RankReducedDetector(FeatureSet fs, LinearProjection proj, Forest forest)
        : Detector(Architecture::rank_reduced_forest, std::move(fs)), proj_(std::move(proj)),
          forest_(std::move(forest)) {}

protected:
    double predict_features(const std::vector<double>& x) const override {
        return forest_.predict(proj_.apply(x));
    }
    void write_params(std::string& out) const override;

private:
    LinearProjection proj_;
    Forest forest_;
};

class MlpDetector : public Detector {
public:
    MlpDetector(FeatureSet fs, Mlp mlp)
        : Detector(Architecture::multilayer_perceptron, std::move(fs)), mlp_(std::move(mlp)) {}

protected:
    double predict_features(const std::vector<double>& x) const override {
        return mlp_.predict(x);
    }
    void write_params(std::string& out) const override;

private:
    Mlp mlp_;
};

void write_tree(const Tree& t, std::string& out);
void write_forest(const Forest& f, std::string& out);
void write_projection(const LinearProjection& p, std::string& out);
void write_mlp(const Mlp& m, std::string& out);

} // namespace hydra::detail
