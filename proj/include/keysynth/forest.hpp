#pragma once

#include <cstdint>
#include <vector>

#include "keysynth/rng.hpp"

namespace keysynth {

// Axis-aligned decision tree stored as a flat node array. feature == -1
// marks a leaf; leaves keep the bot vote fraction of their training rows.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double bot_fraction = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;
};

struct ForestModel {
    std::vector<Tree> trees;
    std::size_t n_features = 0;
};

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 0;  // 0 = grow to purity
    std::size_t min_split = 2;
    std::size_t mtry = 0;       // 0 = ceil(sqrt(d))
};

// Bagged Gini-split trees on bootstrap resamples; per-tree rng streams are
// derived from the caller's rng so the fit is reproducible.
ForestModel forest_fit(const std::vector<std::vector<double>>& X,
                       const std::vector<int>& labels,
                       const ForestConfig& cfg, Rng& rng);

// Fraction of trees voting bot (per-tree majority, ties vote human).
double forest_vote(const ForestModel& m, const std::vector<double>& x);

} // namespace keysynth
