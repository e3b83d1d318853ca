#include "keysynth/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "keysynth/errors.hpp"

namespace keysynth {

namespace {

struct TreeBuilder {
    const std::vector<std::vector<double>>& X;
    const std::vector<int>& labels;
    const ForestConfig& cfg;
    std::size_t mtry;
    Rng& rng;
    Tree tree;

    // scratch reused across nodes
    std::vector<std::size_t> feat_pool;

    int build(std::vector<std::size_t>& rows, std::size_t depth) {
        std::size_t n = rows.size();
        std::size_t bots = 0;
        for (std::size_t r : rows)
            bots += static_cast<std::size_t>(labels[r]);

        int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_id].bot_fraction =
            static_cast<double>(bots) / static_cast<double>(n);

        bool pure = bots == 0 || bots == n;
        bool depth_stop = cfg.max_depth != 0 && depth >= cfg.max_depth;
        if (pure || depth_stop || n < cfg.min_split)
            return node_id;

        // sample mtry distinct candidate features
        std::size_t d = feat_pool.size();
        for (std::size_t k = 0; k < mtry; ++k)
            std::swap(feat_pool[k], feat_pool[k + rng.index(d - k)]);

        double best_gain = 0.0;
        int best_feat = -1;
        double best_thr = 0.0;

        const double n_d = static_cast<double>(n);
        const double parent_imp = gini(static_cast<double>(bots), n_d);

        std::vector<std::pair<double, int>> vals(n);
        for (std::size_t k = 0; k < mtry; ++k) {
            std::size_t f = feat_pool[k];
            for (std::size_t idx = 0; idx < n; ++idx)
                vals[idx] = {X[rows[idx]][f], labels[rows[idx]]};
            std::sort(vals.begin(), vals.end());
            if (vals.front().first == vals.back().first)
                continue;

            double left_bots = 0.0;
            for (std::size_t idx = 0; idx + 1 < n; ++idx) {
                left_bots += vals[idx].second;
                if (vals[idx].first == vals[idx + 1].first)
                    continue;
                double nl = static_cast<double>(idx + 1);
                double nr = n_d - nl;
                double imp = (nl * gini(left_bots, nl) +
                              nr * gini(static_cast<double>(bots) - left_bots,
                                        nr)) /
                             n_d;
                double gain = parent_imp - imp;
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feat = static_cast<int>(f);
                    best_thr =
                        0.5 * (vals[idx].first + vals[idx + 1].first);
                }
            }
        }

        if (best_feat < 0)
            return node_id; // no informative split among the candidates

        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(n);
        right_rows.reserve(n);
        for (std::size_t r : rows)
            (X[r][best_feat] <= best_thr ? left_rows : right_rows)
                .push_back(r);
        if (left_rows.empty() || right_rows.empty())
            return node_id;

        rows.clear();
        rows.shrink_to_fit();

        int left_id = build(left_rows, depth + 1);
        int right_id = build(right_rows, depth + 1);
        tree.nodes[node_id].feature = best_feat;
        tree.nodes[node_id].threshold = best_thr;
        tree.nodes[node_id].left = left_id;
        tree.nodes[node_id].right = right_id;
        return node_id;
    }

    static double gini(double bots, double n) {
        double p = bots / n;
        return 2.0 * p * (1.0 - p);
    }
};

} // namespace

ForestModel forest_fit(const std::vector<std::vector<double>>& X,
                       const std::vector<int>& labels,
                       const ForestConfig& cfg, Rng& rng) {
    if (X.empty() || X.size() != labels.size())
        throw EmptyClass("forest_fit: empty or mismatched training set");
    const std::size_t n = X.size();
    const std::size_t d = X[0].size();
    std::size_t mtry = cfg.mtry;
    if (mtry == 0)
        mtry = static_cast<std::size_t>(
            std::ceil(std::sqrt(static_cast<double>(d))));
    mtry = std::min(mtry, d);

    ForestModel model;
    model.n_features = d;
    model.trees.reserve(cfg.n_trees);

    std::uint64_t base = rng.next_u64();
    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
        Rng tree_rng = derive_rng(base, "tree", t);
        std::vector<std::size_t> rows(n);
        for (std::size_t k = 0; k < n; ++k)
            rows[k] = tree_rng.index(n);

        TreeBuilder builder{X, labels, cfg, mtry, tree_rng, {}, {}};
        builder.feat_pool.resize(d);
        std::iota(builder.feat_pool.begin(), builder.feat_pool.end(), 0);
        builder.build(rows, 0);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

double forest_vote(const ForestModel& m, const std::vector<double>& x) {
    if (x.size() != m.n_features)
        throw ShapeError("forest_vote: feature count mismatch");
    std::size_t bot_votes = 0;
    for (const Tree& tree : m.trees) {
        int id = 0;
        while (tree.nodes[id].feature >= 0) {
            const TreeNode& nd = tree.nodes[id];
            id = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
        }
        if (tree.nodes[id].bot_fraction > 0.5)
            ++bot_votes;
    }
    return static_cast<double>(bot_votes) /
           static_cast<double>(m.trees.size());
}

} // namespace keysynth
