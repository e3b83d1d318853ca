#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "keysynth/rng.hpp"
#include "keysynth/types.hpp"

namespace keysynth {

// Gaussian kernel density estimate over one timing feature. Sampling is
// exact: pick a training point uniformly, add N(0, bandwidth^2) noise.
struct KdeModel {
    std::vector<double> points;
    double bandwidth = 1.0;
};

KdeModel kde_fit(std::vector<double> values, double bandwidth);

// (1/N) sum_j K(x - p_j; bandwidth), Gaussian kernel
double kde_density(const KdeModel& m, double x);

// One draw. With require_positive, rejects non-positive draws up to 100
// times and then throws SamplingExhausted.
double kde_sample(const KdeModel& m, Rng& rng, bool require_positive = false);

// Density models for the four timing features f1..f4, index 0 = hold.
using FeatureModels = std::array<KdeModel, 4>;

// All subjects pooled into four KDEs.
struct UniversalModel {
    FeatureModels features;
};

struct UserModel {
    std::string user_id;
    FeatureModels features;
};

// One KdeModel set per training subject.
struct UserDependentModel {
    std::vector<UserModel> users;
};

UniversalModel fit_universal(const std::vector<FeatureSequence>& train,
                             double bandwidth);

// Subjects contributing zero steps are skipped; *skipped reports how many.
UserDependentModel fit_user_dependent(const std::vector<FeatureSequence>& train,
                                      double bandwidth,
                                      std::size_t* skipped = nullptr);

// Per-feature draw conditioned on a key code (density models ignore it,
// the generative network uses it). Shared by every synthesis route.
using FeatureDraw = std::function<double(int key_code, Rng& rng)>;

// Draw order is fixed and documented: all holds first (positivity-rejected,
// conditioned per key), then per transition one inter-press and one
// inter-release draw (kept only for their effect on the stream; timestamps
// use holds and inter-keys alone), then per transition the inter-key draw
// rejected until hold + inter_key > 0. 100 rejections anywhere throws
// SamplingExhausted. Transition draws are conditioned on cond_codes.
KeystrokeSequence synthesize_from_draws(const std::array<FeatureDraw, 4>& draw,
                                        const std::vector<int>& key_codes,
                                        const std::vector<int>& cond_codes,
                                        Rng& rng,
                                        std::string subject_id = "synth",
                                        std::string sample_id = "s0");

KeystrokeSequence synthesize_kde(const UniversalModel& m,
                                 const std::vector<int>& key_codes, Rng& rng,
                                 std::string subject_id = "synth",
                                 std::string sample_id = "s0");

KeystrokeSequence synthesize_kde(const UserModel& m,
                                 const std::vector<int>& key_codes, Rng& rng,
                                 std::string subject_id = "synth",
                                 std::string sample_id = "s0");

} // namespace keysynth
