#include "keysynth/kde.hpp"

#include <cmath>
#include <utility>

#include "keysynth/errors.hpp"
#include "keysynth/features.hpp"

namespace keysynth {

namespace {
constexpr int kMaxRejects = 100;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
} // namespace

KdeModel kde_fit(std::vector<double> values, double bandwidth) {
    if (values.empty())
        throw EmptyTrainingSet("kde_fit: no training values");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw InvalidBandwidth("kde_fit: bandwidth must be positive");
    for (double v : values)
        if (!std::isfinite(v))
            throw InvalidParameters("kde_fit: non-finite training value");
    KdeModel m;
    m.points = std::move(values);
    m.bandwidth = bandwidth;
    return m;
}

double kde_density(const KdeModel& m, double x) {
    const double s = m.bandwidth;
    const double norm = kInvSqrt2Pi / s;
    double acc = 0.0;
    for (double p : m.points) {
        double z = (x - p) / s;
        acc += std::exp(-0.5 * z * z);
    }
    return acc * norm / static_cast<double>(m.points.size());
}

double kde_sample(const KdeModel& m, Rng& rng, bool require_positive) {
    for (int attempt = 0; attempt <= kMaxRejects; ++attempt) {
        double p = m.points[rng.index(m.points.size())];
        double v = p + m.bandwidth * rng.normal();
        if (!require_positive || v > 0.0)
            return v;
    }
    throw SamplingExhausted(
        "kde_sample: no positive draw after 100 rejections");
}

namespace {

FeatureModels fit_feature_models(const std::vector<const FeatureSequence*>& seqs,
                                 double bandwidth) {
    std::array<std::vector<double>, 4> pools;
    for (const FeatureSequence* fs : seqs) {
        for (const FeatureStep& st : fs->steps) {
            pools[0].push_back(st.hold);
            pools[1].push_back(st.inter_press);
            pools[2].push_back(st.inter_release);
            pools[3].push_back(st.inter_key);
        }
    }
    FeatureModels models;
    for (std::size_t i = 0; i < 4; ++i)
        models[i] = kde_fit(std::move(pools[i]), bandwidth);
    return models;
}

} // namespace

UniversalModel fit_universal(const std::vector<FeatureSequence>& train,
                             double bandwidth) {
    std::vector<const FeatureSequence*> all;
    all.reserve(train.size());
    for (const auto& fs : train)
        all.push_back(&fs);
    UniversalModel m;
    m.features = fit_feature_models(all, bandwidth);
    return m;
}

UserDependentModel fit_user_dependent(const std::vector<FeatureSequence>& train,
                                      double bandwidth, std::size_t* skipped) {
    // group by subject, preserving first-appearance order
    std::vector<std::pair<std::string, std::vector<const FeatureSequence*>>> by_subject;
    for (const auto& fs : train) {
        if (by_subject.empty() || by_subject.back().first != fs.subject_id) {
            auto it = by_subject.begin();
            for (; it != by_subject.end(); ++it)
                if (it->first == fs.subject_id)
                    break;
            if (it == by_subject.end()) {
                by_subject.push_back({fs.subject_id, {}});
                by_subject.back().second.push_back(&fs);
                continue;
            }
            it->second.push_back(&fs);
        } else {
            by_subject.back().second.push_back(&fs);
        }
    }

    UserDependentModel model;
    std::size_t skip_count = 0;
    for (auto& [id, seqs] : by_subject) {
        std::size_t steps = 0;
        for (const FeatureSequence* fs : seqs)
            steps += fs->steps.size();
        if (steps == 0) {
            ++skip_count;
            continue;
        }
        UserModel um;
        um.user_id = id;
        um.features = fit_feature_models(seqs, bandwidth);
        model.users.push_back(std::move(um));
    }
    if (model.users.empty())
        throw EmptyTrainingSet("fit_user_dependent: no subject had any steps");
    if (skipped)
        *skipped = skip_count;
    return model;
}

KeystrokeSequence synthesize_from_draws(const std::array<FeatureDraw, 4>& draw,
                                        const std::vector<int>& key_codes,
                                        const std::vector<int>& cond_codes,
                                        Rng& rng, std::string subject_id,
                                        std::string sample_id) {
    if (key_codes.size() < 2)
        throw SequenceTooShort("synthesis needs at least 2 keys");
    if (cond_codes.size() + 1 != key_codes.size())
        throw InvalidParameters("synthesis: need one conditioning code per "
                                "transition");

    const std::size_t keys = key_codes.size();
    std::vector<double> holds(keys);
    for (std::size_t j = 0; j < keys; ++j) {
        double v = 0.0;
        int attempt = 0;
        for (;; ++attempt) {
            if (attempt > kMaxRejects)
                throw SamplingExhausted("synthesis: hold draw stayed "
                                        "non-positive after 100 rejections");
            v = draw[0](key_codes[j], rng);
            if (v > 0.0)
                break;
        }
        holds[j] = v;
    }

    // Inter-press and inter-release are drawn to mirror the generative
    // recipe but the timestamp path is fully determined by f1/f4.
    for (std::size_t j = 0; j + 1 < keys; ++j)
        draw[1](cond_codes[j], rng);
    for (std::size_t j = 0; j + 1 < keys; ++j)
        draw[2](cond_codes[j], rng);

    std::vector<double> inter_keys(keys - 1);
    for (std::size_t j = 0; j + 1 < keys; ++j) {
        double v = 0.0;
        int attempt = 0;
        for (;; ++attempt) {
            if (attempt > kMaxRejects)
                throw SamplingExhausted("synthesis: inter-key draw kept the "
                                        "sequence non-causal after 100 "
                                        "rejections");
            v = draw[3](cond_codes[j], rng);
            if (holds[j] + v > 0.0)
                break;
        }
        inter_keys[j] = v;
    }

    return reconstruct_timestamps(key_codes, holds, inter_keys,
                                  std::move(subject_id), std::move(sample_id));
}

namespace {

KeystrokeSequence synthesize_from_models(const FeatureModels& fm,
                                         const std::vector<int>& key_codes,
                                         Rng& rng, std::string subject_id,
                                         std::string sample_id) {
    std::array<FeatureDraw, 4> draw;
    for (std::size_t i = 0; i < 4; ++i) {
        const KdeModel* m = &fm[i];
        draw[i] = [m](int, Rng& r) { return kde_sample(*m, r); };
    }
    std::vector<int> cond(key_codes.begin(), key_codes.end() - 1);
    return synthesize_from_draws(draw, key_codes, cond, rng,
                                 std::move(subject_id), std::move(sample_id));
}

} // namespace

KeystrokeSequence synthesize_kde(const UniversalModel& m,
                                 const std::vector<int>& key_codes, Rng& rng,
                                 std::string subject_id,
                                 std::string sample_id) {
    return synthesize_from_models(m.features, key_codes, rng,
                                  std::move(subject_id), std::move(sample_id));
}

KeystrokeSequence synthesize_kde(const UserModel& m,
                                 const std::vector<int>& key_codes, Rng& rng,
                                 std::string subject_id,
                                 std::string sample_id) {
    return synthesize_from_models(m.features, key_codes, rng,
                                  std::move(subject_id), std::move(sample_id));
}

} // namespace keysynth
