#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "keysynth/forest.hpp"
#include "keysynth/nn.hpp"
#include "keysynth/rng.hpp"
#include "keysynth/svm.hpp"
#include "keysynth/types.hpp"

namespace keysynth {

// Flattened per-step features of a truncated sequence. label: 0 human,
// 1 bot.
struct SampleVector {
    std::vector<double> x;
    int label = 0;
};

// fs must hold exactly max_keys - 1 steps (i.e. have passed truncate).
// Layout: step-major, [f1 f2 f3 f4 (f5)] per step.
std::vector<double> vectorize(const FeatureSequence& fs, std::size_t max_keys,
                              bool use_keys);

enum class DetectorKind { ocsvm, svm, gnb, rf, lstm, euclid };

const char* detector_name(DetectorKind k);
DetectorKind detector_from_name(const std::string& name); // InvalidParameters

struct DetectorConfig {
    double svm_c = 1.0;
    double ocsvm_nu = 0.1;
    double rbf_gamma = 0.0; // 0 = 1/dim
    double smo_tol = 1e-3;
    std::size_t smo_cache_mb = 256;
    ForestConfig forest;
    double gnb_var_floor_rel = 1e-9;
    std::size_t lstm_hidden = 32;
    std::size_t lstm_epochs = 100;
    std::size_t lstm_batch = 64;
    double lstm_lr = 1e-3;
};

// z-score fitted on the training vectors, applied identically at predict
struct Standardizer {
    std::vector<double> mean, scale;
    bool active = false;
    std::vector<double> apply(const std::vector<double>& x) const;
};

struct GnbModel {
    std::array<std::vector<double>, 2> mean, var; // [class][dim]
    std::array<double, 2> log_prior{};
};

struct EuclidModel {
    std::vector<double> template_mean; // human class mean
    double threshold = 0.0;
    double orientation = 1.0; // +1: larger distance reads as bot
};

struct LstmDetModel {
    nn::Lstm cell;
    std::vector<double> head_w;
    double head_b = 0.0;
    std::size_t timesteps = 0, step_dim = 0;
};

struct DetectorModel {
    DetectorKind kind = DetectorKind::gnb;
    std::size_t max_keys = 30;
    bool use_keys = false;
    std::size_t dim = 0;
    Standardizer scaler;
    std::variant<SvmModel, GnbModel, ForestModel, LstmDetModel, EuclidModel>
        impl;
    SvmFitInfo svm_info; // populated for svm/ocsvm fits
};

// Trains one detector on vectorized samples. The one-class kind must see
// only human-labeled vectors (ProtocolViolation otherwise); the binary
// kinds need both classes (EmptyClass otherwise).
DetectorModel fit_detector(DetectorKind kind,
                           const std::vector<SampleVector>& train,
                           const DetectorConfig& cfg, Rng& rng,
                           std::size_t max_keys, bool use_keys);

struct Prediction {
    int label = 0;   // 0 human, 1 bot
    double score = 0.0; // monotone bot confidence; scale depends on kind
};

// Ties (probability 0.5, decision value 0) resolve to human.
Prediction predict(const DetectorModel& m, const std::vector<double>& x);

// Fraction of correct labels. Throws EmptyEvalSet.
double accuracy(const DetectorModel& m,
                const std::vector<SampleVector>& eval_set);

} // namespace keysynth
