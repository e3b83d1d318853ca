#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "keysynth/nn.hpp"
#include "keysynth/rng.hpp"
#include "keysynth/types.hpp"

namespace keysynth {

// Gaussian negative log likelihood with the sigma floor applied inside, so
// a collapsing scale cannot reward the optimizer. Throws InvalidParameters
// for sigma <= 0.
double nll_loss(double mu, double sigma, double x, double sigma_floor = 1e-3);

// Which key of a transition pair conditions the transition features f2-f4.
// Holds are always conditioned on their own key.
enum class Conditioning { first_key, second_key };

struct GnnTrainConfig {
    std::size_t epochs = 200;
    std::size_t batch = 256;
    double lr = 3e-3;
    std::size_t patience = 10;  // early stop after this many stale epochs
    double min_delta = 1e-4;    // improvement below this counts as stale
    double grad_clip = 5.0;     // global L2 cap per step, 0 disables
    double sigma_floor = 1e-3;  // ms
    Conditioning conditioning = Conditioning::first_key;
    std::uint64_t seed = 0;
    std::size_t max_pairs_per_feature = 0; // 0 keeps every pair
};

// key_norm -> Dense(100, tanh) -> Dense(100, tanh) -> two single-unit
// heads: mu (linear) and sigma (softplus).
struct GnnNet {
    nn::Dense l1, l2, mu_head, sigma_head;

    void init(Rng& rng, double mu0, double sigma0);
    // batched forward used in training; sigma is the raw softplus output
    void forward(const nn::Mat& keys, nn::Vec& mu, nn::Vec& sigma);
    // mean NLL over the batch, parameter gradients accumulated
    double nll_grads(const nn::Mat& keys, const nn::Vec& x,
                     double sigma_floor);
    // allocation-free scalar forward for sampling paths
    std::pair<double, double> eval(double key_norm) const;

    std::vector<nn::Vec*> params();
    std::vector<const nn::Vec*> grads() const;
    void zero_grad();
};

// One independent network per timing feature, index 0 = hold .. 3 = inter-key.
struct GnnModel {
    std::string family = "gaussian";
    Conditioning conditioning = Conditioning::first_key;
    double sigma_floor = 1e-3;
    std::array<GnnNet, 4> nets;
    std::array<std::vector<double>, 4> epoch_loss; // training curve per net
};

std::pair<double, double> gnn_forward(const GnnModel& m,
                                      std::size_t feature_idx,
                                      double key_norm);

double gnn_sample(const GnnModel& m, std::size_t feature_idx, int key_code,
                  Rng& rng);

// Trains the four networks independently on (key_norm, value) pairs pulled
// from the corpus steps. Throws EmptyTrainingSet when a feature has no
// pairs and TrainingDiverged when a loss goes non-finite.
GnnModel train_gnn(const std::vector<FeatureSequence>& corpus,
                   const GnnTrainConfig& cfg);

// Key codes take only 256 values, so synthesis evaluates the networks once
// per code and reuses the table for every draw.
class GnnSampler {
public:
    explicit GnnSampler(const GnnModel& m);
    KeystrokeSequence synthesize(const std::vector<int>& key_codes, Rng& rng,
                                 std::string subject_id = "synth",
                                 std::string sample_id = "s0") const;

private:
    const GnnModel* model_;
    // [feature][key_code] -> (mu, sigma)
    std::array<std::array<std::pair<double, double>, 256>, 4> table_;
};

KeystrokeSequence synthesize_gnn(const GnnModel& m,
                                 const std::vector<int>& key_codes, Rng& rng,
                                 std::string subject_id = "synth",
                                 std::string sample_id = "s0");

} // namespace keysynth
