#include "keysynth/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "keysynth/errors.hpp"
#include "keysynth/features.hpp"
#include "keysynth/kde.hpp"

namespace keysynth {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;

double softplus_inverse(double y) {
    // softplus(x) = y, y > 0
    if (y > 30.0)
        return y;
    return std::log(std::expm1(y));
}

} // namespace

double nll_loss(double mu, double sigma, double x, double sigma_floor) {
    if (!(sigma > 0.0))
        throw InvalidParameters("nll_loss: sigma must be positive");
    double se = std::max(sigma, sigma_floor);
    double z = (x - mu) / se;
    return 0.5 * z * z + std::log(se) + kHalfLog2Pi;
}

void GnnNet::init(Rng& rng, double mu0, double sigma0) {
    l1.init(1, 100, nn::Act::tanh_fn, rng);
    l2.init(100, 100, nn::Act::tanh_fn, rng);
    mu_head.init(100, 1, nn::Act::linear, rng);
    sigma_head.init(100, 1, nn::Act::softplus_fn, rng);
    // the input is a scalar in [0, 1]. Glorot on a 1-wide layer leaves
    // every tanh transition at the origin and the whole layer near-linear
    // over the range, so per-key structure is slow to emerge. Tile the
    // units instead: transition centers on a uniform grid with slopes
    // cycling 32..256, so any two key codes further apart than one grid
    // step produce distinct features from the first batch on.
    for (std::size_t j = 0; j < l1.b.size(); ++j) {
        double w = 32.0 * static_cast<double>(1 << (j % 4));
        double c = (static_cast<double>(j) + 0.5) /
                   static_cast<double>(l1.b.size());
        l1.W(j, 0) = w;
        l1.b[j] = -w * c;
    }
    // heads start at the pooled estimate: zero weights, bias = target
    mu_head.W.zero();
    mu_head.b[0] = mu0;
    sigma_head.W.zero();
    sigma_head.b[0] = softplus_inverse(std::max(sigma0, 1e-3));
}

void GnnNet::forward(const nn::Mat& keys, nn::Vec& mu, nn::Vec& sigma) {
    nn::Mat h = l2.forward(l1.forward(keys));
    nn::Mat m = mu_head.forward(h);
    nn::Mat s = sigma_head.forward(h);
    mu = m.a;
    sigma = s.a;
}

double GnnNet::nll_grads(const nn::Mat& keys, const nn::Vec& x,
                         double sigma_floor) {
    const std::size_t B = keys.rows;
    if (x.size() != B)
        throw ShapeError("gnn nll: batch size mismatch");
    nn::Vec mu, sigma;
    forward(keys, mu, sigma);

    nn::Mat dmu(B, 1), dsig(B, 1);
    double loss = 0.0;
    const double invB = 1.0 / static_cast<double>(B);
    for (std::size_t b = 0; b < B; ++b) {
        double se = std::max(sigma[b], sigma_floor);
        double diff = mu[b] - x[b];
        double z = diff / se;
        loss += 0.5 * z * z + std::log(se) + kHalfLog2Pi;
        dmu(b, 0) = diff / (se * se) * invB;
        // below the floor the clamp is flat, no gradient reaches the head
        double d_se = (1.0 / se - diff * diff / (se * se * se)) * invB;
        dsig(b, 0) = sigma[b] > sigma_floor ? d_se : 0.0;
    }
    loss *= invB;
    if (!std::isfinite(loss))
        throw NumericalError("gnn nll: loss went non-finite");

    nn::Mat d_trunk = mu_head.backward(dmu);
    nn::Mat d_trunk2 = sigma_head.backward(dsig);
    for (std::size_t k = 0; k < d_trunk.a.size(); ++k)
        d_trunk.a[k] += d_trunk2.a[k];
    l1.backward(l2.backward(d_trunk));
    return loss;
}

std::pair<double, double> GnnNet::eval(double key_norm) const {
    const std::size_t H = l1.out_dim();
    nn::Vec h1(H), h2(H);
    for (std::size_t j = 0; j < H; ++j)
        h1[j] = std::tanh(l1.W(j, 0) * key_norm + l1.b[j]);
    for (std::size_t j = 0; j < H; ++j) {
        const double* wrow = &l2.W.a[j * l2.W.cols];
        double acc = l2.b[j];
        for (std::size_t k = 0; k < H; ++k)
            acc += wrow[k] * h1[k];
        h2[j] = std::tanh(acc);
    }
    double m = mu_head.b[0];
    double s = sigma_head.b[0];
    for (std::size_t k = 0; k < H; ++k) {
        m += mu_head.W(0, k) * h2[k];
        s += sigma_head.W(0, k) * h2[k];
    }
    return {m, nn::softplus(s)};
}

std::vector<nn::Vec*> GnnNet::params() {
    return {&l1.W.a,      &l1.b,      &l2.W.a,         &l2.b,
            &mu_head.W.a, &mu_head.b, &sigma_head.W.a, &sigma_head.b};
}

std::vector<const nn::Vec*> GnnNet::grads() const {
    return {&l1.gW.a,      &l1.gb,      &l2.gW.a,         &l2.gb,
            &mu_head.gW.a, &mu_head.gb, &sigma_head.gW.a, &sigma_head.gb};
}

void GnnNet::zero_grad() {
    l1.zero_grad();
    l2.zero_grad();
    mu_head.zero_grad();
    sigma_head.zero_grad();
}

std::pair<double, double> gnn_forward(const GnnModel& m,
                                      std::size_t feature_idx,
                                      double key_norm) {
    if (feature_idx >= 4)
        throw InvalidParameters("gnn_forward: feature index out of range");
    return m.nets[feature_idx].eval(key_norm);
}

double gnn_sample(const GnnModel& m, std::size_t feature_idx, int key_code,
                  Rng& rng) {
    auto [mu, sigma] = gnn_forward(m, feature_idx, normalize_key(key_code));
    double se = std::max(sigma, m.sigma_floor);
    return mu + se * rng.normal();
}

namespace {

struct PairSet {
    std::vector<double> key;   // normalized code
    std::vector<double> value; // ms
};

std::array<PairSet, 4> collect_pairs(const std::vector<FeatureSequence>& corpus,
                                     Conditioning cond) {
    std::array<PairSet, 4> out;
    for (const FeatureSequence& fs : corpus) {
        const auto& st = fs.steps;
        for (std::size_t j = 0; j < st.size(); ++j) {
            out[0].key.push_back(st[j].key_norm);
            out[0].value.push_back(st[j].hold);
            double cond_key = st[j].key_norm;
            if (cond == Conditioning::second_key) {
                // the trailing key's code is not part of the step list, so
                // the final transition has no conditioner and is skipped
                if (j + 1 >= st.size())
                    continue;
                cond_key = st[j + 1].key_norm;
            }
            out[1].key.push_back(cond_key);
            out[1].value.push_back(st[j].inter_press);
            out[2].key.push_back(cond_key);
            out[2].value.push_back(st[j].inter_release);
            out[3].key.push_back(cond_key);
            out[3].value.push_back(st[j].inter_key);
        }
    }
    return out;
}

void subsample(PairSet& ps, std::size_t cap, Rng& rng) {
    if (cap == 0 || ps.key.size() <= cap)
        return;
    // partial Fisher-Yates: the first cap slots end up a uniform subset
    for (std::size_t j = 0; j < cap; ++j) {
        std::size_t pick = j + rng.index(ps.key.size() - j);
        std::swap(ps.key[j], ps.key[pick]);
        std::swap(ps.value[j], ps.value[pick]);
    }
    ps.key.resize(cap);
    ps.value.resize(cap);
}

} // namespace

GnnModel train_gnn(const std::vector<FeatureSequence>& corpus,
                   const GnnTrainConfig& cfg) {
    auto pairs = collect_pairs(corpus, cfg.conditioning);
    for (const PairSet& ps : pairs)
        if (ps.key.empty())
            throw EmptyTrainingSet("train_gnn: a feature has no training "
                                   "pairs");

    GnnModel model;
    model.conditioning = cfg.conditioning;
    model.sigma_floor = cfg.sigma_floor;

    for (std::size_t i = 0; i < 4; ++i) {
        PairSet& ps = pairs[i];
        Rng rng = derive_rng(cfg.seed, "gnn-net", i);
        subsample(ps, cfg.max_pairs_per_feature, rng);
        const std::size_t n = ps.key.size();

        double mean = std::accumulate(ps.value.begin(), ps.value.end(), 0.0) /
                      static_cast<double>(n);
        double var = 0.0;
        for (double v : ps.value)
            var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        double sd = std::sqrt(std::max(var, 1e-6));

        GnnNet& net = model.nets[i];
        net.init(rng, mean, sd);

        nn::AdamState adam;
        adam.lr = cfg.lr;
        adam.clip = cfg.grad_clip;
        // faster variance tracking keeps steps small right after the
        // loss surface flattens, instead of overshooting on stale scale
        adam.beta2 = 0.99;

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);

        double best = std::numeric_limits<double>::infinity();
        std::size_t stale = 0;
        std::vector<nn::Vec> best_params;

        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng.engine());
            double loss_sum = 0.0;
            try {
                for (std::size_t start = 0; start < n; start += cfg.batch) {
                    std::size_t B = std::min(cfg.batch, n - start);
                    nn::Mat keys(B, 1);
                    nn::Vec x(B);
                    for (std::size_t b = 0; b < B; ++b) {
                        keys(b, 0) = ps.key[order[start + b]];
                        x[b] = ps.value[order[start + b]];
                    }
                    net.zero_grad();
                    double loss = net.nll_grads(keys, x, cfg.sigma_floor);
                    loss_sum += loss * static_cast<double>(B);
                    adam.step(net.params(), net.grads());
                }
            } catch (const NumericalError& e) {
                throw TrainingDiverged(std::string("train_gnn: ") + e.what());
            }
            double epoch_mean = loss_sum / static_cast<double>(n);
            if (!std::isfinite(epoch_mean))
                throw TrainingDiverged("train_gnn: epoch loss non-finite");
            model.epoch_loss[i].push_back(epoch_mean);

            if (epoch_mean < best - cfg.min_delta) {
                best = epoch_mean;
                stale = 0;
                best_params.clear();
                for (nn::Vec* p : net.params())
                    best_params.push_back(*p);
            } else if (++stale >= cfg.patience) {
                break;
            }
        }
        // a late loss spike must not leave its damage in the returned
        // model: hand back the best epoch seen
        if (!best_params.empty()) {
            auto ps = net.params();
            for (std::size_t k = 0; k < ps.size(); ++k)
                *ps[k] = best_params[k];
        }
    }
    return model;
}

GnnSampler::GnnSampler(const GnnModel& m) : model_(&m) {
    for (std::size_t i = 0; i < 4; ++i)
        for (int code = 0; code < 256; ++code)
            table_[i][code] = m.nets[i].eval(static_cast<double>(code) / 255.0);
}

KeystrokeSequence GnnSampler::synthesize(const std::vector<int>& key_codes,
                                         Rng& rng, std::string subject_id,
                                         std::string sample_id) const {
    if (key_codes.size() < 2)
        throw SequenceTooShort("synthesis needs at least 2 keys");
    const double floor = model_->sigma_floor;
    std::array<FeatureDraw, 4> draw;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& row = table_[i];
        draw[i] = [&row, floor](int code, Rng& r) {
            if (code < 0 || code > 255)
                throw InvalidKeyCode("synthesize: key code out of range");
            auto [mu, sigma] = row[code];
            return mu + std::max(sigma, floor) * r.normal();
        };
    }
    std::vector<int> cond;
    if (model_->conditioning == Conditioning::first_key)
        cond.assign(key_codes.begin(), key_codes.end() - 1);
    else
        cond.assign(key_codes.begin() + 1, key_codes.end());
    return synthesize_from_draws(draw, key_codes, cond, rng,
                                 std::move(subject_id), std::move(sample_id));
}

KeystrokeSequence synthesize_gnn(const GnnModel& m,
                                 const std::vector<int>& key_codes, Rng& rng,
                                 std::string subject_id,
                                 std::string sample_id) {
    return GnnSampler(m).synthesize(key_codes, rng, std::move(subject_id),
                                    std::move(sample_id));
}

} // namespace keysynth
