#include "keysynth/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "keysynth/errors.hpp"

namespace keysynth {

std::vector<double> vectorize(const FeatureSequence& fs, std::size_t max_keys,
                              bool use_keys) {
    if (max_keys < 2)
        throw InvalidParameters("vectorize: max_keys must be >= 2");
    if (fs.steps.size() != max_keys - 1)
        throw ShapeError("vectorize: sequence has " +
                         std::to_string(fs.steps.size()) + " steps, expected " +
                         std::to_string(max_keys - 1) +
                         " (run truncate first)");
    std::vector<double> out;
    out.reserve(fs.steps.size() * (use_keys ? 5 : 4));
    for (const FeatureStep& st : fs.steps) {
        out.push_back(st.hold);
        out.push_back(st.inter_press);
        out.push_back(st.inter_release);
        out.push_back(st.inter_key);
        if (use_keys)
            out.push_back(st.key_norm);
    }
    return out;
}

const char* detector_name(DetectorKind k) {
    switch (k) {
    case DetectorKind::ocsvm:
        return "ocsvm";
    case DetectorKind::svm:
        return "svm";
    case DetectorKind::gnb:
        return "gnb";
    case DetectorKind::rf:
        return "rf";
    case DetectorKind::lstm:
        return "lstm";
    case DetectorKind::euclid:
        return "euclid";
    }
    return "?";
}

DetectorKind detector_from_name(const std::string& name) {
    if (name == "ocsvm")
        return DetectorKind::ocsvm;
    if (name == "svm")
        return DetectorKind::svm;
    if (name == "gnb")
        return DetectorKind::gnb;
    if (name == "rf")
        return DetectorKind::rf;
    if (name == "lstm")
        return DetectorKind::lstm;
    if (name == "euclid")
        return DetectorKind::euclid;
    throw InvalidParameters("unknown detector kind '" + name + "'");
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
    if (!active)
        return x;
    if (x.size() != mean.size())
        throw ShapeError("standardizer: dimension mismatch");
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        out[k] = (x[k] - mean[k]) / scale[k];
    return out;
}

namespace {

Standardizer fit_standardizer(const std::vector<SampleVector>& train) {
    const std::size_t d = train[0].x.size();
    const double n = static_cast<double>(train.size());
    Standardizer sc;
    sc.active = true;
    sc.mean.assign(d, 0.0);
    sc.scale.assign(d, 0.0);
    for (const SampleVector& s : train)
        for (std::size_t k = 0; k < d; ++k)
            sc.mean[k] += s.x[k];
    for (std::size_t k = 0; k < d; ++k)
        sc.mean[k] /= n;
    for (const SampleVector& s : train)
        for (std::size_t k = 0; k < d; ++k) {
            double diff = s.x[k] - sc.mean[k];
            sc.scale[k] += diff * diff;
        }
    for (std::size_t k = 0; k < d; ++k) {
        sc.scale[k] = std::sqrt(sc.scale[k] / n);
        if (sc.scale[k] < 1e-12)
            sc.scale[k] = 1.0; // constant column, leave it centered
    }
    return sc;
}

GnbModel fit_gnb(const std::vector<std::vector<double>>& X,
                 const std::vector<int>& labels, double var_floor_rel) {
    const std::size_t d = X[0].size();
    GnbModel m;
    std::array<std::size_t, 2> counts{0, 0};
    for (int c = 0; c < 2; ++c) {
        m.mean[c].assign(d, 0.0);
        m.var[c].assign(d, 0.0);
    }
    for (std::size_t i = 0; i < X.size(); ++i) {
        int c = labels[i];
        ++counts[c];
        for (std::size_t k = 0; k < d; ++k)
            m.mean[c][k] += X[i][k];
    }
    for (int c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < d; ++k)
            m.mean[c][k] /= static_cast<double>(counts[c]);
    for (std::size_t i = 0; i < X.size(); ++i) {
        int c = labels[i];
        for (std::size_t k = 0; k < d; ++k) {
            double diff = X[i][k] - m.mean[c][k];
            m.var[c][k] += diff * diff;
        }
    }
    double max_var = 0.0;
    for (int c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < d; ++k) {
            m.var[c][k] /= static_cast<double>(counts[c]);
            max_var = std::max(max_var, m.var[c][k]);
        }
    double floor = var_floor_rel * max_var;
    if (floor <= 0.0)
        floor = 1e-12;
    for (int c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < d; ++k)
            m.var[c][k] = std::max(m.var[c][k], floor);
    const double total = static_cast<double>(X.size());
    m.log_prior[0] = std::log(static_cast<double>(counts[0]) / total);
    m.log_prior[1] = std::log(static_cast<double>(counts[1]) / total);
    return m;
}

double gnb_bot_posterior(const GnbModel& m, const std::vector<double>& x) {
    std::array<double, 2> ll = m.log_prior;
    for (int c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < x.size(); ++k) {
            double diff = x[k] - m.mean[c][k];
            ll[c] += -0.5 * std::log(2.0 * M_PI * m.var[c][k]) -
                     diff * diff / (2.0 * m.var[c][k]);
        }
    return nn::sigmoid(ll[1] - ll[0]);
}

double euclid_distance(const std::vector<double>& a,
                       const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double d = a[k] - b[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

EuclidModel fit_euclid(const std::vector<std::vector<double>>& X,
                       const std::vector<int>& labels) {
    const std::size_t d = X[0].size();
    EuclidModel m;
    m.template_mean.assign(d, 0.0);
    std::size_t humans = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (labels[i] != 0)
            continue;
        ++humans;
        for (std::size_t k = 0; k < d; ++k)
            m.template_mean[k] += X[i][k];
    }
    for (std::size_t k = 0; k < d; ++k)
        m.template_mean[k] /= static_cast<double>(humans);

    double mean_dist_h = 0.0, mean_dist_b = 0.0;
    std::size_t bots = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        double dist = euclid_distance(X[i], m.template_mean);
        if (labels[i] == 0) {
            mean_dist_h += dist;
        } else {
            mean_dist_b += dist;
            ++bots;
        }
    }
    mean_dist_h /= static_cast<double>(humans);
    mean_dist_b /= static_cast<double>(bots);
    m.threshold = 0.5 * (mean_dist_h + mean_dist_b);
    m.orientation = mean_dist_b >= mean_dist_h ? 1.0 : -1.0;
    return m;
}

LstmDetModel fit_lstm(const std::vector<std::vector<double>>& X,
                      const std::vector<int>& labels,
                      const DetectorConfig& cfg, Rng& rng,
                      std::size_t timesteps, std::size_t step_dim) {
    LstmDetModel m;
    m.timesteps = timesteps;
    m.step_dim = step_dim;
    m.cell.init(step_dim, cfg.lstm_hidden, rng);
    m.head_w.assign(cfg.lstm_hidden, 0.0);
    m.head_b = 0.0;

    nn::AdamState adam;
    adam.lr = cfg.lstm_lr;

    std::vector<double> g_head_w(cfg.lstm_hidden, 0.0);
    std::vector<double> g_head_b(1, 0.0);
    std::vector<double> head_b_vec{0.0};

    const std::size_t n = X.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.lstm_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        for (std::size_t start = 0; start < n; start += cfg.lstm_batch) {
            std::size_t B = std::min(cfg.lstm_batch, n - start);
            std::vector<nn::Mat> xs(timesteps);
            for (std::size_t t = 0; t < timesteps; ++t)
                xs[t] = nn::Mat(B, step_dim);
            std::vector<double> y(B);
            for (std::size_t b = 0; b < B; ++b) {
                const std::vector<double>& v = X[order[start + b]];
                y[b] = static_cast<double>(labels[order[start + b]]);
                for (std::size_t t = 0; t < timesteps; ++t)
                    for (std::size_t k = 0; k < step_dim; ++k)
                        xs[t](b, k) = v[t * step_dim + k];
            }

            nn::Mat H = m.cell.forward(xs);
            // binary cross entropy on sigmoid(w h + b); gradient folds the
            // sigmoid in as p - y
            nn::Mat dH(B, cfg.lstm_hidden);
            std::fill(g_head_w.begin(), g_head_w.end(), 0.0);
            g_head_b[0] = 0.0;
            double loss = 0.0;
            const double invB = 1.0 / static_cast<double>(B);
            for (std::size_t b = 0; b < B; ++b) {
                double z = m.head_b;
                for (std::size_t k = 0; k < cfg.lstm_hidden; ++k)
                    z += m.head_w[k] * H(b, k);
                double p = nn::sigmoid(z);
                loss += -(y[b] * std::log(std::max(p, 1e-12)) +
                          (1.0 - y[b]) * std::log(std::max(1.0 - p, 1e-12)));
                double dz = (p - y[b]) * invB;
                g_head_b[0] += dz;
                for (std::size_t k = 0; k < cfg.lstm_hidden; ++k) {
                    g_head_w[k] += dz * H(b, k);
                    dH(b, k) = dz * m.head_w[k];
                }
            }
            loss *= invB;
            if (!std::isfinite(loss))
                throw TrainingDiverged("lstm detector: loss non-finite");

            m.cell.zero_grad();
            m.cell.backward(dH);
            head_b_vec[0] = m.head_b;
            adam.step({&m.cell.Wx.a, &m.cell.Wh.a, &m.cell.b, &m.head_w,
                       &head_b_vec},
                      {&m.cell.gWx.a, &m.cell.gWh.a, &m.cell.gb, &g_head_w,
                       &g_head_b});
            m.head_b = head_b_vec[0];
        }
    }
    m.cell.cache.clear();
    return m;
}

double lstm_bot_probability(const LstmDetModel& m,
                            const std::vector<double>& x) {
    std::vector<nn::Vec> seq(m.timesteps, nn::Vec(m.step_dim));
    for (std::size_t t = 0; t < m.timesteps; ++t)
        for (std::size_t k = 0; k < m.step_dim; ++k)
            seq[t][k] = x[t * m.step_dim + k];
    nn::Vec h = m.cell.forward_single(seq);
    double z = m.head_b;
    for (std::size_t k = 0; k < m.head_w.size(); ++k)
        z += m.head_w[k] * h[k];
    return nn::sigmoid(z);
}

} // namespace

DetectorModel fit_detector(DetectorKind kind,
                           const std::vector<SampleVector>& train,
                           const DetectorConfig& cfg, Rng& rng,
                           std::size_t max_keys, bool use_keys) {
    if (train.empty())
        throw EmptyClass("fit_detector: empty training set");
    const std::size_t dim = train[0].x.size();
    const std::size_t expected = (max_keys - 1) * (use_keys ? 5 : 4);
    if (dim != expected)
        throw ShapeError("fit_detector: vectors have dim " +
                         std::to_string(dim) + ", expected " +
                         std::to_string(expected));
    for (const SampleVector& s : train)
        if (s.x.size() != dim)
            throw ShapeError("fit_detector: inconsistent vector dimensions");

    std::size_t bots = 0;
    for (const SampleVector& s : train)
        bots += static_cast<std::size_t>(s.label != 0);

    if (kind == DetectorKind::ocsvm && bots > 0)
        throw ProtocolViolation("fit_detector: the one-class kind trains on "
                                "human vectors only");
    bool needs_both = kind != DetectorKind::ocsvm;
    if (needs_both && (bots == 0 || bots == train.size()))
        throw EmptyClass("fit_detector: need both classes present");

    DetectorModel model;
    model.kind = kind;
    model.max_keys = max_keys;
    model.use_keys = use_keys;
    model.dim = dim;

    bool standardize = kind == DetectorKind::svm ||
                       kind == DetectorKind::ocsvm ||
                       kind == DetectorKind::lstm ||
                       kind == DetectorKind::euclid;
    if (standardize)
        model.scaler = fit_standardizer(train);

    std::vector<std::vector<double>> X;
    std::vector<int> labels;
    X.reserve(train.size());
    labels.reserve(train.size());
    for (const SampleVector& s : train) {
        X.push_back(standardize ? model.scaler.apply(s.x) : s.x);
        labels.push_back(s.label != 0 ? 1 : 0);
    }

    double gamma = cfg.rbf_gamma > 0.0
                       ? cfg.rbf_gamma
                       : 1.0 / static_cast<double>(dim);

    switch (kind) {
    case DetectorKind::ocsvm:
        model.impl = svm_fit_one_class(X, cfg.ocsvm_nu, gamma, cfg.smo_tol,
                                       cfg.smo_cache_mb, &model.svm_info);
        break;
    case DetectorKind::svm:
        model.impl = svm_fit_binary(X, labels, cfg.svm_c, gamma, cfg.smo_tol,
                                    cfg.smo_cache_mb, &model.svm_info);
        break;
    case DetectorKind::gnb:
        model.impl = fit_gnb(X, labels, cfg.gnb_var_floor_rel);
        break;
    case DetectorKind::rf:
        model.impl = forest_fit(X, labels, cfg.forest, rng);
        break;
    case DetectorKind::lstm: {
        std::size_t step_dim = use_keys ? 5 : 4;
        model.impl =
            fit_lstm(X, labels, cfg, rng, max_keys - 1, step_dim);
        break;
    }
    case DetectorKind::euclid:
        model.impl = fit_euclid(X, labels);
        break;
    }
    return model;
}

Prediction predict(const DetectorModel& m, const std::vector<double>& x) {
    if (x.size() != m.dim)
        throw ShapeError("predict: vector has dim " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(m.dim));
    std::vector<double> v = m.scaler.apply(x);

    Prediction pred;
    switch (m.kind) {
    case DetectorKind::ocsvm: {
        // decision >= 0 means inside the human region
        double dec = svm_decision(std::get<SvmModel>(m.impl), v);
        pred.score = -dec;
        pred.label = pred.score > 0.0 ? 1 : 0;
        break;
    }
    case DetectorKind::svm: {
        double dec = svm_decision(std::get<SvmModel>(m.impl), v);
        pred.score = dec;
        pred.label = dec > 0.0 ? 1 : 0;
        break;
    }
    case DetectorKind::gnb: {
        double p = gnb_bot_posterior(std::get<GnbModel>(m.impl), v);
        pred.score = p;
        pred.label = p > 0.5 ? 1 : 0;
        break;
    }
    case DetectorKind::rf: {
        double frac = forest_vote(std::get<ForestModel>(m.impl), v);
        pred.score = frac;
        pred.label = frac > 0.5 ? 1 : 0;
        break;
    }
    case DetectorKind::lstm: {
        double p = lstm_bot_probability(std::get<LstmDetModel>(m.impl), v);
        pred.score = p;
        pred.label = p > 0.5 ? 1 : 0;
        break;
    }
    case DetectorKind::euclid: {
        const EuclidModel& em = std::get<EuclidModel>(m.impl);
        double dist = euclid_distance(v, em.template_mean);
        pred.score = em.orientation * (dist - em.threshold);
        pred.label = pred.score > 0.0 ? 1 : 0;
        break;
    }
    }
    return pred;
}

double accuracy(const DetectorModel& m,
                const std::vector<SampleVector>& eval_set) {
    if (eval_set.empty())
        throw EmptyEvalSet("accuracy: empty evaluation set");
    std::size_t correct = 0;
    for (const SampleVector& s : eval_set) {
        Prediction p = predict(m, s.x);
        correct += static_cast<std::size_t>(p.label == (s.label != 0 ? 1 : 0));
    }
    return static_cast<double>(correct) / static_cast<double>(eval_set.size());
}

} // namespace keysynth
