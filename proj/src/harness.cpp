#include "keysynth/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "keysynth/errors.hpp"
#include "keysynth/features.hpp"

namespace keysynth {

using nlohmann::json;

std::size_t Corpus::total_samples() const {
    std::size_t n = 0;
    for (const SubjectData& s : subjects)
        n += s.features.size();
    return n;
}

Corpus load_corpus(const std::string& path, io::LoadStats* stats) {
    io::LoadStats local;
    std::vector<KeystrokeSequence> samples = io::read_events_csv(path, &local);
    Corpus corpus;
    for (KeystrokeSequence& seq : samples) {
        FeatureSequence fs;
        try {
            fs = extract_features(seq);
        } catch (const SequenceTooShort&) {
            ++local.samples_skipped;
            --local.samples_ok;
            continue;
        }
        SubjectData* subj = nullptr;
        if (!corpus.subjects.empty() &&
            corpus.subjects.back().subject_id == seq.subject_id) {
            subj = &corpus.subjects.back();
        } else {
            auto it = std::find_if(corpus.subjects.begin(),
                                   corpus.subjects.end(),
                                   [&](const SubjectData& s) {
                                       return s.subject_id == seq.subject_id;
                                   });
            if (it == corpus.subjects.end()) {
                corpus.subjects.push_back({seq.subject_id, {}, {}});
                subj = &corpus.subjects.back();
            } else {
                subj = &*it;
            }
        }
        subj->features.push_back(std::move(fs));
        subj->raw.push_back(std::move(seq));
    }
    if (corpus.subjects.empty())
        throw EmptyCorpus("corpus " + path + ": no usable samples");
    if (stats)
        *stats = local;
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::vector<KeystrokeSequence> samples;
    samples.reserve(corpus.total_samples());
    for (const SubjectData& s : corpus.subjects)
        for (const KeystrokeSequence& seq : s.raw)
            samples.push_back(seq);
    io::write_events_csv(path, samples);
}

namespace {

// English letter mix plus space; heavier keys get visited often enough
// that per-key effects are identifiable from a few samples.
struct KeyTable {
    std::array<int, 26> codes;
    std::array<double, 26> cum;
};

KeyTable build_key_table() {
    static const double freq[26] = {
        8.17,  1.49, 2.78, 4.25, 12.70, 2.23, 2.02, 6.09, 6.97,
        0.15,  0.77, 4.03, 2.41, 6.75,  7.51, 1.93, 0.10, 5.99,
        6.33,  9.06, 2.76, 0.98, 2.36,  0.15, 1.97, 0.07};
    KeyTable t;
    double total = 0.0;
    for (double f : freq)
        total += f;
    double acc = 0.0;
    for (int k = 0; k < 26; ++k) {
        t.codes[k] = 'A' + k;
        acc += freq[k] / total;
        t.cum[k] = acc;
    }
    t.cum[25] = 1.0;
    return t;
}

int draw_key(const KeyTable& t, double space_prob, Rng& rng) {
    if (rng.uniform() < space_prob)
        return ' ';
    double u = rng.uniform();
    auto it = std::lower_bound(t.cum.begin(), t.cum.end(), u);
    return t.codes[static_cast<std::size_t>(it - t.cum.begin())];
}

struct KeyFactors {
    std::array<double, 256> hold;
    std::array<double, 256> gap;
};

KeyFactors draw_key_factors(double sigma, Rng& rng) {
    KeyFactors f;
    for (int c = 0; c < 256; ++c)
        f.hold[c] = std::exp(sigma * rng.normal());
    for (int c = 0; c < 256; ++c)
        f.gap[c] = std::exp(sigma * rng.normal());
    return f;
}

std::string padded_id(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%04zu", prefix, i);
    return buf;
}

} // namespace

Corpus generate_pseudo_human(std::size_t n_subjects,
                             std::size_t samples_per_subject,
                             const PseudoHumanProfile& p, std::uint64_t seed) {
    if (n_subjects == 0 || samples_per_subject == 0)
        throw InvalidParameters("pseudo-human: subject and sample counts "
                                "must be positive");
    if (p.min_keys < 2 || p.max_keys < p.min_keys)
        throw InvalidParameters("pseudo-human: need 2 <= min_keys <= max_keys");
    if (p.rollover_max >= 1.0 || p.rollover_min <= 0.0 ||
        p.rollover_min > p.rollover_max)
        throw InvalidParameters("pseudo-human: rollover overlap must sit "
                                "inside (0, 1)");

    const KeyTable keys = build_key_table();
    Rng rng_pop = derive_rng(seed, "key-effects");
    const KeyFactors pop = draw_key_factors(p.key_effect_sigma, rng_pop);
    const double ar_innov = std::sqrt(1.0 - p.ar_phi * p.ar_phi);

    Corpus corpus;
    corpus.subjects.resize(n_subjects);
    for (std::size_t i = 0; i < n_subjects; ++i) {
        SubjectData& subj = corpus.subjects[i];
        subj.subject_id = padded_id("subj-", i);
        Rng rng = derive_rng(seed, "subject", i);

        const double hold_base =
            p.hold_base_ms * std::exp(p.hold_pop_sigma * rng.normal());
        const double gap_base =
            p.gap_base_ms * std::exp(p.gap_pop_sigma * rng.normal());
        // noise-level draws are clamped: the steadiest and most erratic
        // subjects differ by a bounded factor, so gap magnitudes stay on a
        // human scale
        const double hold_noise =
            p.hold_cv * std::exp(p.cv_pop_sigma *
                                 std::clamp(rng.normal(), -2.0, 2.0));
        const double gap_noise =
            p.gap_cv * std::exp(p.cv_pop_sigma *
                                std::clamp(rng.normal(), -2.0, 2.0));
        const KeyFactors own = draw_key_factors(p.subject_key_jitter, rng);

        for (std::size_t s = 0; s < samples_per_subject; ++s) {
            const std::size_t n_keys =
                p.min_keys + rng.index(p.max_keys - p.min_keys + 1);
            std::vector<int> codes(n_keys);
            for (std::size_t k = 0; k < n_keys; ++k)
                codes[k] = draw_key(keys, p.space_prob, rng);

            std::vector<double> holds(n_keys);
            for (std::size_t k = 0; k < n_keys; ++k) {
                double h = hold_base * pop.hold[codes[k]] *
                           own.hold[codes[k]] *
                           std::exp(hold_noise * rng.normal());
                holds[k] = std::max(h, p.min_hold_ms);
            }

            std::vector<double> gaps(n_keys - 1);
            double ar = rng.normal(); // stationary start
            for (std::size_t k = 0; k + 1 < n_keys; ++k) {
                if (k > 0)
                    ar = p.ar_phi * ar + ar_innov * rng.normal();
                if (rng.uniform() < p.rollover_prob) {
                    double overlap =
                        rng.uniform(p.rollover_min, p.rollover_max);
                    gaps[k] = -overlap * holds[k];
                } else {
                    gaps[k] = gap_base * pop.gap[codes[k]] *
                              own.gap[codes[k]] * std::exp(gap_noise * ar);
                }
            }

            KeystrokeSequence seq = reconstruct_timestamps(
                codes, holds, gaps, subj.subject_id, padded_id("s", s));
            subj.features.push_back(extract_features(seq));
            subj.raw.push_back(std::move(seq));
        }
    }
    return corpus;
}

const char* generator_kind_name(GeneratorKind k) {
    switch (k) {
    case GeneratorKind::universal:
        return "universal";
    case GeneratorKind::userdep:
        return "userdep";
    case GeneratorKind::gnn:
        return "gnn";
    }
    return "?";
}

GeneratorKind generator_kind_from_name(const std::string& name) {
    if (name == "universal")
        return GeneratorKind::universal;
    if (name == "userdep")
        return GeneratorKind::userdep;
    if (name == "gnn")
        return GeneratorKind::gnn;
    throw InvalidParameters("unknown generator kind '" + name + "'");
}

FittedGenerators fit_generators(const std::vector<FeatureSequence>& train,
                                double kde_bandwidth,
                                const GnnTrainConfig& gnn_cfg) {
    FittedGenerators g;
    g.universal = fit_universal(train, kde_bandwidth);
    g.userdep = fit_user_dependent(train, kde_bandwidth);
    g.gnn = train_gnn(train, gnn_cfg);
    return g;
}

SynthEngine::SynthEngine(const FittedGenerators& gens) : gens_(&gens) {
    if (gens.gnn.nets[0].l1.W.rows > 0)
        gnn_sampler_.emplace(gens.gnn);
}

KeystrokeSequence SynthEngine::synthesize(GeneratorKind kind,
                                          const std::vector<int>& key_codes,
                                          std::size_t user_index, Rng& rng,
                                          std::string subject_id,
                                          std::string sample_id) const {
    switch (kind) {
    case GeneratorKind::universal:
        return synthesize_kde(gens_->universal, key_codes, rng,
                              std::move(subject_id), std::move(sample_id));
    case GeneratorKind::userdep:
        if (user_index >= gens_->userdep.users.size())
            throw InvalidParameters("synthesize: user index out of range");
        return synthesize_kde(gens_->userdep.users[user_index], key_codes, rng,
                              std::move(subject_id), std::move(sample_id));
    case GeneratorKind::gnn:
        if (!gnn_sampler_)
            throw InvalidParameters(
                "synthesize: the generator set holds no trained network");
        return gnn_sampler_->synthesize(key_codes, rng, std::move(subject_id),
                                        std::move(sample_id));
    }
    throw InvalidParameters("synthesize: unknown generator kind");
}

CorpusSplit split_corpus(const Corpus& corpus, std::size_t eval_subjects,
                         std::uint64_t seed) {
    if (eval_subjects == 0 || eval_subjects >= corpus.subjects.size())
        throw InvalidParameters("split: eval subject count must leave a "
                                "non-empty training pool");
    std::vector<std::size_t> order(corpus.subjects.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = derive_rng(seed, "split");
    std::shuffle(order.begin(), order.end(), rng.engine());
    CorpusSplit split;
    split.eval_pool.assign(order.begin(),
                           order.begin() + static_cast<std::ptrdiff_t>(
                                               eval_subjects));
    split.train_pool.assign(order.begin() + static_cast<std::ptrdiff_t>(
                                                eval_subjects),
                            order.end());
    return split;
}

namespace {

void append_humans(const Corpus& corpus, const std::vector<std::size_t>& pool,
                   const ScenarioConfig& cfg, int label,
                   std::vector<SampleVector>& out) {
    for (std::size_t idx : pool)
        for (const FeatureSequence& fs : corpus.subjects[idx].features) {
            auto t = truncate(fs, cfg.max_keys);
            if (!t)
                continue;
            out.push_back(
                {vectorize(*t, cfg.max_keys, cfg.use_keys), label});
        }
}

// One bot per kept human sample, copying its key sequence in full before
// truncation. The user-dependent family assigns one density model per
// paired subject.
void append_bots(const Corpus& corpus, const std::vector<std::size_t>& pool,
                 const SynthEngine& engine, GeneratorKind kind, Rng& rng,
                 const ScenarioConfig& cfg, std::vector<SampleVector>& out) {
    for (std::size_t idx : pool) {
        const SubjectData& human = corpus.subjects[idx];
        std::size_t user_index = 0;
        if (kind == GeneratorKind::userdep)
            user_index = rng.index(engine.n_user_models());
        for (std::size_t s = 0; s < human.raw.size(); ++s) {
            if (human.raw[s].events.size() < cfg.max_keys)
                continue; // pair dropped with its human side
            std::vector<int> codes;
            codes.reserve(human.raw[s].events.size());
            for (const KeyEvent& ev : human.raw[s].events)
                codes.push_back(ev.key_code);
            KeystrokeSequence bot =
                engine.synthesize(kind, codes, user_index, rng,
                                  "bot-" + human.subject_id,
                                  human.raw[s].sample_id);
            auto t = truncate(extract_features(bot), cfg.max_keys);
            out.push_back({vectorize(*t, cfg.max_keys, cfg.use_keys), 1});
        }
    }
}

} // namespace

Scenario build_scenario(const Corpus& corpus, const CorpusSplit& split,
                        const SynthEngine& engine, const ScenarioConfig& cfg) {
    if (cfg.n_train_subjects == 0 ||
        cfg.n_train_subjects > split.train_pool.size())
        throw InvalidParameters(
            "scenario: training size exceeds the available pool");

    std::vector<std::size_t> pool = split.train_pool;
    Rng rsubj = derive_rng(cfg.seed, "train-subjects");
    std::shuffle(pool.begin(), pool.end(), rsubj.engine());
    pool.resize(cfg.n_train_subjects);

    Scenario sc;
    append_humans(corpus, pool, cfg, 0, sc.train_human);
    Rng rtb = derive_rng(cfg.seed, "train-bots",
                         static_cast<std::uint64_t>(cfg.gen_train),
                         cfg.n_train_subjects);
    append_bots(corpus, pool, engine, cfg.gen_train, rtb, cfg, sc.train_bot);

    append_humans(corpus, split.eval_pool, cfg, 0, sc.eval_set);
    Rng reb = derive_rng(cfg.seed, "eval-bots",
                         static_cast<std::uint64_t>(cfg.gen_test));
    append_bots(corpus, split.eval_pool, engine, cfg.gen_test, reb, cfg,
                sc.eval_set);

    if (sc.train_human.empty() || sc.train_bot.empty())
        throw EmptyTrainingSet("scenario: every training sample fell below "
                               "the key-count floor");
    if (sc.eval_set.empty())
        throw EmptyEvalSet("scenario: no evaluation samples survived");
    return sc;
}

GridConfig desk_grid_config() {
    GridConfig cfg;
    cfg.pairs = {{GeneratorKind::universal, GeneratorKind::universal},
                 {GeneratorKind::userdep, GeneratorKind::userdep},
                 {GeneratorKind::gnn, GeneratorKind::gnn}};
    // single-core budgets: the sequence model trains in a few passes and
    // the generative nets see a capped pair subsample
    cfg.detector.lstm_epochs = 15;
    cfg.gnn.epochs = 30;
    cfg.gnn.max_pairs_per_feature = 40000;
    return cfg;
}

namespace {

template <typename T, typename F>
void read_array(const json& j, const char* key, std::vector<T>& out, F parse) {
    if (!j.contains(key))
        return;
    out.clear();
    for (const json& item : j.at(key))
        out.push_back(parse(item));
}

void merge_detector_config(const json& j, DetectorConfig& d) {
    d.svm_c = j.value("svm_c", d.svm_c);
    d.ocsvm_nu = j.value("ocsvm_nu", d.ocsvm_nu);
    d.rbf_gamma = j.value("rbf_gamma", d.rbf_gamma);
    d.smo_tol = j.value("smo_tol", d.smo_tol);
    d.smo_cache_mb = j.value("smo_cache_mb", d.smo_cache_mb);
    d.forest.n_trees = j.value("rf_trees", d.forest.n_trees);
    d.forest.max_depth = j.value("rf_max_depth", d.forest.max_depth);
    d.forest.min_split = j.value("rf_min_split", d.forest.min_split);
    d.forest.mtry = j.value("rf_mtry", d.forest.mtry);
    d.gnb_var_floor_rel = j.value("gnb_var_floor_rel", d.gnb_var_floor_rel);
    d.lstm_hidden = j.value("lstm_hidden", d.lstm_hidden);
    d.lstm_epochs = j.value("lstm_epochs", d.lstm_epochs);
    d.lstm_batch = j.value("lstm_batch", d.lstm_batch);
    d.lstm_lr = j.value("lstm_lr", d.lstm_lr);
}

void merge_gnn_config(const json& j, GnnTrainConfig& g) {
    g.epochs = j.value("epochs", g.epochs);
    g.batch = j.value("batch", g.batch);
    g.lr = j.value("lr", g.lr);
    g.patience = j.value("patience", g.patience);
    g.min_delta = j.value("min_delta", g.min_delta);
    g.sigma_floor = j.value("sigma_floor", g.sigma_floor);
    g.max_pairs_per_feature =
        j.value("max_pairs_per_feature", g.max_pairs_per_feature);
    if (j.contains("conditioning")) {
        std::string c = j.at("conditioning").get<std::string>();
        if (c == "first_key")
            g.conditioning = Conditioning::first_key;
        else if (c == "second_key")
            g.conditioning = Conditioning::second_key;
        else
            throw IoError("grid config: unknown conditioning '" + c + "'");
    }
}

} // namespace

GridConfig parse_grid_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("grid config: ") + e.what());
    }
    if (!j.is_object())
        throw IoError("grid config: expected a JSON object");

    GridConfig cfg = desk_grid_config();
    try {
        cfg.eval_subjects = j.value("eval_subjects", cfg.eval_subjects);
        cfg.max_keys = j.value("max_keys", cfg.max_keys);
        cfg.kde_bandwidth = j.value("kde_bandwidth", cfg.kde_bandwidth);
        cfg.seed = j.value("seed", cfg.seed);
        read_array(j, "train_sizes", cfg.train_sizes, [](const json& it) {
            return it.get<std::size_t>();
        });
        read_array(j, "detectors", cfg.detectors, [](const json& it) {
            return detector_from_name(it.get<std::string>());
        });
        read_array(j, "key_options", cfg.key_options,
                   [](const json& it) { return it.get<bool>(); });
        read_array(j, "pairs", cfg.pairs, [](const json& it) {
            if (!it.is_array() || it.size() != 2)
                throw IoError("grid config: each pair is [train, test]");
            return std::make_pair(
                generator_kind_from_name(it[0].get<std::string>()),
                generator_kind_from_name(it[1].get<std::string>()));
        });
        if (j.contains("detector"))
            merge_detector_config(j.at("detector"), cfg.detector);
        if (j.contains("gnn"))
            merge_gnn_config(j.at("gnn"), cfg.gnn);
    } catch (const json::exception& e) {
        throw IoError(std::string("grid config: ") + e.what());
    }
    return cfg;
}

namespace {

std::tuple<int, int, std::size_t, int, bool> row_key(const ReportRow& r) {
    return {static_cast<int>(r.gen_train), static_cast<int>(r.gen_test),
            r.n_train_subjects, static_cast<int>(r.detector), r.use_keys};
}

} // namespace

std::vector<ReportRow> run_grid(const Corpus& corpus, const GridConfig& cfg) {
    if (cfg.pairs.empty() || cfg.train_sizes.empty() ||
        cfg.detectors.empty() || cfg.key_options.empty())
        throw InvalidParameters("grid: empty axis");

    CorpusSplit split = split_corpus(corpus, cfg.eval_subjects, cfg.seed);
    std::vector<FeatureSequence> pool;
    pool.reserve(split.train_pool.size() * 4);
    for (std::size_t idx : split.train_pool)
        for (const FeatureSequence& fs : corpus.subjects[idx].features)
            pool.push_back(fs);

    GnnTrainConfig gnn_cfg = cfg.gnn;
    gnn_cfg.seed = derive_seed(cfg.seed, "gnn-fit");
    FittedGenerators gens =
        fit_generators(pool, cfg.kde_bandwidth, gnn_cfg);
    SynthEngine engine(gens);

    std::vector<ReportRow> rows;
    for (const auto& [gen_train, gen_test] : cfg.pairs) {
        for (std::size_t n : cfg.train_sizes) {
            for (bool use_keys : cfg.key_options) {
                ScenarioConfig sc_cfg;
                sc_cfg.gen_train = gen_train;
                sc_cfg.gen_test = gen_test;
                sc_cfg.n_train_subjects = n;
                sc_cfg.max_keys = cfg.max_keys;
                sc_cfg.use_keys = use_keys;
                sc_cfg.seed = cfg.seed;

                Scenario sc;
                std::string scenario_error;
                try {
                    sc = build_scenario(corpus, split, engine, sc_cfg);
                } catch (const Error& e) {
                    scenario_error = e.name();
                }

                for (DetectorKind det : cfg.detectors) {
                    ReportRow row;
                    row.gen_train = gen_train;
                    row.gen_test = gen_test;
                    row.detector = det;
                    row.use_keys = use_keys;
                    row.n_train_subjects = n;
                    if (!scenario_error.empty()) {
                        row.status = scenario_error;
                        row.accuracy =
                            std::numeric_limits<double>::quiet_NaN();
                        rows.push_back(row);
                        continue;
                    }
                    try {
                        std::vector<SampleVector> train = sc.train_human;
                        if (det != DetectorKind::ocsvm)
                            train.insert(train.end(), sc.train_bot.begin(),
                                         sc.train_bot.end());
                        // stream identity: generator pair, size, detector
                        // and key option, independent of execution order
                        Rng fit_rng = derive_rng(
                            cfg.seed, "fit",
                            static_cast<std::uint64_t>(gen_train) * 4 +
                                static_cast<std::uint64_t>(gen_test),
                            n,
                            static_cast<std::uint64_t>(det) * 2 +
                                (use_keys ? 1 : 0));
                        DetectorModel model =
                            fit_detector(det, train, cfg.detector, fit_rng,
                                         cfg.max_keys, use_keys);
                        row.accuracy = accuracy(model, sc.eval_set);
                        row.status = "ok";
                    } catch (const Error& e) {
                        row.status = e.name();
                        row.accuracy =
                            std::numeric_limits<double>::quiet_NaN();
                    }
                    rows.push_back(row);
                }
            }
        }
    }
    std::sort(rows.begin(), rows.end(),
              [](const ReportRow& a, const ReportRow& b) {
                  return row_key(a) < row_key(b);
              });
    return rows;
}

std::string emit_report_csv(const std::vector<ReportRow>& rows) {
    std::string out =
        "generator_train,generator_test,detector,K,n_train_subjects,"
        "accuracy,status\n";
    for (const ReportRow& r : rows) {
        out += generator_kind_name(r.gen_train);
        out += ',';
        out += generator_kind_name(r.gen_test);
        out += ',';
        out += detector_name(r.detector);
        out += ',';
        out += r.use_keys ? '1' : '0';
        out += ',';
        out += std::to_string(r.n_train_subjects);
        out += ',';
        if (r.status == "ok")
            out += io::format_double(r.accuracy);
        out += ',';
        out += r.status;
        out += '\n';
    }
    return out;
}

std::string emit_report_table(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %-10s %-7s %2s %6s %9s %s\n",
                  "gen_train", "gen_test", "det", "K", "n_subj", "accuracy",
                  "status");
    os << line;
    for (const ReportRow& r : rows) {
        if (r.status == "ok")
            std::snprintf(line, sizeof(line),
                          "%-10s %-10s %-7s %2d %6zu %9.4f %s\n",
                          generator_kind_name(r.gen_train),
                          generator_kind_name(r.gen_test),
                          detector_name(r.detector), r.use_keys ? 1 : 0,
                          r.n_train_subjects, r.accuracy, r.status.c_str());
        else
            std::snprintf(line, sizeof(line),
                          "%-10s %-10s %-7s %2d %6zu %9s %s\n",
                          generator_kind_name(r.gen_train),
                          generator_kind_name(r.gen_test),
                          detector_name(r.detector), r.use_keys ? 1 : 0,
                          r.n_train_subjects, "-", r.status.c_str());
        os << line;
    }
    return os.str();
}

std::vector<ReportRow> parse_report_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line))
        throw IoError("report: empty input");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line !=
        "generator_train,generator_test,detector,K,n_train_subjects,"
        "accuracy,status")
        throw IoError("report: unexpected header");

    std::vector<ReportRow> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t pos = 0; pos <= line.size(); ++pos) {
            if (pos == line.size() || line[pos] == ',') {
                fields.push_back(line.substr(start, pos - start));
                start = pos + 1;
            }
        }
        if (fields.size() != 7)
            throw IoError("report: expected 7 fields per row");
        ReportRow r;
        r.gen_train = generator_kind_from_name(fields[0]);
        r.gen_test = generator_kind_from_name(fields[1]);
        r.detector = detector_from_name(fields[2]);
        if (fields[3] != "0" && fields[3] != "1")
            throw IoError("report: K must be 0 or 1");
        r.use_keys = fields[3] == "1";
        r.n_train_subjects =
            static_cast<std::size_t>(std::stoull(fields[4]));
        r.status = fields[6];
        r.accuracy = fields[5].empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : io::parse_double(fields[5]);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace keysynth
