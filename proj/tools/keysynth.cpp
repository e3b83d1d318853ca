#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "keysynth/errors.hpp"
#include "keysynth/features.hpp"
#include "keysynth/harness.hpp"
#include "keysynth/io.hpp"
#include "keysynth/model_io.hpp"

namespace {

using namespace keysynth;

std::vector<FeatureSequence> pooled_features(const Corpus& corpus) {
    std::vector<FeatureSequence> pool;
    pool.reserve(corpus.total_samples());
    for (const SubjectData& s : corpus.subjects)
        for (const FeatureSequence& fs : s.features)
            pool.push_back(fs);
    return pool;
}

std::vector<SampleVector> vectorize_corpus(const Corpus& corpus,
                                           std::size_t max_keys,
                                           bool use_keys, int label,
                                           std::size_t& dropped) {
    std::vector<SampleVector> out;
    for (const SubjectData& s : corpus.subjects)
        for (const FeatureSequence& fs : s.features) {
            auto t = truncate(fs, max_keys);
            if (!t) {
                ++dropped;
                continue;
            }
            out.push_back({vectorize(*t, max_keys, use_keys), label});
        }
    return out;
}

struct GenPseudoArgs {
    std::size_t subjects = 0, samples = 0;
    std::uint64_t seed = 0;
    std::string out;
    PseudoHumanProfile profile;
};

struct FitKdeArgs {
    std::string input, out;
    double bandwidth = 1.0;
};

struct TrainGnnArgs {
    std::string input, out;
    GnnTrainConfig cfg;
    std::string conditioning = "first_key";
};

struct SynthArgs {
    std::string model, out, copy_from;
    std::vector<int> keys;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    long long user_index = -1;
};

struct TrainDetArgs {
    std::string kind, human, bot, out;
    std::size_t max_keys = 30;
    bool use_keys = false;
    std::uint64_t seed = 0;
    DetectorConfig cfg;
};

struct ScoreArgs {
    std::string model, input, out;
};

struct RunGridArgs {
    std::string config, corpus, out;
    std::size_t pseudo_subjects = 1200, pseudo_samples = 5;
    std::uint64_t pseudo_seed = 7;
    bool have_seed = false;
    std::uint64_t seed = 0;
    bool table = false;
};

int cmd_gen_pseudo(const GenPseudoArgs& a) {
    Corpus corpus = generate_pseudo_human(a.subjects, a.samples, a.profile,
                                          a.seed);
    save_corpus(corpus, a.out);
    std::cerr << "wrote " << corpus.subjects.size() << " subjects x "
              << a.samples << " samples to " << a.out << "\n";
    return 0;
}

int cmd_fit_kde(const FitKdeArgs& a, bool user_dependent) {
    io::LoadStats stats;
    Corpus corpus = load_corpus(a.input, &stats);
    std::vector<FeatureSequence> pool = pooled_features(corpus);
    GeneratorModel model;
    if (user_dependent) {
        std::size_t skipped = 0;
        model = fit_user_dependent(pool, a.bandwidth, &skipped);
        std::cerr << "fitted " << std::get<UserDependentModel>(model).users.size()
                  << " user models";
        if (skipped)
            std::cerr << " (" << skipped << " subjects without steps skipped)";
        std::cerr << "\n";
    } else {
        model = fit_universal(pool, a.bandwidth);
        std::cerr << "fitted pooled densities on " << pool.size()
                  << " samples\n";
    }
    if (stats.samples_skipped)
        std::cerr << stats.samples_skipped << " malformed samples skipped\n";
    save_generator(model, a.out);
    return 0;
}

int cmd_train_gnn(TrainGnnArgs a) {
    Corpus corpus = load_corpus(a.input);
    a.cfg.conditioning = a.conditioning == "second_key"
                             ? Conditioning::second_key
                             : Conditioning::first_key;
    GnnModel model = train_gnn(pooled_features(corpus), a.cfg);
    static const char* feature_names[4] = {"hold", "inter_press",
                                           "inter_release", "inter_key"};
    for (int i = 0; i < 4; ++i) {
        const auto& curve = model.epoch_loss[i];
        std::cerr << feature_names[i] << ": " << curve.size() << " epochs";
        if (!curve.empty())
            std::cerr << ", final loss " << curve.back();
        std::cerr << "\n";
    }
    save_generator(model, a.out);
    return 0;
}

int cmd_synth(const SynthArgs& a) {
    if (a.keys.empty() == a.copy_from.empty())
        throw InvalidParameters(
            "synth needs exactly one key source: --keys or --copy-from");
    GeneratorModel model = load_generator(a.model);

    std::vector<std::vector<int>> code_sets;
    if (!a.keys.empty()) {
        code_sets.push_back(a.keys);
    } else {
        Corpus source = load_corpus(a.copy_from);
        for (const SubjectData& s : source.subjects)
            for (const KeystrokeSequence& seq : s.raw) {
                std::vector<int> codes;
                codes.reserve(seq.events.size());
                for (const KeyEvent& ev : seq.events)
                    codes.push_back(ev.key_code);
                code_sets.push_back(std::move(codes));
            }
    }

    FittedGenerators gens;
    GeneratorKind kind;
    if (auto* u = std::get_if<UniversalModel>(&model)) {
        gens.universal = std::move(*u);
        kind = GeneratorKind::universal;
    } else if (auto* ud = std::get_if<UserDependentModel>(&model)) {
        gens.userdep = std::move(*ud);
        kind = GeneratorKind::userdep;
    } else {
        gens.gnn = std::move(std::get<GnnModel>(model));
        kind = GeneratorKind::gnn;
    }
    // the engine still needs a well-formed generative stack; unused
    // families stay empty and are never dereferenced for other kinds
    SynthEngine engine(gens);

    Rng rng = derive_rng(a.seed, "synth");
    std::vector<KeystrokeSequence> out_samples;
    out_samples.reserve(a.count);
    for (std::size_t i = 0; i < a.count; ++i) {
        const std::vector<int>& codes = code_sets[i % code_sets.size()];
        std::size_t user_index = 0;
        if (kind == GeneratorKind::userdep)
            user_index = a.user_index >= 0
                             ? static_cast<std::size_t>(a.user_index)
                             : rng.index(engine.n_user_models());
        char sid[32];
        std::snprintf(sid, sizeof(sid), "bot-%04zu", i);
        out_samples.push_back(
            engine.synthesize(kind, codes, user_index, rng, sid, "s0"));
    }
    io::write_events_csv(a.out, out_samples);
    std::cerr << "wrote " << out_samples.size() << " synthesized samples to "
              << a.out << "\n";
    return 0;
}

int cmd_train_detector(const TrainDetArgs& a) {
    DetectorKind kind = detector_from_name(a.kind);
    std::size_t dropped = 0;
    Corpus human = load_corpus(a.human);
    std::vector<SampleVector> train =
        vectorize_corpus(human, a.max_keys, a.use_keys, 0, dropped);
    if (!a.bot.empty()) {
        Corpus bot = load_corpus(a.bot);
        std::vector<SampleVector> bots =
            vectorize_corpus(bot, a.max_keys, a.use_keys, 1, dropped);
        train.insert(train.end(), bots.begin(), bots.end());
    }
    if (dropped)
        std::cerr << dropped << " samples below " << a.max_keys
                  << " keys dropped\n";
    Rng rng = derive_rng(a.seed, "fit");
    DetectorModel model =
        fit_detector(kind, train, a.cfg, rng, a.max_keys, a.use_keys);
    save_detector(model, a.out);
    std::cerr << "trained " << detector_name(kind) << " on " << train.size()
              << " vectors";
    if (kind == DetectorKind::svm || kind == DetectorKind::ocsvm)
        std::cerr << " (" << model.svm_info.n_support << " support vectors, "
                  << model.svm_info.iterations << " iterations)";
    std::cerr << "\n";
    return 0;
}

int cmd_score(const ScoreArgs& a) {
    DetectorModel model = load_detector(a.model);
    Corpus corpus = load_corpus(a.input);
    std::string out = "subject_id,sample_id,prediction,score\n";
    std::size_t dropped = 0;
    for (const SubjectData& s : corpus.subjects)
        for (const FeatureSequence& fs : s.features) {
            auto t = truncate(fs, model.max_keys);
            if (!t) {
                ++dropped;
                continue;
            }
            Prediction p =
                predict(model, vectorize(*t, model.max_keys, model.use_keys));
            out += fs.subject_id;
            out += ',';
            out += fs.sample_id;
            out += ',';
            out += p.label == 1 ? "bot" : "human";
            out += ',';
            out += io::format_double(p.score);
            out += '\n';
        }
    if (dropped)
        std::cerr << dropped << " samples below " << model.max_keys
                  << " keys skipped\n";
    if (a.out.empty())
        std::cout << out;
    else
        io::write_file(a.out, out);
    return 0;
}

int cmd_run_grid(const RunGridArgs& a) {
    GridConfig cfg = a.config.empty()
                         ? desk_grid_config()
                         : parse_grid_config(io::read_file(a.config));
    if (a.have_seed)
        cfg.seed = a.seed;
    Corpus corpus;
    if (!a.corpus.empty()) {
        corpus = load_corpus(a.corpus);
    } else {
        std::cerr << "generating pseudo-human corpus: " << a.pseudo_subjects
                  << " subjects x " << a.pseudo_samples << " samples, seed "
                  << a.pseudo_seed << "\n";
        corpus = generate_pseudo_human(a.pseudo_subjects, a.pseudo_samples,
                                       PseudoHumanProfile{}, a.pseudo_seed);
    }
    std::vector<ReportRow> rows = run_grid(corpus, cfg);
    io::write_file(a.out, emit_report_csv(rows));
    if (a.table)
        std::cerr << emit_report_table(rows);
    std::cerr << "wrote " << rows.size() << " rows to " << a.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic keystroke generation and detection toolkit"};
    app.require_subcommand(1);

    GenPseudoArgs gp;
    CLI::App* gen = app.add_subcommand(
        "gen-pseudo-human", "generate a synthetic typist corpus");
    gen->add_option("--subjects", gp.subjects, "number of typists")
        ->required();
    gen->add_option("--samples", gp.samples, "samples per typist")
        ->required();
    gen->add_option("--seed", gp.seed, "rng seed")->required();
    gen->add_option("--out", gp.out, "output events csv")->required();
    gen->add_option("--min-keys", gp.profile.min_keys, "shortest sample");
    gen->add_option("--max-keys", gp.profile.max_keys, "longest sample");
    gen->add_option("--rollover-prob", gp.profile.rollover_prob,
                    "chance a transition overlaps");
    gen->add_option("--space-prob", gp.profile.space_prob,
                    "chance a key is the space bar");

    FitKdeArgs fu;
    CLI::App* fit_u = app.add_subcommand(
        "fit-universal", "fit pooled feature densities over all typists");
    fit_u->add_option("--input", fu.input, "events csv")->required();
    fit_u->add_option("--out", fu.out, "model json")->required();
    fit_u->add_option("--bandwidth", fu.bandwidth, "kernel bandwidth (ms)");

    FitKdeArgs fd;
    CLI::App* fit_d = app.add_subcommand(
        "fit-userdep", "fit per-typist feature densities");
    fit_d->add_option("--input", fd.input, "events csv")->required();
    fit_d->add_option("--out", fd.out, "model json")->required();
    fit_d->add_option("--bandwidth", fd.bandwidth, "kernel bandwidth (ms)");

    TrainGnnArgs tg;
    CLI::App* train_g = app.add_subcommand(
        "train-gnn", "train key-conditional generative networks");
    train_g->add_option("--input", tg.input, "events csv")->required();
    train_g->add_option("--out", tg.out, "model json")->required();
    train_g->add_option("--seed", tg.cfg.seed, "rng seed")->required();
    train_g->add_option("--epochs", tg.cfg.epochs, "max training epochs");
    train_g->add_option("--batch", tg.cfg.batch, "minibatch size");
    train_g->add_option("--lr", tg.cfg.lr, "adam learning rate");
    train_g->add_option("--patience", tg.cfg.patience,
                        "early-stop patience in epochs");
    train_g->add_option("--min-delta", tg.cfg.min_delta,
                        "loss improvement below this counts as stale");
    train_g->add_option("--sigma-floor", tg.cfg.sigma_floor,
                        "lower bound on the scale output (ms)");
    train_g->add_option("--max-pairs", tg.cfg.max_pairs_per_feature,
                        "training pair cap per feature, 0 keeps all");
    train_g
        ->add_option("--conditioning", tg.conditioning,
                     "which key of a transition conditions it")
        ->check(CLI::IsMember({"first_key", "second_key"}));

    SynthArgs sy;
    CLI::App* synth = app.add_subcommand(
        "synth", "synthesize keystroke samples from a generator model");
    synth->add_option("--model", sy.model, "generator model json")
        ->required();
    synth->add_option("--count", sy.count, "samples to synthesize")
        ->required();
    synth->add_option("--seed", sy.seed, "rng seed")->required();
    synth->add_option("--out", sy.out, "output events csv")->required();
    synth->add_option("--keys", sy.keys,
                      "comma-separated key codes used for every sample")
        ->delimiter(',');
    synth->add_option("--copy-from", sy.copy_from,
                      "events csv whose key sequences are copied in turn");
    synth->add_option("--user-index", sy.user_index,
                      "fixed user model index (user-dependent only)");

    TrainDetArgs td;
    CLI::App* train_d =
        app.add_subcommand("train-detector", "train a bot detector");
    train_d->add_option("--kind", td.kind,
                        "ocsvm | svm | gnb | rf | lstm | euclid")
        ->required();
    train_d->add_option("--human", td.human, "human events csv")->required();
    train_d->add_option("--bot", td.bot,
                        "bot events csv (omit for the one-class kind)");
    train_d->add_option("--out", td.out, "model json")->required();
    train_d->add_option("--seed", td.seed, "rng seed")->required();
    train_d->add_option("--max-keys", td.max_keys,
                        "keys per sample after truncation");
    train_d->add_flag("--use-keys", td.use_keys,
                      "append the normalized key code to each step");
    train_d->add_option("--svm-c", td.cfg.svm_c, "soft-margin penalty");
    train_d->add_option("--nu", td.cfg.ocsvm_nu, "one-class margin fraction");
    train_d->add_option("--gamma", td.cfg.rbf_gamma,
                        "rbf width, 0 = 1/dimension");
    train_d->add_option("--trees", td.cfg.forest.n_trees, "forest size");
    train_d->add_option("--lstm-epochs", td.cfg.lstm_epochs,
                        "sequence model training epochs");
    train_d->add_option("--lstm-hidden", td.cfg.lstm_hidden,
                        "sequence model hidden width");

    ScoreArgs sr;
    CLI::App* score =
        app.add_subcommand("score", "score samples with a trained detector");
    score->add_option("--model", sr.model, "detector model json")->required();
    score->add_option("--input", sr.input, "events csv")->required();
    score->add_option("--out", sr.out, "output csv (default stdout)");

    RunGridArgs rg;
    CLI::App* grid = app.add_subcommand(
        "run-grid", "run the generator x detector evaluation grid");
    grid->add_option("--config", rg.config, "grid config json");
    grid->add_option("--corpus", rg.corpus,
                     "events csv (omit to generate a pseudo-human corpus)");
    grid->add_option("--out", rg.out, "report csv")->required();
    CLI::Option* seed_opt =
        grid->add_option("--seed", rg.seed, "override the config seed");
    grid->add_option("--pseudo-subjects", rg.pseudo_subjects,
                     "generated corpus size");
    grid->add_option("--pseudo-samples", rg.pseudo_samples,
                     "generated samples per subject");
    grid->add_option("--pseudo-seed", rg.pseudo_seed,
                     "generated corpus seed");
    grid->add_flag("--table", rg.table, "print an aligned table to stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_pseudo(gp);
        if (fit_u->parsed())
            return cmd_fit_kde(fu, false);
        if (fit_d->parsed())
            return cmd_fit_kde(fd, true);
        if (train_g->parsed())
            return cmd_train_gnn(tg);
        if (synth->parsed())
            return cmd_synth(sy);
        if (train_d->parsed())
            return cmd_train_detector(td);
        if (score->parsed())
            return cmd_score(sr);
        if (grid->parsed()) {
            rg.have_seed = seed_opt->count() > 0;
            return cmd_run_grid(rg);
        }
    } catch (const keysynth::Error& e) {
        std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}
