#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "keysynth/errors.hpp"
#include "keysynth/features.hpp"
#include "keysynth/harness.hpp"
#include "keysynth/io.hpp"
#include "test_util.hpp"

using namespace keysynth;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

struct TmpFile {
    std::string path;
    explicit TmpFile(const std::string& name) : path(tmp_path(name)) {}
    ~TmpFile() { std::remove(path.c_str()); }
};

GnnTrainConfig tiny_gnn() {
    GnnTrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch = 256;
    cfg.max_pairs_per_feature = 1000;
    return cfg;
}

} // namespace

TEST_CASE("pseudo-human corpus has the advertised shape") {
    PseudoHumanProfile p;
    Corpus c = generate_pseudo_human(20, 3, p, 7);
    REQUIRE(c.subjects.size() == 20);
    CHECK(c.subjects[0].subject_id == "subj-0000");
    CHECK(c.subjects[19].subject_id == "subj-0019");
    CHECK(c.total_samples() == 60);

    std::size_t transitions = 0, rollovers = 0, keys = 0, spaces = 0;
    for (const SubjectData& s : c.subjects) {
        REQUIRE(s.raw.size() == 3);
        REQUIRE(s.features.size() == 3);
        CHECK(s.raw[0].sample_id == "s0000");
        for (std::size_t i = 0; i < s.raw.size(); ++i) {
            const KeystrokeSequence& seq = s.raw[i];
            validate_sequence(seq);
            CHECK(seq.events.size() >= p.min_keys);
            CHECK(seq.events.size() <= p.max_keys);
            CHECK(s.features[i].steps.size() == seq.events.size() - 1);
            for (const KeyEvent& ev : seq.events) {
                ++keys;
                spaces += ev.key_code == ' ';
                bool letter = ev.key_code >= 'A' && ev.key_code <= 'Z';
                CHECK((letter || ev.key_code == ' '));
            }
            for (const FeatureStep& st : s.features[i].steps) {
                CHECK(st.hold >= p.min_hold_ms);
                ++transitions;
                rollovers += st.inter_key < 0.0;
            }
        }
    }
    double roll_frac = static_cast<double>(rollovers) /
                       static_cast<double>(transitions);
    CHECK(roll_frac > 0.02);
    CHECK(roll_frac < 0.09);
    double space_frac = static_cast<double>(spaces) / static_cast<double>(keys);
    CHECK(space_frac > 0.12);
    CHECK(space_frac < 0.24);
}

TEST_CASE("pseudo-human generation is seed-deterministic") {
    PseudoHumanProfile p;
    p.min_keys = 5;
    p.max_keys = 9;
    Corpus a = generate_pseudo_human(3, 2, p, 11);
    Corpus b = generate_pseudo_human(3, 2, p, 11);
    Corpus c = generate_pseudo_human(3, 2, p, 12);
    const auto& ea = a.subjects[1].raw[1].events;
    const auto& eb = b.subjects[1].raw[1].events;
    REQUIRE(ea.size() == eb.size());
    for (std::size_t k = 0; k < ea.size(); ++k) {
        CHECK(ea[k].key_code == eb[k].key_code);
        CHECK(ea[k].press_time == eb[k].press_time);
        CHECK(ea[k].release_time == eb[k].release_time);
    }
    bool same = c.subjects[1].raw[1].events.size() == ea.size();
    if (same)
        same = c.subjects[1].raw[1].events[0].release_time ==
               ea[0].release_time;
    CHECK(!same);
}

TEST_CASE("pseudo-human generation validates its inputs") {
    PseudoHumanProfile p;
    CHECK_THROWS_AS(generate_pseudo_human(0, 3, p, 1), InvalidParameters);
    CHECK_THROWS_AS(generate_pseudo_human(3, 0, p, 1), InvalidParameters);
    p.min_keys = 1;
    CHECK_THROWS_AS(generate_pseudo_human(3, 3, p, 1), InvalidParameters);
    p.min_keys = 10;
    p.max_keys = 5;
    CHECK_THROWS_AS(generate_pseudo_human(3, 3, p, 1), InvalidParameters);
    p = PseudoHumanProfile{};
    p.rollover_max = 1.5;
    CHECK_THROWS_AS(generate_pseudo_human(3, 3, p, 1), InvalidParameters);
}

TEST_CASE("corpus survives a save/load round trip") {
    PseudoHumanProfile p;
    p.min_keys = 4;
    p.max_keys = 10;
    Corpus c = generate_pseudo_human(3, 2, p, 13);
    TmpFile f("keysynth-test-corpus.csv");
    save_corpus(c, f.path);

    io::LoadStats stats;
    Corpus r = load_corpus(f.path, &stats);
    CHECK(stats.samples_skipped == 0);
    CHECK(stats.samples_ok == 6);
    REQUIRE(r.subjects.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r.subjects[i].subject_id == c.subjects[i].subject_id);
        REQUIRE(r.subjects[i].raw.size() == c.subjects[i].raw.size());
        for (std::size_t s = 0; s < r.subjects[i].raw.size(); ++s) {
            const auto& ea = c.subjects[i].raw[s].events;
            const auto& eb = r.subjects[i].raw[s].events;
            REQUIRE(ea.size() == eb.size());
            for (std::size_t k = 0; k < ea.size(); ++k) {
                CHECK(ea[k].key_code == eb[k].key_code);
                CHECK(ea[k].press_time == eb[k].press_time);
                CHECK(ea[k].release_time == eb[k].release_time);
            }
        }
    }
}

TEST_CASE("corpus loading skips short samples but keeps count") {
    TmpFile f("keysynth-test-short.csv");
    io::write_file(f.path,
                   "subject_id,sample_id,key_code,press_time_ms,"
                   "release_time_ms\n"
                   "a,s0,65,0,100\n"
                   "a,s1,65,0,100\n"
                   "a,s1,66,150,250\n");
    io::LoadStats stats;
    Corpus c = load_corpus(f.path, &stats);
    CHECK(stats.samples_ok == 1);
    CHECK(stats.samples_skipped == 1);
    REQUIRE(c.subjects.size() == 1);
    CHECK(c.subjects[0].features.size() == 1);
    CHECK(c.subjects[0].features[0].steps.size() == 1);

    io::write_file(f.path,
                   "subject_id,sample_id,key_code,press_time_ms,"
                   "release_time_ms\n"
                   "a,s0,65,0,100\n");
    CHECK_THROWS_AS(load_corpus(f.path), EmptyCorpus);
}

TEST_CASE("split keeps pools disjoint and covering") {
    PseudoHumanProfile p;
    p.min_keys = 4;
    p.max_keys = 6;
    Corpus c = generate_pseudo_human(12, 1, p, 17);

    CorpusSplit sp = split_corpus(c, 4, 5);
    CHECK(sp.eval_pool.size() == 4);
    CHECK(sp.train_pool.size() == 8);
    std::set<std::size_t> all(sp.eval_pool.begin(), sp.eval_pool.end());
    all.insert(sp.train_pool.begin(), sp.train_pool.end());
    CHECK(all.size() == 12);

    CorpusSplit sp2 = split_corpus(c, 4, 5);
    CHECK(sp2.eval_pool == sp.eval_pool);
    CHECK(sp2.train_pool == sp.train_pool);

    CHECK_THROWS_AS(split_corpus(c, 0, 5), InvalidParameters);
    CHECK_THROWS_AS(split_corpus(c, 12, 5), InvalidParameters);
}

TEST_CASE("generator kind names round-trip") {
    for (GeneratorKind k : {GeneratorKind::universal, GeneratorKind::userdep,
                            GeneratorKind::gnn})
        CHECK(generator_kind_from_name(generator_kind_name(k)) == k);
    CHECK_THROWS_AS(generator_kind_from_name("markov"), InvalidParameters);
}

TEST_CASE("synth engine routes the three families") {
    PseudoHumanProfile p;
    p.min_keys = 10;
    p.max_keys = 14;
    Corpus c = generate_pseudo_human(4, 3, p, 19);
    std::vector<FeatureSequence> pool;
    for (const SubjectData& s : c.subjects)
        pool.insert(pool.end(), s.features.begin(), s.features.end());

    FittedGenerators gens = fit_generators(pool, 1.0, tiny_gnn());
    CHECK(gens.userdep.users.size() == 4);
    SynthEngine engine(gens);
    CHECK(engine.n_user_models() == 4);

    std::vector<int> codes{65, 66, 67, 32, 84};
    for (GeneratorKind kind : {GeneratorKind::universal, GeneratorKind::userdep,
                               GeneratorKind::gnn}) {
        Rng r1(23), r2(23);
        KeystrokeSequence a = engine.synthesize(kind, codes, 1, r1);
        KeystrokeSequence b = engine.synthesize(kind, codes, 1, r2);
        validate_sequence(a);
        REQUIRE(a.events.size() == codes.size());
        for (std::size_t k = 0; k < codes.size(); ++k) {
            CHECK(a.events[k].key_code == codes[k]);
            CHECK(a.events[k].press_time == b.events[k].press_time);
        }
    }

    Rng rng(29);
    CHECK_THROWS_AS(engine.synthesize(GeneratorKind::userdep, codes, 4, rng),
                    InvalidParameters);

    // a partial set (no trained nets) still serves the density families
    FittedGenerators partial;
    partial.universal = gens.universal;
    SynthEngine pe(partial);
    CHECK_NOTHROW(pe.synthesize(GeneratorKind::universal, codes, 0, rng));
    CHECK_THROWS_AS(pe.synthesize(GeneratorKind::gnn, codes, 0, rng),
                    InvalidParameters);
}

TEST_CASE("scenario pairs bots with human key sequences") {
    PseudoHumanProfile p;
    Corpus c = generate_pseudo_human(14, 3, p, 31);
    CorpusSplit split = split_corpus(c, 4, 1);

    std::vector<FeatureSequence> pool;
    for (std::size_t idx : split.train_pool)
        pool.insert(pool.end(), c.subjects[idx].features.begin(),
                    c.subjects[idx].features.end());
    FittedGenerators gens = fit_generators(pool, 1.0, tiny_gnn());
    SynthEngine engine(gens);

    ScenarioConfig cfg;
    cfg.gen_train = GeneratorKind::universal;
    cfg.gen_test = GeneratorKind::universal;
    cfg.n_train_subjects = 3;
    cfg.max_keys = 30;
    cfg.use_keys = true;
    cfg.seed = 5;
    Scenario sc = build_scenario(c, split, engine, cfg);

    // default profile lengths always clear max_keys, so nothing dropped
    CHECK(sc.train_human.size() == 9);
    CHECK(sc.train_bot.size() == 9);
    const std::size_t dim = 29 * 5;
    for (const SampleVector& s : sc.train_human) {
        CHECK(s.x.size() == dim);
        CHECK(s.label == 0);
    }
    for (std::size_t i = 0; i < sc.train_bot.size(); ++i) {
        const SampleVector& bot = sc.train_bot[i];
        CHECK(bot.label == 1);
        // the copied key track is bitwise identical to the paired human's
        for (std::size_t j = 4; j < dim; j += 5)
            CHECK(bot.x[j] == sc.train_human[i].x[j]);
        CHECK(bot.x[0] != sc.train_human[i].x[0]);
    }

    std::size_t eval_h = 0, eval_b = 0;
    for (const SampleVector& s : sc.eval_set)
        (s.label == 0 ? eval_h : eval_b) += 1;
    CHECK(eval_h == 12);
    CHECK(eval_b == 12);

    SUBCASE("rebuilding the cell reproduces it bitwise") {
        Scenario sc2 = build_scenario(c, split, engine, cfg);
        REQUIRE(sc2.train_bot.size() == sc.train_bot.size());
        for (std::size_t i = 0; i < sc.train_bot.size(); ++i)
            CHECK(sc2.train_bot[i].x == sc.train_bot[i].x);
        REQUIRE(sc2.eval_set.size() == sc.eval_set.size());
        for (std::size_t i = 0; i < sc.eval_set.size(); ++i)
            CHECK(sc2.eval_set[i].x == sc.eval_set[i].x);
    }

    SUBCASE("smaller training sizes nest inside larger ones") {
        ScenarioConfig big = cfg;
        big.n_train_subjects = 5;
        Scenario sc5 = build_scenario(c, split, engine, big);
        REQUIRE(sc5.train_human.size() >= sc.train_human.size());
        for (std::size_t i = 0; i < sc.train_human.size(); ++i)
            CHECK(sc5.train_human[i].x == sc.train_human[i].x);
    }

    SUBCASE("infeasible sizes are rejected") {
        ScenarioConfig bad = cfg;
        bad.n_train_subjects = 11; // pool only has 10
        CHECK_THROWS_AS(build_scenario(c, split, engine, bad),
                        InvalidParameters);
        bad.n_train_subjects = 0;
        CHECK_THROWS_AS(build_scenario(c, split, engine, bad),
                        InvalidParameters);
    }

    SUBCASE("a key floor above every sample empties the cell") {
        ScenarioConfig tall = cfg;
        tall.max_keys = 100;
        CHECK_THROWS_AS(build_scenario(c, split, engine, tall),
                        EmptyTrainingSet);
    }
}

TEST_CASE("grid config parsing merges onto the desk defaults") {
    GridConfig desk = desk_grid_config();
    CHECK(desk.eval_subjects == 200);
    CHECK(desk.train_sizes == std::vector<std::size_t>{20, 100, 500});
    CHECK(desk.detectors.size() == 6);
    CHECK(desk.key_options == std::vector<bool>{false, true});
    REQUIRE(desk.pairs.size() == 3);
    for (const auto& [a, b] : desk.pairs)
        CHECK(a == b);

    GridConfig cfg = parse_grid_config(R"({
        "eval_subjects": 4,
        "max_keys": 12,
        "kde_bandwidth": 2.5,
        "seed": 9,
        "train_sizes": [5],
        "detectors": ["gnb", "rf"],
        "key_options": [true],
        "pairs": [["universal", "gnn"]],
        "detector": {"rf_trees": 7, "lstm_epochs": 2, "ocsvm_nu": 0.2},
        "gnn": {"epochs": 3, "conditioning": "second_key"}
    })");
    CHECK(cfg.eval_subjects == 4);
    CHECK(cfg.max_keys == 12);
    CHECK(cfg.kde_bandwidth == 2.5);
    CHECK(cfg.seed == 9);
    CHECK(cfg.train_sizes == std::vector<std::size_t>{5});
    CHECK(cfg.detectors ==
          std::vector<DetectorKind>{DetectorKind::gnb, DetectorKind::rf});
    CHECK(cfg.key_options == std::vector<bool>{true});
    REQUIRE(cfg.pairs.size() == 1);
    CHECK(cfg.pairs[0].first == GeneratorKind::universal);
    CHECK(cfg.pairs[0].second == GeneratorKind::gnn);
    CHECK(cfg.detector.forest.n_trees == 7);
    CHECK(cfg.detector.lstm_epochs == 2);
    CHECK(cfg.detector.ocsvm_nu == 0.2);
    CHECK(cfg.gnn.epochs == 3);
    CHECK(cfg.gnn.conditioning == Conditioning::second_key);
    // untouched fields keep the desk values
    CHECK(cfg.detector.svm_c == 1.0);
    CHECK(cfg.gnn.max_pairs_per_feature == 40000);

    CHECK_THROWS_AS(parse_grid_config("not json"), IoError);
    CHECK_THROWS_AS(parse_grid_config("[1,2]"), IoError);
    CHECK_THROWS_AS(parse_grid_config(R"({"pairs": [["universal"]]})"),
                    IoError);
    CHECK_THROWS_AS(parse_grid_config(R"({"detectors": ["nope"]})"),
                    InvalidParameters);
    CHECK_THROWS_AS(parse_grid_config(R"({"gnn": {"conditioning": "third"}})"),
                    IoError);
}

TEST_CASE("grid runs every cell and reports failures in place") {
    PseudoHumanProfile p;
    Corpus c = generate_pseudo_human(14, 3, p, 37);

    GridConfig cfg;
    cfg.eval_subjects = 4;
    cfg.pairs = {{GeneratorKind::universal, GeneratorKind::universal},
                 {GeneratorKind::universal, GeneratorKind::gnn}};
    cfg.train_sizes = {3, 30}; // 30 exceeds the 10-subject pool
    cfg.detectors = {DetectorKind::gnb, DetectorKind::euclid};
    cfg.key_options = {false, true};
    cfg.gnn = tiny_gnn();
    cfg.seed = 2;

    std::vector<ReportRow> rows = run_grid(c, cfg);
    REQUIRE(rows.size() == 16);

    for (std::size_t i = 1; i < rows.size(); ++i) {
        auto key = [](const ReportRow& r) {
            return std::make_tuple(static_cast<int>(r.gen_train),
                                   static_cast<int>(r.gen_test),
                                   r.n_train_subjects,
                                   static_cast<int>(r.detector), r.use_keys);
        };
        CHECK(key(rows[i - 1]) < key(rows[i]));
    }

    for (const ReportRow& r : rows) {
        if (r.n_train_subjects == 3) {
            CHECK(r.status == "ok");
            CHECK(r.accuracy >= 0.0);
            CHECK(r.accuracy <= 1.0);
        } else {
            CHECK(r.status == "InvalidParameters");
            CHECK(std::isnan(r.accuracy));
        }
    }

    SUBCASE("reruns emit identical bytes") {
        std::vector<ReportRow> rows2 = run_grid(c, cfg);
        CHECK(emit_report_csv(rows2) == emit_report_csv(rows));
    }

    SUBCASE("csv emission round-trips") {
        std::string csv = emit_report_csv(rows);
        std::vector<ReportRow> back = parse_report_csv(csv);
        REQUIRE(back.size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(back[i].gen_train == rows[i].gen_train);
            CHECK(back[i].gen_test == rows[i].gen_test);
            CHECK(back[i].detector == rows[i].detector);
            CHECK(back[i].use_keys == rows[i].use_keys);
            CHECK(back[i].n_train_subjects == rows[i].n_train_subjects);
            CHECK(back[i].status == rows[i].status);
            if (rows[i].status == "ok")
                CHECK(back[i].accuracy == rows[i].accuracy);
            else
                CHECK(std::isnan(back[i].accuracy));
        }
    }

    SUBCASE("table emission mentions every row") {
        std::string table = emit_report_table(rows);
        CHECK(table.find("gnb") != std::string::npos);
        CHECK(table.find("InvalidParameters") != std::string::npos);
    }

    SUBCASE("bad report input is rejected") {
        CHECK_THROWS_AS(parse_report_csv(""), IoError);
        CHECK_THROWS_AS(parse_report_csv("wrong,header\n"), IoError);
        std::string csv = emit_report_csv(rows);
        CHECK_THROWS_AS(parse_report_csv(csv + "only,three,fields\n"),
                        IoError);
    }
}

TEST_CASE("grid rejects empty axes") {
    PseudoHumanProfile p;
    p.min_keys = 4;
    p.max_keys = 6;
    Corpus c = generate_pseudo_human(6, 1, p, 41);
    GridConfig cfg;
    cfg.eval_subjects = 2;
    cfg.pairs.clear();
    CHECK_THROWS_AS(run_grid(c, cfg), InvalidParameters);
}
