#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "keysynth/detectors.hpp"
#include "keysynth/errors.hpp"
#include "keysynth/gnn.hpp"
#include "keysynth/io.hpp"
#include "keysynth/kde.hpp"
#include "keysynth/model_io.hpp"
#include "keysynth/rng.hpp"

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

KdeModel random_kde(Rng& rng, std::size_t n) {
    std::vector<double> pts(n);
    for (double& p : pts)
        p = rng.uniform(1.0, 300.0);
    return kde_fit(std::move(pts), rng.uniform(0.5, 3.0));
}

FeatureModels random_features(Rng& rng) {
    FeatureModels f;
    for (auto& m : f)
        m = random_kde(rng, 5 + rng.index(10));
    return f;
}

bool same_kde(const KdeModel& a, const KdeModel& b) {
    return a.points == b.points && a.bandwidth == b.bandwidth;
}

std::vector<SampleVector> blob_train(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<SampleVector> out;
    for (int i = 0; i < 60; ++i) {
        int label = i % 2;
        double c = label == 0 ? -1.5 : 1.5;
        std::vector<double> x(8);
        for (double& v : x)
            v = c + rng.normal();
        out.push_back({std::move(x), label});
    }
    return out;
}

} // namespace

TEST_CASE("universal generator round-trips bit-exactly") {
    Rng rng(100);
    UniversalModel m;
    m.features = random_features(rng);

    TmpFile f("keysynth-test-univ.json");
    save_generator(GeneratorModel(m), f.path);
    GeneratorModel loaded = load_generator(f.path);
    REQUIRE(std::holds_alternative<UniversalModel>(loaded));
    const auto& lm = std::get<UniversalModel>(loaded);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(same_kde(m.features[i], lm.features[i]));

    // save/load/save yields identical bytes
    TmpFile f2("keysynth-test-univ2.json");
    save_generator(loaded, f2.path);
    CHECK(io::read_file(f.path) == io::read_file(f2.path));
}

TEST_CASE("user-dependent generator round-trips bit-exactly") {
    Rng rng(101);
    UserDependentModel m;
    for (int u = 0; u < 3; ++u)
        m.users.push_back({"user-" + std::to_string(u), random_features(rng)});

    TmpFile f("keysynth-test-userdep.json");
    save_generator(GeneratorModel(m), f.path);
    GeneratorModel loaded = load_generator(f.path);
    REQUIRE(std::holds_alternative<UserDependentModel>(loaded));
    const auto& lm = std::get<UserDependentModel>(loaded);
    REQUIRE(lm.users.size() == 3);
    for (std::size_t u = 0; u < 3; ++u) {
        CHECK(lm.users[u].user_id == m.users[u].user_id);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(same_kde(m.users[u].features[i], lm.users[u].features[i]));
    }
}

TEST_CASE("generative network round-trips bit-exactly") {
    Rng rng(102);
    GnnModel m;
    m.conditioning = Conditioning::second_key;
    m.sigma_floor = 2e-3;
    for (auto& net : m.nets) {
        net.init(rng, rng.uniform(50.0, 200.0), rng.uniform(3.0, 20.0));
        for (double& w : net.mu_head.W.a)
            w = rng.uniform(-0.1, 0.1);
    }
    m.epoch_loss[0] = {5.0, 4.5, 4.25};

    TmpFile f("keysynth-test-gnn.json");
    save_generator(GeneratorModel(m), f.path);
    GeneratorModel loaded = load_generator(f.path);
    REQUIRE(std::holds_alternative<GnnModel>(loaded));
    const auto& lm = std::get<GnnModel>(loaded);
    CHECK(lm.conditioning == Conditioning::second_key);
    CHECK(lm.sigma_floor == 2e-3);
    CHECK(lm.epoch_loss[0] == m.epoch_loss[0]);
    for (std::size_t i = 0; i < 4; ++i)
        for (double k : {0.0, 0.37, 1.0}) {
            auto a = gnn_forward(m, i, k);
            auto b = gnn_forward(lm, i, k);
            CHECK(a.first == b.first);
            CHECK(a.second == b.second);
        }
}

TEST_CASE("generator model names") {
    CHECK(std::string(generator_model_name(GeneratorModel(UniversalModel{}))) ==
          "universal");
    CHECK(std::string(generator_model_name(
              GeneratorModel(UserDependentModel{}))) == "userdep");
    CHECK(std::string(generator_model_name(GeneratorModel(GnnModel{}))) ==
          "gnn");
}

TEST_CASE("every detector kind round-trips and keeps its scores") {
    auto train = blob_train(103);
    auto probe = blob_train(104);
    DetectorConfig cfg;
    cfg.lstm_hidden = 6;
    cfg.lstm_epochs = 3;
    cfg.forest.n_trees = 10;

    for (DetectorKind kind :
         {DetectorKind::ocsvm, DetectorKind::svm, DetectorKind::gnb,
          DetectorKind::rf, DetectorKind::lstm, DetectorKind::euclid}) {
        CAPTURE(detector_name(kind));
        Rng rng(105);
        std::vector<SampleVector> fit_set = train;
        if (kind == DetectorKind::ocsvm) {
            fit_set.erase(std::remove_if(fit_set.begin(), fit_set.end(),
                                         [](const SampleVector& s) {
                                             return s.label != 0;
                                         }),
                          fit_set.end());
        }
        DetectorModel m = fit_detector(kind, fit_set, cfg, rng, 3, false);

        TmpFile f(std::string("keysynth-test-det-") + detector_name(kind) +
                  ".json");
        save_detector(m, f.path);
        DetectorModel lm = load_detector(f.path);
        CHECK(lm.kind == kind);
        CHECK(lm.max_keys == m.max_keys);
        CHECK(lm.use_keys == m.use_keys);
        CHECK(lm.dim == m.dim);
        for (const SampleVector& s : probe) {
            Prediction a = predict(m, s.x);
            Prediction b = predict(lm, s.x);
            CHECK(a.label == b.label);
            CHECK(a.score == b.score);
        }

        TmpFile f2(std::string("keysynth-test-det2-") + detector_name(kind) +
                   ".json");
        save_detector(lm, f2.path);
        CHECK(io::read_file(f.path) == io::read_file(f2.path));
    }
}

TEST_CASE("loaders reject foreign and damaged files") {
    TmpFile f("keysynth-test-reject.json");

    io::write_file(f.path, "{\"format\":\"something-else\",\"version\":1}");
    CHECK_THROWS_AS(load_generator(f.path), IoError);

    io::write_file(f.path, "not json at all");
    CHECK_THROWS_AS(load_generator(f.path), IoError);
    CHECK_THROWS_AS(load_detector(f.path), IoError);

    io::write_file(f.path,
                   "{\"format\":\"keysynth-model\",\"version\":99,"
                   "\"kind\":\"generator\"}");
    CHECK_THROWS_AS(load_generator(f.path), IoError);

    CHECK_THROWS_AS(load_generator(tmp_path("keysynth-test-missing.json")),
                    IoError);

    // a generator file is not a detector file
    Rng rng(106);
    UniversalModel um;
    um.features = random_features(rng);
    save_generator(GeneratorModel(um), f.path);
    CHECK_THROWS_AS(load_detector(f.path), IoError);
}
