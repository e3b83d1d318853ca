#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "keysynth/errors.hpp"
#include "keysynth/features.hpp"
#include "keysynth/io.hpp"
#include "keysynth/rng.hpp"

using namespace keysynth;

namespace {

KeystrokeSequence make_seq(std::vector<std::array<double, 3>> rows) {
    KeystrokeSequence s;
    s.subject_id = "u1";
    s.sample_id = "s1";
    for (const auto& r : rows)
        s.events.push_back({static_cast<int>(r[0]), r[1], r[2]});
    return s;
}

std::filesystem::path temp_path(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("feature extraction on a plain two-key sample") {
    auto fs = extract_features(make_seq({{65, 0, 100}, {66, 150, 270}}));
    REQUIRE(fs.steps.size() == 1);
    CHECK(fs.steps[0].hold == doctest::Approx(100.0));
    CHECK(fs.steps[0].inter_press == doctest::Approx(150.0));
    CHECK(fs.steps[0].inter_release == doctest::Approx(170.0));
    CHECK(fs.steps[0].inter_key == doctest::Approx(50.0));
    CHECK(fs.steps[0].key_norm == doctest::Approx(65.0 / 255.0));
}

TEST_CASE("feature extraction under rollover") {
    auto fs = extract_features(make_seq({{72, 0, 120}, {73, 80, 200}}));
    REQUIRE(fs.steps.size() == 1);
    CHECK(fs.steps[0].hold == doctest::Approx(120.0));
    CHECK(fs.steps[0].inter_press == doctest::Approx(80.0));
    CHECK(fs.steps[0].inter_release == doctest::Approx(80.0));
    CHECK(fs.steps[0].inter_key == doctest::Approx(-40.0));
}

TEST_CASE("feature identities hold on a longer sample") {
    auto seq = make_seq(
        {{65, 0, 90}, {66, 70, 200}, {67, 260, 330}, {68, 310, 400}});
    auto fs = extract_features(seq);
    REQUIRE(fs.steps.size() == 3);
    for (std::size_t j = 0; j < fs.steps.size(); ++j) {
        const auto& st = fs.steps[j];
        CHECK(st.inter_press ==
              doctest::Approx(st.hold + st.inter_key).epsilon(1e-9));
        double next_hold = j + 1 < fs.steps.size()
                               ? fs.steps[j + 1].hold
                               : seq.events.back().release_time -
                                     seq.events.back().press_time;
        CHECK(st.inter_release ==
              doctest::Approx(st.inter_key + next_hold).epsilon(1e-9));
    }
}

TEST_CASE("extraction rejects bad sequences") {
    CHECK_THROWS_AS(extract_features(make_seq({{65, 0, 100}})),
                    SequenceTooShort);
    CHECK_THROWS_AS(extract_features(make_seq({{65, 0, 0}, {66, 50, 80}})),
                    MalformedSequence);
    CHECK_THROWS_AS(
        extract_features(make_seq({{65, 100, 200}, {66, 100, 250}})),
        MalformedSequence);
    CHECK_THROWS_AS(
        extract_features(make_seq({{300, 0, 100}, {66, 150, 270}})),
        InvalidKeyCode);
}

TEST_CASE("normalize_key bounds") {
    CHECK(normalize_key(0) == doctest::Approx(0.0));
    CHECK(normalize_key(255) == doctest::Approx(1.0));
    CHECK_THROWS_AS(normalize_key(-1), InvalidKeyCode);
    CHECK_THROWS_AS(normalize_key(256), InvalidKeyCode);
}

TEST_CASE("timestamp reconstruction matches the worked example") {
    auto seq = reconstruct_timestamps({65, 66}, {100, 120}, {50});
    REQUIRE(seq.events.size() == 2);
    CHECK(seq.events[0].press_time == doctest::Approx(0.0));
    CHECK(seq.events[0].release_time == doctest::Approx(100.0));
    CHECK(seq.events[1].press_time == doctest::Approx(150.0));
    CHECK(seq.events[1].release_time == doctest::Approx(270.0));
}

TEST_CASE("reconstruction and extraction invert each other") {
    std::vector<int> codes{72, 69, 76, 76, 79};
    std::vector<double> holds{90, 110, 85, 95, 100};
    std::vector<double> gaps{40, -20, 60, 30};
    auto fs = extract_features(reconstruct_timestamps(codes, holds, gaps));
    REQUIRE(fs.steps.size() == 4);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(fs.steps[j].hold == doctest::Approx(holds[j]).epsilon(1e-12));
        CHECK(fs.steps[j].inter_key ==
              doctest::Approx(gaps[j]).epsilon(1e-12));
    }
}

TEST_CASE("reconstruction rejects impossible inputs") {
    CHECK_THROWS_AS(reconstruct_timestamps({65, 66}, {100}, {50}),
                    InvalidParameters);
    CHECK_THROWS_AS(reconstruct_timestamps({65, 66}, {0.0, 100}, {50}),
                    MalformedSequence);
    CHECK_THROWS_AS(reconstruct_timestamps({65, 66}, {100, 100}, {-100}),
                    NonCausalSequence);
}

TEST_CASE("truncate keeps a prefix or declines") {
    auto seq = make_seq(
        {{65, 0, 90}, {66, 70, 200}, {67, 260, 330}, {68, 310, 400}});
    auto fs = extract_features(seq);
    auto t = truncate(fs, 3);
    REQUIRE(t.has_value());
    CHECK(t->steps.size() == 2);
    CHECK(t->steps[1].hold == fs.steps[1].hold);
    CHECK(truncate(fs, 4).has_value());
    CHECK_FALSE(truncate(fs, 5).has_value());
    CHECK_THROWS_AS(truncate(fs, 1), InvalidParameters);
}

TEST_CASE("rng streams are deterministic and label-separated") {
    Rng a(42), b(42);
    for (int i = 0; i < 10; ++i)
        CHECK(a.uniform() == b.uniform());

    Rng c = derive_rng(7, "alpha");
    Rng d = derive_rng(7, "alpha");
    Rng e = derive_rng(7, "beta");
    double cv = c.uniform(), dv = d.uniform(), ev = e.uniform();
    CHECK(cv == dv);
    CHECK(cv != ev);

    CHECK(derive_seed(7, "x", 1, 2, 3) == derive_seed(7, "x", 1, 2, 3));
    CHECK(derive_seed(7, "x", 1, 2, 3) != derive_seed(7, "x", 1, 3, 2));
}

TEST_CASE("rng helpers stay in range") {
    Rng r(5);
    for (int i = 0; i < 1000; ++i) {
        std::size_t k = r.index(7);
        CHECK(k < 7);
        double u = r.uniform(2.0, 3.0);
        CHECK(u >= 2.0);
        CHECK(u < 3.0);
    }
}

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-7, 1e300, 0.0, -123.456,
                     9007199254740993.0}) {
        CHECK(io::parse_double(io::format_double(v)) == v);
    }
    CHECK(io::format_double(1.0) == "1");
    CHECK_THROWS_AS(io::parse_double("12abc"), IoError);
    CHECK_THROWS_AS(io::parse_double(""), IoError);
}

TEST_CASE("events csv round-trips including rollover") {
    std::vector<KeystrokeSequence> samples;
    samples.push_back(make_seq({{72, 0, 120}, {73, 80, 200}, {32, 215.5, 280.25}}));
    samples.back().subject_id = "alice";
    samples.back().sample_id = "s0";
    samples.push_back(make_seq({{65, 0, 90.125}, {66, 100, 150}}));
    samples.back().subject_id = "bob";
    samples.back().sample_id = "s1";

    auto path = temp_path("keysynth_core_roundtrip.csv");
    io::write_events_csv(path.string(), samples);
    io::LoadStats stats;
    auto loaded = io::read_events_csv(path.string(), &stats);
    std::filesystem::remove(path);

    REQUIRE(loaded.size() == 2);
    CHECK(stats.samples_ok == 2);
    CHECK(stats.samples_skipped == 0);
    CHECK(loaded[0].subject_id == "alice");
    REQUIRE(loaded[0].events.size() == 3);
    CHECK(loaded[0].events[2].press_time == 215.5);
    CHECK(loaded[0].events[2].release_time == 280.25);
    CHECK(loaded[1].events[1].release_time == 150.0);
}

TEST_CASE("malformed samples are skipped and counted") {
    auto path = temp_path("keysynth_core_malformed.csv");
    std::ofstream out(path);
    out << "subject_id,sample_id,key_code,press_time_ms,release_time_ms\n";
    out << "u1,good,65,0,100\n";
    out << "u1,good,66,150,270\n";
    out << "u1,bad,65,0,0\n";      // release not after press
    out << "u1,bad,66,50,120\n";
    out << "u2,alsogood,72,0,80\n";
    out << "u2,alsogood,73,90,170\n";
    out.close();

    io::LoadStats stats;
    auto loaded = io::read_events_csv(path.string(), &stats);
    std::filesystem::remove(path);
    REQUIRE(loaded.size() == 2);
    CHECK(stats.samples_ok == 2);
    CHECK(stats.samples_skipped == 1);
    CHECK(loaded[0].sample_id == "good");
    CHECK(loaded[1].subject_id == "u2");
}

TEST_CASE("csv reader insists on the exact header") {
    auto path = temp_path("keysynth_core_badheader.csv");
    std::ofstream out(path);
    out << "subject,sample,key,press,release\n";
    out << "u1,s0,65,0,100\n";
    out.close();
    CHECK_THROWS_AS(io::read_events_csv(path.string()), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("missing files raise io errors") {
    CHECK_THROWS_AS(io::read_file("/nonexistent/keysynth/nope.txt"), IoError);
    CHECK_THROWS_AS(io::read_events_csv("/nonexistent/keysynth/nope.csv"),
                    IoError);
}
