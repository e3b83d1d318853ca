#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "keysynth/detectors.hpp"
#include "keysynth/gnn.hpp"
#include "keysynth/io.hpp"
#include "keysynth/kde.hpp"
#include "keysynth/rng.hpp"
#include "keysynth/types.hpp"

namespace keysynth {

// One typist: raw event logs plus per-sample features, index-aligned.
struct SubjectData {
    std::string subject_id;
    std::vector<KeystrokeSequence> raw;
    std::vector<FeatureSequence> features;
};

struct Corpus {
    std::vector<SubjectData> subjects;
    std::size_t total_samples() const;
};

// Groups event-log rows by subject in first-appearance order. Samples too
// short to feature-extract are skipped and counted. Throws EmptyCorpus
// when nothing valid remains.
Corpus load_corpus(const std::string& path, io::LoadStats* stats = nullptr);

void save_corpus(const Corpus& corpus, const std::string& path);

// Population model behind the synthetic typist corpus. Holds and gaps are
// lognormal around per-subject bases, with population-wide per-key effects
// a generator can learn, per-subject key jitter it cannot, and an AR(1)
// drift on log gaps that gives samples within-burst rhythm. Subjects also
// differ in how steady they type: a per-subject factor scales the
// within-sample noise of each channel, so the corpus spans consistent and
// erratic typists. A small fraction of transitions overlap (negative
// inter-key latency), scaled so press order stays strict.
struct PseudoHumanProfile {
    std::size_t min_keys = 32;
    std::size_t max_keys = 68;
    double hold_base_ms = 95.0;
    double hold_pop_sigma = 0.36;  // subject spread of log hold level
    double hold_cv = 0.14;         // per-keystroke log noise
    double gap_base_ms = 110.0;
    double gap_pop_sigma = 0.60;
    double gap_cv = 0.33;
    double cv_pop_sigma = 0.60;    // subject spread of the log noise level
    double key_effect_sigma = 0.10;    // population per-key factor spread
    double subject_key_jitter = 0.08;  // subject-private per-key factor
    double ar_phi = 0.5;               // log-gap AR(1) coefficient
    double rollover_prob = 0.05;
    double rollover_min = 0.05; // overlap as a fraction of the hold
    double rollover_max = 0.60;
    double min_hold_ms = 12.0;
    double space_prob = 0.18; // key mix: space vs letters
};

Corpus generate_pseudo_human(std::size_t n_subjects,
                             std::size_t samples_per_subject,
                             const PseudoHumanProfile& profile,
                             std::uint64_t seed);

enum class GeneratorKind { universal, userdep, gnn };

const char* generator_kind_name(GeneratorKind k);
GeneratorKind generator_kind_from_name(const std::string& name);

struct FittedGenerators {
    UniversalModel universal;
    UserDependentModel userdep;
    GnnModel gnn;
};

// Fits all three generator families on the pooled training sequences.
FittedGenerators fit_generators(const std::vector<FeatureSequence>& train,
                                double kde_bandwidth,
                                const GnnTrainConfig& gnn_cfg);

// Synthesis front end over a fitted generator set. user_index picks the
// per-user density model for the user-dependent family and is ignored by
// the other two.
class SynthEngine {
public:
    explicit SynthEngine(const FittedGenerators& gens);

    std::size_t n_user_models() const { return gens_->userdep.users.size(); }

    KeystrokeSequence synthesize(GeneratorKind kind,
                                 const std::vector<int>& key_codes,
                                 std::size_t user_index, Rng& rng,
                                 std::string subject_id = "bot",
                                 std::string sample_id = "s0") const;

private:
    const FittedGenerators* gens_;
    // present only when the generative nets are trained; partial sets
    // (a single loaded model) leave the other families empty
    std::optional<GnnSampler> gnn_sampler_;
};

// Disjoint subject split: the first eval_subjects of a seeded shuffle hold
// out for evaluation, the rest form the generator/detector training pool.
struct CorpusSplit {
    std::vector<std::size_t> train_pool; // indices into corpus.subjects
    std::vector<std::size_t> eval_pool;
};

CorpusSplit split_corpus(const Corpus& corpus, std::size_t eval_subjects,
                         std::uint64_t seed);

struct ScenarioConfig {
    GeneratorKind gen_train = GeneratorKind::universal;
    GeneratorKind gen_test = GeneratorKind::universal;
    std::size_t n_train_subjects = 100;
    std::size_t max_keys = 30;
    bool use_keys = false;
    std::uint64_t seed = 1;
};

// Vectorized data for one grid cell. Training humans and bots are kept
// apart so one-class fits can take the humans alone.
struct Scenario {
    std::vector<SampleVector> train_human;
    std::vector<SampleVector> train_bot;
    std::vector<SampleVector> eval_set;
};

// Builds a cell's data from derived rng streams only, so any two calls
// with the same inputs agree regardless of cell execution order. Every
// bot sample copies the key sequence of a paired human sample; pairs whose
// human side is too short for max_keys are dropped together.
Scenario build_scenario(const Corpus& corpus, const CorpusSplit& split,
                        const SynthEngine& engine, const ScenarioConfig& cfg);

struct GridConfig {
    std::size_t eval_subjects = 200;
    std::vector<std::pair<GeneratorKind, GeneratorKind>> pairs; // train, test
    std::vector<std::size_t> train_sizes{20, 100, 500};
    std::vector<DetectorKind> detectors{
        DetectorKind::ocsvm, DetectorKind::svm,  DetectorKind::gnb,
        DetectorKind::rf,    DetectorKind::lstm, DetectorKind::euclid};
    std::vector<bool> key_options{false, true};
    std::size_t max_keys = 30;
    double kde_bandwidth = 1.0;
    DetectorConfig detector;
    GnnTrainConfig gnn;
    std::uint64_t seed = 1;
};

// The desk-scale closed-set instantiation: three self-paired generators,
// six detectors, both key options, three training sizes. Detector and
// generator training budgets are trimmed to single-core throughput.
GridConfig desk_grid_config();

// Parses a JSON object with the GridConfig field names; missing fields
// keep their defaults. Throws IoError on malformed input.
GridConfig parse_grid_config(const std::string& json_text);

struct ReportRow {
    GeneratorKind gen_train = GeneratorKind::universal;
    GeneratorKind gen_test = GeneratorKind::universal;
    DetectorKind detector = DetectorKind::gnb;
    bool use_keys = false;
    std::size_t n_train_subjects = 0;
    double accuracy = 0.0;    // meaningful only when status == "ok"
    std::string status = "ok"; // otherwise the error name
};

// Runs every cell of the grid on one corpus. A cell that throws a
// component error becomes a row carrying the error name; unexpected
// exceptions still propagate. Rows come back sorted by
// (gen_train, gen_test, n_train, detector, use_keys).
std::vector<ReportRow> run_grid(const Corpus& corpus, const GridConfig& cfg);

std::string emit_report_csv(const std::vector<ReportRow>& rows);
std::string emit_report_table(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(const std::string& csv);

} // namespace keysynth
