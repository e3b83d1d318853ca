#include "keysynth/features.hpp"

#include <cmath>
#include <string>

#include "keysynth/errors.hpp"

namespace keysynth {

double normalize_key(int code) {
    if (code < 0 || code > 255)
        throw InvalidKeyCode("key code " + std::to_string(code) +
                             " outside [0, 255]");
    return static_cast<double>(code) / 255.0;
}

void validate_sequence(const KeystrokeSequence& seq) {
    for (std::size_t j = 0; j < seq.events.size(); ++j) {
        const KeyEvent& e = seq.events[j];
        if (e.key_code < 0 || e.key_code > 255)
            throw InvalidKeyCode("key code " + std::to_string(e.key_code) +
                                 " outside [0, 255]");
        if (!std::isfinite(e.press_time) || !std::isfinite(e.release_time))
            throw MalformedSequence("non-finite timestamp in sample " +
                                    seq.sample_id);
        if (e.release_time <= e.press_time)
            throw MalformedSequence("release <= press at event " +
                                    std::to_string(j) + " of sample " +
                                    seq.sample_id);
        if (j > 0 && e.press_time <= seq.events[j - 1].press_time)
            throw MalformedSequence("press times not strictly increasing at "
                                    "event " + std::to_string(j) +
                                    " of sample " + seq.sample_id);
    }
}

FeatureSequence extract_features(const KeystrokeSequence& seq) {
    if (seq.events.size() < 2)
        throw SequenceTooShort("need at least 2 events, got " +
                               std::to_string(seq.events.size()));
    validate_sequence(seq);

    FeatureSequence fs;
    fs.subject_id = seq.subject_id;
    fs.sample_id = seq.sample_id;
    fs.steps.reserve(seq.events.size() - 1);
    for (std::size_t j = 0; j + 1 < seq.events.size(); ++j) {
        const KeyEvent& a = seq.events[j];
        const KeyEvent& b = seq.events[j + 1];
        FeatureStep st;
        st.hold = a.release_time - a.press_time;
        st.inter_press = b.press_time - a.press_time;
        st.inter_release = b.release_time - a.release_time;
        st.inter_key = b.press_time - a.release_time;
        st.key_norm = normalize_key(a.key_code);
        fs.steps.push_back(st);
    }
    return fs;
}

KeystrokeSequence reconstruct_timestamps(const std::vector<int>& key_codes,
                                         const std::vector<double>& holds,
                                         const std::vector<double>& inter_keys,
                                         std::string subject_id,
                                         std::string sample_id) {
    if (key_codes.empty() || holds.size() != key_codes.size() ||
        inter_keys.size() + 1 != key_codes.size())
        throw InvalidParameters("reconstruct_timestamps: need N codes, N "
                                "holds, N-1 inter-key latencies");
    for (double h : holds)
        if (!(h > 0.0))
            throw MalformedSequence("hold latencies must be positive");

    KeystrokeSequence seq;
    seq.subject_id = std::move(subject_id);
    seq.sample_id = std::move(sample_id);
    seq.events.reserve(key_codes.size());

    double press = 0.0;
    for (std::size_t j = 0; j < key_codes.size(); ++j) {
        normalize_key(key_codes[j]); // range check
        KeyEvent e;
        e.key_code = key_codes[j];
        e.press_time = press;
        e.release_time = press + holds[j];
        seq.events.push_back(e);
        if (j + 1 < key_codes.size()) {
            // next press; rollover (negative inter_key) is fine as long as
            // press times still advance
            double step = holds[j] + inter_keys[j];
            if (step <= 0.0)
                throw NonCausalSequence(
                    "press times not increasing at step " + std::to_string(j));
            press += step;
        }
    }
    return seq;
}

std::optional<FeatureSequence> truncate(const FeatureSequence& fs,
                                        std::size_t max_keys) {
    if (max_keys < 2)
        throw InvalidParameters("truncate: max_keys must be >= 2");
    // K keys produce K-1 steps, so a sequence covering max_keys keys has at
    // least max_keys - 1 steps
    if (fs.steps.size() < max_keys - 1)
        return std::nullopt;
    FeatureSequence out;
    out.subject_id = fs.subject_id;
    out.sample_id = fs.sample_id;
    out.steps.assign(fs.steps.begin(), fs.steps.begin() + (max_keys - 1));
    return out;
}

} // namespace keysynth
